#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "mud/errors.hpp"
#include "mud/packet.hpp"

namespace mud {

enum class RuleAction { kForward, kMirror };

/// Reactive rules carry one group each; the group fixes the rule priority.
enum class ReactiveGroup {
  kLocalBroadcast,
  kDnsNtp,
  kToInternet,
  kFromInternet,
  kToLocal,
  kFromLocal,
};

constexpr unsigned group_priority(ReactiveGroup g) {
  switch (g) {
    case ReactiveGroup::kLocalBroadcast: return 102;
    case ReactiveGroup::kDnsNtp: return 101;
    case ReactiveGroup::kToInternet: return 32;
    case ReactiveGroup::kFromInternet: return 21;
    case ReactiveGroup::kToLocal: return 12;
    case ReactiveGroup::kFromLocal: return 11;
  }
  return 0;
}

constexpr std::optional<ReactiveGroup> group_for_priority(unsigned priority) {
  switch (priority) {
    case 102: return ReactiveGroup::kLocalBroadcast;
    case 101: return ReactiveGroup::kDnsNtp;
    case 32: return ReactiveGroup::kToInternet;
    case 21: return ReactiveGroup::kFromInternet;
    case 12: return ReactiveGroup::kToLocal;
    case 11: return ReactiveGroup::kFromLocal;
    default: return std::nullopt;
  }
}

constexpr const char* group_name(ReactiveGroup g) {
  switch (g) {
    case ReactiveGroup::kLocalBroadcast: return "local-broadcast";
    case ReactiveGroup::kDnsNtp: return "dns-ntp";
    case ReactiveGroup::kToInternet: return "to-internet";
    case ReactiveGroup::kFromInternet: return "from-internet";
    case ReactiveGroup::kToLocal: return "to-local";
    case ReactiveGroup::kFromLocal: return "from-local";
  }
  return "?";
}

/// Match endpoint: wildcard, IPv4 literal, or a DNS-cache-resolved name.
struct RuleEndpoint {
  enum class Kind { kAny, kAddress, kDomain };

  Kind kind = Kind::kAny;
  Ipv4Address address{};
  std::string domain;

  auto operator<=>(const RuleEndpoint&) const = default;

  static RuleEndpoint any() { return {}; }
  static RuleEndpoint ip(Ipv4Address a) { return {Kind::kAddress, a, {}}; }
  static RuleEndpoint name(std::string d) { return {Kind::kDomain, {}, std::move(d)}; }

  std::string str() const {
    switch (kind) {
      case Kind::kAny: return "*";
      case Kind::kAddress: return address.str();
      case Kind::kDomain: return domain;
    }
    return "*";
  }
};

struct MatchKey {
  std::optional<MacAddress> src_mac;
  std::optional<MacAddress> dst_mac;
  std::optional<std::uint16_t> ethertype;
  RuleEndpoint src_ep;
  RuleEndpoint dst_ep;
  std::optional<std::uint8_t> ip_proto;
  std::optional<std::uint16_t> src_port;
  std::optional<std::uint16_t> dst_port;

  auto operator<=>(const MatchKey&) const = default;
};

struct SwitchRule {
  std::string id;
  MatchKey match;
  unsigned priority = 0;
  RuleAction action = RuleAction::kForward;
  std::optional<ReactiveGroup> group;  // nullopt for proactive rules
  bool stun = false;                   // inserted for a STUN-tagged flow
  std::uint64_t packet_count = 0;
};

/// name/address bindings learned from DNS answers; the most recent binding
/// for an address wins.
class DnsCache {
 public:
  void update(const std::string& name, Ipv4Address addr, double ts) {
    auto it = entries_.find(addr.value);
    if (it == entries_.end() || ts >= it->second.second) {
      entries_[addr.value] = {name, ts};
    }
  }

  std::optional<std::string> lookup(Ipv4Address addr) const {
    auto it = entries_.find(addr.value);
    if (it == entries_.end()) return std::nullopt;
    return it->second.first;
  }

  std::size_t size() const { return entries_.size(); }

  const std::map<std::uint32_t, std::pair<std::string, double>>& entries() const {
    return entries_;
  }

 private:
  std::map<std::uint32_t, std::pair<std::string, double>> entries_;
};

struct CaptureConfig {
  MacAddress device_mac;
  MacAddress gateway_mac;
  Ipv4Address gateway_ip;
  std::vector<Ipv4Prefix> local_prefixes = default_local_prefixes();

  static std::vector<Ipv4Prefix> default_local_prefixes() {
    return {*Ipv4Prefix::parse("192.168.0.0/16"), *Ipv4Prefix::parse("10.0.0.0/8"),
            *Ipv4Prefix::parse("172.16.0.0/12")};
  }

  bool is_local(Ipv4Address addr) const {
    for (const auto& prefix : local_prefixes) {
      if (prefix.contains(addr)) return true;
    }
    return false;
  }
};

/// The pre-installed switch rules (ids a through j), in table order.
inline std::vector<SwitchRule> proactive_rules(const CaptureConfig& cfg) {
  if (cfg.device_mac == cfg.gateway_mac) {
    throw CaptureError(CaptureError::Kind::kInvalidConfig,
                       "device MAC and gateway MAC must differ");
  }
  const auto dev = cfg.device_mac;
  const auto gw = cfg.gateway_mac;
  const auto gw_ip = RuleEndpoint::ip(cfg.gateway_ip);

  std::vector<SwitchRule> rules;
  auto add = [&rules](std::string id, MatchKey match, unsigned priority, RuleAction action) {
    rules.push_back(SwitchRule{std::move(id), std::move(match), priority, action, std::nullopt});
  };

  add("a", {gw, dev, kEtherIpv4, {}, {}, kProtoIcmp, {}, {}}, 100, RuleAction::kForward);
  add("b.1", {dev, gw, kEtherIpv4, {}, {}, kProtoIcmp, {}, {}}, 100, RuleAction::kMirror);
  add("b.2", {dev, gw, kEtherIpv6, {}, {}, kProtoIcmpv6, {}, {}}, 100, RuleAction::kMirror);
  add("c", {gw, dev, kEtherIpv4, {}, {}, kProtoUdp, 123, {}}, 100, RuleAction::kForward);
  add("d.1", {gw, dev, {}, {}, {}, kProtoUdp, 53, {}}, 100, RuleAction::kMirror);
  add("d.2", {dev, gw, {}, {}, {}, kProtoUdp, {}, 53}, 100, RuleAction::kMirror);
  add("e.1", {{}, dev, kEtherArp, {}, {}, {}, {}, {}}, 100, RuleAction::kForward);
  add("e.2", {dev, {}, kEtherArp, {}, {}, {}, {}, {}}, 100, RuleAction::kForward);
  add("f", {gw, dev, {}, gw_ip, {}, {}, {}, {}}, 90, RuleAction::kForward);
  add("g", {dev, gw, {}, {}, gw_ip, {}, {}, {}}, 90, RuleAction::kForward);
  add("h", {dev, {}, kEtherEapol, {}, {}, {}, {}, {}}, 3, RuleAction::kForward);
  add("i", {dev, {}, {}, {}, {}, {}, {}, {}}, 2, RuleAction::kMirror);
  add("j", {{}, dev, {}, {}, {}, {}, {}, {}}, 2, RuleAction::kMirror);
  return rules;
}

inline bool endpoint_matches(const RuleEndpoint& ep, const std::optional<Ipv4Address>& addr,
                             const DnsCache* cache) {
  switch (ep.kind) {
    case RuleEndpoint::Kind::kAny:
      return true;
    case RuleEndpoint::Kind::kAddress:
      return addr && *addr == ep.address;
    case RuleEndpoint::Kind::kDomain: {
      if (!addr || !cache) return false;
      auto name = cache->lookup(*addr);
      return name && *name == ep.domain;
    }
  }
  return false;
}

inline bool rule_matches(const MatchKey& m, const PacketRecord& pkt, const DnsCache* cache) {
  if (m.src_mac && *m.src_mac != pkt.src_mac) return false;
  if (m.dst_mac && *m.dst_mac != pkt.dst_mac) return false;
  if (m.ethertype && *m.ethertype != pkt.ethertype) return false;
  if (m.ip_proto && pkt.ip_proto != *m.ip_proto) return false;
  if (!endpoint_matches(m.src_ep, pkt.src_ip, cache)) return false;
  if (!endpoint_matches(m.dst_ep, pkt.dst_ip, cache)) return false;
  if (m.src_port && pkt.src_port != *m.src_port) return false;
  if (m.dst_port && pkt.dst_port != *m.dst_port) return false;
  return true;
}

/// Flow-table lookup: highest priority wins, ties go to the earliest
/// installed rule. Bumps the winner's packet counter.
inline SwitchRule& classify_packet(std::vector<SwitchRule>& rules, const PacketRecord& pkt,
                                   const DnsCache* cache = nullptr) {
  SwitchRule* best = nullptr;
  for (auto& rule : rules) {
    if (!rule_matches(rule.match, pkt, cache)) continue;
    if (!best || rule.priority > best->priority) best = &rule;
  }
  if (!best) {
    throw CaptureError(CaptureError::Kind::kNoMatch,
                       "no rule matched; catch-all mirror rules missing");
  }
  ++best->packet_count;
  return *best;
}

struct SkippedPacket {
  double ts = 0.0;
  std::string reason;
};

struct CaptureResult {
  std::vector<SwitchRule> reactive_rules;  // ordered by (priority desc, insertion)
  DnsCache cache;
  std::vector<SkippedPacket> skipped;
};

/// Replays a trace through the proactive rule table and inserts reactive
/// rules for mirrored packets: DNS/NTP flows, local broadcasts, and the four
/// direction groups for plain TCP/UDP/ICMP flows.
class CaptureSession {
 public:
  explicit CaptureSession(CaptureConfig cfg) : cfg_(std::move(cfg)), rules_(proactive_rules(cfg_)) {}

  void process(const PacketRecord& pkt) {
    if (pkt.src_mac != cfg_.device_mac && pkt.dst_mac != cfg_.device_mac) return;
    if (pkt.ts < last_ts_) {
      throw CaptureError(CaptureError::Kind::kOutOfOrderTimestamp,
                         "packet timestamps must be non-decreasing");
    }
    last_ts_ = pkt.ts;
    const RuleAction action = classify_packet(rules_, pkt, &cache_).action;
    if (action == RuleAction::kMirror) {
      inspect(pkt);
    }
  }

  /// Header-inspection engine; returns copies of the rules the packet inserted.
  std::vector<SwitchRule> inspect(const PacketRecord& pkt) {
    const bool from_device = pkt.src_mac == cfg_.device_mac;

    // DNS: learn name bindings from answers, then whitelist the resolver.
    const bool is_dns = pkt.dns.has_value() ||
                        (pkt.ip_proto == kProtoUdp && (pkt.src_port == 53 || pkt.dst_port == 53));
    if (is_dns) {
      if (pkt.dns && pkt.dns->is_response) {
        for (const auto& answer : pkt.dns->answers) {
          cache_.update(answer.name, answer.address, pkt.ts);
        }
      }
      const auto resolver_ip = from_device ? pkt.dst_ip : pkt.src_ip;
      if (!resolver_ip) {
        skipped_.push_back({pkt.ts, "dns flow without ipv4 resolver address"});
        return {};
      }
      return insert_service_pair(pkt, from_device, resolve(*resolver_ip), 53,
                                 ReactiveGroup::kDnsNtp, ReactiveGroup::kDnsNtp,
                                 RuleAction::kMirror);
    }

    // NTP: same group and priority as DNS.
    const bool is_ntp = pkt.ip_proto == kProtoUdp &&
                        (from_device ? pkt.dst_port == 123 : pkt.src_port == 123);
    if (is_ntp) {
      const auto peer_ip = from_device ? pkt.dst_ip : pkt.src_ip;
      if (!peer_ip) {
        skipped_.push_back({pkt.ts, "ntp flow without ipv4 peer address"});
        return {};
      }
      return insert_service_pair(pkt, from_device, resolve(*peer_ip), 123, ReactiveGroup::kDnsNtp,
                                 ReactiveGroup::kDnsNtp, RuleAction::kForward);
    }

    // Link-layer broadcast/multicast from the device (covers DHCP discovery).
    if (from_device && pkt.dst_mac.is_multicast()) {
      MatchKey match;
      match.src_mac = cfg_.device_mac;
      match.dst_mac = pkt.dst_mac;
      match.ethertype = pkt.ethertype;
      if (pkt.dst_ip) match.dst_ep = RuleEndpoint::ip(*pkt.dst_ip);
      match.ip_proto = pkt.ip_proto;
      match.dst_port = pkt.dst_port;  // source port stays dynamic
      std::vector<SwitchRule> inserted;
      if (auto idx = insert_reactive(match, ReactiveGroup::kLocalBroadcast, RuleAction::kForward,
                                     pkt.stun)) {
        inserted.push_back(rules_[*idx]);
      }
      return inserted;
    }

    // Plain five-tuple flow.
    if (pkt.ethertype != kEtherIpv4 || !pkt.src_ip || !pkt.dst_ip || !pkt.ip_proto) {
      skipped_.push_back({pkt.ts, "mirrored packet outside ipv4 flow model"});
      return {};
    }
    const Ipv4Address peer = from_device ? *pkt.dst_ip : *pkt.src_ip;
    const bool local = cfg_.is_local(peer) || peer.is_broadcast() || peer.is_multicast();

    const bool device_initiated = initiator_is_device(pkt, from_device);
    // The service port lives on the responder side.
    std::optional<std::uint16_t> service_port;
    if (pkt.src_port) {
      const bool src_is_initiator = (from_device == device_initiated);
      service_port = src_is_initiator ? pkt.dst_port : pkt.src_port;
    }

    const auto to_group = local ? ReactiveGroup::kToLocal : ReactiveGroup::kToInternet;
    const auto from_group = local ? ReactiveGroup::kFromLocal : ReactiveGroup::kFromInternet;
    return insert_flow_pair(pkt, from_device, resolve(peer), device_initiated, service_port,
                            to_group, from_group, pkt.stun && pkt.ip_proto == kProtoUdp);
  }

  CaptureResult result() const {
    CaptureResult out;
    for (const auto& rule : rules_) {
      if (rule.group) out.reactive_rules.push_back(rule);
    }
    std::stable_sort(out.reactive_rules.begin(), out.reactive_rules.end(),
                     [](const SwitchRule& a, const SwitchRule& b) { return a.priority > b.priority; });
    out.cache = cache_;
    out.skipped = skipped_;
    return out;
  }

  const std::vector<SwitchRule>& rules() const { return rules_; }
  std::vector<SwitchRule>& rules() { return rules_; }
  const DnsCache& cache() const { return cache_; }
  const std::vector<SkippedPacket>& skipped() const { return skipped_; }

 private:
  RuleEndpoint resolve(Ipv4Address addr) const {
    if (auto name = cache_.lookup(addr)) return RuleEndpoint::name(*name);
    return RuleEndpoint::ip(addr);
  }

  bool initiator_is_device(const PacketRecord& pkt, bool from_device) {
    FlowKey key = flow_key(pkt);
    auto it = flow_initiator_.find(key);
    if (it != flow_initiator_.end()) return it->second;
    // First-packet sender, except that a SYN pins the handshake direction:
    // a bare SYN comes from the initiator, a SYN-ACK from the responder.
    bool device_initiated = from_device;
    if (pkt.ip_proto == kProtoTcp && pkt.tcp_flags && pkt.tcp_flags->syn) {
      device_initiated = pkt.tcp_flags->ack ? !from_device : from_device;
    }
    flow_initiator_.emplace(std::move(key), device_initiated);
    return device_initiated;
  }

  using FlowKey = std::tuple<std::uint32_t, std::uint32_t, std::uint16_t, std::uint16_t,
                             std::uint8_t>;

  static FlowKey flow_key(const PacketRecord& pkt) {
    const std::uint32_t a = pkt.src_ip->value;
    const std::uint32_t b = pkt.dst_ip->value;
    const std::uint16_t pa = pkt.src_port.value_or(0);
    const std::uint16_t pb = pkt.dst_port.value_or(0);
    if (a < b || (a == b && pa <= pb)) return {a, b, pa, pb, *pkt.ip_proto};
    return {b, a, pb, pa, *pkt.ip_proto};
  }

  std::vector<SwitchRule> insert_service_pair(const PacketRecord& pkt, bool from_device,
                                              RuleEndpoint peer, std::uint16_t service,
                                              ReactiveGroup out_group, ReactiveGroup in_group,
                                              RuleAction action) {
    const MacAddress peer_mac = from_device ? pkt.dst_mac : pkt.src_mac;
    MatchKey out;
    out.src_mac = cfg_.device_mac;
    out.dst_mac = peer_mac;
    out.ethertype = kEtherIpv4;
    out.dst_ep = peer;
    out.ip_proto = kProtoUdp;
    out.dst_port = service;

    MatchKey in;
    in.src_mac = peer_mac;
    in.dst_mac = cfg_.device_mac;
    in.ethertype = kEtherIpv4;
    in.src_ep = peer;
    in.ip_proto = kProtoUdp;
    in.src_port = service;

    std::vector<SwitchRule> inserted;
    if (auto idx = insert_reactive(out, out_group, action, false)) inserted.push_back(rules_[*idx]);
    if (auto idx = insert_reactive(in, in_group, action, false)) inserted.push_back(rules_[*idx]);
    return inserted;
  }

  std::vector<SwitchRule> insert_flow_pair(const PacketRecord& pkt, bool from_device,
                                           RuleEndpoint peer, bool device_initiated,
                                           std::optional<std::uint16_t> service_port,
                                           ReactiveGroup to_group, ReactiveGroup from_group,
                                           bool stun) {
    const MacAddress peer_mac = from_device ? pkt.dst_mac : pkt.src_mac;

    MatchKey out;  // device -> peer
    out.src_mac = cfg_.device_mac;
    out.dst_mac = peer_mac;
    out.ethertype = kEtherIpv4;
    out.dst_ep = peer;
    out.ip_proto = pkt.ip_proto;

    MatchKey in;  // peer -> device
    in.src_mac = peer_mac;
    in.dst_mac = cfg_.device_mac;
    in.ethertype = kEtherIpv4;
    in.src_ep = peer;
    in.ip_proto = pkt.ip_proto;

    if (service_port) {
      if (device_initiated) {
        out.dst_port = *service_port;  // device dials the service
        in.src_port = *service_port;   // responses come from it
      } else {
        out.src_port = *service_port;  // device answers from its service port
        in.dst_port = *service_port;
      }
    }

    std::vector<SwitchRule> inserted;
    if (auto idx = insert_reactive(out, to_group, RuleAction::kForward, stun)) {
      inserted.push_back(rules_[*idx]);
    }
    if (auto idx = insert_reactive(in, from_group, RuleAction::kForward, stun)) {
      inserted.push_back(rules_[*idx]);
    }
    return inserted;
  }

  /// Inserts once per (match, group); later duplicates only bump the counter.
  std::optional<std::size_t> insert_reactive(const MatchKey& match, ReactiveGroup group,
                                             RuleAction action, bool stun) {
    for (auto& rule : rules_) {
      if (rule.group == group && rule.match == match) {
        ++rule.packet_count;
        if (stun) rule.stun = true;
        return std::nullopt;
      }
    }
    SwitchRule rule;
    rule.id = "r" + std::to_string(next_reactive_id_++);
    rule.match = match;
    rule.priority = group_priority(group);
    rule.action = action;
    rule.group = group;
    rule.stun = stun;
    rules_.push_back(std::move(rule));
    return rules_.size() - 1;
  }

  CaptureConfig cfg_;
  std::vector<SwitchRule> rules_;
  DnsCache cache_;
  std::vector<SkippedPacket> skipped_;
  std::map<FlowKey, bool> flow_initiator_;
  double last_ts_ = -1e300;
  int next_reactive_id_ = 0;
};

inline CaptureResult run_capture(const std::vector<PacketRecord>& records,
                                 const CaptureConfig& cfg) {
  CaptureSession session(cfg);
  for (const auto& record : records) {
    session.process(record);
  }
  return session.result();
}

inline std::string serialize_skip_log(const std::vector<SkippedPacket>& skipped) {
  std::string out;
  for (const auto& entry : skipped) {
    nlohmann::ordered_json obj;
    obj["ts"] = entry.ts;
    obj["reason"] = entry.reason;
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace mud
