#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mud/capture.hpp"
#include "mud/errors.hpp"
#include "mud/mud_codec.hpp"
#include "mud/mud_model.hpp"
#include "mud/policy.hpp"

namespace mud {

struct ProfileMeta {
  std::string name = "iot-device";
  std::string mud_url;
  int cache_validity = 48;
};

inline ProfileMeta parse_meta_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error("metadata file is not a JSON object");
  }
  ProfileMeta meta;
  if (doc.contains("name")) meta.name = doc.at("name").get<std::string>();
  if (doc.contains("mud_url")) meta.mud_url = doc.at("mud_url").get<std::string>();
  if (doc.contains("cache_validity")) meta.cache_validity = doc.at("cache_validity").get<int>();
  return meta;
}

struct GenerationOptions {
  int collapse_threshold = 3;  // distinct unresolved addresses per shared port
  bool include_eth = true;     // emit the link-layer ACL (ARP pair and friends)
  std::string last_update = "1970-01-01T00:00:00Z";
};

struct GenerationNote {
  std::string kind;
  std::string detail;
};

struct GenerationResult {
  MudProfile profile;
  std::vector<GenerationNote> notes;
};

enum class ProfileClass { kStatic, kLooselyStatic, kDynamic };

inline const char* to_string(ProfileClass c) {
  switch (c) {
    case ProfileClass::kStatic: return "static";
    case ProfileClass::kLooselyStatic: return "loosely-static";
    case ProfileClass::kDynamic: return "dynamic";
  }
  return "?";
}

namespace detail {

inline std::string slugify(const std::string& name) {
  std::string slug;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      slug.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!slug.empty() && slug.back() != '-') {
      slug.push_back('-');
    }
  }
  while (!slug.empty() && slug.back() == '-') slug.pop_back();
  return slug.empty() ? "device" : slug;
}

inline std::string proto_token(const std::optional<std::uint8_t>& proto) {
  if (!proto) return "any";
  switch (*proto) {
    case kProtoIcmp: return "icmp";
    case kProtoTcp: return "tcp";
    case kProtoUdp: return "udp";
    default: return "ip" + std::to_string(*proto);
  }
}

inline std::string peer_token(const MatchSet& m, Direction dir) {
  if (m.construct) {
    return m.construct->kind == MudConstruct::Kind::kController ? "gateway" : "local";
  }
  const auto& dnsname = dir == Direction::kFromDevice ? m.dst_dnsname : m.src_dnsname;
  if (dnsname) return *dnsname;
  return "any";
}

inline std::string port_token(const MatchSet& m, Direction dir) {
  const auto& service = dir == Direction::kFromDevice ? m.dst_port : m.src_port;
  const auto& other = dir == Direction::kFromDevice ? m.src_port : m.dst_port;
  if (service) return std::to_string(service->port);
  if (other) return std::to_string(other->port);
  return "all";
}

}  // namespace detail

/// Translates a captured reactive rule set into a MUD profile:
///  - cache-resolved endpoints keep their domain names,
///  - a STUN-tagged flow collapses Internet UDP into one any-address pair,
///  - unresolved Internet addresses become wildcard+port rules, silently once
///    enough of them share a port, otherwise with an unresolved-endpoint note,
///  - gateway peers map to the controller construct, local peers to
///    local-networks,
///  - everything is accept-only, from-device and to-device ACLs separated.
inline GenerationResult flows_to_mud(const std::vector<SwitchRule>& reactive,
                                     const DnsCache& cache, const ProfileMeta& meta,
                                     const CaptureConfig& cfg,
                                     const GenerationOptions& options = {}) {
  GenerationResult result;
  const std::string slug = detail::slugify(meta.name);

  const bool stun_mode =
      std::any_of(reactive.begin(), reactive.end(), [](const SwitchRule& r) { return r.stun; });
  if (stun_mode) {
    result.notes.push_back({"stun", "STUN flow detected; widening Internet UDP to any address"});
  }

  enum class PeerClass { kController, kLocal, kDomain, kUnresolved, kAny };
  struct PendingAce {
    Direction dir;
    MatchSet matches;
  };

  // Groups unresolved addresses by (protocol, fixed service port); reactive
  // rules fix at most one port.
  auto collapse_key = [](const MatchKey& m) {
    const auto& service = m.dst_port ? m.dst_port : m.src_port;
    return std::pair<int, int>{m.ip_proto ? static_cast<int>(*m.ip_proto) : -1,
                               service ? static_cast<int>(*service) : -1};
  };

  // First pass: classify peers and count unresolved addresses per shared
  // (protocol, remote port).
  struct Classified {
    const SwitchRule* rule;
    Direction dir;
    PeerClass peer_class;
    std::string domain;
    Ipv4Address address{};
  };
  std::vector<Classified> classified;
  std::map<std::pair<int, int>, std::set<std::uint32_t>> unresolved_by_port;

  for (const auto& rule : reactive) {
    if (rule.match.ethertype && *rule.match.ethertype != kEtherIpv4) continue;  // eth level
    const Direction dir =
        rule.match.src_mac == cfg.device_mac ? Direction::kFromDevice : Direction::kToDevice;
    const RuleEndpoint& peer =
        dir == Direction::kFromDevice ? rule.match.dst_ep : rule.match.src_ep;

    Classified c{&rule, dir, PeerClass::kAny, {}, {}};
    switch (peer.kind) {
      case RuleEndpoint::Kind::kDomain:
        c.peer_class = PeerClass::kDomain;
        c.domain = peer.domain;
        break;
      case RuleEndpoint::Kind::kAddress: {
        const Ipv4Address addr = peer.address;
        if (addr == cfg.gateway_ip) {
          c.peer_class = PeerClass::kController;
        } else if (cfg.is_local(addr) || addr.is_broadcast() || addr.is_multicast()) {
          c.peer_class = PeerClass::kLocal;
        } else if (auto name = cache.lookup(addr)) {
          c.peer_class = PeerClass::kDomain;
          c.domain = *name;
        } else {
          c.peer_class = PeerClass::kUnresolved;
          c.address = addr;
          unresolved_by_port[collapse_key(rule.match)].insert(addr.value);
        }
        break;
      }
      case RuleEndpoint::Kind::kAny:
        c.peer_class = PeerClass::kAny;
        break;
    }
    classified.push_back(std::move(c));
  }

  // Second pass: emit ACEs in rule order, deduplicated per direction.
  std::vector<PendingAce> pending;
  std::set<std::uint32_t> reported_unresolved;
  auto emit = [&pending](Direction dir, MatchSet matches) {
    for (const auto& p : pending) {
      if (p.dir == dir && p.matches == matches) return;
    }
    pending.push_back(PendingAce{dir, std::move(matches)});
  };

  for (const auto& c : classified) {
    const SwitchRule& rule = *c.rule;
    const bool internet_peer =
        c.peer_class == PeerClass::kDomain || c.peer_class == PeerClass::kUnresolved ||
        c.peer_class == PeerClass::kAny;
    const bool direction_group = rule.group == ReactiveGroup::kToInternet ||
                                 rule.group == ReactiveGroup::kFromInternet;
    if (stun_mode && internet_peer && direction_group && rule.match.ip_proto == kProtoUdp) {
      continue;  // subsumed by the any-address UDP pair below
    }

    MatchSet m;
    m.ip_proto = rule.match.ip_proto;
    if (rule.match.src_port) m.src_port = PortMatch::eq(*rule.match.src_port);
    if (rule.match.dst_port) m.dst_port = PortMatch::eq(*rule.match.dst_port);

    switch (c.peer_class) {
      case PeerClass::kController:
        m.construct = MudConstruct{MudConstruct::Kind::kController, kGatewayControllerUrn};
        break;
      case PeerClass::kLocal:
        m.construct = MudConstruct{MudConstruct::Kind::kLocalNetworks, {}};
        break;
      case PeerClass::kDomain:
        if (c.dir == Direction::kFromDevice) {
          m.dst_dnsname = c.domain;
        } else {
          m.src_dnsname = c.domain;
        }
        break;
      case PeerClass::kUnresolved: {
        const auto& sharers = unresolved_by_port[collapse_key(rule.match)];
        if (static_cast<int>(sharers.size()) < options.collapse_threshold &&
            reported_unresolved.insert(c.address.value).second) {
          result.notes.push_back({"unresolved-endpoint", c.address.str()});
        }
        break;  // wildcard address, ports kept; never an address literal
      }
      case PeerClass::kAny:
        break;
    }
    emit(c.dir, std::move(m));
  }

  if (stun_mode) {
    MatchSet out;
    out.ip_proto = kProtoUdp;
    emit(Direction::kFromDevice, out);
    MatchSet in;
    in.ip_proto = kProtoUdp;
    emit(Direction::kToDevice, in);
  }

  // Link-layer ACEs: broadcast rules from capture plus the ARP pair.
  struct PendingEth {
    Direction dir;
    std::uint16_t ethertype;
  };
  std::vector<PendingEth> pending_eth;
  auto emit_eth = [&pending_eth](Direction dir, std::uint16_t ethertype) {
    for (const auto& p : pending_eth) {
      if (p.dir == dir && p.ethertype == ethertype) return;
    }
    pending_eth.push_back(PendingEth{dir, ethertype});
  };
  if (options.include_eth) {
    for (const auto& rule : reactive) {
      if (!rule.match.ethertype || *rule.match.ethertype == kEtherIpv4) continue;
      const Direction dir =
          rule.match.src_mac == cfg.device_mac ? Direction::kFromDevice : Direction::kToDevice;
      emit_eth(dir, *rule.match.ethertype);
    }
    if (!reactive.empty()) {
      emit_eth(Direction::kFromDevice, kEtherArp);
      emit_eth(Direction::kToDevice, kEtherArp);
    }
  }

  // Assemble the profile.
  MudProfile& profile = result.profile;
  profile.mud_version = 1;
  profile.mud_url =
      meta.mud_url.empty() ? "https://example.com/mud/" + slug + ".json" : meta.mud_url;
  profile.last_update = options.last_update;
  profile.cache_validity = meta.cache_validity;
  profile.is_supported = true;
  profile.systeminfo = meta.name;

  Acl from_v4{"from-ipv4-" + slug, AclType::kIpv4, {}};
  Acl to_v4{"to-ipv4-" + slug, AclType::kIpv4, {}};
  Acl from_eth{"from-eth-" + slug, AclType::kEth, {}};
  Acl to_eth{"to-eth-" + slug, AclType::kEth, {}};

  int counter = 0;
  for (const auto& p : pending) {
    Ace ace;
    ace.action = AceAction::kAccept;
    ace.action_token = "accept";
    ace.matches = p.matches;
    const char* dir = p.dir == Direction::kFromDevice ? "from" : "to";
    ace.name = std::string(dir) + "-" + detail::proto_token(p.matches.ip_proto) + "-" +
               detail::peer_token(p.matches, p.dir) + "-" + detail::port_token(p.matches, p.dir) +
               "-" + std::to_string(counter++);
    (p.dir == Direction::kFromDevice ? from_v4 : to_v4).aces.push_back(std::move(ace));
  }
  for (const auto& p : pending_eth) {
    Ace ace;
    ace.action = AceAction::kAccept;
    ace.action_token = "accept";
    ace.matches.ethertype = p.ethertype;
    char proto[16];
    std::snprintf(proto, sizeof proto, "eth0x%04x", p.ethertype);
    const char* dir = p.dir == Direction::kFromDevice ? "from" : "to";
    ace.name = std::string(dir) + "-" + proto + "-local-all-" + std::to_string(counter++);
    (p.dir == Direction::kFromDevice ? from_eth : to_eth).aces.push_back(std::move(ace));
  }

  for (auto* acl : {&from_v4, &to_v4, &from_eth, &to_eth}) {
    if (acl->aces.empty()) continue;
    const bool from = acl->name.rfind("from-", 0) == 0;
    (from ? profile.from_device_acls : profile.to_device_acls).push_back(acl->name);
    profile.acls.push_back(std::move(*acl));
  }
  return result;
}

/// Category heuristic from the profile shape: no any-address rules is static;
/// any-address rules that pin a port (server lists distributed out of band)
/// or stay within UDP (STUN) are loosely static; anything wider is dynamic.
inline ProfileClass classify_profile(const MudProfile& profile) {
  const DevicePolicy policy = policy_of(profile);
  bool any_wildcard = false;
  for (const auto& rule : policy.ipv4) {
    if (rule.group.peer().kind != EndpointAtom::Kind::kInternetAny) continue;
    any_wildcard = true;
    const bool port_fixed = rule.box.sport != Interval{0, 65535} ||
                            rule.box.dport != Interval{0, 65535};
    const bool udp_only = rule.box.proto == Interval{kProtoUdp, kProtoUdp};
    if (!port_fixed && !udp_only) return ProfileClass::kDynamic;
  }
  return any_wildcard ? ProfileClass::kLooselyStatic : ProfileClass::kStatic;
}

}  // namespace mud
