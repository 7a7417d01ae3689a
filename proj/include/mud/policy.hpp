#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mud/mud_model.hpp"
#include "mud/net.hpp"

namespace mud {

enum class Direction { kFromDevice, kToDevice };

inline const char* direction_name(Direction d) {
  return d == Direction::kFromDevice ? "from-device" : "to-device";
}

/// Categorical endpoint of a policy rule. The numeric match space is factored
/// out into Box; endpoints form two small covering chains:
/// internet-any ⊇ each domain, local-network ⊇ controller.
struct EndpointAtom {
  enum class Kind { kDevice, kController, kLocalNetwork, kDomain, kInternetAny };

  Kind kind = Kind::kDevice;
  std::string domain;  // kDomain only

  auto operator<=>(const EndpointAtom&) const = default;

  static EndpointAtom device() { return {Kind::kDevice, {}}; }
  static EndpointAtom controller() { return {Kind::kController, {}}; }
  static EndpointAtom local_network() { return {Kind::kLocalNetwork, {}}; }
  static EndpointAtom internet_any() { return {Kind::kInternetAny, {}}; }
  static EndpointAtom domain_name(std::string d) { return {Kind::kDomain, std::move(d)}; }

  std::string str() const {
    switch (kind) {
      case Kind::kDevice: return "device";
      case Kind::kController: return "gateway";
      case Kind::kLocalNetwork: return "local-network";
      case Kind::kDomain: return domain;
      case Kind::kInternetAny: return "internet";
    }
    return "?";
  }
};

/// True when an endpoint pattern admits every packet the other admits.
inline bool endpoint_covers(const EndpointAtom& pattern, const EndpointAtom& concrete) {
  if (pattern == concrete) return true;
  if (pattern.kind == EndpointAtom::Kind::kInternetAny &&
      concrete.kind == EndpointAtom::Kind::kDomain) {
    return true;
  }
  if (pattern.kind == EndpointAtom::Kind::kLocalNetwork &&
      concrete.kind == EndpointAtom::Kind::kController) {
    return true;
  }
  return false;
}

/// Match region over (protocol, source port, destination port), all axes as
/// closed intervals.
struct Box {
  Interval proto{0, 255};
  Interval sport{0, 65535};
  Interval dport{0, 65535};

  auto operator<=>(const Box&) const = default;

  static Box full() { return {}; }

  bool contains(std::uint32_t p, std::uint32_t s, std::uint32_t d) const {
    return proto.contains(p) && sport.contains(s) && dport.contains(d);
  }

  bool contains(const Box& other) const {
    return proto.contains(other.proto) && sport.contains(other.sport) && dport.contains(other.dport);
  }

  bool intersects(const Box& other) const {
    return proto.intersects(other.proto) && sport.intersects(other.sport) &&
           dport.intersects(other.dport);
  }

  std::string str() const {
    return "proto " + proto.str() + ", sport " + sport.str() + ", dport " + dport.str();
  }
};

/// One side is always the device; the other is the rule's peer entity.
struct GroupKey {
  Direction direction = Direction::kFromDevice;
  EndpointAtom src;
  EndpointAtom dst;

  auto operator<=>(const GroupKey&) const = default;

  static GroupKey from_device(EndpointAtom peer) {
    return {Direction::kFromDevice, EndpointAtom::device(), std::move(peer)};
  }
  static GroupKey to_device(EndpointAtom peer) {
    return {Direction::kToDevice, std::move(peer), EndpointAtom::device()};
  }

  const EndpointAtom& peer() const {
    return direction == Direction::kFromDevice ? dst : src;
  }

  std::string str() const {
    return std::string(direction_name(direction)) + ":" + src.str() + "->" + dst.str();
  }
};

/// Pattern group admits concrete group when directions agree and both
/// endpoints cover.
inline bool group_covers(const GroupKey& pattern, const GroupKey& concrete) {
  return pattern.direction == concrete.direction && endpoint_covers(pattern.src, concrete.src) &&
         endpoint_covers(pattern.dst, concrete.dst);
}

struct PolicyRule {
  GroupKey group;
  Box box;
  AceAction action = AceAction::kAccept;
  std::string ace_name;
};

struct EthPolicyRule {
  Direction direction = Direction::kFromDevice;
  std::uint16_t ethertype = 0;
  AceAction action = AceAction::kAccept;
  std::string ace_name;
};

/// A MUD profile reduced to analyzable rules: IPv4 rules over the box space
/// plus the link-layer rules kept separately.
struct DevicePolicy {
  std::vector<PolicyRule> ipv4;
  std::vector<EthPolicyRule> eth;
};

namespace detail {

inline Interval port_interval(const std::optional<PortMatch>& pm) {
  if (!pm) return {0, 65535};
  return {pm->lo(), pm->hi()};
}

inline EndpointAtom ace_peer(const Ace& ace, Direction dir) {
  const MatchSet& m = ace.matches;
  if (m.construct) {
    switch (m.construct->kind) {
      case MudConstruct::Kind::kController: return EndpointAtom::controller();
      case MudConstruct::Kind::kLocalNetworks: return EndpointAtom::local_network();
      case MudConstruct::Kind::kSameManufacturer: return EndpointAtom::local_network();
    }
  }
  const auto& dnsname = dir == Direction::kFromDevice ? m.dst_dnsname : m.src_dnsname;
  if (dnsname) return EndpointAtom::domain_name(*dnsname);
  return EndpointAtom::internet_any();
}

}  // namespace detail

/// Flattens a profile into per-ACE rules, in document order of the ACLs.
/// ACLs not referenced from either device policy list are ignored.
inline DevicePolicy policy_of(const MudProfile& profile) {
  DevicePolicy out;
  for (const auto& acl : profile.acls) {
    bool from = false, to = false;
    for (const auto& n : profile.from_device_acls) from = from || n == acl.name;
    for (const auto& n : profile.to_device_acls) to = to || n == acl.name;
    if (!from && !to) continue;
    const Direction dir = from ? Direction::kFromDevice : Direction::kToDevice;

    for (const auto& ace : acl.aces) {
      if (acl.type == AclType::kEth) {
        out.eth.push_back(
            EthPolicyRule{dir, ace.matches.ethertype.value_or(0), ace.action, ace.name});
        continue;
      }
      PolicyRule rule;
      const EndpointAtom peer = detail::ace_peer(ace, dir);
      rule.group = dir == Direction::kFromDevice ? GroupKey::from_device(peer)
                                                 : GroupKey::to_device(peer);
      if (ace.matches.ip_proto) {
        rule.box.proto = {*ace.matches.ip_proto, *ace.matches.ip_proto};
      }
      rule.box.sport = detail::port_interval(ace.matches.src_port);
      rule.box.dport = detail::port_interval(ace.matches.dst_port);
      rule.action = ace.action;
      rule.ace_name = ace.name;
      out.ipv4.push_back(std::move(rule));
    }
  }
  return out;
}

}  // namespace mud
