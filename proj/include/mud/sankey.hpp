#pragma once

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mud/mud_model.hpp"
#include "mud/policy.hpp"

namespace mud {

/// Flow-diagram data for a profile: nodes are endpoint entities, links carry
/// a proto/port label and the number of ACEs they aggregate. The device node
/// is always present; others appear sorted.
inline nlohmann::ordered_json sankey_json(const MudProfile& profile) {
  const DevicePolicy policy = policy_of(profile);

  struct Link {
    std::string source, target, label;
    int value = 0;
  };
  std::vector<Link> links;
  std::set<std::string> others;

  auto add_link = [&links](std::string source, std::string target, std::string label) {
    for (auto& link : links) {
      if (link.source == source && link.target == target && link.label == label) {
        ++link.value;
        return;
      }
    }
    links.push_back(Link{std::move(source), std::move(target), std::move(label), 1});
  };

  auto proto_name = [](const Interval& proto) -> std::string {
    if (proto == Interval{0, 255}) return "ip";
    if (proto.lo != proto.hi) return "ip" + proto.str();
    switch (proto.lo) {
      case kProtoIcmp: return "icmp";
      case kProtoTcp: return "tcp";
      case kProtoUdp: return "udp";
      default: return "ip" + std::to_string(proto.lo);
    }
  };

  for (const auto& rule : policy.ipv4) {
    const std::string peer = rule.group.peer().str();
    others.insert(peer);
    const Interval& service =
        rule.group.direction == Direction::kFromDevice ? rule.box.dport : rule.box.sport;
    std::string label = proto_name(rule.box.proto) + "/" +
                        (service == Interval{0, 65535} ? "any" : service.str());
    if (rule.group.direction == Direction::kFromDevice) {
      add_link("device", peer, std::move(label));
    } else {
      add_link(peer, "device", std::move(label));
    }
  }
  for (const auto& rule : policy.eth) {
    char label[16];
    std::snprintf(label, sizeof label, "eth/0x%04x", rule.ethertype);
    others.insert("local-network");
    if (rule.direction == Direction::kFromDevice) {
      add_link("device", "local-network", label);
    } else {
      add_link("local-network", "device", label);
    }
  }

  nlohmann::ordered_json out;
  auto& nodes = out["nodes"] = nlohmann::ordered_json::array();
  nodes.push_back({{"id", "device"}});
  for (const auto& node : others) nodes.push_back({{"id", node}});
  auto& jlinks = out["links"] = nlohmann::ordered_json::array();
  std::stable_sort(links.begin(), links.end(), [](const Link& a, const Link& b) {
    if (a.source != b.source) return a.source < b.source;
    if (a.target != b.target) return a.target < b.target;
    return a.label < b.label;
  });
  for (const auto& link : links) {
    jlinks.push_back({{"source", link.source},
                      {"target", link.target},
                      {"label", link.label},
                      {"value", link.value}});
  }
  return out;
}

}  // namespace mud
