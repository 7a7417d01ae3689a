#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "mud/canonical.hpp"
#include "mud/errors.hpp"
#include "mud/mud_model.hpp"
#include "mud/policy.hpp"

namespace mud {

struct ZoneRule {
  GroupKey group;
  Box box;
};

/// Whitelist zone policy: anything not covered is denied in that zone.
struct ZonePolicy {
  std::string name;
  std::vector<ZoneRule> permitted;
  std::string notes;
};

namespace detail {

inline EndpointAtom zone_endpoint(const std::string& token) {
  if (token == "device") return EndpointAtom::device();
  if (token == "controller") return EndpointAtom::controller();
  if (token == "local-network") return EndpointAtom::local_network();
  if (token == "internet-any") return EndpointAtom::internet_any();
  return EndpointAtom::domain_name(token);
}

inline Interval zone_interval(const nlohmann::json& v, std::uint32_t max,
                              const std::string& what) {
  if (v.is_number_integer()) {
    const long long value = v.get<long long>();
    if (value < 0 || value > max) {
      throw ComplianceError(ComplianceError::Kind::kBadZoneFile, what + " out of range");
    }
    return Interval{static_cast<std::uint32_t>(value), static_cast<std::uint32_t>(value)};
  }
  if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer()) {
    const long long lo = v[0].get<long long>(), hi = v[1].get<long long>();
    if (lo < 0 || hi > max || lo > hi) {
      throw ComplianceError(ComplianceError::Kind::kBadZoneFile, what + " interval invalid");
    }
    return Interval{static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi)};
  }
  throw ComplianceError(ComplianceError::Kind::kBadZoneFile, what + " must be int or [lo, hi]");
}

}  // namespace detail

/// Zone file: {"zones":[{"name":…,"notes":…,"permitted":[{"direction":…,
/// "src"/"dst":…,"proto":…,"sport":…,"dport":…}…]}]}. The device side of each
/// permitted rule is implied by the direction and may be omitted.
inline std::vector<ZonePolicy> parse_zones_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("zones")) {
    throw ComplianceError(ComplianceError::Kind::kBadZoneFile,
                          "zone file must be an object with a 'zones' array");
  }
  std::vector<ZonePolicy> zones;
  for (const auto& z : doc.at("zones")) {
    ZonePolicy zone;
    zone.name = z.at("name").get<std::string>();
    if (z.contains("notes")) zone.notes = z.at("notes").get<std::string>();
    for (const auto& r : z.value("permitted", nlohmann::json::array())) {
      ZoneRule rule;
      const std::string dir = r.at("direction").get<std::string>();
      if (dir == "from-device") {
        rule.group.direction = Direction::kFromDevice;
        rule.group.src = EndpointAtom::device();
        rule.group.dst = detail::zone_endpoint(r.value("dst", "internet-any"));
      } else if (dir == "to-device") {
        rule.group.direction = Direction::kToDevice;
        rule.group.src = detail::zone_endpoint(r.value("src", "internet-any"));
        rule.group.dst = EndpointAtom::device();
      } else {
        throw ComplianceError(ComplianceError::Kind::kBadZoneFile,
                              "direction must be from-device or to-device");
      }
      if (r.contains("proto")) rule.box.proto = detail::zone_interval(r.at("proto"), 255, "proto");
      if (r.contains("sport")) {
        rule.box.sport = detail::zone_interval(r.at("sport"), 65535, "sport");
      }
      if (r.contains("dport")) {
        rule.box.dport = detail::zone_interval(r.at("dport"), 65535, "dport");
      }
      zone.permitted.push_back(std::move(rule));
    }
    zones.push_back(std::move(zone));
  }
  return zones;
}

struct AceViolation {
  std::string ace_name;
  std::vector<Box> uncovered;  // witness boxes the zone does not permit
};

struct ComplianceReport {
  std::string zone;
  int total_aces = 0;
  std::vector<AceViolation> violating;
  int violation_pct = 0;  // nearest-integer rounding
  bool safe = true;
};

/// Inclusion check per ACE: the ACE's box must be fully covered by the zone
/// rules whose group covers the ACE's group. Link-layer ACEs count toward the
/// total but are outside the zones' IPv4 match space and never violate.
inline ComplianceReport comply(const MudProfile& profile, const ZonePolicy& zone) {
  const DevicePolicy policy = policy_of(profile);
  ComplianceReport report;
  report.zone = zone.name;
  report.total_aces = static_cast<int>(policy.ipv4.size() + policy.eth.size());

  for (const auto& rule : policy.ipv4) {
    if (rule.action != AceAction::kAccept) continue;  // only accepted traffic can violate
    std::vector<Box> cover;
    for (const auto& permitted : zone.permitted) {
      if (group_covers(permitted.group, rule.group)) cover.push_back(permitted.box);
    }
    auto residue = box_difference(rule.box, cover);
    if (!residue.empty()) {
      report.violating.push_back(AceViolation{rule.ace_name, std::move(residue)});
    }
  }

  report.safe = report.violating.empty();
  if (report.total_aces > 0) {
    report.violation_pct = static_cast<int>(std::lround(
        100.0 * static_cast<double>(report.violating.size()) / report.total_aces));
  }
  return report;
}

/// Zones where the profile deploys without violations, in file order.
inline std::vector<std::string> safe_zones(const MudProfile& profile,
                                           const std::vector<ZonePolicy>& zones) {
  std::vector<std::string> out;
  for (const auto& zone : zones) {
    if (comply(profile, zone).safe) out.push_back(zone.name);
  }
  return out;
}

inline nlohmann::ordered_json report_to_json(const ComplianceReport& report) {
  nlohmann::ordered_json out;
  out["zone"] = report.zone;
  out["total_aces"] = report.total_aces;
  auto& violating = out["violating"] = nlohmann::ordered_json::array();
  for (const auto& v : report.violating) {
    nlohmann::ordered_json boxes = nlohmann::ordered_json::array();
    for (const auto& b : v.uncovered) {
      boxes.push_back({{"proto", {b.proto.lo, b.proto.hi}},
                       {"sport", {b.sport.lo, b.sport.hi}},
                       {"dport", {b.dport.lo, b.dport.hi}}});
    }
    violating.push_back({{"ace", v.ace_name}, {"uncovered", std::move(boxes)}});
  }
  out["violation_pct"] = report.violation_pct;
  out["safe"] = report.safe;
  return out;
}

}  // namespace mud
