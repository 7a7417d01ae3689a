#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mud/errors.hpp"
#include "mud/policy.hpp"

namespace mud {

/// Per-group ordered, pairwise-disjoint boxes. The representation depends
/// only on the accepted packet set, which is what makes structural equality
/// usable as policy equivalence.
using CanonicalPolicy = std::map<GroupKey, std::vector<Box>>;

namespace detail {

// Disjoint slabs cut at every distinct interval endpoint of `values`.
inline std::vector<Interval> slab_axis(std::vector<std::uint32_t> cuts) {
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Interval> slabs;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    slabs.push_back(Interval{cuts[i], cuts[i + 1] - 1});
  }
  return slabs;
}

// Maximal disjoint sorted intervals; adjacent inputs fuse.
inline std::vector<Interval> merge_intervals(std::vector<Interval> intervals) {
  std::sort(intervals.begin(), intervals.end());
  std::vector<Interval> merged;
  for (const auto& iv : intervals) {
    if (!merged.empty() && iv.lo <= merged.back().hi + 1) {
      merged.back().hi = std::max(merged.back().hi, iv.hi);
    } else {
      merged.push_back(iv);
    }
  }
  return merged;
}

struct SportSlab {
  Interval sport;
  std::vector<Interval> dports;

  bool operator==(const SportSlab&) const = default;
};

inline std::vector<Box> canonical_boxes(const std::vector<Box>& boxes) {
  // Protocol slabs from the input endpoints.
  std::vector<std::uint32_t> proto_cuts;
  for (const auto& b : boxes) {
    proto_cuts.push_back(b.proto.lo);
    proto_cuts.push_back(b.proto.hi + 1);
  }
  struct ProtoSlab {
    Interval proto;
    std::vector<SportSlab> cross;
  };
  std::vector<ProtoSlab> proto_slabs;
  for (const Interval& pslab : slab_axis(std::move(proto_cuts))) {
    std::vector<const Box*> in_proto;
    for (const auto& b : boxes) {
      if (b.proto.contains(pslab)) in_proto.push_back(&b);
    }
    if (in_proto.empty()) continue;

    std::vector<std::uint32_t> sport_cuts;
    for (const Box* b : in_proto) {
      sport_cuts.push_back(b->sport.lo);
      sport_cuts.push_back(b->sport.hi + 1);
    }
    std::vector<SportSlab> cross;
    for (const Interval& sslab : slab_axis(std::move(sport_cuts))) {
      std::vector<Interval> dports;
      for (const Box* b : in_proto) {
        if (b->sport.contains(sslab)) dports.push_back(b->dport);
      }
      if (dports.empty()) continue;
      SportSlab slab{sslab, merge_intervals(std::move(dports))};
      // Coalesce adjacent sport slabs with identical destination sections.
      if (!cross.empty() && cross.back().sport.hi + 1 == slab.sport.lo &&
          cross.back().dports == slab.dports) {
        cross.back().sport.hi = slab.sport.hi;
      } else {
        cross.push_back(std::move(slab));
      }
    }
    // Coalesce adjacent proto slabs with identical sport-level cross sections.
    if (!proto_slabs.empty() && proto_slabs.back().proto.hi + 1 == pslab.lo &&
        proto_slabs.back().cross == cross) {
      proto_slabs.back().proto.hi = pslab.hi;
    } else {
      proto_slabs.push_back(ProtoSlab{pslab, std::move(cross)});
    }
  }

  std::vector<Box> out;
  for (const auto& ps : proto_slabs) {
    for (const auto& ss : ps.cross) {
      for (const auto& d : ss.dports) {
        out.push_back(Box{ps.proto, ss.sport, d});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Box& a, const Box& b) {
    if (a.proto.lo != b.proto.lo) return a.proto.lo < b.proto.lo;
    if (a.sport.lo != b.sport.lo) return a.sport.lo < b.sport.lo;
    return a.dport.lo < b.dport.lo;
  });
  return out;
}

}  // namespace detail

/// Canonical form of a whitelist policy: per group, the unique ordered
/// disjoint partition of the accepted region. Presence of any drop rule is an
/// OverlappingActionConflict (whitelist precondition).
inline CanonicalPolicy canonicalize(const std::vector<PolicyRule>& rules) {
  std::map<GroupKey, std::vector<Box>> grouped;
  for (const auto& rule : rules) {
    if (rule.action != AceAction::kAccept) {
      throw CanonicalError(CanonicalError::Kind::kOverlappingActionConflict,
                           "whitelist canonicalization requires accept-only rules");
    }
    grouped[rule.group].push_back(rule.box);
  }
  CanonicalPolicy out;
  for (auto& [group, boxes] : grouped) {
    auto canonical = detail::canonical_boxes(boxes);
    if (!canonical.empty()) out.emplace(group, std::move(canonical));
  }
  return out;
}

/// Disjoint boxes exactly covering a minus the union of cover.
inline std::vector<Box> box_difference(const Box& a, const std::vector<Box>& cover) {
  std::vector<Box> pieces{a};
  for (const auto& c : cover) {
    std::vector<Box> next;
    for (const auto& p : pieces) {
      if (!p.intersects(c)) {
        next.push_back(p);
        continue;
      }
      Box rest = p;
      // Slice off the parts of `rest` outside `c`, one axis at a time.
      auto slice = [&next](Box& r, Interval Box::* axis, const Interval& keep) {
        const Interval cur = r.*axis;
        if (cur.lo < keep.lo) {
          Box below = r;
          (below.*axis) = Interval{cur.lo, keep.lo - 1};
          next.push_back(below);
        }
        if (cur.hi > keep.hi) {
          Box above = r;
          (above.*axis) = Interval{keep.hi + 1, cur.hi};
          next.push_back(above);
        }
        (r.*axis) = Interval{std::max(cur.lo, keep.lo), std::min(cur.hi, keep.hi)};
      };
      slice(rest, &Box::proto, c.proto);
      slice(rest, &Box::sport, c.sport);
      slice(rest, &Box::dport, c.dport);
      // What remains of `rest` lies inside `c` and is dropped.
    }
    pieces = std::move(next);
    if (pieces.empty()) break;
  }
  return pieces;
}

/// A single packet for membership checks; group uses concrete endpoint atoms.
struct PacketPoint {
  GroupKey group;
  std::uint32_t proto = 0;
  std::uint32_t sport = 0;
  std::uint32_t dport = 0;
};

/// Brute-force accept test: some accept rule whose group covers the packet's
/// group contains the point.
inline bool accept_set_member(const std::vector<PolicyRule>& rules, const PacketPoint& packet) {
  for (const auto& rule : rules) {
    if (rule.action != AceAction::kAccept) continue;
    if (!group_covers(rule.group, packet.group)) continue;
    if (rule.box.contains(packet.proto, packet.sport, packet.dport)) return true;
  }
  return false;
}

inline std::vector<PolicyRule> canonical_as_rules(const CanonicalPolicy& canonical) {
  std::vector<PolicyRule> rules;
  for (const auto& [group, boxes] : canonical) {
    for (const auto& box : boxes) {
      rules.push_back(PolicyRule{group, box, AceAction::kAccept, {}});
    }
  }
  return rules;
}

/// Policy equivalence: canonical forms compare equal (per group, no covering
/// relation involved).
inline bool equivalent(const std::vector<PolicyRule>& p1, const std::vector<PolicyRule>& p2) {
  return canonicalize(p1) == canonicalize(p2);
}

/// Inclusion p^X ⊂ p^Y: every accepted packet of X is accepted by Y. Peer
/// coverage is consulted, so a rule for a domain may be covered by an
/// internet-any rule and a controller rule by a local-network rule.
inline bool includes(const CanonicalPolicy& x, const CanonicalPolicy& y) {
  for (const auto& [group, boxes] : x) {
    std::vector<Box> cover;
    for (const auto& [ygroup, yboxes] : y) {
      if (!group_covers(ygroup, group)) continue;
      cover.insert(cover.end(), yboxes.begin(), yboxes.end());
    }
    for (const auto& box : boxes) {
      if (!box_difference(box, cover).empty()) return false;
    }
  }
  return true;
}

inline bool includes(const std::vector<PolicyRule>& x, const std::vector<PolicyRule>& y) {
  return includes(canonicalize(x), canonicalize(y));
}

/// Same accept set, covering relation taken into account.
inline bool semantically_equal(const std::vector<PolicyRule>& x,
                               const std::vector<PolicyRule>& y) {
  const CanonicalPolicy cx = canonicalize(x);
  const CanonicalPolicy cy = canonicalize(y);
  return includes(cx, cy) && includes(cy, cx);
}

namespace detail {

inline std::set<std::pair<int, std::uint16_t>> eth_accept_set(const DevicePolicy& policy) {
  std::set<std::pair<int, std::uint16_t>> out;
  for (const auto& rule : policy.eth) {
    if (rule.action == AceAction::kAccept) {
      out.emplace(static_cast<int>(rule.direction), rule.ethertype);
    }
  }
  return out;
}

}  // namespace detail

/// Whole-profile equivalence: canonical IPv4 forms equal and the same
/// link-layer permissions.
inline bool profiles_equivalent(const MudProfile& a, const MudProfile& b) {
  const DevicePolicy pa = policy_of(a);
  const DevicePolicy pb = policy_of(b);
  return equivalent(pa.ipv4, pb.ipv4) &&
         detail::eth_accept_set(pa) == detail::eth_accept_set(pb);
}

/// Whole-profile inclusion: a accepts only what b accepts.
inline bool profile_includes(const MudProfile& a, const MudProfile& b) {
  const DevicePolicy pa = policy_of(a);
  const DevicePolicy pb = policy_of(b);
  const auto ea = detail::eth_accept_set(pa);
  const auto eb = detail::eth_accept_set(pb);
  return includes(pa.ipv4, pb.ipv4) &&
         std::includes(eb.begin(), eb.end(), ea.begin(), ea.end());
}

inline nlohmann::ordered_json canonical_to_json(const CanonicalPolicy& canonical) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [group, boxes] : canonical) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& box : boxes) {
      arr.push_back({{"proto", {box.proto.lo, box.proto.hi}},
                     {"sport", {box.sport.lo, box.sport.hi}},
                     {"dport", {box.dport.lo, box.dport.hi}}});
    }
    out[group.str()] = std::move(arr);
  }
  return out;
}

}  // namespace mud
