#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mud/canonical.hpp"
#include "mud/errors.hpp"
#include "mud/mud_model.hpp"
#include "mud/packet.hpp"
#include "mud/policy.hpp"

namespace mud {

using AtomId = int;
using AtomSet = std::set<AtomId>;

class AtomTable {
 public:
  AtomId intern(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    const AtomId id = static_cast<AtomId>(names_.size());
    names_.push_back(name);
    ids_.emplace(name, id);
    return id;
  }

  std::optional<AtomId> find(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(AtomId id) const { return names_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, AtomId> ids_;
};

struct CmgEdge {
  AtomSet invertex;
  AtomSet outvertex;
  std::string label;
  // Payload for edges derived from a MUD profile.
  std::optional<PolicyRule> rule;
  std::optional<EthPolicyRule> eth_rule;
};

inline bool atom_subset(const AtomSet& sub, const AtomSet& super) {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

/// Generating set partitioned into variables and propositions, plus directed
/// edges between subsets. Construction is unchecked; validate() reports the
/// three defining conditions.
struct ConditionalMetagraph {
  AtomTable atoms;
  AtomSet variables;
  AtomSet propositions;
  std::vector<CmgEdge> edges;

  AtomId var(const std::string& name) {
    const AtomId id = atoms.intern(name);
    variables.insert(id);
    return id;
  }

  AtomId prop(const std::string& name) {
    const AtomId id = atoms.intern(name);
    propositions.insert(id);
    return id;
  }

  std::size_t add_edge(AtomSet invertex, AtomSet outvertex, std::string label) {
    edges.push_back(CmgEdge{std::move(invertex), std::move(outvertex), std::move(label), {}, {}});
    return edges.size() - 1;
  }
};

struct DefectReport {
  int condition;   // 1, 2 or 3
  int edge_index;  // -1 for the generating-set condition
  std::string detail;
};

/// Checks the three defining conditions: non-null vertices, disjointness
/// (the generating-set partition and each edge's vertex pair), and
/// proposition outvertices being singletons.
inline std::vector<DefectReport> validate(const ConditionalMetagraph& cmg) {
  std::vector<DefectReport> out;
  for (std::size_t i = 0; i < cmg.edges.size(); ++i) {
    const CmgEdge& e = cmg.edges[i];
    if (e.invertex.empty() && e.outvertex.empty()) {
      out.push_back({1, static_cast<int>(i), "edge '" + e.label + "' has null vertices"});
    }
  }
  for (AtomId id : cmg.variables) {
    if (cmg.propositions.count(id)) {
      out.push_back({2, -1, "atom '" + cmg.atoms.name(id) + "' is both variable and proposition"});
    }
  }
  for (std::size_t i = 0; i < cmg.edges.size(); ++i) {
    const CmgEdge& e = cmg.edges[i];
    for (AtomId id : e.invertex) {
      if (e.outvertex.count(id)) {
        out.push_back({2, static_cast<int>(i),
                       "edge '" + e.label + "' repeats '" + cmg.atoms.name(id) +
                           "' in invertex and outvertex"});
        break;
      }
    }
  }
  for (std::size_t i = 0; i < cmg.edges.size(); ++i) {
    const CmgEdge& e = cmg.edges[i];
    bool has_prop = false;
    for (AtomId id : e.outvertex) has_prop = has_prop || cmg.propositions.count(id) > 0;
    if (has_prop && e.outvertex.size() > 1) {
      out.push_back(
          {3, static_cast<int>(i), "outvertex of '" + e.label + "' mixes a proposition with others"});
    }
  }
  return out;
}

struct Metapath {
  AtomSet source;               // B
  AtomSet target;               // C
  std::vector<std::size_t> edge_indices;  // M, sorted
};

/// M is a metapath from B to C when C lies in the combined outvertices and
/// every invertex is covered by B plus the combined outvertices.
inline bool is_metapath(const ConditionalMetagraph& cmg, const AtomSet& source,
                        const AtomSet& target, const std::vector<std::size_t>& edge_indices) {
  AtomSet coverage = source;
  AtomSet outputs;
  for (std::size_t idx : edge_indices) {
    const CmgEdge& e = cmg.edges[idx];
    outputs.insert(e.outvertex.begin(), e.outvertex.end());
  }
  coverage.insert(outputs.begin(), outputs.end());
  if (!atom_subset(target, outputs)) return false;
  for (std::size_t idx : edge_indices) {
    if (!atom_subset(cmg.edges[idx].invertex, coverage)) return false;
  }
  return true;
}

namespace detail {

// Greatest fixed point: the maximal edge set whose invertices are all covered
// by B plus the set's own outvertices. Every metapath from B is a subset.
inline std::vector<std::size_t> closure_edges(const ConditionalMetagraph& cmg,
                                              const AtomSet& source,
                                              const std::vector<std::size_t>& candidates) {
  std::vector<std::size_t> current = candidates;
  while (true) {
    AtomSet coverage = source;
    for (std::size_t idx : current) {
      coverage.insert(cmg.edges[idx].outvertex.begin(), cmg.edges[idx].outvertex.end());
    }
    std::vector<std::size_t> kept;
    for (std::size_t idx : current) {
      if (atom_subset(cmg.edges[idx].invertex, coverage)) kept.push_back(idx);
    }
    if (kept.size() == current.size()) return kept;
    current = std::move(kept);
  }
}

inline std::vector<std::size_t> all_edge_indices(const ConditionalMetagraph& cmg) {
  std::vector<std::size_t> all(cmg.edges.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

}  // namespace detail

/// Polynomial existence test over the whole edge set.
inline bool metapath_exists(const ConditionalMetagraph& cmg, const AtomSet& source,
                            const AtomSet& target) {
  auto closed = detail::closure_edges(cmg, source, detail::all_edge_indices(cmg));
  AtomSet outputs;
  for (std::size_t idx : closed) {
    outputs.insert(cmg.edges[idx].outvertex.begin(), cmg.edges[idx].outvertex.end());
  }
  return atom_subset(target, outputs);
}

/// Exhaustively enumerates every (nonempty) metapath from B to C. The search
/// space is the closure of usable edges; beyond `bound` edges the exact
/// enumeration is refused.
inline std::vector<Metapath> find_metapaths(const ConditionalMetagraph& cmg, const AtomSet& source,
                                            const AtomSet& target, std::size_t bound = 20) {
  const auto candidates = detail::closure_edges(cmg, source, detail::all_edge_indices(cmg));
  if (candidates.size() > bound) {
    throw MetagraphError(MetagraphError::Kind::kSearchSpaceTooLarge,
                         std::to_string(candidates.size()) + " candidate edges exceed bound " +
                             std::to_string(bound));
  }
  std::vector<Metapath> out;
  const std::size_t n = candidates.size();
  for (std::uint64_t mask = 1; n > 0 && mask < (1ull << n); ++mask) {
    std::vector<std::size_t> subset;
    for (std::size_t b = 0; b < n; ++b) {
      if (mask & (1ull << b)) subset.push_back(candidates[b]);
    }
    if (is_metapath(cmg, source, target, subset)) {
      out.push_back(Metapath{source, target, std::move(subset)});
    }
  }
  return out;
}

/// No proper subset of the edge set is itself a metapath from B to C.
inline bool is_edge_dominant(const ConditionalMetagraph& cmg, const Metapath& mp,
                             std::size_t bound = 20) {
  const std::size_t n = mp.edge_indices.size();
  if (n > bound) {
    throw MetagraphError(MetagraphError::Kind::kSearchSpaceTooLarge,
                         "metapath too large for subset enumeration");
  }
  for (std::uint64_t mask = 0; mask + 1 < (1ull << n); ++mask) {  // skip the full set
    std::vector<std::size_t> subset;
    for (std::size_t b = 0; b < n; ++b) {
      if (mask & (1ull << b)) subset.push_back(mp.edge_indices[b]);
    }
    if (is_metapath(cmg, mp.source, mp.target, subset)) return false;
  }
  return true;
}

/// No metapath reaches C from a proper subset of B.
inline bool is_input_dominant(const ConditionalMetagraph& cmg, const Metapath& mp,
                              std::size_t bound = 20) {
  std::vector<AtomId> source(mp.source.begin(), mp.source.end());
  const std::size_t n = source.size();
  if (n > bound) {
    throw MetagraphError(MetagraphError::Kind::kSearchSpaceTooLarge,
                         "source set too large for subset enumeration");
  }
  for (std::uint64_t mask = 0; mask + 1 < (1ull << n); ++mask) {  // skip B itself
    AtomSet sub;
    for (std::size_t b = 0; b < n; ++b) {
      if (mask & (1ull << b)) sub.insert(source[b]);
    }
    if (metapath_exists(cmg, sub, mp.target)) return false;
  }
  return true;
}

inline bool is_dominant(const ConditionalMetagraph& cmg, const Metapath& mp,
                        std::size_t bound = 20) {
  return is_edge_dominant(cmg, mp, bound) && is_input_dominant(cmg, mp, bound);
}

/// Potential conflict set: the propositions appearing on the metapath's
/// invertices.
inline AtomSet conflict_set(const ConditionalMetagraph& cmg, const Metapath& mp) {
  AtomSet united;
  for (std::size_t idx : mp.edge_indices) {
    united.insert(cmg.edges[idx].invertex.begin(), cmg.edges[idx].invertex.end());
  }
  AtomSet out;
  for (AtomId id : united) {
    if (cmg.propositions.count(id)) out.insert(id);
  }
  return out;
}

namespace detail {

inline std::string proto_atom(const Interval& proto) { return "protocol=" + proto.str(); }

inline std::optional<std::string> port_axis_prefix(const Interval& proto) {
  if (proto.lo == proto.hi && proto.lo == kProtoTcp) return "TCP.";
  if (proto.lo == proto.hi && proto.lo == kProtoUdp) return "UDP.";
  return std::nullopt;
}

inline std::string eth_atom(std::uint16_t ethertype) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "eth.ethertype=0x%04x", ethertype);
  return buf;
}

inline AtomSet rule_propositions(ConditionalMetagraph& cmg, const PolicyRule& rule) {
  AtomSet props;
  props.insert(cmg.prop(proto_atom(rule.box.proto)));
  if (auto prefix = port_axis_prefix(rule.box.proto)) {
    props.insert(cmg.prop(*prefix + "sport=" + rule.box.sport.str()));
    props.insert(cmg.prop(*prefix + "dport=" + rule.box.dport.str()));
  }
  return props;
}

inline std::string action_atom(const std::string& token) { return "action=" + token; }

}  // namespace detail

/// Models a profile as a conditional metagraph: one edge per ACE, invertex =
/// {source endpoint} ∪ propositions, outvertex = {destination endpoint}.
inline ConditionalMetagraph from_mud(const MudProfile& profile) {
  ConditionalMetagraph cmg;
  cmg.var("device");
  const DevicePolicy policy = policy_of(profile);
  for (const auto& rule : policy.ipv4) {
    const AtomId src = cmg.var(rule.group.src.str());
    const AtomId dst = cmg.var(rule.group.dst.str());
    AtomSet inv = detail::rule_propositions(cmg, rule);
    inv.insert(cmg.prop(detail::action_atom(rule.action == AceAction::kAccept ? "accept"
                                            : rule.action == AceAction::kDrop ? "drop"
                                                                              : "other")));
    inv.insert(src);
    const std::size_t idx = cmg.add_edge(std::move(inv), AtomSet{dst}, rule.ace_name);
    cmg.edges[idx].rule = rule;
  }
  for (const auto& rule : policy.eth) {
    const AtomId peer = cmg.var("local-network");
    const AtomId device = cmg.var("device");
    const AtomId src = rule.direction == Direction::kFromDevice ? device : peer;
    const AtomId dst = rule.direction == Direction::kFromDevice ? peer : device;
    AtomSet inv{src, cmg.prop(detail::eth_atom(rule.ethertype))};
    inv.insert(cmg.prop(detail::action_atom(rule.action == AceAction::kAccept ? "accept"
                                            : rule.action == AceAction::kDrop ? "drop"
                                                                              : "other")));
    const std::size_t idx = cmg.add_edge(std::move(inv), AtomSet{dst}, rule.ace_name);
    cmg.edges[idx].eth_rule = rule;
  }
  return cmg;
}

struct Redundancy {
  std::string ace_name;
  std::vector<std::string> witness;  // covering edge labels
};

namespace detail {

// Builds the analysis graph for one direction and action: the kept ACE edges
// plus sound implication edges. Peer-coverage edges point up the covering
// chain on the source side (to-device rules) and down it on the destination
// side (from-device rules); proposition implications always point from the
// narrower interval to the wider one.
inline ConditionalMetagraph augmented_graph(const std::vector<const CmgEdge*>& kept,
                                            Direction direction) {
  ConditionalMetagraph g;
  std::map<std::string, std::vector<std::pair<std::string, Interval>>> axis_atoms;
  for (const CmgEdge* e : kept) {
    const PolicyRule& rule = *e->rule;
    const AtomId src = g.var(rule.group.src.str());
    const AtomId dst = g.var(rule.group.dst.str());
    AtomSet inv = rule_propositions(g, rule);
    inv.insert(g.prop(action_atom("any")));  // same action by construction
    inv.insert(src);
    g.add_edge(std::move(inv), AtomSet{dst}, e->label);

    axis_atoms["protocol"].push_back({proto_atom(rule.box.proto), rule.box.proto});
    if (auto prefix = port_axis_prefix(rule.box.proto)) {
      axis_atoms[*prefix + "sport"].push_back(
          {*prefix + "sport=" + rule.box.sport.str(), rule.box.sport});
      axis_atoms[*prefix + "dport"].push_back(
          {*prefix + "dport=" + rule.box.dport.str(), rule.box.dport});
    }
  }

  // Peer covering chain.
  const bool peer_is_source = direction == Direction::kToDevice;
  auto add_cover = [&g, peer_is_source](const std::string& sub, const std::string& super) {
    auto sub_id = g.atoms.find(sub);
    auto super_id = g.atoms.find(super);
    if (!sub_id || !super_id) return;
    if (peer_is_source) {
      g.add_edge(AtomSet{*sub_id}, AtomSet{*super_id}, "covering:" + sub + "<=" + super);
    } else {
      g.add_edge(AtomSet{*super_id}, AtomSet{*sub_id}, "covering:" + super + "=>" + sub);
    }
  };
  add_cover("gateway", "local-network");
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    const std::string& name = g.atoms.name(static_cast<AtomId>(i));
    if (g.variables.count(static_cast<AtomId>(i)) && name != "device" && name != "gateway" &&
        name != "local-network" && name != "internet") {
      add_cover(name, "internet");
    }
  }

  // Interval implication edges per axis.
  for (auto& [axis, entries] : axis_atoms) {
    std::sort(entries.begin(), entries.end());
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
    for (const auto& [narrow_name, narrow] : entries) {
      for (const auto& [wide_name, wide] : entries) {
        if (narrow_name == wide_name || !wide.contains(narrow)) continue;
        auto narrow_id = g.atoms.find(narrow_name);
        auto wide_id = g.atoms.find(wide_name);
        g.add_edge(AtomSet{*narrow_id}, AtomSet{*wide_id},
                   "covering:" + narrow_name + "<=" + wide_name);
      }
    }
  }
  return g;
}

// Witness metapath for a covered edge, pruned to an edge-dominant one; only
// ACE labels are reported.
inline std::optional<std::vector<std::string>> metapath_witness(
    const std::vector<const CmgEdge*>& kept, const CmgEdge& target, Direction direction) {
  ConditionalMetagraph g = augmented_graph(kept, direction);
  // Rebuild the target edge's atoms inside the analysis graph.
  const PolicyRule& rule = *target.rule;
  AtomSet source = rule_propositions(g, rule);
  source.insert(g.prop(action_atom("any")));
  source.insert(g.var(rule.group.src.str()));
  const AtomSet goal{g.var(rule.group.dst.str())};

  auto closed = closure_edges(g, source, all_edge_indices(g));
  AtomSet outputs;
  for (std::size_t idx : closed) {
    outputs.insert(g.edges[idx].outvertex.begin(), g.edges[idx].outvertex.end());
  }
  if (!atom_subset(goal, outputs)) return std::nullopt;

  // Greedy prune toward an edge-dominant witness.
  std::vector<std::size_t> witness = closed;
  for (std::size_t i = witness.size(); i-- > 0;) {
    std::vector<std::size_t> trimmed;
    for (std::size_t j = 0; j < witness.size(); ++j) {
      if (j != i) trimmed.push_back(witness[j]);
    }
    if (is_metapath(g, source, goal, trimmed)) witness = std::move(trimmed);
  }
  std::vector<std::string> labels;
  for (std::size_t idx : witness) {
    const std::string& label = g.edges[idx].label;
    if (label.rfind("covering:", 0) != 0) labels.push_back(label);
  }
  return labels;
}

}  // namespace detail

/// Redundant ACEs: removing the ACE leaves the accepted packet set unchanged.
/// Detection is greedy in document order against the still-kept rules, so a
/// duplicated ACE is reported once. Witnesses come from a covering metapath
/// in the analysis graph; where coverage is a plain interval union the
/// overlapping ACE names stand in as the witness.
inline std::vector<Redundancy> find_redundancies(const ConditionalMetagraph& cmg) {
  std::vector<Redundancy> out;
  std::vector<bool> alive(cmg.edges.size(), true);

  for (std::size_t i = 0; i < cmg.edges.size(); ++i) {
    const CmgEdge& edge = cmg.edges[i];
    if (edge.rule) {
      if (edge.rule->action != AceAction::kAccept) continue;  // analysis per action; only accepts
      std::vector<PolicyRule> with;
      std::vector<PolicyRule> without;
      for (std::size_t j = 0; j < cmg.edges.size(); ++j) {
        if (alive[j] && cmg.edges[j].rule && cmg.edges[j].rule->action == AceAction::kAccept) {
          with.push_back(*cmg.edges[j].rule);
          if (j != i) without.push_back(*cmg.edges[j].rule);
        }
      }
      // Removal oracle: the accept set may only shrink, so one inclusion
      // direction decides equality.
      if (!includes(canonicalize(with), canonicalize(without))) continue;

      std::vector<const CmgEdge*> kept;
      for (std::size_t j = 0; j < cmg.edges.size(); ++j) {
        if (j == i || !alive[j] || !cmg.edges[j].rule) continue;
        if (cmg.edges[j].rule->action != AceAction::kAccept) continue;
        if (cmg.edges[j].rule->group.direction != edge.rule->group.direction) continue;
        kept.push_back(&cmg.edges[j]);
      }
      auto witness = detail::metapath_witness(kept, edge, edge.rule->group.direction);
      std::vector<std::string> labels;
      if (witness && !witness->empty()) {
        labels = *witness;
      } else {
        // Interval-union coverage: report the overlapping kept ACEs.
        for (const CmgEdge* k : kept) {
          if (group_covers(k->rule->group, edge.rule->group) &&
              k->rule->box.intersects(edge.rule->box)) {
            labels.push_back(k->label);
          }
        }
      }
      out.push_back(Redundancy{edge.label, std::move(labels)});
      alive[i] = false;
    } else if (edge.eth_rule) {
      if (edge.eth_rule->action != AceAction::kAccept) continue;
      for (std::size_t j = 0; j < cmg.edges.size(); ++j) {
        if (j == i || !alive[j] || !cmg.edges[j].eth_rule) continue;
        const EthPolicyRule& other = *cmg.edges[j].eth_rule;
        if (other.action == edge.eth_rule->action &&
            other.direction == edge.eth_rule->direction &&
            other.ethertype == edge.eth_rule->ethertype) {
          out.push_back(Redundancy{edge.label, {cmg.edges[j].label}});
          alive[i] = false;
          break;
        }
      }
    }
  }
  return out;
}

/// Intent-ambiguous pairs: overlapping match regions with different actions.
inline std::vector<std::pair<std::string, std::string>> find_ambiguities(
    const ConditionalMetagraph& cmg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < cmg.edges.size(); ++i) {
    for (std::size_t j = i + 1; j < cmg.edges.size(); ++j) {
      const CmgEdge& a = cmg.edges[i];
      const CmgEdge& b = cmg.edges[j];
      if (a.rule && b.rule) {
        if (a.rule->action == b.rule->action) continue;
        if (a.rule->group.direction != b.rule->group.direction) continue;
        const EndpointAtom& pa = a.rule->group.peer();
        const EndpointAtom& pb = b.rule->group.peer();
        if (!endpoint_covers(pa, pb) && !endpoint_covers(pb, pa)) continue;
        if (!a.rule->box.intersects(b.rule->box)) continue;
        out.emplace_back(a.label, b.label);
      } else if (a.eth_rule && b.eth_rule) {
        if (a.eth_rule->action == b.eth_rule->action) continue;
        if (a.eth_rule->direction != b.eth_rule->direction) continue;
        if (a.eth_rule->ethertype != b.eth_rule->ethertype) continue;
        out.emplace_back(a.label, b.label);
      }
    }
  }
  return out;
}

/// DOT rendering: nodes are the element sets, edge labels carry the
/// proposition list. Node order is sorted for deterministic output.
inline std::string to_dot(const ConditionalMetagraph& cmg) {
  auto set_label = [&cmg](const AtomSet& atoms, bool variables_only) {
    std::string label = "{";
    bool first = true;
    for (AtomId id : atoms) {
      if (variables_only && cmg.propositions.count(id)) continue;
      if (!first) label += ", ";
      label += cmg.atoms.name(id);
      first = false;
    }
    label += "}";
    return label;
  };
  auto escape = [](const std::string& text) {
    std::string out;
    for (char c : text) {
      if (c == '"' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    return out;
  };

  std::set<std::string> nodes;
  struct DotEdge {
    std::string from, to, label;
  };
  std::vector<DotEdge> dot_edges;
  for (const CmgEdge& e : cmg.edges) {
    const std::string from = set_label(e.invertex, true);
    const std::string to = set_label(e.outvertex, true);
    nodes.insert(from);
    nodes.insert(to);
    std::string props;
    for (AtomId id : e.invertex) {
      if (!cmg.propositions.count(id)) continue;
      if (!props.empty()) props += ", ";
      props += cmg.atoms.name(id);
    }
    std::string label = escape(e.label);
    if (!props.empty()) label += "\\n" + escape(props);
    dot_edges.push_back({from, to, label});
  }

  std::string out = "digraph policy {\n  rankdir=LR;\n  node [shape=box];\n";
  for (const auto& node : nodes) {
    out += "  \"" + escape(node) + "\";\n";
  }
  for (const auto& e : dot_edges) {
    out += "  \"" + escape(e.from) + "\" -> \"" + escape(e.to) + "\" [label=\"" + e.label +
           "\"];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace mud
