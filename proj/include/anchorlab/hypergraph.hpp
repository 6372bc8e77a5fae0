#pragma once

// Directed acyclic hypergraphs over statement nodes: answerability,
// interventions and the exhaustive depth-first ground-truth traversal.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "anchorlab/error.hpp"

namespace anchorlab::graph {

using NodeId = std::uint32_t;

struct Hyperedge {
  std::vector<NodeId> premises;  // sorted, unique, nonempty
  NodeId conclusion = 0;
};

// T = (V, E) with an explicit root set and a query node. Roots are derived
// from the edge set at construction and then kept fixed, so removing an
// edge does not promote its conclusion to a given premise.
class Dah {
 public:
  Dah() = default;

  Dah(std::size_t node_count, std::vector<Hyperedge> edges, NodeId query, std::vector<NodeId> roots)
      : node_count_(node_count), edges_(std::move(edges)), query_(query), roots_(std::move(roots)) {
    std::sort(roots_.begin(), roots_.end());
    roots_.erase(std::unique(roots_.begin(), roots_.end()), roots_.end());
    validate();
  }

  // Roots = nodes with no incoming hyperedge.
  static Dah with_derived_roots(std::size_t node_count, std::vector<Hyperedge> edges, NodeId query) {
    std::vector<bool> has_incoming(node_count, false);
    for (const auto& e : edges) {
      if (e.conclusion < node_count) has_incoming[e.conclusion] = true;
    }
    std::vector<NodeId> roots;
    for (NodeId v = 0; v < node_count; ++v) {
      if (!has_incoming[v]) roots.push_back(v);
    }
    return Dah(node_count, std::move(edges), query, std::move(roots));
  }

  std::size_t node_count() const { return node_count_; }
  const std::vector<Hyperedge>& edges() const { return edges_; }
  NodeId query() const { return query_; }
  const std::vector<NodeId>& roots() const { return roots_; }

 private:
  void validate() {
    if (query_ >= node_count_) throw InputError("Dah: query out of range");
    for (auto r : roots_) {
      if (r >= node_count_) throw InputError("Dah: root out of range");
    }
    for (auto& e : edges_) {
      std::sort(e.premises.begin(), e.premises.end());
      e.premises.erase(std::unique(e.premises.begin(), e.premises.end()), e.premises.end());
      if (e.premises.empty()) throw InputError("Dah: hyperedge with empty premise set");
      if (e.conclusion >= node_count_) throw InputError("Dah: conclusion out of range");
      for (auto p : e.premises) {
        if (p >= node_count_) throw InputError("Dah: premise out of range");
        if (p == e.conclusion) throw InputError("Dah: hyperedge concludes one of its premises");
      }
    }
    if (!acyclic()) throw InvariantError("Dah: hypergraph has a cycle");
  }

  bool acyclic() const {
    std::vector<std::vector<NodeId>> succ(node_count_);
    std::vector<std::size_t> indeg(node_count_, 0);
    for (const auto& e : edges_) {
      for (auto p : e.premises) {
        succ[p].push_back(e.conclusion);
        ++indeg[e.conclusion];
      }
    }
    std::vector<NodeId> stack;
    for (NodeId v = 0; v < node_count_; ++v) {
      if (indeg[v] == 0) stack.push_back(v);
    }
    std::size_t seen = 0;
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      ++seen;
      for (auto w : succ[v]) {
        if (--indeg[w] == 0) stack.push_back(w);
      }
    }
    return seen == node_count_;
  }

  std::size_t node_count_ = 0;
  std::vector<Hyperedge> edges_;
  NodeId query_ = 0;
  std::vector<NodeId> roots_;
};

// Forward chaining from the roots. fired_at[e] is the round in which edge e
// first fires (nullopt if never); derived[v] marks derivable nodes.
struct Closure {
  std::vector<bool> derived;
  std::vector<std::optional<std::size_t>> fired_at;
};

inline Closure forward_chain(const Dah& t) {
  Closure c{std::vector<bool>(t.node_count(), false), std::vector<std::optional<std::size_t>>(t.edges().size())};
  for (auto r : t.roots()) c.derived[r] = true;
  for (std::size_t round = 0;; ++round) {
    std::vector<std::size_t> firing;
    for (std::size_t i = 0; i < t.edges().size(); ++i) {
      if (c.fired_at[i]) continue;
      const auto& e = t.edges()[i];
      if (std::all_of(e.premises.begin(), e.premises.end(), [&](NodeId p) { return c.derived[p]; }))
        firing.push_back(i);
    }
    if (firing.empty()) break;
    for (auto i : firing) {
      c.fired_at[i] = round;
      c.derived[t.edges()[i].conclusion] = true;
    }
  }
  return c;
}

// f(T, q): 1 iff some sequence of hyperedges derives q from the roots.
inline int label(const Dah& t) { return forward_chain(t).derived[t.query()] ? 1 : 0; }

// Edges of one derivation of q, chosen by earliest firing round then lowest
// index. Empty when q is underivable or is itself a root.
inline std::vector<std::size_t> derivation_edges(const Dah& t) {
  const Closure c = forward_chain(t);
  if (!c.derived[t.query()]) return {};
  std::vector<bool> is_root(t.node_count(), false);
  for (auto r : t.roots()) is_root[r] = true;
  // best incoming edge per node
  std::vector<std::optional<std::size_t>> best(t.node_count());
  for (std::size_t i = 0; i < t.edges().size(); ++i) {
    if (!c.fired_at[i]) continue;
    auto& b = best[t.edges()[i].conclusion];
    if (!b || *c.fired_at[i] < *c.fired_at[*b]) b = i;
  }
  std::set<std::size_t> chosen;
  std::vector<NodeId> todo{t.query()};
  std::vector<bool> done(t.node_count(), false);
  while (!todo.empty()) {
    NodeId v = todo.back();
    todo.pop_back();
    if (done[v] || is_root[v]) continue;
    done[v] = true;
    const std::size_t e = *best[v];
    chosen.insert(e);
    for (auto p : t.edges()[e].premises) todo.push_back(p);
  }
  return {chosen.begin(), chosen.end()};
}

enum class InterventionKind : std::uint8_t { EdgeRemoval, PremiseRemoval, FalsePremise, FalseConclusion };

inline std::string to_string(InterventionKind k) {
  switch (k) {
    case InterventionKind::EdgeRemoval: return "edge-removal";
    case InterventionKind::PremiseRemoval: return "premise-removal";
    case InterventionKind::FalsePremise: return "false-premise";
    case InterventionKind::FalseConclusion: return "false-conclusion";
  }
  return {};
}

struct Intervention {
  InterventionKind kind = InterventionKind::EdgeRemoval;
  std::size_t target = 0;  // edge index
  // Premise node of the target edge for premise-removal / false-premise.
  std::optional<NodeId> premise;
};

// Pure graph edit:
//   edge-removal      drops the target edge;
//   premise-removal   deletes the premise statement: it leaves the root set
//                     and every edge concluding it is dropped;
//   false-premise     swaps the premise for a fresh, ungiven statement;
//   false-conclusion  replaces the query by a fresh statement the target
//                     edge does not conclude.
// Whether the result is unanswerable is the caller's concern.
inline Dah apply_intervention(const Dah& t, const Intervention& i) {
  if (i.target >= t.edges().size()) throw InputError("apply_intervention: target edge out of range");
  std::vector<Hyperedge> edges = t.edges();
  std::vector<NodeId> roots = t.roots();
  std::size_t nodes = t.node_count();
  NodeId query = t.query();
  auto require_premise = [&]() -> NodeId {
    const auto& ps = edges[i.target].premises;
    if (!i.premise || std::find(ps.begin(), ps.end(), *i.premise) == ps.end())
      throw InputError("apply_intervention: premise is not on the target edge");
    return *i.premise;
  };
  switch (i.kind) {
    case InterventionKind::EdgeRemoval:
      edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(i.target));
      break;
    case InterventionKind::PremiseRemoval: {
      const NodeId p = require_premise();
      roots.erase(std::remove(roots.begin(), roots.end(), p), roots.end());
      edges.erase(std::remove_if(edges.begin(), edges.end(), [&](const Hyperedge& e) { return e.conclusion == p; }),
                  edges.end());
      break;
    }
    case InterventionKind::FalsePremise: {
      const NodeId p = require_premise();
      const NodeId fresh = static_cast<NodeId>(nodes++);
      auto& ps = edges[i.target].premises;
      std::replace(ps.begin(), ps.end(), p, fresh);
      break;
    }
    case InterventionKind::FalseConclusion:
      query = static_cast<NodeId>(nodes++);
      break;
  }
  return Dah(nodes, std::move(edges), query, std::move(roots));
}

// Ground-truth traversal. `order` lists every edge exactly once: the first
// `fired` entries are the depth-first firing sequence from the roots, the
// rest are edges that can never fire (ascending index).
struct Traversal {
  std::vector<std::size_t> order;
  std::size_t fired = 0;
};

// Depth-first search from the roots. At each node, fireable edges are taken
// with off-derivation edges first (ascending index) and derivation edges
// last, so an answerable traversal ends with the edge concluding q.
inline Traversal dfs_trajectory(const Dah& t) {
  const auto& edges = t.edges();
  std::vector<bool> on_path(edges.size(), false);
  for (auto e : derivation_edges(t)) on_path[e] = true;

  std::vector<std::vector<std::size_t>> out_edges(t.node_count());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (auto p : edges[i].premises) out_edges[p].push_back(i);
  }
  std::vector<bool> node_on_path(t.node_count(), false);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!on_path[i]) continue;
    for (auto p : edges[i].premises) node_on_path[p] = true;
  }

  std::vector<bool> derived(t.node_count(), false);
  std::vector<bool> fired(edges.size(), false);
  Traversal out;

  auto fireable = [&](std::size_t i) {
    return !fired[i] && std::all_of(edges[i].premises.begin(), edges[i].premises.end(),
                                    [&](NodeId p) { return derived[p]; });
  };
  // Recursion depth is bounded by the longest derivation chain.
  auto visit = [&](auto&& self, NodeId u) -> void {
    for (;;) {
      std::optional<std::size_t> next;
      for (auto i : out_edges[u]) {
        if (!fireable(i)) continue;
        if (!next || (on_path[*next] && !on_path[i]) || (on_path[*next] == on_path[i] && i < *next)) next = i;
      }
      if (!next) return;
      fired[*next] = true;
      out.order.push_back(*next);
      const NodeId c = edges[*next].conclusion;
      if (!derived[c]) {
        derived[c] = true;
        self(self, c);
      }
    }
  };

  std::vector<NodeId> roots = t.roots();
  std::stable_partition(roots.begin(), roots.end(), [&](NodeId r) { return !node_on_path[r]; });
  for (auto r : roots) derived[r] = true;
  for (auto r : roots) visit(visit, r);

  out.fired = out.order.size();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!fired[i]) out.order.push_back(i);
  }
  return out;
}

}  // namespace anchorlab::graph
