#pragma once

// GraphLA: chains of two-variable linear equations rendered as dish-price
// word problems, with an exact rational elimination oracle.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anchorlab/dataset.hpp"
#include "anchorlab/error.hpp"
#include "anchorlab/hypergraph.hpp"
#include "anchorlab/rng.hpp"
#include "anchorlab/vocab.hpp"

namespace anchorlab::graphla {

using graph::NodeId;
using Rational = boost::multiprecision::cpp_rational;

enum class EdgeForm : std::uint8_t { Comparative, Joint };

// comparative: a*x[m] - b*x[n] = c      joint: a*x[m] + b*x[n] = c
// m is the variable the edge introduces, n the one it is derived from.
struct LinearEdge {
  std::int64_t a = 1;
  std::int64_t b = 1;
  std::int64_t c = 0;
  NodeId m = 0;
  NodeId n = 0;
  EdgeForm form = EdgeForm::Comparative;
  friend bool operator==(const LinearEdge&, const LinearEdge&) = default;
};

struct LaConfig {
  int var_count = 15;                  // |V|
  IntRange depth{5, 14};               // k, inclusive
  IntRange cut_depth{1, 13};           // d, inclusive; clamped to [1, k)
  IntRange coeff{1, 10};               // a, b
  IntRange value{10, 50};              // node values
  int samples_per_config = 60;         // per class per (k, d) unit
  double joint_probability = 0.15;
  int restaurants_per_instance = 2;
  std::uint64_t seed = 0;
  std::optional<SplitSizes> split_sizes;  // totals over both classes

  static LaConfig standard() {
    LaConfig c;
    c.split_sizes = SplitSizes{5346, 594, 594};
    return c;
  }
  // Easier curriculum stage: |V| = 5, v in [5, 20].
  static LaConfig easy() {
    LaConfig c;
    c.var_count = 5;
    c.depth = {1, 4};
    c.cut_depth = {1, 3};
    c.value = {5, 20};
    return c;
  }

  void validate() const {
    if (depth.lo < 1 || depth.hi >= var_count || depth.lo > depth.hi)
      throw InputError("LaConfig: need 1 <= k < |V|");
    if (cut_depth.lo < 1 || cut_depth.lo > cut_depth.hi) throw InputError("LaConfig: need 1 <= d");
    if (value.lo < 1 || value.lo > value.hi) throw InputError("LaConfig: value range must be positive integers");
    if (coeff.lo < 1 || coeff.lo > coeff.hi) throw InputError("LaConfig: coefficients must be positive");
    if (samples_per_config < 1) throw InputError("LaConfig: samples_per_config must be >= 1");
    if (joint_probability < 0 || joint_probability > 1) throw InputError("LaConfig: joint_probability in [0,1]");
    if (restaurants_per_instance < 1) throw InputError("LaConfig: restaurants_per_instance >= 1");
    if (split_sizes && (split_sizes->train % 2 || split_sizes->val % 2 || split_sizes->test % 2))
      throw InputError("LaConfig: split sizes must be even for 1:1 class balance");
  }
};

// A sampled instance graph. Node 0 is the root, path nodes are 1..k with k
// the query; the rest are distractors.
struct LaGraph {
  std::size_t node_count = 0;
  NodeId root = 0;
  NodeId query = 0;
  std::vector<std::int64_t> values;
  std::vector<LinearEdge> edges;
  std::vector<std::size_t> path;  // edge indices, root to query
  std::optional<LinearEdge> removed;
  std::optional<int> cut_depth;

  int depth() const { return static_cast<int>(path.size() + (removed ? 1 : 0)); }

  graph::Dah dah() const {
    std::vector<graph::Hyperedge> hs;
    hs.reserve(edges.size());
    for (const auto& e : edges) hs.push_back({{e.n}, e.m});
    return graph::Dah(node_count, std::move(hs), query, {root});
  }

  bool on_path(std::size_t edge) const { return std::find(path.begin(), path.end(), edge) != path.end(); }
};

inline std::int64_t edge_constant(std::int64_t a, std::int64_t b, EdgeForm form, std::int64_t vm, std::int64_t vn) {
  return form == EdgeForm::Comparative ? a * vm - b * vn : a * vm + b * vn;
}

// Values first, then coefficients, then c so every equation holds exactly.
inline LaGraph sample_la_graph(const LaConfig& cfg, int k, Rng& rng) {
  if (k < 1 || k >= cfg.var_count) throw InputError("sample_la_graph: need 1 <= k < |V|");
  LaGraph g;
  g.node_count = static_cast<std::size_t>(cfg.var_count);
  g.root = 0;
  g.query = static_cast<NodeId>(k);
  g.values.resize(g.node_count);
  for (auto& v : g.values) v = rng.uniform_int(cfg.value.lo, cfg.value.hi);

  auto make_edge = [&](NodeId m, NodeId n) {
    LinearEdge e;
    e.m = m;
    e.n = n;
    e.form = rng.bernoulli(cfg.joint_probability) ? EdgeForm::Joint : EdgeForm::Comparative;
    for (int attempt = 0;; ++attempt) {
      e.a = rng.uniform_int(cfg.coeff.lo, cfg.coeff.hi);
      e.b = rng.uniform_int(cfg.coeff.lo, cfg.coeff.hi);
      e.c = edge_constant(e.a, e.b, e.form, g.values[m], g.values[n]);
      if (e.form == EdgeForm::Joint || e.c != 0) break;
      // "0 dollars more" is never rendered.
      if (attempt >= 64) e.form = EdgeForm::Joint;
    }
    return e;
  };

  std::vector<LinearEdge> path_edges;
  for (NodeId i = 1; i <= static_cast<NodeId>(k); ++i) path_edges.push_back(make_edge(i, i - 1));
  std::vector<LinearEdge> distractors;
  std::vector<NodeId> parents;
  for (NodeId i = 0; i < static_cast<NodeId>(k); ++i) parents.push_back(i);
  for (NodeId j = static_cast<NodeId>(k) + 1; j < g.node_count; ++j) {
    distractors.push_back(make_edge(j, rng.pick(parents)));
    parents.push_back(j);
  }

  // Edge order is shuffled so that index order carries no path information.
  std::vector<std::size_t> order(path_edges.size() + distractors.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  g.edges.resize(order.size());
  std::vector<std::size_t> slot_of(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t src = order[pos];
    g.edges[pos] = src < path_edges.size() ? path_edges[src] : distractors[src - path_edges.size()];
    slot_of[src] = pos;
  }
  for (std::size_t i = 0; i < path_edges.size(); ++i) g.path.push_back(slot_of[i]);
  return g;
}

// ---------------------------------------------------------------------------
// Exact oracle.

struct OracleResult {
  enum class Kind { Unique, Underdetermined, Inconsistent };
  Kind kind = Kind::Underdetermined;
  Rational value = 0;

  bool unique() const { return kind == Kind::Unique; }
  std::string describe() const {
    switch (kind) {
      case Kind::Unique: return "Unique(" + value.str() + ")";
      case Kind::Underdetermined: return "Underdetermined";
      case Kind::Inconsistent: return "Inconsistent";
    }
    return {};
  }
};

// Gauss-Jordan elimination over the rationals on the edge equations plus
// root assignments; decides whether x[q] is pinned down.
inline OracleResult la_oracle(const std::vector<LinearEdge>& edges, const std::map<NodeId, std::int64_t>& root_values,
                              NodeId q) {
  std::map<NodeId, std::size_t> col;
  auto column = [&](NodeId v) {
    auto [it, inserted] = col.try_emplace(v, col.size());
    return it->second;
  };
  column(q);
  for (const auto& e : edges) {
    column(e.m);
    column(e.n);
  }
  for (const auto& [v, _] : root_values) column(v);
  const std::size_t n = col.size();

  std::vector<std::vector<Rational>> rows;
  for (const auto& e : edges) {
    std::vector<Rational> row(n + 1, 0);
    row[col[e.m]] += e.a;
    row[col[e.n]] += e.form == EdgeForm::Comparative ? -e.b : e.b;
    row[n] = e.c;
    rows.push_back(std::move(row));
  }
  for (const auto& [v, value] : root_values) {
    std::vector<Rational> row(n + 1, 0);
    row[col[v]] = 1;
    row[n] = value;
    rows.push_back(std::move(row));
  }

  std::vector<std::optional<std::size_t>> pivot_row(n);
  std::size_t rank = 0;
  for (std::size_t c = 0; c < n && rank < rows.size(); ++c) {
    std::size_t r = rank;
    while (r < rows.size() && rows[r][c] == 0) ++r;
    if (r == rows.size()) continue;
    std::swap(rows[r], rows[rank]);
    const Rational p = rows[rank][c];
    for (auto& x : rows[rank]) x /= p;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == rank || rows[i][c] == 0) continue;
      const Rational f = rows[i][c];
      for (std::size_t j = c; j <= n; ++j) rows[i][j] -= f * rows[rank][j];
    }
    pivot_row[c] = rank++;
  }
  for (std::size_t i = rank; i < rows.size(); ++i) {
    if (rows[i][n] != 0) return {OracleResult::Kind::Inconsistent, 0};
  }
  const std::size_t qc = col[q];
  if (!pivot_row[qc]) return {OracleResult::Kind::Underdetermined, 0};
  const auto& row = rows[*pivot_row[qc]];
  for (std::size_t j = 0; j < n; ++j) {
    if (j != qc && row[j] != 0) return {OracleResult::Kind::Underdetermined, 0};
  }
  return {OracleResult::Kind::Unique, row[n]};
}

inline OracleResult la_oracle(const LaGraph& g) {
  return la_oracle(g.edges, {{g.root, g.values[g.root]}}, g.query);
}

// Removes the path edge at distance d from the query (d = 1 is the edge
// concluding q).
inline LaGraph cut_edge(const LaGraph& g, int d) {
  const int k = static_cast<int>(g.path.size());
  if (g.removed) throw InputError("cut_edge: graph already cut");
  if (d < 1 || d >= k) throw InputError("cut_edge: need 1 <= d < k");
  LaGraph out = g;
  const std::size_t victim = g.path[static_cast<std::size_t>(k - d)];
  out.removed = g.edges[victim];
  out.cut_depth = d;
  out.edges.erase(out.edges.begin() + static_cast<std::ptrdiff_t>(victim));
  out.path.clear();
  for (auto p : g.path) {
    if (p == victim) continue;
    out.path.push_back(p > victim ? p - 1 : p);
  }
  if (la_oracle(out).kind != OracleResult::Kind::Underdetermined)
    throw InvariantError("cut_edge: query still determined after removing a path edge");
  return out;
}

// ---------------------------------------------------------------------------
// Natural-language rendering.

struct DishAt {
  std::size_t dish = 0;
  std::size_t restaurant = 0;
};

struct Naming {
  std::vector<vocab::Dish> dishes = vocab::dishes();
  std::vector<std::string> restaurants = vocab::restaurants();
  std::vector<DishAt> node;  // per node

  std::string name(NodeId v) const {
    return dishes[node[v].dish].singular + " at " + restaurants[node[v].restaurant];
  }
  // "A crab cake at X" / "a crab cake at X" / "3 crab cakes at X"
  std::string quantity(std::int64_t count, NodeId v, bool capitalize) const {
    const auto& d = dishes[node[v].dish];
    const std::string at = " at " + restaurants[node[v].restaurant];
    if (count != 1) return std::to_string(count) + " " + d.plural + at;
    std::string article = vocab::starts_with_vowel(d.singular) ? "an" : "a";
    if (capitalize) article[0] = 'A';
    return article + " " + d.singular + at;
  }
};

// Distinct (dish, restaurant) per node, drawn from a few restaurants.
inline Naming assign_names(std::size_t node_count, Rng& rng, int restaurants_per_instance = 2,
                           std::vector<vocab::Dish> dishes = vocab::dishes(),
                           std::vector<std::string> restaurants = vocab::restaurants()) {
  if (node_count > dishes.size() * restaurants.size())
    throw CapacityError("assign_names: vocabulary too small for " + std::to_string(node_count) + " nodes");
  Naming n{std::move(dishes), std::move(restaurants), {}};
  std::size_t r_count = std::min<std::size_t>(static_cast<std::size_t>(restaurants_per_instance), n.restaurants.size());
  while (r_count * n.dishes.size() < node_count) ++r_count;
  std::vector<std::size_t> rs(n.restaurants.size());
  for (std::size_t i = 0; i < rs.size(); ++i) rs[i] = i;
  rng.shuffle(rs);
  rs.resize(r_count);
  std::vector<DishAt> pairs;
  for (std::size_t d = 0; d < n.dishes.size(); ++d) {
    for (auto r : rs) pairs.push_back({d, r});
  }
  rng.shuffle(pairs);
  pairs.resize(node_count);
  n.node = std::move(pairs);
  return n;
}

inline std::string root_sentence(const Naming& names, NodeId root, std::int64_t value) {
  return names.quantity(1, root, true) + " costs " + std::to_string(value) + " dollars.";
}

inline std::string edge_sentence(const Naming& names, const LinearEdge& e) {
  const std::string subject = names.quantity(e.a, e.m, true);
  const std::string object = names.quantity(e.b, e.n, false);
  if (e.form == EdgeForm::Joint) return subject + " and " + object + " cost " + std::to_string(e.c) + " dollars.";
  if (e.c == 0) throw InputError("edge_sentence: zero difference is not rendered");
  const std::string verb = e.a == 1 ? " costs " : " cost ";
  const std::string dir = e.c > 0 ? " dollars more than " : " dollars less than ";
  return subject + verb + std::to_string(e.c > 0 ? e.c : -e.c) + dir + object + ".";
}

inline std::string question_sentence(const Naming& names, NodeId q) {
  return "Question: how much does " + names.quantity(1, q, false) + " cost?";
}

// All sentences in seeded order, then the question.
inline std::string render_la_nl(const LaGraph& g, const Naming& names, Rng& rng) {
  std::vector<std::string> sentences;
  for (const auto& e : g.edges) sentences.push_back(edge_sentence(names, e));
  sentences.push_back(root_sentence(names, g.root, g.values[g.root]));
  rng.shuffle(sentences);
  std::string out;
  for (const auto& s : sentences) out += s + " ";
  return out + question_sentence(names, g.query);
}

namespace detail {

inline std::string value_step(const std::string& reasoning, const std::string& variable, std::int64_t value) {
  return "<step>" + reasoning + "\n\nVariable: \"" + variable + "\"\n\nValue: \"" + std::to_string(value) + "\"</step>\n";
}

inline std::string derivation_text(const Naming& names, const LinearEdge& e, std::int64_t vn, std::int64_t vm) {
  const std::string known = names.name(e.n);
  const std::string unknown = names.name(e.m);
  const std::int64_t rhs = e.a * vm;
  std::string expr;
  if (e.form == EdgeForm::Joint) {
    expr = std::to_string(e.c) + " - " + std::to_string(e.b) + " * " + std::to_string(vn);
  } else {
    expr = std::to_string(e.b) + " * " + std::to_string(vn) + (e.c >= 0 ? " + " : " - ") +
           std::to_string(e.c >= 0 ? e.c : -e.c);
  }
  std::string s = "From \"" + edge_sentence(names, e) + "\" and the price of " + known + " (" + std::to_string(vn) +
                  "): " + std::to_string(e.a) + " * price(" + unknown + ") = " + expr + " = " + std::to_string(rhs);
  if (e.a != 1) s += ", so price(" + unknown + ") = " + std::to_string(rhs) + " / " + std::to_string(e.a) + " = " + std::to_string(vm);
  return s + ".";
}

}  // namespace detail

// <think> with one <step> per derived value in traversal order, then the
// answer. Unanswerable instances close with a step naming the gap.
inline std::string render_la_trajectory(const LaGraph& g, const Naming& names, const graph::Traversal& order) {
  std::string out = "<think>\n";
  out += detail::value_step("The price of " + names.name(g.root) + " is stated directly: " +
                                std::to_string(g.values[g.root]) + " dollars.",
                            names.name(g.root), g.values[g.root]);
  for (std::size_t i = 0; i < order.fired; ++i) {
    const auto& e = g.edges[order.order[i]];
    std::string text = detail::derivation_text(names, e, g.values[e.n], g.values[e.m]);
    if (e.m == g.query)
      text += " This is the questioned dish, so the question is answerable and its price is " +
              std::to_string(g.values[e.m]) + " dollars.";
    out += detail::value_step(text, names.name(e.m), g.values[e.m]);
  }
  const bool answerable = order.fired > 0 ? g.edges[order.order[order.fired - 1]].m == g.query : g.query == g.root;
  if (!answerable) {
    const std::size_t stuck = order.order.size() - order.fired;
    std::string text = "No derived price connects to " + names.name(g.query) + ". ";
    if (stuck == 0) {
      text += "None of the equations";
    } else {
      text += "The remaining " + std::to_string(stuck) + (stuck == 1 ? " equation involves" : " equations each involve") +
              " two dishes whose prices are both unknown, and no other equation";
    }
    text += " links the questioned dish to a known price, so its price cannot be determined.";
    out += "<step>" + text + "</step>\n";
  }
  out += "</think>\n<answer>" + (answerable ? std::to_string(g.values[g.query]) : std::string("Unknown")) + "</answer>";
  return out;
}

// ---------------------------------------------------------------------------
// Instances and datasets.

struct LaInstance {
  LaGraph graph;
  Naming names;
  std::string question;
  std::string trajectory;
  std::uint64_t seed = 0;
  int var_count = 0;

  bool answerable() const { return !graph.removed; }
  std::string answer() const { return answerable() ? std::to_string(graph.values[graph.query]) : "Unknown"; }
};

inline nlohmann::ordered_json edge_to_json(const LinearEdge& e) {
  return {{"a", e.a}, {"b", e.b}, {"c", e.c}, {"m", e.m}, {"n", e.n},
          {"form", e.form == EdgeForm::Joint ? "joint" : "comparative"}};
}

inline LinearEdge edge_from_json(const nlohmann::ordered_json& j) {
  LinearEdge e;
  e.a = j.at("a").get<std::int64_t>();
  e.b = j.at("b").get<std::int64_t>();
  e.c = j.at("c").get<std::int64_t>();
  e.m = j.at("m").get<NodeId>();
  e.n = j.at("n").get<NodeId>();
  const auto form = j.at("form").get<std::string>();
  if (form != "joint" && form != "comparative") throw InputError("bad edge form '" + form + "'");
  e.form = form == "joint" ? EdgeForm::Joint : EdgeForm::Comparative;
  return e;
}

inline Record to_record(const LaInstance& inst) {
  Record r;
  r.dataset = DatasetKind::GraphLA;
  r.question = inst.question;
  r.answer = inst.answer();
  r.answerable = inst.answerable();
  r.trajectory = inst.trajectory;
  auto& m = r.meta;
  m["seed"] = inst.seed;
  m["V"] = inst.var_count;
  m["k"] = inst.graph.depth();
  m["d"] = inst.graph.cut_depth ? nlohmann::ordered_json(*inst.graph.cut_depth) : nlohmann::ordered_json(nullptr);
  m["root"] = inst.graph.root;
  m["query"] = inst.graph.query;
  m["values"] = inst.graph.values;
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : inst.graph.edges) edges.push_back(edge_to_json(e));
  m["edges"] = std::move(edges);
  m["path"] = inst.graph.path;
  m["removed_edge"] = inst.graph.removed ? edge_to_json(*inst.graph.removed) : nlohmann::ordered_json(nullptr);
  return r;
}

// One instance from its own seed; d absent means answerable.
inline LaInstance generate_la_instance(const LaConfig& cfg, int k, std::optional<int> d, std::uint64_t seed) {
  constexpr int kRetries = 16;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : derive_seed(seed, 0xa77e, static_cast<std::uint64_t>(attempt));
    Rng rng(s);
    LaInstance inst;
    inst.seed = s;
    inst.var_count = cfg.var_count;
    inst.graph = sample_la_graph(cfg, k, rng);
    const auto full = la_oracle(inst.graph);
    if (!full.unique() || full.value != inst.graph.values[inst.graph.query]) continue;
    if (d) inst.graph = cut_edge(inst.graph, *d);
    const auto check = la_oracle(inst.graph);
    if (d ? check.kind != OracleResult::Kind::Underdetermined : !check.unique()) continue;
    inst.names = assign_names(inst.graph.node_count, rng, cfg.restaurants_per_instance);
    inst.question = render_la_nl(inst.graph, inst.names, rng);
    inst.trajectory = render_la_trajectory(inst.graph, inst.names, graph::dfs_trajectory(inst.graph.dah()));
    return inst;
  }
  throw GenerationError("graphla: oracle verification failed after retries", seed);
}

// Enumeration unit: depth k and (for the unanswerable class) cut depth d.
struct LaUnit {
  int k = 1;
  std::optional<int> d;
};

inline std::vector<LaUnit> la_units(const LaConfig& cfg, int k_lo, int k_hi) {
  std::vector<LaUnit> out;
  for (int k = k_lo; k <= k_hi; ++k) {
    const int d_hi = std::min<int>(static_cast<int>(cfg.cut_depth.hi), k - 1);
    for (int d = static_cast<int>(cfg.cut_depth.lo); d <= d_hi; ++d) out.push_back({k, d});
  }
  return out;
}

// Generates `per_class` instances of each class, spread evenly over the
// (k, d) units; answerable instances reuse the units' k.
inline std::pair<std::vector<Record>, std::vector<Record>> generate_la_pools(const LaConfig& cfg, int k_lo, int k_hi,
                                                                            std::size_t ans_count,
                                                                            std::size_t unans_count,
                                                                            std::uint64_t stream) {
  std::vector<LaUnit> units = la_units(cfg, k_lo, k_hi);
  std::vector<LaUnit> ans_units = units;
  if (units.empty()) {
    // only k = 1 in range: nothing can be cut
    if (unans_count) throw InputError("graphla: no cut depth available for requested depths");
    for (int k = k_lo; k <= k_hi; ++k) ans_units.push_back({k, std::nullopt});
  }
  auto expand = [](const std::vector<LaUnit>& us, std::size_t total) {
    std::vector<LaUnit> plan;
    const auto counts = distribute(total, us.size());
    for (std::size_t i = 0; i < us.size(); ++i) plan.insert(plan.end(), counts[i], us[i]);
    return plan;
  };
  const auto ans_plan = expand(ans_units, ans_count);
  const auto unans_plan = expand(units, unans_count);
  auto run = [&](const std::vector<LaUnit>& plan, bool cut, std::uint64_t cls) {
    auto insts = parallel_generate<Record>(plan.size(), [&](std::size_t i) {
      const auto& u = plan[i];
      return to_record(generate_la_instance(cfg, u.k, cut ? u.d : std::nullopt, derive_seed(cfg.seed, stream + cls, i)));
    });
    return insts;
  };
  return {run(ans_plan, false, 0), run(unans_plan, true, 1)};
}

inline Splits build_la_dataset(const LaConfig& cfg) {
  cfg.validate();
  const auto units = la_units(cfg, static_cast<int>(cfg.depth.lo), static_cast<int>(cfg.depth.hi));
  SplitSizes per_class;
  if (cfg.split_sizes) {
    per_class = {cfg.split_sizes->train / 2, cfg.split_sizes->val / 2, cfg.split_sizes->test / 2};
    const std::size_t capacity = std::max<std::size_t>(units.size(), 1) * static_cast<std::size_t>(cfg.samples_per_config);
    if (per_class.total() > capacity)
      throw InputError("graphla: split sizes exceed configurations x samples_per_config");
  } else {
    per_class = ratio_split(std::max<std::size_t>(units.size(), 1) * static_cast<std::size_t>(cfg.samples_per_config));
  }
  auto [ans, unans] = generate_la_pools(cfg, static_cast<int>(cfg.depth.lo), static_cast<int>(cfg.depth.hi),
                                        per_class.total(), units.empty() ? 0 : per_class.total(), 0x1a00);
  SplitSizes unans_sizes = units.empty() ? SplitSizes{} : per_class;
  return assemble_splits(DatasetKind::GraphLA, std::move(ans), std::move(unans), per_class, unans_sizes, cfg.seed);
}

// One evaluation cell of a difficulty sweep.
struct LaCell {
  int var_count = 0;
  int k = 0;
  std::vector<Record> records;
};

// For every |V| in var_counts and k in [1, |V|): samples_per_config
// answerable and (when k >= 2) samples_per_config unanswerable records.
inline std::vector<LaCell> build_la_sweep(const LaConfig& base, const std::vector<int>& var_counts) {
  std::vector<LaCell> cells;
  for (int v : var_counts) {
    for (int k = 1; k < v; ++k) {
      LaConfig cfg = base;
      cfg.var_count = v;
      cfg.depth = {k, k};
      cfg.cut_depth = {1, std::max(1, k - 1)};
      cfg.split_sizes.reset();
      cfg.validate();
      const auto n = static_cast<std::size_t>(cfg.samples_per_config);
      auto [ans, unans] = generate_la_pools(cfg, k, k, n, k >= 2 ? n : 0,
                                            0x2b00 + static_cast<std::uint64_t>(v) * 1000 + static_cast<std::uint64_t>(k) * 4);
      LaCell cell{v, k, {}};
      cell.records = std::move(ans);
      cell.records.insert(cell.records.end(), std::make_move_iterator(unans.begin()), std::make_move_iterator(unans.end()));
      Rng rng(derive_seed(base.seed, 0x5eed, static_cast<std::uint64_t>(v * 100 + k)));
      rng.shuffle(cell.records);
      for (std::size_t i = 0; i < cell.records.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "graphla-V%d-k%d-%06zu", v, k, i);
        cell.records[i].id = buf;
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace anchorlab::graphla
