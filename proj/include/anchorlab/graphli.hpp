#pragma once

// GraphLI: chains of implication-rule applications rendered as logic puzzles
// over campus events, with Yes/No labels decided by forward closure.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anchorlab/dataset.hpp"
#include "anchorlab/error.hpp"
#include "anchorlab/hypergraph.hpp"
#include "anchorlab/logic.hpp"
#include "anchorlab/rng.hpp"
#include "anchorlab/vocab.hpp"

namespace anchorlab::graphli {

using logic::Formula;
using logic::FormulaSet;
using logic::Inference;

struct Event {
  std::string person;
  std::string activity;
  std::string text() const { return person + " " + activity; }
};

inline std::vector<Event> default_events() {
  std::vector<Event> out;
  for (const auto& p : vocab::people()) {
    for (const auto& a : vocab::activities()) out.push_back({p, a});
  }
  return out;
}

struct LiConfig {
  IntRange depth{15, 15};
  int irrelevant_edges = 5;
  int samples_per_config = 3;
  int configurations = 986;  // pool per class = configurations * samples_per_config
  std::vector<Event> event_vocab = default_events();
  std::uint64_t seed = 0;
  std::optional<SplitSizes> split_sizes;  // totals over both classes
  double carry_probability = 0.2;
  std::size_t max_formula_size = 9;

  static LiConfig standard() {
    LiConfig c;
    c.split_sizes = SplitSizes{5316, 300, 300};
    return c;
  }
  static LiConfig easy() {
    LiConfig c;
    c.depth = {2, 5};
    return c;
  }

  void validate() const {
    if (depth.lo < 2 || depth.lo > depth.hi) throw InputError("LiConfig: need 2 <= k");
    if (irrelevant_edges < 0) throw InputError("LiConfig: irrelevant_edges must be >= 0");
    if (samples_per_config < 1 || configurations < 1) throw InputError("LiConfig: pool parameters must be >= 1");
    if (event_vocab.empty()) throw InputError("LiConfig: empty event vocabulary");
    if (carry_probability < 0 || carry_probability > 1) throw InputError("LiConfig: carry_probability in [0,1]");
    if (max_formula_size < 3) throw InputError("LiConfig: max_formula_size must be >= 3");
    if (split_sizes && (split_sizes->train % 2 || split_sizes->val % 2 || split_sizes->test % 2))
      throw InputError("LiConfig: split sizes must be even for class balance");
  }
};

// A ground rule application drawn from the directed schema table.
struct LiEdge {
  std::size_t schema = 0;  // index into logic::directed_schemas()
  Inference inference;
  const logic::RuleSchema& rule() const { return logic::directed_schemas().at(schema); }
  friend bool operator==(const LiEdge&, const LiEdge&) = default;
};

struct ChainStep {
  std::size_t schema = 0;
  std::vector<Formula> binding;  // binding[i] replaces metavariable v(i+1)
  Inference inference;
};

namespace detail {

struct VarPool {
  std::uint32_t next = 0;
  Formula fresh() { return logic::var(next++); }
};

inline Formula sample_binding(Rng& rng, VarPool& pool, const std::vector<std::uint32_t>& carried, double carry_p) {
  if (!carried.empty() && rng.bernoulli(carry_p)) return logic::var(rng.pick(carried));
  const double u = rng.uniform();
  if (u < 0.6) return pool.fresh();
  if (u < 0.75) return logic::neg(pool.fresh());
  Formula a = pool.fresh();
  Formula b = pool.fresh();
  switch (rng.index(3)) {
    case 0: return logic::conj(a, b);
    case 1: return logic::disj(a, b);
    default: return logic::implies(a, b);
  }
}

inline ChainStep complete_step(std::size_t schema, std::vector<std::optional<Formula>> partial, Rng& rng,
                               VarPool& pool, const std::vector<std::uint32_t>& carried, double carry_p) {
  ChainStep s;
  s.schema = schema;
  for (auto& b : partial) s.binding.push_back(b ? *b : sample_binding(rng, pool, carried, carry_p));
  s.inference = logic::instantiate_rule(logic::directed_schemas()[schema], s.binding);
  return s;
}

inline bool within_size(const Inference& inf, std::size_t cap) {
  if (inf.conclusion.size() > cap) return false;
  return std::all_of(inf.premises.begin(), inf.premises.end(), [&](const Formula& p) { return p.size() <= cap; });
}

inline std::vector<std::uint32_t> vars_of(const std::vector<ChainStep>& steps) {
  std::set<std::uint32_t> vs;
  for (const auto& s : steps) {
    vs.merge(logic::variables(s.inference.premises));
    vs.merge(logic::variables(s.inference.conclusion));
  }
  return {vs.begin(), vs.end()};
}

}  // namespace detail

// Premises not concluded by an earlier step (first occurrence order) and the
// final conclusion.
inline std::pair<std::vector<Formula>, Formula> collapse_chain(const std::vector<ChainStep>& chain) {
  if (chain.empty()) throw InputError("collapse_chain: empty chain");
  FormulaSet concluded, seen;
  std::vector<Formula> premises;
  for (const auto& s : chain) {
    for (const auto& p : s.inference.premises) {
      if (!concluded.contains(p) && seen.insert(p).second) premises.push_back(p);
    }
    concluded.insert(s.inference.conclusion);
  }
  return {premises, chain.back().inference.conclusion};
}

inline std::vector<Inference> inferences(const std::vector<LiEdge>& edges) {
  std::vector<Inference> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(e.inference);
  return out;
}

inline FormulaSet li_closure(const std::vector<Formula>& facts, const std::vector<LiEdge>& edges) {
  const auto infs = inferences(edges);
  return logic::forward_closure(FormulaSet(facts.begin(), facts.end()), infs);
}

// Accepts a chain if it is contradiction-free, no intermediate conclusion is
// also given, and the final conclusion is neither given nor a tautology.
inline bool chain_acceptable(const std::vector<ChainStep>& chain) {
  const auto [facts, q] = collapse_chain(chain);
  const FormulaSet fact_set(facts.begin(), facts.end());
  FormulaSet everything = fact_set;
  FormulaSet earlier;
  for (const auto& s : chain) {
    const auto& c = s.inference.conclusion;
    if (fact_set.contains(c) || earlier.contains(c)) return false;
    if (std::find(s.inference.premises.begin(), s.inference.premises.end(), c) != s.inference.premises.end())
      return false;
    earlier.insert(c);
    everything.insert(c);
  }
  if (logic::has_contradiction(everything)) return false;
  if (logic::variables(q).size() <= logic::kMaxTruthTableVars && logic::is_tautology(q)) return false;
  return true;
}

// k steps; step i+1 consumes step i's conclusion through one premise slot.
inline std::vector<ChainStep> compose_chain(const LiConfig& cfg, int k, Rng& rng, detail::VarPool& pool,
                                            std::uint64_t seed_for_errors = 0) {
  if (k < 1) throw InputError("compose_chain: k must be >= 1");
  const auto& schemas = logic::directed_schemas();
  constexpr int kChainBudget = 200;
  constexpr int kStepBudget = 24;
  for (int attempt = 0; attempt < kChainBudget; ++attempt) {
    detail::VarPool local = pool;
    std::vector<ChainStep> chain;
    bool ok = true;
    for (int i = 0; i < k && ok; ++i) {
      ok = false;
      for (int tries = 0; tries < kStepBudget; ++tries) {
        std::size_t schema = 0;
        std::vector<std::optional<Formula>> partial;
        if (chain.empty()) {
          schema = rng.index(schemas.size());
          partial.resize(schemas[schema].arity());
        } else {
          std::vector<std::pair<std::size_t, std::vector<std::optional<Formula>>>> options;
          for (std::size_t s = 0; s < schemas.size(); ++s) {
            for (const auto& pattern : schemas[s].premise_patterns) {
              std::vector<std::optional<Formula>> b(schemas[s].arity());
              if (logic::match_pattern(pattern, chain.back().inference.conclusion, b)) options.emplace_back(s, b);
            }
          }
          if (options.empty()) break;
          std::tie(schema, partial) = rng.pick(options);
        }
        detail::VarPool trial = local;
        ChainStep step = detail::complete_step(schema, std::move(partial), rng, trial, detail::vars_of(chain),
                                               chain.empty() ? 0.0 : cfg.carry_probability);
        if (!detail::within_size(step.inference, cfg.max_formula_size)) continue;
        chain.push_back(std::move(step));
        if (!chain_acceptable(chain)) {
          chain.pop_back();
          continue;
        }
        local = trial;
        ok = true;
        break;
      }
    }
    if (ok && static_cast<int>(chain.size()) == k) {
      pool = local;
      return chain;
    }
  }
  throw GenerationError("graphli: chain resampling budget exhausted", seed_for_errors);
}

// ---------------------------------------------------------------------------
// Instances.

struct LiIntervention {
  graph::InterventionKind kind = graph::InterventionKind::PremiseRemoval;
  Formula original = logic::var(0);
  std::optional<Formula> replacement;  // absent for premise removal
};

struct LiInstance {
  int k = 0;
  int irrelevant_edges = 0;
  std::vector<Formula> facts;
  std::vector<LiEdge> edges;
  std::vector<std::size_t> path;  // chain edges in chain order
  Formula query = logic::var(0);
  std::optional<LiIntervention> intervention;
  std::vector<std::string> events;  // per variable index
  std::uint32_t var_count = 0;
  bool semantic_checked = false;
  std::uint64_t seed = 0;

  bool answerable() const { return li_closure(facts, edges).contains(query); }
};

struct LiGraph {
  graph::Dah dah;
  std::vector<Formula> nodes;
};

// Statement nodes are distinct formulas; facts are the roots.
inline LiGraph li_graph(const std::vector<Formula>& facts, const std::vector<LiEdge>& edges, const Formula& query) {
  std::map<Formula, graph::NodeId> ids;
  std::vector<Formula> nodes;
  auto id = [&](const Formula& f) {
    auto [it, inserted] = ids.try_emplace(f, static_cast<graph::NodeId>(nodes.size()));
    if (inserted) nodes.push_back(f);
    return it->second;
  };
  std::vector<graph::NodeId> roots;
  for (const auto& f : facts) roots.push_back(id(f));
  std::vector<graph::Hyperedge> hs;
  for (const auto& e : edges) {
    graph::Hyperedge h;
    for (const auto& p : e.inference.premises) h.premises.push_back(id(p));
    h.conclusion = id(e.inference.conclusion);
    hs.push_back(std::move(h));
  }
  const auto q = id(query);
  return {graph::Dah(nodes.size(), std::move(hs), q, std::move(roots)), std::move(nodes)};
}

inline LiGraph li_graph(const LiInstance& inst) { return li_graph(inst.facts, inst.edges, inst.query); }

// Appends `count` distractor rule applications. Bindings are fresh except
// that premise-only metavariables that never stand alone as a premise
// literal may reuse an existing variable. All distractor premises become
// facts. The label must survive each insertion.
inline void add_irrelevant_edges(LiInstance& inst, int count, Rng& rng, detail::VarPool& pool,
                                 std::size_t max_size = 9) {
  const auto& schemas = logic::directed_schemas();
  const bool label = inst.answerable();
  std::vector<std::uint32_t> existing;
  for (std::uint32_t v = 0; v < pool.next; ++v) existing.push_back(v);
  constexpr int kBudget = 64;
  for (int added = 0; added < count; ++added) {
    bool ok = false;
    for (int attempt = 0; attempt < kBudget && !ok; ++attempt) {
      const std::size_t s = rng.index(schemas.size());
      const auto& schema = schemas[s];
      const auto concl_vars = logic::variables(schema.conclusion_pattern);
      detail::VarPool trial = pool;
      std::vector<Formula> binding;
      for (std::uint32_t m = 0; m < schema.arity(); ++m) {
        bool reusable = !concl_vars.contains(m) && !existing.empty();
        for (const auto& p : schema.premise_patterns) {
          if (p == logic::var(m) || p == logic::neg(logic::var(m))) reusable = false;
        }
        if (reusable && rng.bernoulli(0.3)) {
          binding.push_back(logic::var(rng.pick(existing)));
        } else {
          binding.push_back(detail::sample_binding(rng, trial, {}, 0.0));
        }
      }
      LiEdge edge{s, logic::instantiate_rule(schema, binding)};
      if (!detail::within_size(edge.inference, max_size)) continue;
      const FormulaSet before = li_closure(inst.facts, inst.edges);
      if (before.contains(edge.inference.conclusion)) continue;
      bool clash = false;
      for (const auto& p : edge.inference.premises) {
        if (p == inst.query) clash = true;
      }
      if (clash) continue;
      std::vector<Formula> facts = inst.facts;
      for (const auto& p : edge.inference.premises) {
        if (std::find(facts.begin(), facts.end(), p) == facts.end()) facts.push_back(p);
      }
      std::vector<LiEdge> edges = inst.edges;
      edges.push_back(edge);
      const FormulaSet after = li_closure(facts, edges);
      if (after.contains(inst.query) != label || logic::has_contradiction(after)) continue;
      inst.facts = std::move(facts);
      inst.edges = std::move(edges);
      pool = trial;
      ok = true;
    }
    if (!ok) throw GenerationError("graphli: distractor resampling budget exhausted", inst.seed);
  }
  inst.var_count = pool.next;
}

namespace detail {

inline std::vector<Formula> subformulas_of_kind(const Formula& f, std::initializer_list<Formula::Kind> kinds) {
  std::vector<Formula> out;
  logic::visit(f, [&](const Formula& g) {
    if (std::find(kinds.begin(), kinds.end(), g.kind()) != kinds.end()) out.push_back(g);
  });
  return out;
}

// Rebuilds f with the first occurrence (pre-order) of target replaced.
inline Formula replace_first(const Formula& f, const Formula& target, const Formula& with, bool& done) {
  if (done) return f;
  if (f == target) {
    done = true;
    return with;
  }
  switch (f.kind()) {
    case Formula::Kind::Var: return f;
    case Formula::Kind::Not: return logic::neg(replace_first(f.operand(), target, with, done));
    default: {
      Formula l = replace_first(f.lhs(), target, with, done);
      Formula r = replace_first(f.rhs(), target, with, done);
      return Formula::make(f.kind(), l, r);
    }
  }
}

inline Formula negate(const Formula& f) { return f.kind() == Formula::Kind::Not ? f.operand() : logic::neg(f); }

inline std::optional<Formula> substitute_variable(const Formula& f, std::uint32_t var_count, Rng& rng) {
  const auto vs = logic::variables(f);
  if (var_count < 2) return std::nullopt;
  const std::uint32_t from = *std::next(vs.begin(), static_cast<std::ptrdiff_t>(rng.index(vs.size())));
  std::uint32_t to = static_cast<std::uint32_t>(rng.index(var_count - 1));
  if (to >= from) ++to;
  return logic::substitute(f, [&](std::uint32_t i) { return logic::var(i == from ? to : i); });
}

inline std::optional<Formula> swap_connective(const Formula& f, Rng& rng) {
  const auto targets = subformulas_of_kind(f, {Formula::Kind::And, Formula::Kind::Or});
  if (targets.empty()) return std::nullopt;
  const Formula& t = rng.pick(targets);
  const auto flipped = Formula::make(t.kind() == Formula::Kind::And ? Formula::Kind::Or : Formula::Kind::And,
                                     t.lhs(), t.rhs());
  bool done = false;
  return replace_first(f, t, flipped, done);
}

}  // namespace detail

// Turns an answerable instance unanswerable. Every candidate must leave the
// (possibly new) query outside the closure, must not be a tautology, must
// keep the closure contradiction-free and, when the instance fits the
// truth-table cap, must not be semantically entailed by the facts either.
inline void intervene_li(LiInstance& inst, graph::InterventionKind kind, Rng& rng) {
  using K = graph::InterventionKind;
  if (!inst.answerable()) throw InputError("intervene_li: instance is already unanswerable");
  std::vector<Formula> path_facts;
  {
    const FormulaSet facts(inst.facts.begin(), inst.facts.end());
    for (auto e : inst.path) {
      for (const auto& p : inst.edges[e].inference.premises) {
        if (facts.contains(p) && std::find(path_facts.begin(), path_facts.end(), p) == path_facts.end())
          path_facts.push_back(p);
      }
    }
  }
  constexpr int kBudget = 64;
  for (int attempt = 0; attempt < kBudget; ++attempt) {
    std::vector<Formula> facts = inst.facts;
    Formula query = inst.query;
    LiIntervention iv{kind, inst.query, std::nullopt};
    if (kind == K::PremiseRemoval || kind == K::FalsePremise) {
      if (path_facts.empty()) break;
      const Formula f = rng.pick(path_facts);
      iv.original = f;
      facts.erase(std::remove(facts.begin(), facts.end(), f), facts.end());
      if (kind == K::FalsePremise) {
        std::optional<Formula> g;
        switch (rng.index(3)) {
          case 0: g = detail::negate(f); break;
          case 1: g = detail::substitute_variable(f, inst.var_count, rng); break;
          default: g = detail::swap_connective(f, rng); break;
        }
        if (!g || *g == f || std::find(facts.begin(), facts.end(), *g) != facts.end()) continue;
        iv.replacement = *g;
        facts.push_back(*g);
      }
    } else if (kind == K::FalseConclusion) {
      std::optional<Formula> g;
      switch (rng.index(3)) {
        case 0: g = detail::negate(query); break;
        case 1: g = detail::substitute_variable(query, inst.var_count, rng); break;
        default:
          if (query.kind() == Formula::Kind::Implies) g = logic::implies(query.rhs(), query.lhs());
          break;
      }
      if (!g || *g == query) continue;
      iv.replacement = *g;
      query = *g;
    } else {
      throw InputError("intervene_li: edge removal is not a GraphLI intervention");
    }
    const FormulaSet closure = li_closure(facts, inst.edges);
    if (closure.contains(query) || logic::has_contradiction(closure)) continue;
    if (logic::variables(query).size() <= logic::kMaxTruthTableVars && logic::is_tautology(query)) continue;
    std::vector<Formula> all = facts;
    all.push_back(query);
    const bool checkable = logic::within_truth_table_cap(all);
    if (checkable && logic::entails(facts, query)) continue;
    inst.facts = std::move(facts);
    inst.query = query;
    inst.intervention = iv;
    inst.semantic_checked = checkable;
    return;
  }
  throw GenerationError("graphli: intervention resampling budget exhausted (" + graph::to_string(kind) + ")",
                        inst.seed);
}

// Undoes a recorded intervention.
inline void revert_intervention(LiInstance& inst) {
  using K = graph::InterventionKind;
  if (!inst.intervention) return;
  const auto& iv = *inst.intervention;
  if (iv.kind == K::FalseConclusion) {
    inst.query = iv.original;
  } else {
    if (iv.replacement)
      inst.facts.erase(std::remove(inst.facts.begin(), inst.facts.end(), *iv.replacement), inst.facts.end());
    inst.facts.push_back(iv.original);
  }
  inst.intervention.reset();
}

// ---------------------------------------------------------------------------
// Natural-language rendering.

// Distinct events per variable, preferring distinct people and activities.
inline std::vector<std::string> assign_events(std::uint32_t var_count, const std::vector<Event>& vocab, Rng& rng) {
  if (var_count > vocab.size())
    throw CapacityError("graphli: event vocabulary has " + std::to_string(vocab.size()) + " entries, need " +
                        std::to_string(var_count));
  std::vector<std::size_t> order(vocab.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::string> out;
  std::vector<bool> used(vocab.size(), false);
  std::set<std::string> people, acts;
  for (auto i : order) {
    if (out.size() == var_count) break;
    if (people.contains(vocab[i].person) || acts.contains(vocab[i].activity)) continue;
    people.insert(vocab[i].person);
    acts.insert(vocab[i].activity);
    used[i] = true;
    out.push_back(vocab[i].text());
  }
  for (auto i : order) {
    if (out.size() == var_count) break;
    if (!used[i]) out.push_back(vocab[i].text());
  }
  return out;
}

inline std::string render_formula(const Formula& f, const std::vector<std::string>& events) {
  auto event = [&](std::uint32_t v) -> const std::string& {
    if (v >= events.size()) throw CapacityError("render_formula: no event for v" + std::to_string(v));
    return events[v];
  };
  auto wrap = [&](const Formula& g) {
    const bool bare = g.is_literal() || g.kind() == Formula::Kind::And || g.kind() == Formula::Kind::Or;
    return bare ? render_formula(g, events) : "(" + render_formula(g, events) + ")";
  };
  switch (f.kind()) {
    case Formula::Kind::Var: return "'" + event(f.index()) + "' is true";
    case Formula::Kind::Not:
      if (f.operand().is_var()) return "'" + event(f.operand().index()) + "' is false";
      return "it is not the case that (" + render_formula(f.operand(), events) + ")";
    case Formula::Kind::And:
      return "(" + render_formula(f.lhs(), events) + ") and (" + render_formula(f.rhs(), events) + ")";
    case Formula::Kind::Or:
      return "(" + render_formula(f.lhs(), events) + ") or (" + render_formula(f.rhs(), events) + ")";
    case Formula::Kind::Implies: return "If " + wrap(f.lhs()) + ", then " + wrap(f.rhs());
  }
  return {};
}

struct LiText {
  std::string rules_text;
  std::string facts_text;
  std::string query_text;
  std::string prompt() const { return rules_text + "\n" + facts_text + "\n" + query_text; }
};

// Implication facts go in the rules block, everything else in the facts
// block; both in seeded order.
inline LiText render_li_nl(const LiInstance& inst, Rng& rng) {
  std::vector<Formula> rules, facts;
  for (const auto& f : inst.facts) (f.kind() == Formula::Kind::Implies ? rules : facts).push_back(f);
  rng.shuffle(rules);
  rng.shuffle(facts);
  LiText t;
  t.rules_text = "We know the following rules:\n";
  for (const auto& r : rules) t.rules_text += "- " + render_formula(r, inst.events) + ".\n";
  t.facts_text = "Now we know that:\n";
  for (const auto& f : facts) t.facts_text += "- " + render_formula(f, inst.events) + ".\n";
  t.query_text = "Can we draw a conclusion about the truth of " + render_formula(inst.query, inst.events) + "?";
  return t;
}

namespace detail {

class NlParser {
 public:
  explicit NlParser(std::string text) : text_(std::move(text)) {}

  Formula parse() { return parse_range(0, text_.size()); }

  std::string& text() { return text_; }

 private:
  Formula parse_range(std::size_t b, std::size_t e) {
    trim(b, e);
    const std::string_view s(text_.data() + b, e - b);
    if (s.starts_with("If ")) {
      const std::size_t split = find_top(b + 3, e, ", then ");
      if (split == std::string::npos) fail("missing ', then'");
      return logic::implies(parse_operand(b + 3, split), parse_operand(split + 7, e));
    }
    constexpr std::string_view kNot = "it is not the case that (";
    if (s.starts_with(kNot)) {
      if (s.back() != ')') fail("unterminated negation");
      return logic::neg(parse_range(b + kNot.size(), e - 1));
    }
    if (s.starts_with("@")) {
      const std::size_t close = s.find('@', 1);
      if (close == std::string::npos) fail("bad event token");
      const auto v = static_cast<std::uint32_t>(std::stoul(std::string(s.substr(1, close - 1))));
      const auto rest = s.substr(close + 1);
      if (rest == " is true") return logic::var(v);
      if (rest == " is false") return logic::neg(logic::var(v));
      fail("bad literal");
    }
    if (s.starts_with("(")) {
      std::size_t split = find_top(b, e, ") and (");
      Formula::Kind kind = Formula::Kind::And;
      std::size_t skip = 7;
      if (split == std::string::npos) {
        split = find_top(b, e, ") or (");
        kind = Formula::Kind::Or;
        skip = 6;
      }
      if (split != std::string::npos) {
        if (text_[e - 1] != ')') fail("unterminated operand");
        return Formula::make(kind, parse_range(b + 1, split), parse_range(split + skip, e - 1));
      }
      if (text_[e - 1] == ')') return parse_range(b + 1, e - 1);
    }
    fail("unrecognized formula");
  }

  Formula parse_operand(std::size_t b, std::size_t e) {
    trim(b, e);
    return parse_range(b, e);
  }

  // Position of `needle` at parenthesis depth 0 (depth counted before the
  // needle's own leading ')').
  std::size_t find_top(std::size_t b, std::size_t e, std::string_view needle) const {
    int depth = 0;
    for (std::size_t i = b; i < e; ++i) {
      if (depth == 1 && needle.front() == ')' && text_.compare(i, needle.size(), needle) == 0 && i + needle.size() <= e)
        return i;
      if (depth == 0 && needle.front() != ')' && text_.compare(i, needle.size(), needle) == 0 && i + needle.size() <= e)
        return i;
      if (text_[i] == '(') ++depth;
      if (text_[i] == ')') --depth;
    }
    return std::string::npos;
  }

  void trim(std::size_t& b, std::size_t& e) const {
    while (b < e && text_[b] == ' ') ++b;
    while (e > b && text_[e - 1] == ' ') --e;
  }

  [[noreturn]] void fail(const std::string& why) const { throw InputError("graphli text parse error: " + why); }

  std::string text_;
};

}  // namespace detail

// Inverse of render_formula for a known event table.
inline Formula parse_rendered_formula(std::string text, const std::vector<std::string>& events) {
  // Longest events first so that no event is replaced inside another.
  std::vector<std::size_t> order(events.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return events[a].size() > events[b].size(); });
  for (auto i : order) {
    const std::string quoted = "'" + events[i] + "'";
    const std::string token = "@" + std::to_string(i) + "@";
    for (std::size_t pos = text.find(quoted); pos != std::string::npos; pos = text.find(quoted, pos + token.size()))
      text.replace(pos, quoted.size(), token);
  }
  return detail::NlParser(std::move(text)).parse();
}

// ---------------------------------------------------------------------------
// Ground-truth trajectory.

inline std::string render_li_trajectory(const LiInstance& inst) {
  const LiGraph g = li_graph(inst);
  const graph::Traversal order = graph::dfs_trajectory(g.dah);
  const FormulaSet closure = li_closure(inst.facts, inst.edges);
  auto quote = [&](const Formula& f) { return "\"" + render_formula(f, inst.events) + "\""; };
  std::string out = "<think>\n";
  for (std::size_t i = 0; i < order.order.size(); ++i) {
    const auto& e = inst.edges[order.order[i]];
    std::string premises;
    for (std::size_t j = 0; j < e.inference.premises.size(); ++j) {
      if (j) premises += j + 1 == e.inference.premises.size() ? " and " : ", ";
      premises += quote(e.inference.premises[j]);
    }
    if (i < order.fired) {
      out += "<step>Using " + e.rule().label() + " on " + premises + ", we derive " + quote(e.inference.conclusion) +
             ".</step>\n";
    } else {
      const auto missing = std::find_if(e.inference.premises.begin(), e.inference.premises.end(),
                                        [&](const Formula& p) { return !closure.contains(p); });
      out += "<step>" + e.rule().label() + " would need " + quote(*missing) +
             ", which is neither given nor derived, so it cannot be applied.</step>\n";
    }
  }
  const bool yes = closure.contains(inst.query);
  if (yes) {
    out += "<step>The query " + quote(inst.query) + " has been derived, therefore the conclusion follows.</step>\n";
  } else {
    std::optional<Formula> gap;
    for (auto e : inst.path) {
      for (const auto& p : inst.edges[e].inference.premises) {
        if (!gap && !closure.contains(p)) gap = p;
      }
    }
    if (gap) {
      out += "<step>The chain toward the query needs " + quote(*gap) +
             ", which cannot be derived, so no conclusion about " + quote(inst.query) + " can be drawn.</step>\n";
    } else {
      out += "<step>None of the derived statements is " + quote(inst.query) +
             ", so no conclusion about it can be drawn.</step>\n";
    }
  }
  out += "</think>\n<answer>" + std::string(yes ? "Yes" : "No") + "</answer>";
  return out;
}

// ---------------------------------------------------------------------------
// Persistence and datasets.

inline nlohmann::ordered_json edge_to_json(const LiEdge& e) {
  auto premises = nlohmann::ordered_json::array();
  for (const auto& p : e.inference.premises) premises.push_back(logic::to_string(p));
  return {{"rule", e.rule().label()},
          {"schema", e.schema},
          {"premises", std::move(premises)},
          {"conclusion", logic::to_string(e.inference.conclusion)}};
}

inline LiEdge edge_from_json(const nlohmann::ordered_json& j) {
  LiEdge e;
  e.schema = j.at("schema").get<std::size_t>();
  if (e.schema >= logic::directed_schemas().size()) throw InputError("graphli: schema index out of range");
  for (const auto& p : j.at("premises")) e.inference.premises.push_back(logic::parse_formula(p.get<std::string>()));
  e.inference.conclusion = logic::parse_formula(j.at("conclusion").get<std::string>());
  return e;
}

inline Record to_record(const LiInstance& inst, const LiText& text, const std::string& trajectory) {
  Record r;
  r.dataset = DatasetKind::GraphLI;
  r.question = text.prompt();
  const bool yes = inst.answerable();
  r.answer = yes ? "Yes" : "No";
  r.answerable = yes;
  r.trajectory = trajectory;
  auto& m = r.meta;
  m["seed"] = inst.seed;
  m["k"] = inst.k;
  m["E_irr"] = inst.irrelevant_edges;
  m["intervention"] = inst.intervention ? nlohmann::ordered_json(graph::to_string(inst.intervention->kind))
                                        : nlohmann::ordered_json(nullptr);
  m["query_formula"] = logic::to_string(inst.query);
  auto facts = nlohmann::ordered_json::array();
  for (const auto& f : inst.facts) facts.push_back(logic::to_string(f));
  m["facts"] = std::move(facts);
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : inst.edges) edges.push_back(edge_to_json(e));
  m["edges"] = std::move(edges);
  m["path"] = inst.path;
  if (inst.intervention) {
    m["detail"] = {{"original", logic::to_string(inst.intervention->original)},
                   {"replacement", inst.intervention->replacement
                                       ? nlohmann::ordered_json(logic::to_string(*inst.intervention->replacement))
                                       : nlohmann::ordered_json(nullptr)}};
  } else {
    m["detail"] = nullptr;
  }
  m["semantic_check"] = inst.semantic_checked ? "passed" : "skipped";
  m["events"] = inst.events;
  return r;
}

// Rebuilds the logical content of a persisted record.
inline LiInstance instance_from_record(const Record& r) {
  LiInstance inst;
  const auto& m = r.meta;
  try {
    inst.seed = m.at("seed").get<std::uint64_t>();
    inst.k = m.at("k").get<int>();
    inst.irrelevant_edges = m.at("E_irr").get<int>();
    inst.query = logic::parse_formula(m.at("query_formula").get<std::string>());
    for (const auto& f : m.at("facts")) inst.facts.push_back(logic::parse_formula(f.get<std::string>()));
    for (const auto& e : m.at("edges")) inst.edges.push_back(edge_from_json(e));
    inst.path = m.at("path").get<std::vector<std::size_t>>();
    inst.events = m.at("events").get<std::vector<std::string>>();
    inst.var_count = static_cast<std::uint32_t>(inst.events.size());
    if (!m.at("intervention").is_null()) {
      const auto kind = m.at("intervention").get<std::string>();
      LiIntervention iv;
      if (kind == "premise-removal") iv.kind = graph::InterventionKind::PremiseRemoval;
      else if (kind == "false-premise") iv.kind = graph::InterventionKind::FalsePremise;
      else if (kind == "false-conclusion") iv.kind = graph::InterventionKind::FalseConclusion;
      else throw InputError("graphli: unknown intervention '" + kind + "'");
      const auto& d = m.at("detail");
      iv.original = logic::parse_formula(d.at("original").get<std::string>());
      if (!d.at("replacement").is_null()) iv.replacement = logic::parse_formula(d.at("replacement").get<std::string>());
      inst.intervention = iv;
    }
    inst.semantic_checked = m.at("semantic_check").get<std::string>() == "passed";
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("graphli: malformed meta: ") + e.what());
  }
  for (auto p : inst.path) {
    if (p >= inst.edges.size()) throw InputError("graphli: path edge out of range");
  }
  return inst;
}

// Answerable base instance: chain, collapse, distractors.
inline LiInstance base_li_instance(const LiConfig& cfg, int k, Rng& rng, detail::VarPool& pool, std::uint64_t seed) {
  LiInstance inst;
  inst.seed = seed;
  inst.k = k;
  inst.irrelevant_edges = cfg.irrelevant_edges;
  const auto chain = compose_chain(cfg, k, rng, pool, seed);
  auto [premises, q] = collapse_chain(chain);
  inst.facts = std::move(premises);
  inst.query = q;
  for (const auto& s : chain) {
    inst.path.push_back(inst.edges.size());
    inst.edges.push_back({s.schema, s.inference});
  }
  inst.var_count = pool.next;
  add_irrelevant_edges(inst, cfg.irrelevant_edges, rng, pool, cfg.max_formula_size);
  if (!inst.answerable()) throw InvariantError("graphli: collapsed chain does not derive its conclusion");
  {
    std::vector<Formula> all = inst.facts;
    all.push_back(inst.query);
    inst.semantic_checked = logic::within_truth_table_cap(all);
    if (inst.semantic_checked && !logic::entails(inst.facts, inst.query))
      throw InvariantError("graphli: derived query not entailed by its facts");
  }
  // Edge order carries no path information.
  std::vector<std::size_t> perm(inst.edges.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<LiEdge> shuffled(inst.edges.size());
  std::vector<std::size_t> new_pos(perm.size());
  for (std::size_t pos = 0; pos < perm.size(); ++pos) {
    shuffled[pos] = inst.edges[perm[pos]];
    new_pos[perm[pos]] = pos;
  }
  for (auto& p : inst.path) p = new_pos[p];
  inst.edges = std::move(shuffled);
  return inst;
}

struct LiGenerated {
  LiInstance instance;
  Record record;
};

inline LiGenerated generate_li_instance(const LiConfig& cfg, int k, std::optional<graph::InterventionKind> kind,
                                        std::uint64_t seed) {
  constexpr int kRetries = 8;
  std::optional<GenerationError> last;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : derive_seed(seed, 0x11e7, static_cast<std::uint64_t>(attempt));
    try {
      Rng rng(s);
      detail::VarPool pool;
      LiInstance inst = base_li_instance(cfg, k, rng, pool, s);
      if (kind) intervene_li(inst, *kind, rng);
      inst.events = assign_events(inst.var_count, cfg.event_vocab, rng);
      const LiText text = render_li_nl(inst, rng);
      Record rec = to_record(inst, text, render_li_trajectory(inst));
      return {std::move(inst), std::move(rec)};
    } catch (const GenerationError& e) {
      last = e;
    }
  }
  throw GenerationError(std::string("graphli: generation failed: ") + (last ? last->what() : ""), seed);
}

inline graph::InterventionKind li_intervention_for(std::size_t i) {
  constexpr graph::InterventionKind kinds[] = {graph::InterventionKind::PremiseRemoval,
                                               graph::InterventionKind::FalsePremise,
                                               graph::InterventionKind::FalseConclusion};
  return kinds[i % 3];
}

inline Splits build_li_dataset(const LiConfig& cfg) {
  cfg.validate();
  const std::size_t pool = static_cast<std::size_t>(cfg.configurations) * static_cast<std::size_t>(cfg.samples_per_config);
  SplitSizes per_class;
  if (cfg.split_sizes) {
    per_class = {cfg.split_sizes->train / 2, cfg.split_sizes->val / 2, cfg.split_sizes->test / 2};
    if (per_class.total() > pool) throw InputError("graphli: split sizes exceed configurations x samples_per_config");
  } else {
    per_class = ratio_split(pool);
  }
  const int depths = static_cast<int>(cfg.depth.hi - cfg.depth.lo + 1);
  auto depth_of = [&](std::size_t i) {
    const std::size_t config = i / static_cast<std::size_t>(cfg.samples_per_config);
    return static_cast<int>(cfg.depth.lo) + static_cast<int>(config % static_cast<std::size_t>(depths));
  };
  auto ans = parallel_generate<Record>(per_class.total(), [&](std::size_t i) {
    return generate_li_instance(cfg, depth_of(i), std::nullopt, derive_seed(cfg.seed, 0x1100, i)).record;
  });
  auto unans = parallel_generate<Record>(per_class.total(), [&](std::size_t i) {
    return generate_li_instance(cfg, depth_of(i), li_intervention_for(i), derive_seed(cfg.seed, 0x1101, i)).record;
  });
  return assemble_splits(DatasetKind::GraphLI, std::move(ans), std::move(unans), per_class, per_class, cfg.seed);
}

// Difficulty sweep: one cell per (k, |E_irr|) with samples_per_config
// records of each class.
struct LiCell {
  int k = 0;
  int irrelevant_edges = 0;
  std::vector<Record> records;
};

inline std::vector<LiCell> build_li_sweep(const LiConfig& base, const std::vector<int>& depths,
                                          const std::vector<int>& irrelevant) {
  std::vector<LiCell> cells;
  for (int k : depths) {
    for (int e : irrelevant) {
      LiConfig cfg = base;
      cfg.depth = {k, k};
      cfg.irrelevant_edges = e;
      cfg.validate();
      const auto n = static_cast<std::size_t>(cfg.samples_per_config);
      const std::uint64_t stream = 0x2200 + static_cast<std::uint64_t>(k) * 1000 + static_cast<std::uint64_t>(e) * 4;
      auto ans = parallel_generate<Record>(n, [&](std::size_t i) {
        return generate_li_instance(cfg, k, std::nullopt, derive_seed(cfg.seed, stream, i)).record;
      });
      auto unans = parallel_generate<Record>(n, [&](std::size_t i) {
        return generate_li_instance(cfg, k, li_intervention_for(i), derive_seed(cfg.seed, stream + 1, i)).record;
      });
      LiCell cell{k, e, std::move(ans)};
      cell.records.insert(cell.records.end(), std::make_move_iterator(unans.begin()),
                          std::make_move_iterator(unans.end()));
      Rng rng(derive_seed(base.seed, 0x5eed11, static_cast<std::uint64_t>(k * 100 + e)));
      rng.shuffle(cell.records);
      for (std::size_t i = 0; i < cell.records.size(); ++i) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "graphli-k%d-e%d-%06zu", k, e, i);
        cell.records[i].id = buf;
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace anchorlab::graphli
