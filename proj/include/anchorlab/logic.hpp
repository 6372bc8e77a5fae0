#pragma once

// Propositional formulas, truth-table semantics, the implication-rule table
// and syntactic forward chaining.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anchorlab/error.hpp"

namespace anchorlab::logic {

// Immutable propositional formula with value semantics. Children are shared,
// so copies are cheap and formulas may be used freely as set/map keys.
class Formula {
 public:
  enum class Kind : std::uint8_t { Var, Not, And, Or, Implies };

  static Formula variable(std::uint32_t index) {
    return Formula(std::make_shared<const Node>(Kind::Var, index, nullptr, nullptr));
  }
  static Formula make(Kind kind, Formula lhs, std::optional<Formula> rhs = std::nullopt) {
    if (kind == Kind::Var) throw InputError("Formula::make: use variable()");
    if ((kind == Kind::Not) == rhs.has_value())
      throw InputError("Formula::make: wrong arity");
    return Formula(std::make_shared<const Node>(kind, 0, std::move(lhs.node_),
                                                rhs ? std::move(rhs->node_) : nullptr));
  }

  Kind kind() const { return node_->kind; }
  bool is_var() const { return node_->kind == Kind::Var; }
  bool is_literal() const {
    return is_var() || (kind() == Kind::Not && operand().is_var());
  }
  // Index of a Var node.
  std::uint32_t index() const { return node_->index; }
  // Single child of a Not node.
  Formula operand() const { return Formula(node_->lhs); }
  Formula lhs() const { return Formula(node_->lhs); }
  Formula rhs() const { return Formula(node_->rhs); }
  // Number of AST nodes.
  std::size_t size() const { return node_->size; }
  std::size_t hash() const { return node_->hash; }

  friend bool operator==(const Formula& a, const Formula& b) { return compare(a, b) == 0; }
  friend std::strong_ordering operator<=>(const Formula& a, const Formula& b) {
    return compare(a, b) <=> 0;
  }

 private:
  struct Node {
    Node(Kind k, std::uint32_t i, std::shared_ptr<const Node> l, std::shared_ptr<const Node> r)
        : kind(k), index(i), lhs(std::move(l)), rhs(std::move(r)) {
      size = 1 + (lhs ? lhs->size : 0) + (rhs ? rhs->size : 0);
      std::size_t h = static_cast<std::size_t>(kind) * 0x9e3779b97f4a7c15ULL + index;
      if (lhs) h = (h ^ lhs->hash) * 0x100000001b3ULL + 17;
      if (rhs) h = (h ^ (rhs->hash << 1)) * 0x100000001b3ULL + 31;
      hash = h;
    }
    Kind kind;
    std::uint32_t index;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
    std::size_t size = 1;
    std::size_t hash = 0;
  };

  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static int compare(const Formula& a, const Formula& b) { return compare(a.node_.get(), b.node_.get()); }
  static int compare(const Node* a, const Node* b) {
    if (a == b) return 0;
    if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
    if (a->kind == Kind::Var) return a->index == b->index ? 0 : (a->index < b->index ? -1 : 1);
    if (a->size != b->size) return a->size < b->size ? -1 : 1;
    if (int c = compare(a->lhs.get(), b->lhs.get()); c != 0) return c;
    if (a->rhs) return compare(a->rhs.get(), b->rhs.get());
    return 0;
  }

  std::shared_ptr<const Node> node_;
};

inline Formula var(std::uint32_t i) { return Formula::variable(i); }
inline Formula neg(Formula f) { return Formula::make(Formula::Kind::Not, std::move(f)); }
inline Formula conj(Formula a, Formula b) { return Formula::make(Formula::Kind::And, std::move(a), std::move(b)); }
inline Formula disj(Formula a, Formula b) { return Formula::make(Formula::Kind::Or, std::move(a), std::move(b)); }
inline Formula implies(Formula a, Formula b) {
  return Formula::make(Formula::Kind::Implies, std::move(a), std::move(b));
}

struct FormulaHash {
  std::size_t operator()(const Formula& f) const { return f.hash(); }
};

using FormulaSet = std::set<Formula>;

// Apply fn to every sub-formula, pre-order.
inline void visit(const Formula& f, const std::function<void(const Formula&)>& fn) {
  fn(f);
  switch (f.kind()) {
    case Formula::Kind::Var: break;
    case Formula::Kind::Not: visit(f.operand(), fn); break;
    default:
      visit(f.lhs(), fn);
      visit(f.rhs(), fn);
  }
}

inline std::set<std::uint32_t> variables(const Formula& f) {
  std::set<std::uint32_t> out;
  visit(f, [&](const Formula& g) { if (g.is_var()) out.insert(g.index()); });
  return out;
}

inline std::set<std::uint32_t> variables(std::span<const Formula> fs) {
  std::set<std::uint32_t> out;
  for (const auto& f : fs) out.merge(variables(f));
  return out;
}

// Replace every Var(i) with replacement(i).
inline Formula substitute(const Formula& f, const std::function<Formula(std::uint32_t)>& replacement) {
  switch (f.kind()) {
    case Formula::Kind::Var: return replacement(f.index());
    case Formula::Kind::Not: return neg(substitute(f.operand(), replacement));
    default:
      return Formula::make(f.kind(), substitute(f.lhs(), replacement), substitute(f.rhs(), replacement));
  }
}

// ---------------------------------------------------------------------------
// Text form: prefix s-expressions, e.g. (-> (not v2) (or v0 v1)).

inline std::string to_string(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Var: return "v" + std::to_string(f.index());
    case Formula::Kind::Not: return "(not " + to_string(f.operand()) + ")";
    case Formula::Kind::And: return "(and " + to_string(f.lhs()) + " " + to_string(f.rhs()) + ")";
    case Formula::Kind::Or: return "(or " + to_string(f.lhs()) + " " + to_string(f.rhs()) + ")";
    case Formula::Kind::Implies: return "(-> " + to_string(f.lhs()) + " " + to_string(f.rhs()) + ")";
  }
  return {};
}

namespace detail {

class PrefixParser {
 public:
  explicit PrefixParser(std::string_view text) : text_(text) {}

  Formula parse_all() {
    Formula f = parse();
    skip_space();
    if (pos_ != text_.size()) fail("trailing input");
    return f;
  }

 private:
  Formula parse() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end");
    if (text_[pos_] == 'v') return parse_var();
    if (text_[pos_] != '(') fail("expected '(' or variable");
    ++pos_;
    const std::string_view op = word();
    Formula result = [&] {
      if (op == "not") return neg(parse());
      Formula a = parse();
      Formula b = parse();
      if (op == "and") return conj(a, b);
      if (op == "or") return disj(a, b);
      if (op == "->") return implies(a, b);
      fail("unknown operator '" + std::string(op) + "'");
      return a;
    }();
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
    ++pos_;
    return result;
  }

  Formula parse_var() {
    ++pos_;
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    if (start == pos_ || pos_ - start > 9) fail("bad variable index");
    return var(static_cast<std::uint32_t>(std::stoul(std::string(text_.substr(start, pos_ - start)))));
  }

  std::string_view word() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ' ' && text_[pos_] != '(' && text_[pos_] != ')') ++pos_;
    return text_.substr(start, pos_ - start);
  }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n')) ++pos_;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw InputError("formula parse error at offset " + std::to_string(pos_) + ": " + why);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Formula parse_formula(std::string_view text) { return detail::PrefixParser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Semantics.

inline bool eval_formula(const Formula& f, std::span<const bool> assignment) {
  switch (f.kind()) {
    case Formula::Kind::Var:
      if (f.index() >= assignment.size())
        throw InputError("eval_formula: variable v" + std::to_string(f.index()) + " out of range");
      return assignment[f.index()];
    case Formula::Kind::Not: return !eval_formula(f.operand(), assignment);
    case Formula::Kind::And: return eval_formula(f.lhs(), assignment) && eval_formula(f.rhs(), assignment);
    case Formula::Kind::Or: return eval_formula(f.lhs(), assignment) || eval_formula(f.rhs(), assignment);
    case Formula::Kind::Implies: return !eval_formula(f.lhs(), assignment) || eval_formula(f.rhs(), assignment);
  }
  return false;
}

inline constexpr std::size_t kMaxTruthTableVars = 20;

namespace detail {

// Evaluates f on 64 assignments at once; words[i] holds the bit pattern of
// variable i across the block.
inline std::uint64_t eval_block(const Formula& f, std::span<const std::uint64_t> words,
                                const std::vector<std::uint32_t>& slot) {
  switch (f.kind()) {
    case Formula::Kind::Var: return words[slot[f.index()]];
    case Formula::Kind::Not: return ~eval_block(f.operand(), words, slot);
    case Formula::Kind::And: return eval_block(f.lhs(), words, slot) & eval_block(f.rhs(), words, slot);
    case Formula::Kind::Or: return eval_block(f.lhs(), words, slot) | eval_block(f.rhs(), words, slot);
    case Formula::Kind::Implies: return ~eval_block(f.lhs(), words, slot) | eval_block(f.rhs(), words, slot);
  }
  return 0;
}

// True iff every assignment making all premises true makes the conclusion true.
inline bool valid_sequent(std::span<const Formula> premises, const Formula& conclusion) {
  std::set<std::uint32_t> vars = variables(premises);
  vars.merge(variables(conclusion));
  if (vars.size() > kMaxTruthTableVars)
    throw CapacityError("truth table over " + std::to_string(vars.size()) + " variables exceeds cap of " +
                        std::to_string(kMaxTruthTableVars));
  const std::uint32_t max_var = vars.empty() ? 0 : *vars.rbegin();
  std::vector<std::uint32_t> slot(max_var + 1, 0);
  std::uint32_t next = 0;
  for (auto v : vars) slot[v] = next++;

  static constexpr std::array<std::uint64_t, 6> kLowPatterns = {
      0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
      0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL};
  const std::size_t n = vars.size();
  const std::size_t low = std::min<std::size_t>(n, 6);
  const std::uint64_t valid_mask = n >= 6 ? ~0ULL : ((1ULL << (1ULL << n)) - 1);
  const std::uint64_t blocks = n > 6 ? (1ULL << (n - 6)) : 1;
  std::vector<std::uint64_t> words(std::max<std::size_t>(n, 1), 0);
  for (std::size_t i = 0; i < low; ++i) words[i] = kLowPatterns[i];

  for (std::uint64_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 6; i < n; ++i) words[i] = ((b >> (i - 6)) & 1) ? ~0ULL : 0ULL;
    std::uint64_t premise_mask = valid_mask;
    for (const auto& p : premises) {
      premise_mask &= eval_block(p, words, slot);
      if (!premise_mask) break;
    }
    if (premise_mask & ~eval_block(conclusion, words, slot)) return false;
  }
  return true;
}

}  // namespace detail

// Exhaustive truth table; at most kMaxTruthTableVars distinct variables.
inline bool is_tautology(const Formula& f) { return detail::valid_sequent({}, f); }

inline bool entails(std::span<const Formula> premises, const Formula& conclusion) {
  return detail::valid_sequent(premises, conclusion);
}

inline bool within_truth_table_cap(std::span<const Formula> fs) {
  return variables(fs).size() <= kMaxTruthTableVars;
}

// ---------------------------------------------------------------------------
// Implication rules.

enum class RuleName : std::uint8_t {
  ModusPonens,
  ModusTollens,
  DisjunctiveSyllogism,
  ConstructiveDilemma,
  DestructiveDilemma,
  BidirectionalDilemma,
  DeMorgan,
  MaterialImplication,
  Importation,
  Composition,
};

inline constexpr std::string_view rule_display_name(RuleName r) {
  constexpr std::array<std::string_view, 10> kNames = {
      "Modus Ponens",          "Modus Tollens",         "Disjunctive Syllogism", "Constructive Dilemma",
      "Destructive Dilemma",   "Bidirectional Dilemma", "De Morgan's Theorem",   "Material Implication",
      "Importation",           "Composition"};
  return kNames[static_cast<std::size_t>(r)];
}

// One directed rule. Patterns are written over metavariables Var(0)..Var(3),
// standing for v1..v4.
struct RuleSchema {
  RuleName name;
  std::vector<Formula> premise_patterns;
  Formula conclusion_pattern;
  bool bidirectional = false;
  bool reversed = false;  // backward direction of a bidirectional rule

  std::size_t arity() const {
    auto vs = variables(premise_patterns);
    vs.merge(variables(conclusion_pattern));
    return vs.empty() ? 0 : *vs.rbegin() + 1;
  }
  std::string label() const {
    std::string s(rule_display_name(name));
    if (bidirectional) s += reversed ? " (backward)" : " (forward)";
    return s;
  }
};

// The ten rules, forward direction, in table order.
inline const std::vector<RuleSchema>& rule_table() {
  static const std::vector<RuleSchema> table = [] {
    const Formula v1 = var(0), v2 = var(1), v3 = var(2), v4 = var(3);
    using R = RuleName;
    return std::vector<RuleSchema>{
        {R::ModusPonens, {implies(v1, v2), v1}, v2},
        {R::ModusTollens, {implies(v1, v2), neg(v2)}, neg(v1)},
        {R::DisjunctiveSyllogism, {disj(v1, v2), neg(v1)}, v2},
        {R::ConstructiveDilemma, {implies(v1, v2), implies(v3, v4), disj(v1, v3)}, disj(v2, v4)},
        {R::DestructiveDilemma,
         {implies(v1, v2), implies(v3, v4), disj(neg(v2), neg(v4))},
         disj(neg(v1), neg(v3))},
        {R::BidirectionalDilemma, {implies(v1, v2), implies(v3, v4), disj(neg(v4), v1)}, disj(neg(v3), v2)},
        {R::DeMorgan, {neg(conj(v1, v2))}, disj(neg(v1), neg(v2)), true},
        {R::MaterialImplication, {implies(v1, v2)}, disj(neg(v1), v2), true},
        {R::Importation, {implies(v1, implies(v2, v3))}, implies(conj(v1, v2), v3), true},
        {R::Composition, {implies(v1, v2), implies(v1, v3)}, implies(v1, conj(v2, v3))},
    };
  }();
  return table;
}

// The ten rules with each bidirectional rule split into two directed schemas.
inline const std::vector<RuleSchema>& directed_schemas() {
  static const std::vector<RuleSchema> all = [] {
    std::vector<RuleSchema> out;
    for (const auto& r : rule_table()) {
      out.push_back(r);
      if (r.bidirectional) {
        out.push_back(RuleSchema{r.name, {r.conclusion_pattern}, r.premise_patterns.front(), true, true});
      }
    }
    return out;
  }();
  return all;
}

// A ground rule application: all premises jointly yield the conclusion.
struct Inference {
  std::vector<Formula> premises;
  Formula conclusion = var(0);
  friend bool operator==(const Inference&, const Inference&) = default;
};

// binding[i] is the formula substituted for metavariable v(i+1).
inline Inference instantiate_rule(const RuleSchema& schema, std::span<const Formula> binding) {
  if (binding.size() < schema.arity())
    throw InputError("instantiate_rule: " + schema.label() + " needs " + std::to_string(schema.arity()) +
                     " bindings, got " + std::to_string(binding.size()));
  auto sub = [&](const Formula& pattern) {
    return substitute(pattern, [&](std::uint32_t i) { return binding[i]; });
  };
  Inference out{{}, sub(schema.conclusion_pattern)};
  for (const auto& p : schema.premise_patterns) out.premises.push_back(sub(p));
  return out;
}

// One-way matching of a pattern against a ground formula; extends binding.
inline bool match_pattern(const Formula& pattern, const Formula& target, std::vector<std::optional<Formula>>& binding) {
  if (pattern.is_var()) {
    auto& slot = binding.at(pattern.index());
    if (slot) return *slot == target;
    slot = target;
    return true;
  }
  if (pattern.kind() != target.kind()) return false;
  if (pattern.kind() == Formula::Kind::Not) return match_pattern(pattern.operand(), target.operand(), binding);
  return match_pattern(pattern.lhs(), target.lhs(), binding) && match_pattern(pattern.rhs(), target.rhs(), binding);
}

// Least fixpoint of facts under the given rule applications, matching
// premises by structural equality.
inline FormulaSet forward_closure(const FormulaSet& facts, std::span<const Inference> rules) {
  FormulaSet closure = facts;
  std::vector<bool> fired(rules.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (fired[i]) continue;
      const auto& r = rules[i];
      if (std::all_of(r.premises.begin(), r.premises.end(), [&](const Formula& p) { return closure.contains(p); })) {
        fired[i] = true;
        if (closure.insert(r.conclusion).second) changed = true;
      }
    }
  }
  return closure;
}

// True iff the set contains some f together with Not(f).
inline bool has_contradiction(const FormulaSet& fs) {
  for (const auto& f : fs) {
    if (fs.contains(neg(f))) return true;
  }
  return false;
}

}  // namespace anchorlab::logic
