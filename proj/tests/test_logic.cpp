#include <gtest/gtest.h>

#include "anchorlab/logic.hpp"
#include "anchorlab/rng.hpp"

using namespace anchorlab;
using namespace anchorlab::logic;

namespace {

Formula random_formula(Rng& rng, std::uint32_t vars, int depth) {
  if (depth == 0 || rng.bernoulli(0.3)) return var(static_cast<std::uint32_t>(rng.index(vars)));
  switch (rng.index(4)) {
    case 0: return neg(random_formula(rng, vars, depth - 1));
    case 1: return conj(random_formula(rng, vars, depth - 1), random_formula(rng, vars, depth - 1));
    case 2: return disj(random_formula(rng, vars, depth - 1), random_formula(rng, vars, depth - 1));
    default: return implies(random_formula(rng, vars, depth - 1), random_formula(rng, vars, depth - 1));
  }
}

// Assignment-by-assignment evaluation, independent of the bit-parallel
// sequent checker.
bool brute_entails(const std::vector<Formula>& premises, const Formula& c) {
  std::vector<Formula> all = premises;
  all.push_back(c);
  auto vs = variables(all);
  const std::uint32_t n = vs.empty() ? 0 : *vs.rbegin() + 1;
  for (std::uint64_t m = 0; m < (1ULL << n); ++m) {
    std::unique_ptr<bool[]> a(new bool[n]);
    for (std::uint32_t i = 0; i < n; ++i) a[i] = (m >> i) & 1;
    std::span<const bool> s(a.get(), n);
    bool prem = true;
    for (const auto& p : premises) prem = prem && eval_formula(p, s);
    if (prem && !eval_formula(c, s)) return false;
  }
  return true;
}

const RuleSchema& schema(RuleName n, bool reversed = false) {
  for (const auto& s : directed_schemas())
    if (s.name == n && s.reversed == reversed) return s;
  throw std::logic_error("no schema");
}

}  // namespace

TEST(Entails, ModusPonensRow) {
  EXPECT_TRUE(entails(std::vector{var(0), implies(var(0), var(1))}, var(1)));
}

TEST(Entails, DisjunctiveSyllogismRow) {
  EXPECT_TRUE(entails(std::vector{disj(var(0), var(1)), neg(var(0))}, var(1)));
}

TEST(Entails, AffirmingConsequentIsInvalid) {
  EXPECT_FALSE(entails(std::vector{var(1), implies(var(0), var(1))}, var(0)));
}

TEST(Entails, AgreesWithBruteForceOnRandomSequents) {
  Rng rng(11);
  for (int t = 0; t < 400; ++t) {
    std::vector<Formula> ps;
    for (std::size_t i = 0, n = rng.index(3); i < n; ++i) ps.push_back(random_formula(rng, 4, 3));
    const Formula c = random_formula(rng, 4, 3);
    ASSERT_EQ(entails(ps, c), brute_entails(ps, c)) << to_string(c);
  }
}

TEST(Tautology, Basics) {
  EXPECT_TRUE(is_tautology(disj(var(0), neg(var(0)))));
  EXPECT_TRUE(is_tautology(implies(conj(var(0), var(1)), var(0))));
  EXPECT_FALSE(is_tautology(implies(var(0), var(1))));
}

TEST(Tautology, CapacityLimit) {
  Formula f = var(0);
  for (std::uint32_t i = 1; i <= kMaxTruthTableVars; ++i) f = disj(f, var(i));
  EXPECT_THROW(is_tautology(f), CapacityError);
  EXPECT_FALSE(within_truth_table_cap(std::vector{f}));
}

TEST(Tautology, TwentyVariablesIsAllowed) {
  Formula f = disj(var(0), neg(var(0)));
  for (std::uint32_t i = 1; i < kMaxTruthTableVars; ++i) f = disj(f, var(i));
  EXPECT_TRUE(is_tautology(f));
}

TEST(Rules, EveryDirectedSchemaIsSound) {
  for (const auto& s : directed_schemas()) {
    EXPECT_TRUE(entails(s.premise_patterns, s.conclusion_pattern)) << s.label();
  }
  EXPECT_EQ(rule_table().size(), 10u);
  EXPECT_EQ(directed_schemas().size(), 13u);
}

TEST(Rules, ModusTollensInstantiation) {
  const Formula b[] = {var(2), var(5)};
  const auto inf = instantiate_rule(schema(RuleName::ModusTollens), b);
  EXPECT_EQ(inf.premises, (std::vector{implies(var(2), var(5)), neg(var(5))}));
  EXPECT_EQ(inf.conclusion, neg(var(2)));
}

TEST(Rules, CompositionInstantiation) {
  const Formula b[] = {var(0), var(1), var(2)};
  const auto inf = instantiate_rule(schema(RuleName::Composition), b);
  EXPECT_EQ(inf.premises, (std::vector{implies(var(0), var(1)), implies(var(0), var(2))}));
  EXPECT_EQ(inf.conclusion, implies(var(0), conj(var(1), var(2))));
}

TEST(Rules, DeMorganForward) {
  const Formula b[] = {var(0), var(1)};
  const auto inf = instantiate_rule(schema(RuleName::DeMorgan), b);
  EXPECT_EQ(inf.premises, std::vector{neg(conj(var(0), var(1)))});
  EXPECT_EQ(inf.conclusion, disj(neg(var(0)), neg(var(1))));
}

TEST(Rules, BackwardDirectionSwapsPremiseAndConclusion) {
  const Formula b[] = {var(0), var(1)};
  const auto inf = instantiate_rule(schema(RuleName::MaterialImplication, true), b);
  EXPECT_EQ(inf.premises, std::vector{disj(neg(var(0)), var(1))});
  EXPECT_EQ(inf.conclusion, implies(var(0), var(1)));
  EXPECT_EQ(schema(RuleName::MaterialImplication, true).label(), "Material Implication (backward)");
}

TEST(Rules, ArityMismatchThrows) {
  const Formula b[] = {var(0)};
  EXPECT_THROW(instantiate_rule(schema(RuleName::ModusPonens), b), InputError);
}

TEST(Rules, MatchPatternRecoversBinding) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto& s = directed_schemas()[rng.index(directed_schemas().size())];
    std::vector<Formula> b;
    for (std::size_t i = 0; i < s.arity(); ++i) b.push_back(random_formula(rng, 6, 2));
    const auto inf = instantiate_rule(s, b);
    std::vector<std::optional<Formula>> got(s.arity());
    ASSERT_TRUE(match_pattern(s.conclusion_pattern, inf.conclusion, got));
    for (std::size_t i = 0; i < s.premise_patterns.size(); ++i)
      ASSERT_TRUE(match_pattern(s.premise_patterns[i], inf.premises[i], got));
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_EQ(*got[i], b[i]);
  }
}

TEST(Closure, ChainsAndStopsAtGaps) {
  const Formula a = var(0), b = var(1), c = var(2), d = var(3);
  std::vector<Inference> rules = {{{a, implies(a, b)}, b}, {{b, implies(b, c)}, c}, {{d}, a}};
  FormulaSet facts = {a, implies(a, b), implies(b, c)};
  auto cl = forward_closure(facts, rules);
  EXPECT_TRUE(cl.contains(c));
  EXPECT_FALSE(cl.contains(d));
  facts.erase(a);
  cl = forward_closure(facts, rules);
  EXPECT_FALSE(cl.contains(b));
}

TEST(Closure, OrderIndependent) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<Inference> rules;
    for (int i = 0; i < 12; ++i) {
      Inference r;
      for (std::size_t j = 0, n = 1 + rng.index(2); j < n; ++j) r.premises.push_back(var(static_cast<std::uint32_t>(rng.index(8))));
      r.conclusion = var(static_cast<std::uint32_t>(rng.index(8)));
      rules.push_back(r);
    }
    FormulaSet facts = {var(0), var(1)};
    auto a = forward_closure(facts, rules);
    std::reverse(rules.begin(), rules.end());
    EXPECT_EQ(a, forward_closure(facts, rules));
  }
}

TEST(Contradiction, Detects) {
  EXPECT_TRUE(has_contradiction({var(0), neg(var(0))}));
  EXPECT_FALSE(has_contradiction({var(0), neg(var(1))}));
}

TEST(Syntax, PrefixRoundTrip) {
  Rng rng(9);
  for (int t = 0; t < 300; ++t) {
    const Formula f = random_formula(rng, 30, 5);
    ASSERT_EQ(parse_formula(to_string(f)), f) << to_string(f);
  }
}

TEST(Syntax, ParseErrors) {
  EXPECT_THROW(parse_formula("(and v1)"), InputError);
  EXPECT_THROW(parse_formula("v"), InputError);
  EXPECT_THROW(parse_formula("(xor v1 v2)"), InputError);
}

TEST(Syntax, SizeCountsNodes) {
  EXPECT_EQ(implies(var(0), conj(var(1), neg(var(2)))).size(), 6u);
}
