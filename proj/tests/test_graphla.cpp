#include <gtest/gtest.h>

#include "anchorlab/eval.hpp"
#include "anchorlab/graphla.hpp"

using namespace anchorlab;
using namespace anchorlab::graphla;

namespace {

std::size_t dish(const std::string& s) {
  const auto& ds = vocab::dishes();
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds[i].singular == s) return i;
  throw std::logic_error("unknown dish " + s);
}

std::size_t restaurant(const std::string& s) {
  const auto& rs = vocab::restaurants();
  return static_cast<std::size_t>(std::find(rs.begin(), rs.end(), s) - rs.begin());
}

Naming naming(std::vector<std::pair<std::string, std::string>> nodes) {
  Naming n;
  for (auto& [d, r] : nodes) n.node.push_back({dish(d), restaurant(r)});
  return n;
}

// Substitution along the path, independent of the elimination code.
std::int64_t propagate(const LaGraph& g) {
  std::map<NodeId, Rational> known{{g.root, g.values[g.root]}};
  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto& e : g.edges) {
      if (known.contains(e.n) && !known.contains(e.m)) {
        const Rational bn = Rational(e.b) * known[e.n];
        known[e.m] = (Rational(e.c) + (e.form == EdgeForm::Comparative ? bn : -bn)) / e.a;
        progress = true;
      }
    }
  }
  return static_cast<std::int64_t>(known.at(g.query));
}

LaConfig small_config() {
  LaConfig c;
  c.var_count = 8;
  c.depth = {2, 5};
  c.samples_per_config = 4;
  c.seed = 17;
  return c;
}

}  // namespace

TEST(Render, RootSentence) {
  const auto n = naming({{"crab cake", "Harvest Table"}});
  EXPECT_EQ(root_sentence(n, 0, 17), "A crab cake at Harvest Table costs 17 dollars.");
}

TEST(Render, ComparativeSentence) {
  const auto n = naming({{"tuna poke bowl", "Golden Olive"}, {"spaghetti carbonara", "Velvet Spoon"}});
  const LinearEdge e{2, 1, 18, 0, 1, EdgeForm::Comparative};
  EXPECT_EQ(edge_sentence(n, e),
            "2 tuna poke bowls at Golden Olive cost 18 dollars more than a spaghetti carbonara at Velvet Spoon.");
}

TEST(Render, NegativeDifferenceSaysLess) {
  const auto n = naming({{"margherita pizza", "Velvet Spoon"}, {"ice cream sundae", "Golden Olive"}});
  const LinearEdge e{5, 9, -99, 0, 1, EdgeForm::Comparative};
  EXPECT_EQ(edge_sentence(n, e),
            "5 margherita pizzas at Velvet Spoon cost 99 dollars less than 9 ice cream sundaes at Golden Olive.");
}

TEST(Render, JointSentence) {
  const auto n = naming({{"ice cream sundae", "Golden Olive"}, {"beef wellington", "Velvet Spoon"}});
  const LinearEdge e{9, 4, 329, 0, 1, EdgeForm::Joint};
  EXPECT_EQ(edge_sentence(n, e),
            "9 ice cream sundaes at Golden Olive and 4 beef wellingtons at Velvet Spoon cost 329 dollars.");
}

TEST(Render, ArticleAndIrregularPlural) {
  const auto n = naming({{"ice cream sundae", "Harvest Table"}, {"bowl of ramen", "The Rustic Fork"}});
  EXPECT_EQ(n.quantity(1, 0, true), "An ice cream sundae at Harvest Table");
  EXPECT_EQ(n.quantity(10, 1, false), "10 bowls of ramen at The Rustic Fork");
  EXPECT_EQ(question_sentence(n, 1), "Question: how much does a bowl of ramen at The Rustic Fork cost?");
}

TEST(Render, ZeroDifferenceIsRejected) {
  const auto n = naming({{"crab cake", "Harvest Table"}, {"fish taco", "Harvest Table"}});
  EXPECT_THROW(edge_sentence(n, {1, 1, 0, 0, 1, EdgeForm::Comparative}), InputError);
}

TEST(Render, NamesAreDistinct) {
  Rng rng(1);
  const auto n = assign_names(15, rng);
  std::set<std::string> names;
  for (NodeId v = 0; v < 15; ++v) names.insert(n.name(v));
  EXPECT_EQ(names.size(), 15u);
  EXPECT_THROW(assign_names(vocab::dishes().size() * vocab::restaurants().size() + 1, rng), CapacityError);
}

TEST(Oracle, HandSystems) {
  // x0 = 10;  2 x1 - x0 = 4  =>  x1 = 7;  3 x2 + x1 = 22  =>  x2 = 5
  const std::vector<LinearEdge> es = {{2, 1, 4, 1, 0, EdgeForm::Comparative}, {3, 1, 22, 2, 1, EdgeForm::Joint}};
  auto r = la_oracle(es, {{0, 10}}, 2);
  ASSERT_TRUE(r.unique());
  EXPECT_EQ(r.value, 5);
  // 3 x1 - x0 = 1 with x0 = 10 gives the non-integer 11/3.
  r = la_oracle({{3, 1, 1, 1, 0, EdgeForm::Comparative}}, {{0, 10}}, 1);
  ASSERT_TRUE(r.unique());
  EXPECT_EQ(r.value, Rational(11, 3));
  EXPECT_EQ(la_oracle({es[1]}, {{0, 10}}, 2).kind, OracleResult::Kind::Underdetermined);
  const std::vector<LinearEdge> clash = {{1, 1, 1, 1, 0, EdgeForm::Comparative}, {1, 1, 2, 1, 0, EdgeForm::Comparative}};
  EXPECT_EQ(la_oracle(clash, {{0, 10}}, 1).kind, OracleResult::Kind::Inconsistent);
}

TEST(Oracle, AgreesWithSubstitutionOnSampledGraphs) {
  const LaConfig cfg = LaConfig::standard();
  Rng rng(2);
  for (int t = 0; t < 300; ++t) {
    const int k = static_cast<int>(rng.uniform_int(1, 14));
    const LaGraph g = sample_la_graph(cfg, k, rng);
    const auto r = la_oracle(g);
    ASSERT_TRUE(r.unique());
    ASSERT_EQ(r.value, g.values[g.query]);
    ASSERT_EQ(propagate(g), g.values[g.query]);
    for (const auto& e : g.edges) ASSERT_EQ(edge_constant(e.a, e.b, e.form, g.values[e.m], g.values[e.n]), e.c);
  }
}

TEST(Oracle, EveryCutDepthIsUnderdetermined) {
  const LaConfig cfg = LaConfig::standard();
  Rng rng(3);
  for (int t = 0; t < 40; ++t) {
    const int k = static_cast<int>(rng.uniform_int(2, 14));
    const LaGraph g = sample_la_graph(cfg, k, rng);
    for (int d = 1; d < k; ++d) {
      const LaGraph cut = cut_edge(g, d);
      ASSERT_EQ(la_oracle(cut).kind, OracleResult::Kind::Underdetermined) << "k=" << k << " d=" << d;
      ASSERT_EQ(*cut.removed, g.edges[g.path[static_cast<std::size_t>(k - d)]]);
      ASSERT_EQ(graph::label(cut.dah()), 0);
    }
  }
}

TEST(Oracle, CutDepthOutOfRange) {
  Rng rng(4);
  const LaGraph g = sample_la_graph(LaConfig::standard(), 5, rng);
  EXPECT_THROW(cut_edge(g, 0), InputError);
  EXPECT_THROW(cut_edge(g, 5), InputError);
}

TEST(Sample, Structure) {
  Rng rng(5);
  const LaGraph g = sample_la_graph(LaConfig::standard(), 7, rng);
  EXPECT_EQ(g.node_count, 15u);
  EXPECT_EQ(g.edges.size(), 14u);
  EXPECT_EQ(g.path.size(), 7u);
  for (auto v : g.values) EXPECT_TRUE(v >= 10 && v <= 50);
  for (const auto& e : g.edges) {
    EXPECT_TRUE(e.a >= 1 && e.a <= 10 && e.b >= 1 && e.b <= 10);
    if (e.form == EdgeForm::Comparative) {
      EXPECT_NE(e.c, 0);
    }
    EXPECT_NE(e.n, g.query);
  }
  EXPECT_EQ(graph::label(g.dah()), 1);
  EXPECT_THROW(sample_la_graph(LaConfig::standard(), 15, rng), InputError);
}

TEST(Instance, TrajectoryGradesAndMentionsEveryVariable) {
  const LaConfig cfg = LaConfig::standard();
  for (std::uint64_t s = 0; s < 30; ++s) {
    for (std::optional<int> d : {std::optional<int>{}, std::optional<int>{2}}) {
      const Record r = to_record(generate_la_instance(cfg, 6, d, s));
      ASSERT_TRUE(eval::grade(DatasetKind::GraphLA, r.answer, eval::extract_answer(r.trajectory)));
      ASSERT_EQ(r.answerable, !d.has_value());
      if (d) {
        EXPECT_EQ(r.answer, "Unknown");
      }
    }
  }
}

TEST(Instance, FrozenSample) {
  const Record r = to_record(generate_la_instance(LaConfig::standard(), 5, std::nullopt, 42));
  EXPECT_EQ(r.meta["k"], 5);
  EXPECT_EQ(r.meta["V"], 15);
  EXPECT_EQ(r.answer, "16");
  EXPECT_EQ(r.question.rfind("A bowl of ramen at The Rustic Fork costs 32 dollars.", 0), 0u);
}

TEST(Instance, DeterministicAndSeedSensitive) {
  const LaConfig cfg = LaConfig::standard();
  const auto a = to_json(to_record(generate_la_instance(cfg, 9, 3, 7)));
  const auto b = to_json(to_record(generate_la_instance(cfg, 9, 3, 7)));
  const auto c = to_json(to_record(generate_la_instance(cfg, 9, 3, 8)));
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_NE(a.dump(), c.dump());
}

TEST(Dataset, BalancedSplitsAndUniqueIds) {
  LaConfig cfg = small_config();
  cfg.split_sizes = SplitSizes{40, 8, 8};
  const Splits s = build_la_dataset(cfg);
  std::set<std::string> ids;
  for (const auto* split : {&s.train, &s.val, &s.test}) {
    std::size_t ans = 0;
    for (const auto& r : *split) {
      ans += r.answerable;
      ids.insert(r.id);
    }
    EXPECT_EQ(2 * ans, split->size());
  }
  EXPECT_EQ(s.train.size(), 40u);
  EXPECT_EQ(s.val.size(), 8u);
  EXPECT_EQ(ids.size(), 56u);
  EXPECT_EQ(s.train.front().id.substr(0, 14), "graphla-train-");
}

TEST(Dataset, DefaultRatioSplit) {
  const Splits s = build_la_dataset(small_config());
  // 4 depths, cut depths 1..k-1, 4 samples per unit, 9:1:1 per class.
  const std::size_t total = s.train.size() + s.val.size() + s.test.size();
  EXPECT_EQ(total % 2, 0u);
  EXPECT_EQ(s.val.size(), s.test.size());
}

TEST(Dataset, EasyConfigGenerates) {
  LaConfig cfg = LaConfig::easy();
  cfg.samples_per_config = 2;
  const Splits s = build_la_dataset(cfg);
  for (const auto& r : s.train) {
    EXPECT_EQ(r.meta["V"], 5);
    for (auto v : r.meta["values"]) EXPECT_TRUE(v >= 5 && v <= 20);
  }
}

TEST(Dataset, InvalidConfigs) {
  LaConfig c = LaConfig::standard();
  c.depth = {5, 15};
  EXPECT_THROW(c.validate(), InputError);
  c = LaConfig::standard();
  c.split_sizes = SplitSizes{5347, 594, 594};
  EXPECT_THROW(c.validate(), InputError);
  c = LaConfig::standard();
  c.split_sizes = SplitSizes{100000, 10, 10};
  EXPECT_THROW(build_la_dataset(c), InputError);
}

TEST(Sweep, CellsPerVarCount) {
  LaConfig base;
  base.samples_per_config = 3;
  const auto cells = build_la_sweep(base, {5});
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].k, 1);
  EXPECT_EQ(cells[0].records.size(), 3u);  // k = 1 admits no cut
  for (const auto& r : cells[0].records) EXPECT_TRUE(r.answerable);
  EXPECT_EQ(cells[3].records.size(), 6u);
  EXPECT_EQ(cells[3].records[0].id.substr(0, 14), "graphla-V5-k4-");
}

TEST(Json, EdgeRoundTrip) {
  const LinearEdge e{3, 7, -12, 4, 2, EdgeForm::Joint};
  EXPECT_EQ(edge_from_json(edge_to_json(e)), e);
}
