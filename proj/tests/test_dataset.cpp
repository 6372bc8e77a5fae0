#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "anchorlab/config.hpp"
#include "anchorlab/dataset.hpp"
#include "anchorlab/rng.hpp"

using namespace anchorlab;

namespace {

Record sample_record(std::size_t i, bool answerable) {
  Record r;
  r.id = "x-" + std::to_string(i);
  r.dataset = DatasetKind::GraphLA;
  r.question = "Q " + std::to_string(i) + " \"quoted\"\nnext line";
  r.answer = answerable ? std::to_string(i) : "Unknown";
  r.answerable = answerable;
  r.trajectory = "<answer>" + r.answer + "</answer>";
  r.meta["k"] = static_cast<int>(i % 7);
  r.meta["nested"] = {{"a", 1}, {"b", {1, 2, 3}}};
  return r;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("anchorlab_test_" + name);
}

}  // namespace

TEST(Rng, SameSeedSameStream) {
  Rng a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(Rng(123).next(), c.next());
}

TEST(Rng, UniformIntStaysInRange) {
  Rng r(1);
  std::array<int, 5> hits{};
  for (int i = 0; i < 5000; ++i) {
    const auto x = r.uniform_int(3, 7);
    ASSERT_TRUE(x >= 3 && x <= 7);
    ++hits[static_cast<std::size_t>(x - 3)];
  }
  for (int h : hits) EXPECT_GT(h, 850);
}

TEST(Rng, DerivedSeedsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t i = 0; i < 256; ++i) seen.insert(derive_seed(7, s, i));
  EXPECT_EQ(seen.size(), 1024u);
  EXPECT_EQ(derive_seed(7, 1, 2), derive_seed(7, 1, 2));
}

TEST(Splits, NineOneOne) {
  EXPECT_EQ(ratio_split(3267), (SplitSizes{2673, 297, 297}));
  EXPECT_EQ(ratio_split(11), (SplitSizes{9, 1, 1}));
  EXPECT_EQ(ratio_split(0).total(), 0u);
}

TEST(Splits, DistributeIsEven) {
  EXPECT_EQ(distribute(10, 4), (std::vector<std::size_t>{3, 3, 2, 2}));
  EXPECT_TRUE(distribute(5, 0).empty());
}

TEST(Splits, AssembleDealsAndLabels) {
  std::vector<Record> ans, unans;
  for (std::size_t i = 0; i < 12; ++i) ans.push_back(sample_record(i, true));
  for (std::size_t i = 0; i < 12; ++i) unans.push_back(sample_record(100 + i, false));
  const SplitSizes sizes{8, 2, 2};
  const Splits s = assemble_splits(DatasetKind::GraphLA, ans, unans, sizes, sizes, 3);
  EXPECT_EQ(s.train.size(), 16u);
  EXPECT_EQ(s.val.size(), 4u);
  EXPECT_EQ(s.val[0].id, "graphla-val-000000");
  std::size_t a = 0;
  for (const auto& r : s.test) a += r.answerable;
  EXPECT_EQ(a, 2u);
  const Splits again = assemble_splits(DatasetKind::GraphLA, ans, unans, sizes, sizes, 3);
  EXPECT_EQ(to_json(again.train[5]).dump(), to_json(s.train[5]).dump());
  EXPECT_THROW(assemble_splits(DatasetKind::GraphLA, ans, unans, {9, 2, 2}, sizes, 3), InvariantError);
}

TEST(Parallel, KeepsIndexOrder) {
  const auto out = parallel_generate<std::size_t>(1000, [](std::size_t i) { return i * i; }, 4);
  for (std::size_t i = 0; i < out.size(); ++i) ASSERT_EQ(out[i], i * i);
}

TEST(Parallel, PropagatesExceptions) {
  auto boom = [](std::size_t i) -> int {
    if (i == 500) throw GenerationError("bad", 500);
    return 0;
  };
  EXPECT_THROW(parallel_generate<int>(1000, boom, 4), GenerationError);
}

TEST(Records, JsonlRoundTrip) {
  std::vector<Record> rs;
  for (std::size_t i = 0; i < 20; ++i) rs.push_back(sample_record(i, i % 2 == 0));
  const auto path = temp_file("records.jsonl");
  write_records(path.string(), rs);
  const auto back = read_records(path.string());
  ASSERT_EQ(back.size(), rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_EQ(to_json(back[i]).dump(), to_json(rs[i]).dump());
  std::filesystem::remove(path);
}

TEST(Records, LabelField) {
  const auto j = to_json(sample_record(1, false));
  EXPECT_EQ(j["label"], "unanswerable");
  EXPECT_EQ(j["dataset"], "graphla");
}

TEST(Records, MalformedLineReportsPosition) {
  const auto path = temp_file("bad.jsonl");
  {
    std::ofstream out(path);
    out << to_json(sample_record(1, true)).dump() << "\n{not json\n";
  }
  try {
    read_records(path.string());
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(Records, UnknownDatasetKind) { EXPECT_THROW(parse_dataset_kind("graphxx"), InputError); }

TEST(Config, GenRoundTrip) {
  const auto j = config::Json::parse(R"({"dataset":"graphla","seed":9,"var_count":10,"depth":[2,6],
                                         "split_sizes":{"train":20,"val":4,"test":4}})");
  const auto c = config::gen_from_json(j);
  EXPECT_EQ(c.la.var_count, 10);
  EXPECT_EQ(c.la.depth.hi, 6);
  EXPECT_EQ(c.seed(), 9u);
  const auto again = config::gen_from_json(config::to_json(c));
  EXPECT_EQ(config::to_json(again).dump(), config::to_json(c).dump());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  using config::Json;
  EXPECT_THROW(config::gen_from_json(Json::parse(R"({"dataset":"graphla","colour":1})")), InputError);
  EXPECT_THROW(config::gen_from_json(Json::parse(R"({"dataset":"graphla","depth":[3]})")), InputError);
  EXPECT_THROW(config::gen_from_json(Json::parse(R"({"dataset":"graphla","var_count":"many"})")), InputError);
  EXPECT_THROW(config::gen_from_json(Json::parse(R"({"dataset":"graphli","depth":[1,3]})")), InputError);
  EXPECT_THROW(config::gen_from_json(Json::parse(R"({"var_count":5})")), InputError);
  EXPECT_THROW(config::rl_from_json(Json::parse(R"({"clip_ratio":0})")), InputError);
  EXPECT_THROW(config::rl_from_json(Json::parse(R"({"sampling":{"top_p":1.5}})")), InputError);
  EXPECT_THROW(config::micro_from_json(Json::parse(R"({"prompts":3})")), InputError);
}

TEST(Config, RlAndMicroRoundTrip) {
  rl::RlConfig r;
  r.learning_rate = 3.5;
  r.penalty_form = rl::LengthPenalty::Symmetric;
  const auto back = config::rl_from_json(config::to_json(r));
  EXPECT_EQ(config::to_json(back).dump(), config::to_json(r).dump());
  const auto m = config::micro_from_json(config::to_json(micro::MicroConfig::easy()));
  EXPECT_EQ(m.name, "easy");
  EXPECT_EQ(m.nodes.hi, 4);
}

TEST(Config, ShippedFilesLoad) {
  const std::filesystem::path dir = ANCHORLAB_CONFIGS;
  for (const char* f : {"graphla_default.json", "graphla_easy.json", "graphla_sweep.json", "graphli_default.json",
                        "graphli_easy.json", "graphli_sweep.json"})
    EXPECT_NO_THROW(config::gen_from_json(config::load_json((dir / f).string()))) << f;
  EXPECT_NO_THROW(config::rl_from_json(config::load_json((dir / "rl_default.json").string())));
  for (const char* f : {"micro_hard.json", "micro_easy.json"})
    EXPECT_NO_THROW(config::micro_from_json(config::load_json((dir / f).string()))) << f;
  const auto la = config::gen_from_json(config::load_json((dir / "graphla_default.json").string()));
  EXPECT_EQ(*la.la.split_sizes, (SplitSizes{5346, 594, 594}));
  const auto li = config::gen_from_json(config::load_json((dir / "graphli_default.json").string()));
  EXPECT_EQ(*li.li.split_sizes, (SplitSizes{5316, 300, 300}));
}
