#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(ANCHORLAB_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const std::string& name) { return std::string(ANCHORLAB_CONFIGS) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Json> read_lines(const fs::path& p) {
  std::vector<Json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(Json::parse(line));
  return out;
}

void write_lines(const fs::path& p, const std::vector<Json>& rows) {
  std::ofstream out(p);
  for (const auto& j : rows) out << j.dump() << '\n';
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("anchorlab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path small_config(const std::string& base, std::size_t train, std::size_t val, std::size_t test) {
    auto j = Json::parse(slurp(config(base)));
    j["split_sizes"] = {{"train", train}, {"val", val}, {"test", test}};
    if (j["dataset"] == "graphli") j["configurations"] = 40;
    const auto p = dir_ / ("small_" + base);
    std::ofstream(p) << j.dump(2);
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenThenVerifyGraphLA) {
  const auto cfg = small_config("graphla_easy.json", 40, 8, 8);
  const auto out = dir_ / "la";
  auto r = run("gen --config " + cfg.string() + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("train     40 records  20 answerable / 20 unanswerable"), std::string::npos) << r.out;
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl", "manifest.json"}) EXPECT_TRUE(fs::exists(out / f));
  const auto manifest = Json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["format"], "anchorlab/1");
  r = run("verify " + (out / "train.jsonl").string() + " " + (out / "test.jsonl").string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("oracle agreement   1.000000"), std::string::npos) << r.out;
}

TEST_F(Cli, GenThenVerifyGraphLI) {
  const auto cfg = small_config("graphli_easy.json", 24, 6, 6);
  const auto out = dir_ / "li";
  auto r = run("gen --config " + cfg.string() + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  r = run("verify " + (out / "train.jsonl").string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("12 answerable / 12 unanswerable"), std::string::npos) << r.out;
}

TEST_F(Cli, VerifyFlagsOneCorruptedAnswer) {
  const auto cfg = small_config("graphla_easy.json", 20, 2, 2);
  const auto out = dir_ / "la";
  ASSERT_EQ(run("gen --config " + cfg.string() + " --out " + out.string()).code, 0);
  auto rows = read_lines(out / "train.jsonl");
  std::string victim;
  for (auto& j : rows) {
    if (j["label"] == "answerable") {
      j["answer"] = std::to_string(std::stoll(j["answer"].get<std::string>()) + 1);
      victim = j["id"];
      break;
    }
  }
  ASSERT_FALSE(victim.empty());
  write_lines(out / "train.jsonl", rows);
  const auto r = run("verify " + (out / "train.jsonl").string());
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("offending records  1\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("    " + victim + ": "), std::string::npos) << r.out;
}

TEST_F(Cli, VerifyFlagsAnswerableRecordLabelledUnknown) {
  const auto cfg = small_config("graphla_easy.json", 20, 2, 2);
  const auto out = dir_ / "la";
  ASSERT_EQ(run("gen --config " + cfg.string() + " --out " + out.string()).code, 0);
  auto rows = read_lines(out / "train.jsonl");
  std::string victim;
  for (auto& j : rows) {
    if (j["label"] != "unanswerable") continue;
    // Put the cut edge back and drop one edge that is off the query path.
    auto& meta = j["meta"];
    meta["edges"].push_back(meta["removed_edge"]);
    meta["removed_edge"] = nullptr;
    std::set<std::size_t> on_path;
    for (const auto& i : meta["path"]) on_path.insert(i.get<std::size_t>());
    for (std::size_t i = 0; i + 1 < meta["edges"].size(); ++i) {
      if (!on_path.contains(i)) {
        meta["edges"].erase(i);
        break;
      }
    }
    victim = j["id"];
    break;
  }
  ASSERT_FALSE(victim.empty());
  write_lines(out / "train.jsonl", rows);
  const auto r = run("verify " + (out / "train.jsonl").string());
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("    " + victim + ": label disagrees with oracle"), std::string::npos) << r.out;
}

TEST_F(Cli, VerifyFlagsFlippedGraphLIAnswer) {
  const auto cfg = small_config("graphli_easy.json", 12, 2, 2);
  const auto out = dir_ / "li";
  ASSERT_EQ(run("gen --config " + cfg.string() + " --out " + out.string()).code, 0);
  auto rows = read_lines(out / "train.jsonl");
  rows[3]["answer"] = rows[3]["answer"] == "Yes" ? "No" : "Yes";
  write_lines(out / "train.jsonl", rows);
  const auto r = run("verify " + (out / "train.jsonl").string());
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("offending records  1\n"), std::string::npos) << r.out;
}

TEST_F(Cli, GenIsByteIdentical) {
  const auto cfg = small_config("graphli_easy.json", 24, 6, 6);
  ASSERT_EQ(run("gen --config " + cfg.string() + " --seed 5 --out " + (dir_ / "a").string()).code, 0);
  ASSERT_EQ(run("gen --config " + cfg.string() + " --seed 5 --out " + (dir_ / "b").string()).code, 0);
  ASSERT_EQ(run("gen --config " + cfg.string() + " --seed 6 --out " + (dir_ / "c").string()).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "train.jsonl"), slurp(dir_ / "b" / "train.jsonl"));
  EXPECT_NE(slurp(dir_ / "a" / "train.jsonl"), slurp(dir_ / "c" / "train.jsonl"));
}

TEST_F(Cli, EvalGroundTruthAndBaselines) {
  const auto cfg = small_config("graphla_easy.json", 40, 8, 8);
  const auto out = dir_ / "la";
  ASSERT_EQ(run("gen --config " + cfg.string() + " --out " + out.string()).code, 0);
  std::vector<Json> completions;
  for (const auto& j : read_lines(out / "test.jsonl"))
    completions.push_back({{"id", j["id"]}, {"completion", j["trajectory"]}});
  write_lines(dir_ / "gt.jsonl", completions);
  auto r = run("eval " + (out / "test.jsonl").string() + " " + (dir_ / "gt.jsonl").string() + " --out " +
               (dir_ / "summary.json").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto summary = Json::parse(slurp(dir_ / "summary.json"));
  EXPECT_EQ(summary["acc_overall"], 1.0);
  r = run("eval " + (out / "test.jsonl").string() + " --baseline major --train " + (out / "train.jsonl").string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("overall 0.500  unans 1.000  ans 0.000"), std::string::npos) << r.out;
}

TEST_F(Cli, EvalRejectsIdMismatch) {
  const auto cfg = small_config("graphla_easy.json", 20, 2, 2);
  const auto out = dir_ / "la";
  ASSERT_EQ(run("gen --config " + cfg.string() + " --out " + out.string()).code, 0);
  const auto recs = read_lines(out / "test.jsonl");
  write_lines(dir_ / "c.jsonl", {{{"id", recs[0]["id"]}, {"completion", ""}}, {{"id", "nope"}, {"completion", ""}}});
  const auto r = run("eval " + (out / "test.jsonl").string() + " " + (dir_ / "c.jsonl").string());
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("missing completion: " + recs[1]["id"].get<std::string>()), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("unknown id: nope"), std::string::npos) << r.out;
}

TEST_F(Cli, BadConfigsExitOne) {
  const auto p = dir_ / "bad.json";
  std::ofstream(p) << R"({"dataset":"graphla","colour":"red"})";
  auto r = run("gen --config " + p.string() + " --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("unknown key 'colour'"), std::string::npos) << r.out;
  std::ofstream(p) << R"({"dataset":"graphla","var_count":5,"depth":[1,9]})";
  EXPECT_EQ(run("gen --config " + p.string() + " --out " + (dir_ / "o").string()).code, 1);
  EXPECT_EQ(run("train --method ppo --out " + (dir_ / "t").string()).code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST_F(Cli, TrainWritesArtifactsDeterministically) {
  for (const char* name : {"a", "b"}) {
    const auto r = run("train --method anchor --config " + config("micro_easy.json") + " --seed 2 --steps 5 --out " +
                       (dir_ / name).string());
    ASSERT_EQ(r.code, 0) << r.out;
  }
  for (const char* f : {"metrics.tsv", "checkpoint.txt", "eval.json", "manifest.json"}) {
    ASSERT_TRUE(fs::exists(dir_ / "a" / f)) << f;
    if (std::string(f) != "manifest.json") {
      EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    }
  }
  std::ifstream metrics(dir_ / "a" / "metrics.tsv");
  std::size_t lines = 0;
  for (std::string line; std::getline(metrics, line);) ++lines;
  EXPECT_EQ(lines, 6u);
  const auto r = run("train --method sft --config " + config("micro_easy.json") + " --steps 3 --init " +
                     (dir_ / "a" / "checkpoint.txt").string() + " --out " + (dir_ / "c").string());
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST_F(Cli, TrainDivergenceExitsThree) {
  const auto p = dir_ / "rl.json";
  std::ofstream(p) << R"({"learning_rate":1e308})";
  const auto r = run("train --method anchor --config " + config("micro_easy.json") + " --rl-config " + p.string() +
                     " --steps 30 --out " + (dir_ / "t").string());
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_NE(r.out.find("non-finite parameter at step 0"), std::string::npos) << r.out;
  const auto ckpt = slurp(dir_ / "t" / "checkpoint.txt");
  EXPECT_EQ(ckpt.find("inf"), std::string::npos);
  EXPECT_EQ(ckpt.find("nan"), std::string::npos);
}

TEST_F(Cli, GradcheckPasses) {
  const auto r = run("gradcheck --trials 20");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("zero_variance_collapse"), std::string::npos);
}
