// anchorlab command line: gen, verify, train, gradcheck, eval.
//
// Exit codes: 0 success, 1 validation error, 2 oracle or check failure,
// 3 training divergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "anchorlab/config.hpp"
#include "anchorlab/eval.hpp"
#include "anchorlab/gradcheck.hpp"
#include "anchorlab/verify.hpp"

namespace fs = std::filesystem;
using namespace anchorlab;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0, kValidation = 1, kCheckFailed = 2, kDiverged = 3;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t seed, Json resolved, Json extra = {}) {
  Json m;
  m["format"] = kFormatVersion;
  m["command"] = command;
  m["seed"] = seed;
  m["config"] = std::move(resolved);
  if (!extra.is_null()) m["outputs"] = std::move(extra);
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

// --- gen --------------------------------------------------------------------

struct GenArgs {
  std::string dataset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  config::GenConfig cfg;
  if (!a.config.empty()) {
    cfg = config::gen_from_json(config::load_json(a.config));
    if (!a.dataset.empty() && parse_dataset_kind(a.dataset) != cfg.dataset)
      throw InputError("--dataset " + a.dataset + " conflicts with config dataset " + to_string(cfg.dataset));
  } else {
    if (a.dataset.empty()) throw InputError("gen needs --dataset or --config");
    cfg.dataset = parse_dataset_kind(a.dataset);
    cfg.la = graphla::LaConfig::standard();
    cfg.li = graphli::LiConfig::standard();
  }
  if (a.seed) cfg.set_seed(*a.seed);
  fs::create_directories(a.out);
  const fs::path out(a.out);
  Json outputs = Json::object();

  try {
    if (cfg.is_sweep()) {
      auto emit = [&](const std::string& name, const std::vector<Record>& records) {
        write_records((out / name).string(), records);
        outputs[name] = records.size();
      };
      if (cfg.dataset == DatasetKind::GraphLA) {
        for (const auto& cell : graphla::build_la_sweep(cfg.la, cfg.sweep_var_counts))
          emit("V" + std::to_string(cell.var_count) + "_k" + std::to_string(cell.k) + ".jsonl", cell.records);
      } else {
        for (const auto& cell : graphli::build_li_sweep(cfg.li, cfg.sweep_depths, cfg.sweep_irrelevant))
          emit("k" + std::to_string(cell.k) + "_e" + std::to_string(cell.irrelevant_edges) + ".jsonl", cell.records);
      }
    } else {
      const Splits s =
          cfg.dataset == DatasetKind::GraphLA ? graphla::build_la_dataset(cfg.la) : graphli::build_li_dataset(cfg.li);
      for (const auto& [name, split] : {std::pair{"train", &s.train}, {"val", &s.val}, {"test", &s.test}}) {
        write_records((out / (std::string(name) + ".jsonl")).string(), *split);
        std::size_t ans = 0;
        for (const auto& r : *split) ans += r.answerable;
        outputs[std::string(name) + ".jsonl"] = {{"records", split->size()}, {"answerable", ans},
                                                 {"unanswerable", split->size() - ans}};
        std::printf("%-5s %6zu records  %zu answerable / %zu unanswerable\n", name, split->size(), ans,
                    split->size() - ans);
      }
    }
  } catch (const GenerationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kCheckFailed;
  }
  write_manifest(out, "gen", cfg.seed(), config::to_json(cfg), outputs);
  if (cfg.is_sweep()) std::printf("wrote %zu cell files to %s\n", outputs.size(), a.out.c_str());
  return kOk;
}

// --- verify -----------------------------------------------------------------

int cmd_verify(const std::vector<std::string>& files, std::size_t max_listed) {
  int status = kOk;
  for (const auto& f : files) {
    const auto records = read_records(f);
    const auto rep = verify::verify_records(records);
    const double balance = rep.records ? static_cast<double>(rep.answerable) / static_cast<double>(rep.records) : 0.0;
    std::printf("%s\n", f.c_str());
    std::printf("  records            %zu\n", rep.records);
    std::printf("  oracle agreement   %.6f (%zu/%zu)\n", rep.agreement(), rep.agree, rep.records);
    std::printf("  class balance      %zu answerable / %zu unanswerable (%.4f answerable)\n", rep.answerable,
                rep.unanswerable, balance);
    std::printf("  trajectory grade   %.6f (%zu/%zu)\n", rep.trajectory_rate(), rep.trajectory_ok, rep.records);
    if (!rep.ok()) {
      status = kCheckFailed;
      std::printf("  offending records  %zu\n", rep.findings.size());
      for (std::size_t i = 0; i < rep.findings.size() && i < max_listed; ++i)
        std::printf("    %s: %s\n", rep.findings[i].id.c_str(), rep.findings[i].problem.c_str());
      if (rep.findings.size() > max_listed) std::printf("    ... %zu more\n", rep.findings.size() - max_listed);
    }
  }
  return status;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string method;
  std::string env_config;
  std::string rl_config;
  std::uint64_t seed = 0;
  std::string out;
  std::string init;
  std::size_t steps = 200;
};

int cmd_train(const TrainArgs& a) {
  const rl::Method method = rl::parse_method(a.method);
  const micro::MicroConfig env_cfg =
      a.env_config.empty() ? micro::MicroConfig::hard() : config::micro_from_json(config::load_json(a.env_config));
  const rl::RlConfig rl_cfg = a.rl_config.empty() ? rl::RlConfig{} : config::rl_from_json(config::load_json(a.rl_config));
  const rl::Env env = micro::build_micro_env(env_cfg);
  policy::PolicyParams theta = a.init.empty() ? rl::initial_policy(env) : policy::load_checkpoint(a.init);

  fs::create_directories(a.out);
  const fs::path out(a.out);
  Json resolved{{"method", rl::to_string(method)},
                {"steps", a.steps},
                {"init", a.init.empty() ? Json(nullptr) : Json(a.init)},
                {"env", config::to_json(env_cfg)},
                {"rl", config::to_json(rl_cfg)}};
  write_manifest(out, "train", a.seed, resolved);

  std::ofstream metrics(out / "metrics.tsv", std::ios::binary);
  if (!metrics) throw InputError("cannot write metrics.tsv");
  metrics << rl::metrics_header() << "\n";
  rl::TrainOptions opt;
  opt.steps = a.steps;
  opt.seed = a.seed;
  opt.on_step = [&](const rl::StepMetrics& m) { metrics << rl::format_metrics(m) << "\n" << std::flush; };

  const auto before = rl::evaluate_policy(theta, env, rl_cfg.sampling.max_len);
  int status = kOk;
  try {
    rl::train(env, method, rl_cfg, theta, opt);
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "error: %s; last finite checkpoint kept\n", e.what());
    status = kDiverged;
  }
  policy::save_checkpoint(theta, (out / "checkpoint.txt").string());
  const auto after = rl::evaluate_policy(theta, env, rl_cfg.sampling.max_len);
  Json summary{{"method", rl::to_string(method)},
               {"env", env.name},
               {"steps", a.steps},
               {"diverged", status == kDiverged},
               {"initial", eval::to_json(before)},
               {"final", eval::to_json(after)}};
  write_text(out / "eval.json", summary.dump(2) + "\n");
  std::printf("%s on %s: overall %s -> %s (ans %s, unans %s)\n", rl::to_string(method).c_str(), env.name.c_str(),
              eval::format_accuracy(before.acc_overall).c_str(), eval::format_accuracy(after.acc_overall).c_str(),
              eval::format_accuracy(after.acc_ans).c_str(), eval::format_accuracy(after.acc_unans).c_str());
  return status;
}

// --- gradcheck --------------------------------------------------------------

int cmd_gradcheck(std::uint64_t seed, std::size_t trials) {
  if (trials < 1) throw InputError("--trials must be >= 1");
  const auto rep = gradcheck::run(seed, trials);
  std::printf("%-32s %12s %10s %7s %8s  %s\n", "check", "max_error", "tolerance", "trials", "skipped", "result");
  for (const auto& c : rep.checks)
    std::printf("%-32s %12.3e %10.1e %7zu %8zu  %s\n", c.name.c_str(), c.max_error, c.tolerance, c.trials, c.skipped,
                c.passed() ? "ok" : "FAIL");
  return rep.passed() ? kOk : kCheckFailed;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string records;
  std::string completions;
  std::string baseline;
  std::string train;
  std::uint64_t seed = 0;
  bool strict_case = false;
  std::string out;
};

std::map<std::string, std::string> read_completions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = Json::parse(line);
      const auto id = j.at("id").get<std::string>();
      if (!out.emplace(id, j.at("completion").get<std::string>()).second)
        throw InputError(path + ":" + std::to_string(lineno) + ": duplicate id " + id);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

int cmd_eval(const EvalArgs& a) {
  const auto records = read_records(a.records);
  if (records.empty()) throw InputError(a.records + ": no records");
  const DatasetKind kind = records.front().dataset;
  std::vector<std::string> completions(records.size());

  if (!a.baseline.empty()) {
    if (!a.completions.empty()) throw InputError("give either a completions file or --baseline, not both");
    if (a.baseline == "major") {
      const auto train = read_records(a.train.empty() ? a.records : a.train);
      const std::string answer = eval::major_answer(train);
      for (auto& c : completions) c = eval::completion_for(answer);
    } else if (a.baseline == "random") {
      Rng rng(derive_seed(a.seed, 0xba5e));
      for (auto& c : completions) c = eval::completion_for(eval::random_answer(kind, rng));
    } else {
      throw InputError("--baseline must be major or random");
    }
  } else {
    if (a.completions.empty()) throw InputError("eval needs a completions file or --baseline");
    auto by_id = read_completions(a.completions);
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto it = by_id.find(records[i].id);
      if (it == by_id.end()) {
        missing.push_back(records[i].id);
      } else {
        completions[i] = std::move(it->second);
        by_id.erase(it);
      }
    }
    if (!missing.empty() || !by_id.empty()) {
      std::fprintf(stderr, "error: completion ids do not match record ids\n");
      for (const auto& id : missing) std::fprintf(stderr, "  missing completion: %s\n", id.c_str());
      for (const auto& [id, _] : by_id) std::fprintf(stderr, "  unknown id: %s\n", id.c_str());
      return kValidation;
    }
  }

  eval::GradeOptions go;
  go.strict_case = a.strict_case;
  std::vector<eval::EvalRecord> evals;
  // Breakdown keyed by (k, |V|) for GraphLA and (k, |E_irr|) for GraphLI.
  std::map<std::pair<long long, long long>, std::vector<eval::EvalRecord>> cells;
  const char* second = kind == DatasetKind::GraphLA ? "V" : "E_irr";
  for (std::size_t i = 0; i < records.size(); ++i) {
    evals.push_back(eval::evaluate(records[i], completions[i], go));
    const auto& m = records[i].meta;
    if (m.contains("k") && m.contains(second))
      cells[{m["k"].get<long long>(), m[second].get<long long>()}].push_back(evals.back());
  }
  const auto total = eval::metrics(evals);
  Json summary = eval::to_json(total);
  Json breakdown = Json::array();
  for (const auto& [key, rs] : cells) {
    Json row{{"k", key.first}, {second, key.second}};
    const Json cell = eval::to_json(eval::metrics(rs));
    for (const auto& [k, v] : cell.items()) row[k] = v;
    breakdown.push_back(std::move(row));
  }
  summary["breakdown"] = breakdown;

  std::printf("n %zu  overall %s  unans %s  ans %s  format_valid %.4f\n", total.n,
              eval::format_accuracy(total.acc_overall).c_str(), eval::format_accuracy(total.acc_unans).c_str(),
              eval::format_accuracy(total.acc_ans).c_str(), total.format_valid_rate);
  if (cells.size() > 1) {
    std::printf("\nk\t%s\tn\toverall\tunans\tans\n", second);
    for (const auto& [key, rs] : cells) {
      const auto m = eval::metrics(rs);
      std::printf("%lld\t%lld\t%zu\t%s\t%s\t%s\n", key.first, key.second, m.n,
                  eval::format_accuracy(m.acc_overall).c_str(), eval::format_accuracy(m.acc_unans).c_str(),
                  eval::format_accuracy(m.acc_ans).c_str());
    }
  }
  if (!a.out.empty()) write_text(a.out, summary.dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anchorlab: honest-reasoning datasets, oracles and policy-gradient experiments"};
  app.require_subcommand(1);

  GenArgs gen;
  std::uint64_t gen_seed = 0;
  auto* g = app.add_subcommand("gen", "generate a dataset (splits, or sweep cells)");
  g->add_option("--dataset", gen.dataset, "graphla or graphli")->check(CLI::IsMember({"graphla", "graphli"}));
  g->add_option("--config", gen.config, "dataset config (JSON)")->check(CLI::ExistingFile);
  auto* gen_seed_opt = g->add_option("--seed", gen_seed, "master seed (overrides config)");
  g->add_option("--out", gen.out, "output directory")->required();

  std::vector<std::string> verify_files;
  std::size_t max_listed = 50;
  auto* v = app.add_subcommand("verify", "re-run the oracles on persisted records");
  v->add_option("files", verify_files, "record files (JSONL)")->required()->check(CLI::ExistingFile);
  v->add_option("--max-listed", max_listed, "offending ids to print per file");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a tabular policy on the micro environment");
  t->add_option("--method", tr.method, "sft, grpo or anchor")->required()->check(CLI::IsMember({"sft", "grpo", "anchor"}));
  t->add_option("--env-config,--config", tr.env_config, "micro environment config (JSON)")->check(CLI::ExistingFile);
  t->add_option("--rl-config", tr.rl_config, "optimizer config (JSON)")->check(CLI::ExistingFile);
  t->add_option("--seed", tr.seed, "master seed");
  t->add_option("--out", tr.out, "output directory")->required();
  t->add_option("--init", tr.init, "warm-start checkpoint")->check(CLI::ExistingFile);
  t->add_option("--steps", tr.steps, "optimizer steps");

  std::uint64_t gc_seed = 0;
  std::size_t gc_trials = 100;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference and identity checks");
  gc->add_option("--seed", gc_seed, "master seed");
  gc->add_option("--trials", gc_trials, "random policies per check");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "grade completions against records");
  e->add_option("records", ev.records, "record file (JSONL)")->required()->check(CLI::ExistingFile);
  e->add_option("completions", ev.completions, "completions JSONL with {id, completion}")->check(CLI::ExistingFile);
  e->add_option("--baseline", ev.baseline, "major or random")->check(CLI::IsMember({"major", "random"}));
  e->add_option("--train", ev.train, "training records for the major baseline")->check(CLI::ExistingFile);
  e->add_option("--seed", ev.seed, "seed for the random baseline");
  e->add_flag("--strict-case", ev.strict_case, "case-sensitive answer matching");
  e->add_option("--out", ev.out, "write the summary JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kValidation;
  }

  try {
    if (*g) {
      if (gen_seed_opt->count()) gen.seed = gen_seed;
      return cmd_gen(gen);
    }
    if (*v) return cmd_verify(verify_files, max_listed);
    if (*t) return cmd_train(tr);
    if (*gc) return cmd_gradcheck(gc_seed, gc_trials);
    if (*e) return cmd_eval(ev);
  } catch (const InputError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kValidation;
  } catch (const CapacityError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kValidation;
  } catch (const InvariantError& err) {
    std::fprintf(stderr, "internal error: %s\n", err.what());
    return kCheckFailed;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kValidation;
  }
  return kOk;
}
