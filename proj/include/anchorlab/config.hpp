#pragma once

// JSON (de)serialization of run configurations. Loading is strict: unknown
// keys and ill-typed values raise InputError.

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "anchorlab/dataset.hpp"
#include "anchorlab/graphla.hpp"
#include "anchorlab/graphli.hpp"
#include "anchorlab/micro_env.hpp"
#include "anchorlab/rl.hpp"

namespace anchorlab::config {

using Json = nlohmann::ordered_json;

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

namespace detail {

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (!j.is_object()) throw InputError(what + ": expected a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (!allowed.contains(k)) throw InputError(what + ": unknown key '" + k + "'");
  }
}

template <typename T>
void read(const Json& j, const char* key, T& into, const std::string& what) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(what + ": bad value for '" + key + "'");
  }
}

inline void read_range(const Json& j, const char* key, IntRange& into, const std::string& what) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    throw InputError(what + ": '" + key + "' must be [lo, hi]");
  into = {v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
}

inline Json range_json(const IntRange& r) { return Json::array({r.lo, r.hi}); }

inline std::optional<SplitSizes> read_splits(const Json& j, const std::string& what) {
  if (!j.contains("split_sizes") || j.at("split_sizes").is_null()) return std::nullopt;
  const auto& s = j.at("split_sizes");
  check_keys(s, {"train", "val", "test"}, what + ".split_sizes");
  SplitSizes out;
  read(s, "train", out.train, what);
  read(s, "val", out.val, what);
  read(s, "test", out.test, what);
  return out;
}

inline Json splits_json(const std::optional<SplitSizes>& s) {
  if (!s) return nullptr;
  return Json{{"train", s->train}, {"val", s->val}, {"test", s->test}};
}

}  // namespace detail

// --- dataset generation -----------------------------------------------------

struct GenConfig {
  DatasetKind dataset = DatasetKind::GraphLA;
  graphla::LaConfig la;
  graphli::LiConfig li;
  // Sweep grids; when set, gen writes one file per cell instead of splits.
  std::vector<int> sweep_var_counts;
  std::vector<int> sweep_depths;
  std::vector<int> sweep_irrelevant;

  bool is_sweep() const {
    return dataset == DatasetKind::GraphLA ? !sweep_var_counts.empty() : !sweep_depths.empty();
  }
  std::uint64_t seed() const { return dataset == DatasetKind::GraphLA ? la.seed : li.seed; }
  void set_seed(std::uint64_t s) { la.seed = li.seed = s; }
};

inline GenConfig gen_from_json(const Json& j) {
  const std::string what = "gen config";
  if (!j.is_object() || !j.contains("dataset")) throw InputError(what + ": missing 'dataset'");
  GenConfig c;
  std::string kind;
  detail::read(j, "dataset", kind, what);
  c.dataset = parse_dataset_kind(kind);
  if (c.dataset == DatasetKind::GraphLA) {
    detail::check_keys(j, {"dataset", "seed", "var_count", "depth", "cut_depth", "coeff", "value",
                           "samples_per_config", "joint_probability", "restaurants_per_instance", "split_sizes",
                           "sweep"},
                       what);
    auto& la = c.la;
    detail::read(j, "seed", la.seed, what);
    detail::read(j, "var_count", la.var_count, what);
    detail::read_range(j, "depth", la.depth, what);
    detail::read_range(j, "cut_depth", la.cut_depth, what);
    detail::read_range(j, "coeff", la.coeff, what);
    detail::read_range(j, "value", la.value, what);
    detail::read(j, "samples_per_config", la.samples_per_config, what);
    detail::read(j, "joint_probability", la.joint_probability, what);
    detail::read(j, "restaurants_per_instance", la.restaurants_per_instance, what);
    la.split_sizes = detail::read_splits(j, what);
    if (j.contains("sweep")) {
      detail::check_keys(j.at("sweep"), {"var_counts"}, what + ".sweep");
      detail::read(j.at("sweep"), "var_counts", c.sweep_var_counts, what);
      for (int v : c.sweep_var_counts)
        if (v < 2) throw InputError(what + ": sweep var_counts must be >= 2");
    }
    if (!c.is_sweep()) la.validate();
  } else {
    detail::check_keys(j, {"dataset", "seed", "depth", "irrelevant_edges", "samples_per_config", "configurations",
                           "carry_probability", "max_formula_size", "split_sizes", "events", "sweep"},
                       what);
    auto& li = c.li;
    detail::read(j, "seed", li.seed, what);
    detail::read_range(j, "depth", li.depth, what);
    detail::read(j, "irrelevant_edges", li.irrelevant_edges, what);
    detail::read(j, "samples_per_config", li.samples_per_config, what);
    detail::read(j, "configurations", li.configurations, what);
    detail::read(j, "carry_probability", li.carry_probability, what);
    detail::read(j, "max_formula_size", li.max_formula_size, what);
    li.split_sizes = detail::read_splits(j, what);
    if (j.contains("events")) {
      li.event_vocab.clear();
      for (const auto& e : j.at("events")) {
        detail::check_keys(e, {"person", "activity"}, what + ".events");
        graphli::Event ev;
        detail::read(e, "person", ev.person, what);
        detail::read(e, "activity", ev.activity, what);
        li.event_vocab.push_back(std::move(ev));
      }
    }
    if (j.contains("sweep")) {
      detail::check_keys(j.at("sweep"), {"depths", "irrelevant_edges"}, what + ".sweep");
      detail::read(j.at("sweep"), "depths", c.sweep_depths, what);
      detail::read(j.at("sweep"), "irrelevant_edges", c.sweep_irrelevant, what);
      if (c.sweep_depths.empty() || c.sweep_irrelevant.empty())
        throw InputError(what + ": sweep needs both depths and irrelevant_edges");
    }
    li.validate();
  }
  return c;
}

inline Json to_json(const GenConfig& c) {
  Json j;
  j["dataset"] = to_string(c.dataset);
  if (c.dataset == DatasetKind::GraphLA) {
    const auto& la = c.la;
    j["seed"] = la.seed;
    j["var_count"] = la.var_count;
    j["depth"] = detail::range_json(la.depth);
    j["cut_depth"] = detail::range_json(la.cut_depth);
    j["coeff"] = detail::range_json(la.coeff);
    j["value"] = detail::range_json(la.value);
    j["samples_per_config"] = la.samples_per_config;
    j["joint_probability"] = la.joint_probability;
    j["restaurants_per_instance"] = la.restaurants_per_instance;
    j["split_sizes"] = detail::splits_json(la.split_sizes);
    if (c.is_sweep()) j["sweep"] = {{"var_counts", c.sweep_var_counts}};
  } else {
    const auto& li = c.li;
    j["seed"] = li.seed;
    j["depth"] = detail::range_json(li.depth);
    j["irrelevant_edges"] = li.irrelevant_edges;
    j["samples_per_config"] = li.samples_per_config;
    j["configurations"] = li.configurations;
    j["carry_probability"] = li.carry_probability;
    j["max_formula_size"] = li.max_formula_size;
    j["split_sizes"] = detail::splits_json(li.split_sizes);
    Json ev = Json::array();
    for (const auto& e : li.event_vocab) ev.push_back({{"person", e.person}, {"activity", e.activity}});
    j["events"] = std::move(ev);
    if (c.is_sweep()) j["sweep"] = {{"depths", c.sweep_depths}, {"irrelevant_edges", c.sweep_irrelevant}};
  }
  return j;
}

// --- training ---------------------------------------------------------------

inline rl::RlConfig rl_from_json(const Json& j) {
  const std::string what = "rl config";
  detail::check_keys(j, {"group_size", "clip_ratio", "kl_coef", "length_penalty", "target_length", "penalty_form",
                         "learning_rate", "inner_updates", "batch_prompts", "sampling"},
                     what);
  rl::RlConfig c;
  detail::read(j, "group_size", c.group_size, what);
  detail::read(j, "clip_ratio", c.clip_ratio, what);
  detail::read(j, "kl_coef", c.kl_coef, what);
  detail::read(j, "length_penalty", c.length_penalty, what);
  detail::read(j, "target_length", c.target_length, what);
  std::string form = "overage";
  detail::read(j, "penalty_form", form, what);
  if (form == "overage") {
    c.penalty_form = rl::LengthPenalty::Overage;
  } else if (form == "symmetric") {
    c.penalty_form = rl::LengthPenalty::Symmetric;
  } else {
    throw InputError(what + ": penalty_form must be overage or symmetric");
  }
  detail::read(j, "learning_rate", c.learning_rate, what);
  detail::read(j, "inner_updates", c.inner_updates, what);
  detail::read(j, "batch_prompts", c.batch_prompts, what);
  if (j.contains("sampling")) {
    const auto& s = j.at("sampling");
    detail::check_keys(s, {"temperature", "top_k", "top_p", "max_len", "greedy"}, what + ".sampling");
    detail::read(s, "temperature", c.sampling.temperature, what);
    detail::read(s, "top_k", c.sampling.top_k, what);
    detail::read(s, "top_p", c.sampling.top_p, what);
    detail::read(s, "max_len", c.sampling.max_len, what);
    detail::read(s, "greedy", c.sampling.greedy, what);
    c.sampling.validate(0);
  }
  c.validate();
  return c;
}

inline Json to_json(const rl::RlConfig& c) {
  return Json{{"group_size", c.group_size},
              {"clip_ratio", c.clip_ratio},
              {"kl_coef", c.kl_coef},
              {"length_penalty", c.length_penalty},
              {"target_length", c.target_length},
              {"penalty_form", c.penalty_form == rl::LengthPenalty::Overage ? "overage" : "symmetric"},
              {"learning_rate", c.learning_rate},
              {"inner_updates", c.inner_updates},
              {"batch_prompts", c.batch_prompts},
              {"sampling",
               {{"temperature", c.sampling.temperature},
                {"top_k", c.sampling.top_k},
                {"top_p", c.sampling.top_p},
                {"max_len", c.sampling.max_len},
                {"greedy", c.sampling.greedy}}}};
}

inline micro::MicroConfig micro_from_json(const Json& j) {
  const std::string what = "env config";
  detail::check_keys(j, {"name", "prompts", "nodes", "max_edge_tokens", "context_order", "seed"}, what);
  micro::MicroConfig c;
  detail::read(j, "name", c.name, what);
  detail::read(j, "prompts", c.prompts, what);
  detail::read_range(j, "nodes", c.nodes, what);
  detail::read(j, "max_edge_tokens", c.max_edge_tokens, what);
  detail::read(j, "context_order", c.context_order, what);
  detail::read(j, "seed", c.seed, what);
  c.validate();
  return c;
}

inline Json to_json(const micro::MicroConfig& c) {
  return Json{{"name", c.name},
              {"prompts", c.prompts},
              {"nodes", detail::range_json(c.nodes)},
              {"max_edge_tokens", c.max_edge_tokens},
              {"context_order", c.context_order},
              {"seed", c.seed}};
}

}  // namespace anchorlab::config
