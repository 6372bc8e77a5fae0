#pragma once

// Token-level stand-in for the reasoning tasks: each prompt is a tiny
// priced DAH and the target completion lists its depth-first edge firing
// order followed by the answer or an abstention.

#include <optional>
#include <string>
#include <vector>

#include "anchorlab/graphla.hpp"
#include "anchorlab/hypergraph.hpp"
#include "anchorlab/rl.hpp"

namespace anchorlab::micro {

struct MicroConfig {
  std::string name = "hard";
  std::size_t prompts = 16;
  IntRange nodes{6, 9};
  std::size_t max_edge_tokens = 48;  // fills the vocabulary to 64 tokens
  int context_order = 1;
  std::uint64_t seed = 7;

  static MicroConfig hard() { return {}; }
  static MicroConfig easy() {
    MicroConfig c;
    c.name = "easy";
    c.nodes = {3, 4};
    return c;
  }

  void validate() const {
    if (prompts < 2 || prompts % 2) throw InputError("MicroConfig: prompts must be even and >= 2");
    if (nodes.lo < 3 || nodes.lo > nodes.hi) throw InputError("MicroConfig: need 3 <= nodes");
    if (static_cast<std::size_t>(nodes.hi) - 1 > max_edge_tokens)
      throw InputError("MicroConfig: max_edge_tokens must cover nodes - 1 edges");
    if (context_order < 1) throw InputError("MicroConfig: context_order must be >= 1");
  }
};

inline std::string edge_token(std::size_t i) { return "<step>e" + std::to_string(i) + "</step>"; }

// END comes first so that the all-zero policy decodes greedily to an empty
// answer.
inline policy::Vocab micro_vocab(std::size_t max_edge_tokens) {
  std::vector<std::string> t = {"<end>", "<begin>", "<think>", "</think>", "<answer>", "</answer>", "Unknown"};
  for (int v = 1; v <= 9; ++v) t.push_back(std::to_string(v));
  for (std::size_t i = 0; i < max_edge_tokens; ++i) t.push_back(edge_token(i));
  return policy::Vocab(std::move(t), "<begin>", "<end>", "Unknown");
}

inline rl::Env build_micro_env(const MicroConfig& cfg) {
  cfg.validate();
  rl::Env env;
  env.name = cfg.name;
  env.vocab = micro_vocab(cfg.max_edge_tokens);
  env.context_order = cfg.context_order;
  env.grading = DatasetKind::GraphLA;
  const auto& v = env.vocab;
  for (std::size_t i = 0; i < cfg.prompts; ++i) {
    Rng rng(derive_seed(cfg.seed, 0x3c0, i));
    graphla::LaConfig la;
    la.var_count = static_cast<int>(rng.uniform_int(cfg.nodes.lo, cfg.nodes.hi));
    la.value = {1, 9};
    la.coeff = {1, 3};
    la.depth = {2, la.var_count - 1};
    const int k = static_cast<int>(rng.uniform_int(2, la.var_count - 1));
    graphla::LaGraph g = graphla::sample_la_graph(la, k, rng);
    const bool answerable = i % 2 == 0;
    if (!answerable) g = graphla::cut_edge(g, static_cast<int>(rng.uniform_int(1, k - 1)));
    const auto order = graph::dfs_trajectory(g.dah());

    rl::EnvPrompt p;
    p.prompt.cls = static_cast<std::uint32_t>(i);
    for (std::size_t e = 0; e < g.edges.size(); ++e) p.prompt.tokens.push_back(v.id(edge_token(e)));
    p.answerable = answerable;
    p.answer = answerable ? std::to_string(g.values[g.query]) : "Unknown";
    p.gt.push_back(v.id("<think>"));
    for (std::size_t j = 0; j < order.fired; ++j) p.gt.push_back(v.id(edge_token(order.order[j])));
    p.gt.push_back(v.id("</think>"));
    p.gt.push_back(v.id("<answer>"));
    p.gt.push_back(v.id(p.answer));
    p.gt.push_back(v.id("</answer>"));
    p.gt.push_back(v.end());
    env.prompts.push_back(std::move(p));
  }
  return env;
}

}  // namespace anchorlab::micro
