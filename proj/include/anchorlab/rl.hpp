#pragma once

// Group-relative policy optimization with optional ground-truth injection,
// the supervised baseline, and the training loop.

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "anchorlab/dataset.hpp"
#include "anchorlab/error.hpp"
#include "anchorlab/eval.hpp"
#include "anchorlab/policy.hpp"
#include "anchorlab/rng.hpp"

namespace anchorlab::rl {

using policy::Gradient;
using policy::PolicyParams;
using policy::Prompt;
using policy::Rollout;
using policy::Token;

enum class LengthPenalty { Overage, Symmetric };

struct RlConfig {
  std::size_t group_size = 5;             // G, before injection
  double clip_ratio = 0.2;                // epsilon
  double kl_coef = 0.001;                 // beta
  double length_penalty = 2e-4;           // lambda
  std::size_t target_length = 64;         // L_max
  LengthPenalty penalty_form = LengthPenalty::Overage;
  double learning_rate = 50.0;
  int inner_updates = 2;
  std::size_t batch_prompts = 8;
  policy::SamplingConfig sampling;

  void validate() const {
    if (group_size < 1) throw InputError("RlConfig: group_size must be >= 1");
    if (!(clip_ratio > 0)) throw InputError("RlConfig: clip_ratio must be > 0");
    if (kl_coef < 0 || length_penalty < 0) throw InputError("RlConfig: coefficients must be >= 0");
    if (!(learning_rate > 0)) throw InputError("RlConfig: learning_rate must be > 0");
    if (inner_updates < 1 || batch_prompts < 1) throw InputError("RlConfig: inner_updates and batch_prompts >= 1");
  }
};

// correctness - lambda * max(0, |y| - L_max)   (or lambda * | |y| - L_max |)
inline double reward(DatasetKind kind, const std::string& expected, const std::string& completion_text,
                     std::size_t length, const RlConfig& cfg) {
  const bool correct = eval::grade(kind, expected, eval::extract_answer(completion_text));
  const double over = static_cast<double>(length) - static_cast<double>(cfg.target_length);
  const double penalty = cfg.penalty_form == LengthPenalty::Overage ? std::max(0.0, over) : std::abs(over);
  return (correct ? 1.0 : 0.0) - cfg.length_penalty * penalty;
}

// Standardized with the population deviation; identical rewards give zeros.
inline std::vector<double> advantages(const std::vector<double>& rewards) {
  if (rewards.empty()) throw InputError("advantages: empty reward list");
  std::vector<double> out(rewards.size(), 0.0);
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); })) return out;
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

struct RolloutGroup {
  Prompt prompt;
  std::vector<Rollout> rollouts;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::optional<std::size_t> gt_index;

  void recompute_advantages() { advantages = rl::advantages(rewards); }
  std::size_t size() const { return rollouts.size(); }
};

inline RolloutGroup make_group(Prompt prompt, std::vector<Rollout> rollouts, std::vector<double> rewards) {
  if (rollouts.size() != rewards.size()) throw InputError("make_group: reward count mismatch");
  RolloutGroup g{std::move(prompt), std::move(rollouts), std::move(rewards), {}, std::nullopt};
  g.recompute_advantages();
  return g;
}

// Appends the ground truth as an injected rollout scored under theta_old
// and re-standardizes over the enlarged group.
inline void anchor_inject(RolloutGroup& group, const std::vector<Token>& gt, const PolicyParams& theta_old,
                          double gt_reward) {
  if (group.gt_index) throw InputError("anchor_inject: group already holds an injected rollout");
  if (gt.empty()) throw InputError("anchor_inject: empty ground truth");
  Rollout r{group.prompt, gt, policy::logprob(theta_old, group.prompt, gt), true};
  group.gt_index = group.rollouts.size();
  group.rollouts.push_back(std::move(r));
  group.rewards.push_back(gt_reward);
  group.recompute_advantages();
}

// Per-step diagnostics accumulated while differentiating.
struct Diagnostics {
  std::size_t positive_tokens = 0;
  std::size_t upper_clipped = 0;
  double kl_sum = 0;
  std::size_t tokens = 0;

  void merge(const Diagnostics& o) {
    positive_tokens += o.positive_tokens;
    upper_clipped += o.upper_clipped;
    kl_sum += o.kl_sum;
    tokens += o.tokens;
  }
  double clip_frac_upper() const {
    return positive_tokens ? static_cast<double>(upper_clipped) / static_cast<double>(positive_tokens) : 0.0;
  }
  double kl() const { return tokens ? kl_sum / static_cast<double>(tokens) : 0.0; }
};

namespace detail {

inline std::vector<double> current_logprobs(const PolicyParams& theta, const Rollout& r) {
  auto lp = policy::logprob(theta, r.prompt, r.completion);
  if (lp.size() != r.logprob_old.size()) throw InvariantError("rollout: stored and recomputed logprob lengths differ");
  return lp;
}

// Ratio factor of the surrogate's derivative for one token; 0 on the
// clipped side of the min.
inline double active_ratio(double w, double adv, double eps) {
  if (adv > 0) return w <= 1 + eps ? w : 0.0;
  if (adv < 0) return w >= 1 - eps ? w : 0.0;
  return 0.0;
}

inline double k3(double logp, double logp_ref) {
  const double r = std::exp(logp_ref - logp);
  return r - 1 - (logp_ref - logp);
}

}  // namespace detail

// (1/G) sum_i (1/|y_i|) sum_t min(w A, clip(w) A) - beta * KL_k3
inline double grpo_surrogate(const PolicyParams& theta, const RolloutGroup& group, const RlConfig& cfg,
                             const PolicyParams* ref = nullptr) {
  const double g = static_cast<double>(group.size());
  const double eps = cfg.clip_ratio;
  double total = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto& r = group.rollouts[i];
    if (r.completion.empty()) continue;
    const auto lp = detail::current_logprobs(theta, r);
    const double a = group.advantages.at(i);
    const double len = static_cast<double>(r.completion.size());
    const bool kl = ref && cfg.kl_coef > 0;
    const auto lr = kl ? policy::logprob(*ref, r.prompt, r.completion) : std::vector<double>{};
    double s = 0;
    for (std::size_t t = 0; t < lp.size(); ++t) {
      const double w = std::exp(lp[t] - r.logprob_old[t]);
      s += std::min(w * a, std::clamp(w, 1 - eps, 1 + eps) * a);
      if (kl) s -= cfg.kl_coef * detail::k3(lp[t], lr[t]);
    }
    total += s / len;
  }
  return total / g;
}

// (1/G) sum_i (1/|y_i|) sum_t k3 against the reference policy.
inline double kl_penalty(const PolicyParams& theta, const RolloutGroup& group, const PolicyParams& ref) {
  double total = 0;
  for (const auto& r : group.rollouts) {
    if (r.completion.empty()) continue;
    const auto lp = policy::logprob(theta, r.prompt, r.completion);
    const auto lr = policy::logprob(ref, r.prompt, r.completion);
    double s = 0;
    for (std::size_t t = 0; t < lp.size(); ++t) s += detail::k3(lp[t], lr[t]);
    total += s / static_cast<double>(r.completion.size());
  }
  return total / static_cast<double>(group.size());
}

inline Gradient kl_gradient(const PolicyParams& theta, const RolloutGroup& group, const PolicyParams& ref) {
  Gradient out(theta.size(), 0.0);
  const double g = static_cast<double>(group.size());
  for (const auto& r : group.rollouts) {
    if (r.completion.empty()) continue;
    const auto lp = policy::logprob(theta, r.prompt, r.completion);
    const auto lr = policy::logprob(ref, r.prompt, r.completion);
    const double scale = 1.0 / (g * static_cast<double>(r.completion.size()));
    std::vector<double> w(lp.size());
    for (std::size_t t = 0; t < lp.size(); ++t) w[t] = scale * (1.0 - std::exp(lr[t] - lp[t]));
    policy::accumulate_grad_logprob(theta, r.prompt, r.completion, w, out);
  }
  return out;
}

struct GradientOptions {
  const PolicyParams* ref = nullptr;   // KL reference; null disables the KL term
  std::optional<std::size_t> exclude;  // drop this rollout's surrogate term
  std::optional<std::size_t> only;     // keep only this rollout's surrogate term
  Diagnostics* diagnostics = nullptr;
};

// Gradient of grpo_surrogate: A * w * grad log pi on the active branch,
// scaled by 1/(G |y_i|), minus beta times the k3 gradient.
inline Gradient grpo_gradient(const PolicyParams& theta, const RolloutGroup& group, const RlConfig& cfg,
                              const GradientOptions& opt = {}) {
  Gradient out(theta.size(), 0.0);
  const double g = static_cast<double>(group.size());
  const double eps = cfg.clip_ratio;
  const bool kl = opt.ref && cfg.kl_coef > 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto& r = group.rollouts[i];
    if (r.completion.empty()) continue;
    const auto lp = detail::current_logprobs(theta, r);
    const double a = group.advantages.at(i);
    const double scale = 1.0 / (g * static_cast<double>(r.completion.size()));
    const bool surrogate = (!opt.exclude || *opt.exclude != i) && (!opt.only || *opt.only == i);
    std::vector<double> lr;
    if (kl || opt.diagnostics) lr = opt.ref ? policy::logprob(*opt.ref, r.prompt, r.completion) : lp;
    std::vector<double> weights(lp.size(), 0.0);
    for (std::size_t t = 0; t < lp.size(); ++t) {
      const double w = std::exp(lp[t] - r.logprob_old[t]);
      if (surrogate) weights[t] = a * detail::active_ratio(w, a, eps) * scale;
      if (kl) weights[t] -= cfg.kl_coef * scale * (1.0 - std::exp(lr[t] - lp[t]));
      if (opt.diagnostics) {
        auto& d = *opt.diagnostics;
        if (a > 0) {
          ++d.positive_tokens;
          if (w > 1 + eps) ++d.upper_clipped;
        }
        d.kl_sum += detail::k3(lp[t], lr[t]);
        ++d.tokens;
      }
    }
    policy::accumulate_grad_logprob(theta, r.prompt, r.completion, weights, out);
  }
  return out;
}

// Clipped importance factors of the injected rollout: w when the unclipped
// branch is active, 0 otherwise.
inline std::vector<double> anchor_alphas(const PolicyParams& theta, const RolloutGroup& group, const RlConfig& cfg) {
  if (!group.gt_index) throw InputError("anchor_term: group has no injected rollout");
  const auto& r = group.rollouts[*group.gt_index];
  const auto lp = detail::current_logprobs(theta, r);
  const double a = group.advantages.at(*group.gt_index);
  std::vector<double> alpha(lp.size());
  for (std::size_t t = 0; t < lp.size(); ++t)
    alpha[t] = detail::active_ratio(std::exp(lp[t] - r.logprob_old[t]), a, cfg.clip_ratio);
  return alpha;
}

// (A* / (G |y*|)) sum_t alpha_t grad log pi(y*_t)
inline Gradient anchor_term(const PolicyParams& theta, const RolloutGroup& group, const RlConfig& cfg) {
  const auto alpha = anchor_alphas(theta, group, cfg);
  const auto& r = group.rollouts[*group.gt_index];
  const double a = group.advantages.at(*group.gt_index);
  const double scale = a / (static_cast<double>(group.size()) * static_cast<double>(r.completion.size()));
  std::vector<double> w(alpha.size());
  for (std::size_t t = 0; t < alpha.size(); ++t) w[t] = scale * alpha[t];
  Gradient out(theta.size(), 0.0);
  policy::accumulate_grad_logprob(theta, r.prompt, r.completion, w, out);
  return out;
}

struct SftPair {
  Prompt prompt;
  std::vector<Token> target;
};

// mean over pairs of (1/|y*|) sum_t log pi(y*_t)
inline double sft_objective(const PolicyParams& theta, const std::vector<SftPair>& batch) {
  if (batch.empty()) throw InputError("sft_objective: empty batch");
  double total = 0;
  for (const auto& p : batch) {
    total += policy::sequence_logprob(theta, p.prompt, p.target) / static_cast<double>(p.target.size());
  }
  return total / static_cast<double>(batch.size());
}

inline Gradient sft_gradient(const PolicyParams& theta, const std::vector<SftPair>& batch) {
  if (batch.empty()) throw InputError("sft_gradient: empty batch");
  Gradient out(theta.size(), 0.0);
  for (const auto& p : batch) {
    const double w = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(p.target.size()));
    policy::accumulate_grad_logprob(theta, p.prompt, p.target, std::vector<double>(p.target.size(), w), out);
  }
  return out;
}

inline double l2_norm(const Gradient& g) {
  double s = 0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Environments and training.

struct EnvPrompt {
  Prompt prompt;
  std::vector<Token> gt;
  std::string answer;
  bool answerable = true;
};

struct Env {
  std::string name;
  policy::Vocab vocab;
  int context_order = 2;
  DatasetKind grading = DatasetKind::GraphLA;
  std::vector<EnvPrompt> prompts;
};

enum class Method { Sft, Grpo, Anchor };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Sft: return "sft";
    case Method::Grpo: return "grpo";
    case Method::Anchor: return "anchor";
  }
  return {};
}

inline Method parse_method(const std::string& s) {
  if (s == "sft") return Method::Sft;
  if (s == "grpo") return Method::Grpo;
  if (s == "anchor") return Method::Anchor;
  throw InputError("unknown method '" + s + "' (expected sft, grpo or anchor)");
}

inline PolicyParams initial_policy(const Env& env) {
  return PolicyParams(env.vocab, env.context_order, static_cast<std::uint32_t>(env.prompts.size()));
}

inline double completion_reward(const Env& env, const EnvPrompt& p, const std::vector<Token>& y, const RlConfig& cfg) {
  return reward(env.grading, p.answer, env.vocab.decode(y), y.size(), cfg);
}

// Greedy decoding on every prompt.
inline eval::Metrics evaluate_policy(const PolicyParams& theta, const Env& env, std::size_t max_len) {
  policy::SamplingConfig greedy;
  greedy.greedy = true;
  greedy.max_len = max_len;
  Rng unused(0);
  std::vector<eval::EvalRecord> rs;
  for (const auto& p : env.prompts) {
    const auto r = policy::sample(theta, p.prompt, greedy, unused);
    const auto pred = eval::extract_answer(env.vocab.decode(r.completion));
    rs.push_back({"", p.answerable, p.answer, pred, eval::grade(env.grading, p.answer, pred), pred.has_value()});
  }
  return eval::metrics(rs);
}

struct StepMetrics {
  std::size_t step = 0;
  double reward_mean = 0;
  double acc_overall = 0;
  double acc_ans = 0;
  double acc_unans = 0;
  double grad_norm = 0;
  double clip_frac_upper = 0;
  double kl = 0;
};

inline std::string metrics_header() {
  return "step\treward_mean\tacc_overall\tacc_ans\tacc_unans\tgrad_norm\tclip_frac_upper\tkl";
}

inline std::string format_metrics(const StepMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu\t%.10g\t%.6f\t%.6f\t%.6f\t%.10g\t%.6f\t%.10g", m.step, m.reward_mean,
                m.acc_overall, m.acc_ans, m.acc_unans, m.grad_norm, m.clip_frac_upper, m.kl);
  return buf;
}

struct TrainOptions {
  std::size_t steps = 200;
  std::uint64_t seed = 0;
  std::function<void(const StepMetrics&)> on_step;
};

inline void apply_update(PolicyParams& theta, const Gradient& g, double lr) {
  auto& x = theta.logits();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += lr * g[i];
}

// Trains theta in place. On a non-finite parameter theta is restored to its
// last finite value and DivergenceError is thrown.
inline std::vector<StepMetrics> train(const Env& env, Method method, const RlConfig& cfg, PolicyParams& theta,
                                      const TrainOptions& opt) {
  cfg.validate();
  if (env.prompts.empty()) throw InputError("train: environment has no prompts");
  if (theta.classes() < env.prompts.size() || !(theta.vocab() == env.vocab) ||
      theta.context_order() != env.context_order)
    throw InputError("train: policy shape does not match environment");
  const PolicyParams ref = theta;
  std::vector<StepMetrics> history;
  for (std::size_t step = 0; step < opt.steps; ++step) {
    Rng rng(derive_seed(opt.seed, 0x7a11, step));
    std::vector<std::size_t> batch(env.prompts.size());
    std::iota(batch.begin(), batch.end(), std::size_t{0});
    rng.shuffle(batch);
    batch.resize(std::min(batch.size(), cfg.batch_prompts));
    const PolicyParams theta_old = theta;
    const PolicyParams backup = theta;
    StepMetrics m;
    m.step = step;

    auto check_finite = [&] {
      if (!theta.finite()) {
        theta = backup;
        throw DivergenceError("train: non-finite parameter at step " + std::to_string(step));
      }
    };

    if (method == Method::Sft) {
      std::vector<SftPair> pairs;
      for (auto i : batch) pairs.push_back({env.prompts[i].prompt, env.prompts[i].gt});
      const Gradient g = sft_gradient(theta, pairs);
      m.grad_norm = l2_norm(g);
      double kl = 0;
      std::size_t tokens = 0;
      for (const auto& p : pairs) {
        const auto lp = policy::logprob(theta, p.prompt, p.target);
        const auto lr = policy::logprob(ref, p.prompt, p.target);
        for (std::size_t t = 0; t < lp.size(); ++t) kl += detail::k3(lp[t], lr[t]);
        tokens += lp.size();
      }
      m.kl = tokens ? kl / static_cast<double>(tokens) : 0.0;
      apply_update(theta, g, cfg.learning_rate);
      check_finite();
      policy::SamplingConfig greedy;
      greedy.greedy = true;
      greedy.max_len = cfg.sampling.max_len;
      double rsum = 0;
      for (auto i : batch) {
        const auto r = policy::sample(theta, env.prompts[i].prompt, greedy, rng);
        rsum += completion_reward(env, env.prompts[i], r.completion, cfg);
      }
      m.reward_mean = rsum / static_cast<double>(batch.size());
    } else {
      auto groups = parallel_generate<RolloutGroup>(batch.size(), [&](std::size_t b) {
        const auto& p = env.prompts[batch[b]];
        Rng local(derive_seed(opt.seed, 0x5a3b1e + step, batch[b]));
        std::vector<Rollout> rs;
        std::vector<double> rewards;
        for (std::size_t j = 0; j < cfg.group_size; ++j) {
          rs.push_back(policy::sample(theta_old, p.prompt, cfg.sampling, local));
          rewards.push_back(completion_reward(env, p, rs.back().completion, cfg));
        }
        RolloutGroup grp = make_group(p.prompt, std::move(rs), std::move(rewards));
        if (method == Method::Anchor) anchor_inject(grp, p.gt, theta_old, completion_reward(env, p, p.gt, cfg));
        return grp;
      });
      double rsum = 0;
      std::size_t rcount = 0;
      for (const auto& grp : groups) {
        for (std::size_t i = 0; i < grp.size(); ++i) {
          if (grp.gt_index && *grp.gt_index == i) continue;
          rsum += grp.rewards[i];
          ++rcount;
        }
      }
      m.reward_mean = rcount ? rsum / static_cast<double>(rcount) : 0.0;
      Diagnostics clip_total;
      for (int u = 0; u < cfg.inner_updates; ++u) {
        auto parts = parallel_generate<std::pair<Gradient, Diagnostics>>(groups.size(), [&](std::size_t b) {
          Diagnostics d;
          GradientOptions go;
          go.ref = &ref;
          go.diagnostics = &d;
          return std::pair{grpo_gradient(theta, groups[b], cfg, go), d};
        });
        Gradient g(theta.size(), 0.0);
        Diagnostics d;
        for (const auto& [pg, pd] : parts) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += pg[i] / static_cast<double>(groups.size());
          d.merge(pd);
        }
        if (u == 0) {
          m.grad_norm = l2_norm(g);
          m.kl = d.kl();
        }
        clip_total.merge(d);
        apply_update(theta, g, cfg.learning_rate);
        check_finite();
      }
      m.clip_frac_upper = clip_total.clip_frac_upper();
    }

    const auto em = evaluate_policy(theta, env, cfg.sampling.max_len);
    m.acc_overall = em.acc_overall.value_or(0.0);
    m.acc_ans = em.acc_ans.value_or(0.0);
    m.acc_unans = em.acc_unans.value_or(0.0);
    history.push_back(m);
    if (opt.on_step) opt.on_step(m);
  }
  return history;
}

}  // namespace anchorlab::rl
