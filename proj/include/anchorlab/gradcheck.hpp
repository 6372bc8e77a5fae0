#pragma once

// Numerical and algebraic checks of the policy-gradient code on random small
// tabular policies.

#include <cmath>
#include <string>
#include <vector>

#include "anchorlab/policy.hpp"
#include "anchorlab/rl.hpp"
#include "anchorlab/rng.hpp"

namespace anchorlab::gradcheck {

using policy::Gradient;
using policy::PolicyParams;
using policy::Token;

struct Tolerances {
  double finite_difference = 1e-5;
  double identity = 1e-12;
  double fd_step = 1e-5;
  // Trials whose ratios land this close to 1 +- eps are regenerated for
  // the finite-difference checks.
  double kink_margin = 1e-3;
};

struct Check {
  std::string name;
  double max_error = 0;
  double tolerance = 0;
  std::size_t trials = 0;
  std::size_t skipped = 0;
  bool passed() const { return max_error <= tolerance; }
};

struct Report {
  std::vector<Check> checks;
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
  }
  const Check& get(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return c;
    }
    throw InputError("gradcheck: no check named '" + name + "'");
  }
};

namespace detail {

inline PolicyParams random_policy(Rng& rng, double scale = 1.0) {
  const std::size_t v = 3 + rng.index(4);
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < v; ++i) tokens.push_back("t" + std::to_string(i));
  const int order = 1 + static_cast<int>(rng.index(2));
  const std::uint32_t classes = 1 + static_cast<std::uint32_t>(rng.index(2));
  PolicyParams p(policy::Vocab(tokens, "t0", "t1", "t2"), order, classes);
  for (auto& x : p.logits()) x = scale * (2 * rng.uniform() - 1);
  return p;
}

inline std::vector<Token> random_sequence(const PolicyParams& p, Rng& rng, std::size_t lo = 1, std::size_t hi = 6) {
  const std::size_t n = lo + rng.index(hi - lo + 1);
  std::vector<Token> out(n);
  for (auto& t : out) t = static_cast<Token>(rng.index(p.vocab().size()));
  return out;
}

inline PolicyParams perturbed(const PolicyParams& p, Rng& rng, double scale) {
  PolicyParams q = p;
  for (auto& x : q.logits()) x += scale * (2 * rng.uniform() - 1);
  return q;
}

// Random group scored under theta_old with random rewards in {0, 1, 0.5}.
inline rl::RolloutGroup random_group(const PolicyParams& theta_old, Rng& rng, std::size_t g, bool inject) {
  policy::Prompt prompt{static_cast<std::uint32_t>(rng.index(theta_old.classes())), {}};
  std::vector<policy::Rollout> rs;
  std::vector<double> rewards;
  for (std::size_t i = 0; i < g; ++i) {
    auto y = random_sequence(theta_old, rng);
    rs.push_back({prompt, y, policy::logprob(theta_old, prompt, y), false});
    rewards.push_back(static_cast<double>(rng.index(3)) * 0.5);
  }
  auto grp = rl::make_group(prompt, std::move(rs), std::move(rewards));
  if (inject) rl::anchor_inject(grp, random_sequence(theta_old, rng), theta_old, 1.0);
  return grp;
}

inline double max_abs_diff(const Gradient& a, const Gradient& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const Gradient& a) {
  double m = 0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

// ||analytic - fd||_inf / max(||fd||_inf, 1e-8)
inline double fd_error(PolicyParams theta, const std::function<double(const PolicyParams&)>& f, const Gradient& analytic,
                       double h) {
  Gradient fd(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double x = theta.logits()[i];
    theta.logits()[i] = x + h;
    const double up = f(theta);
    theta.logits()[i] = x - h;
    const double down = f(theta);
    theta.logits()[i] = x;
    fd[i] = (up - down) / (2 * h);
  }
  return max_abs_diff(analytic, fd) / std::max(max_abs(fd), 1e-8);
}

inline bool near_kink(const PolicyParams& theta, const rl::RolloutGroup& grp, double eps, double margin) {
  for (const auto& r : grp.rollouts) {
    const auto lp = policy::logprob(theta, r.prompt, r.completion);
    for (std::size_t t = 0; t < lp.size(); ++t) {
      const double w = std::exp(lp[t] - r.logprob_old[t]);
      if (std::abs(w - (1 + eps)) < margin || std::abs(w - (1 - eps)) < margin) return true;
    }
  }
  return false;
}

}  // namespace detail

inline Report run(std::uint64_t seed, std::size_t trials, const Tolerances& tol = {}) {
  if (trials < 1) throw InputError("gradcheck: trials must be >= 1");
  Check fd_logprob{"fd_grad_logprob", 0, tol.finite_difference / 10};
  Check fd_surrogate{"fd_grpo_surrogate", 0, tol.finite_difference};
  Check fd_sft{"fd_sft_objective", 0, tol.finite_difference};
  Check fd_kl{"fd_kl_term", 0, tol.finite_difference};
  Check decomposition{"anchor_decomposition", 0, tol.identity};
  Check restricted{"anchor_equals_gt_contribution", 0, tol.identity};
  Check ratio_one{"anchor_ratio_one", 0, tol.identity};
  Check sft_reduction{"anchor_g1_equals_sft", 0, tol.identity};
  Check clip_cross{"clip_boundary_crossing", 0, tol.identity};
  Check collapse{"zero_variance_collapse", 0, 0.0};

  rl::RlConfig cfg;
  cfg.kl_coef = 0.05;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, 0x9c, trial));
    const PolicyParams theta_old = detail::random_policy(rng);
    const PolicyParams ref = detail::perturbed(theta_old, rng, 0.5);

    // grad log pi against central differences of the sequence logprob.
    {
      policy::Prompt prompt{static_cast<std::uint32_t>(rng.index(theta_old.classes())), {}};
      const auto y = detail::random_sequence(theta_old, rng);
      const auto g = policy::grad_logprob(theta_old, prompt, y);
      fd_logprob.max_error = std::max(
          fd_logprob.max_error,
          detail::fd_error(theta_old, [&](const PolicyParams& p) { return policy::sequence_logprob(p, prompt, y); }, g,
                           tol.fd_step));
      ++fd_logprob.trials;
    }

    // Surrogate and KL at a non-kink theta.
    {
      const auto grp = detail::random_group(theta_old, rng, 2 + rng.index(4), rng.bernoulli(0.5));
      PolicyParams theta = detail::perturbed(theta_old, rng, 0.3);
      int regen = 0;
      while (detail::near_kink(theta, grp, cfg.clip_ratio, tol.kink_margin) && regen < 32) {
        theta = detail::perturbed(theta_old, rng, 0.3);
        ++regen;
      }
      if (regen == 32) {
        ++fd_surrogate.skipped;
      } else {
        rl::GradientOptions go;
        go.ref = &ref;
        fd_surrogate.max_error = std::max(
            fd_surrogate.max_error,
            detail::fd_error(theta, [&](const PolicyParams& p) { return rl::grpo_surrogate(p, grp, cfg, &ref); },
                             rl::grpo_gradient(theta, grp, cfg, go), tol.fd_step));
        ++fd_surrogate.trials;
      }
      fd_kl.max_error = std::max(
          fd_kl.max_error, detail::fd_error(theta, [&](const PolicyParams& p) { return rl::kl_penalty(p, grp, ref); },
                                            rl::kl_gradient(theta, grp, ref), tol.fd_step));
      ++fd_kl.trials;
    }

    // SFT objective.
    {
      std::vector<rl::SftPair> batch;
      const std::size_t n = 1 + rng.index(3);
      for (std::size_t i = 0; i < n; ++i)
        batch.push_back({{static_cast<std::uint32_t>(rng.index(theta_old.classes())), {}},
                         detail::random_sequence(theta_old, rng)});
      const PolicyParams theta = detail::perturbed(theta_old, rng, 0.3);
      fd_sft.max_error = std::max(
          fd_sft.max_error, detail::fd_error(theta, [&](const PolicyParams& p) { return rl::sft_objective(p, batch); },
                                             rl::sft_gradient(theta, batch), tol.fd_step));
      ++fd_sft.trials;
    }

    // Decomposition of the injected group's gradient.
    {
      auto grp = detail::random_group(theta_old, rng, 2 + rng.index(4), false);
      for (auto& r : grp.rewards) r = 0.0;
      rl::anchor_inject(grp, detail::random_sequence(theta_old, rng), theta_old, 1.0);
      const PolicyParams theta = detail::perturbed(theta_old, rng, 0.4);
      rl::GradientOptions all, rest, only;
      all.ref = rest.ref = &ref;
      rest.exclude = grp.gt_index;
      only.only = grp.gt_index;
      const auto full = rl::grpo_gradient(theta, grp, cfg, all);
      const auto anchor = rl::anchor_term(theta, grp, cfg);
      auto sum = rl::grpo_gradient(theta, grp, cfg, rest);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += anchor[i];
      decomposition.max_error = std::max(decomposition.max_error, detail::max_abs_diff(full, sum));
      restricted.max_error =
          std::max(restricted.max_error, detail::max_abs_diff(anchor, rl::grpo_gradient(theta, grp, cfg, only)));
      ++decomposition.trials;
      ++restricted.trials;

      // theta = theta_old: every alpha is 1.
      const auto at_old = rl::anchor_term(theta_old, grp, cfg);
      const auto& gt = grp.rollouts[*grp.gt_index];
      auto expected = policy::grad_logprob(theta_old, gt.prompt, gt.completion);
      const double scale = grp.advantages[*grp.gt_index] /
                           (static_cast<double>(grp.size()) * static_cast<double>(gt.completion.size()));
      for (auto& x : expected) x *= scale;
      ratio_one.max_error = std::max(ratio_one.max_error, detail::max_abs_diff(at_old, expected));
      ++ratio_one.trials;
    }

    // G = 1, theta = theta_old, A* = 1  =>  anchor term = SFT gradient.
    {
      policy::Prompt prompt{static_cast<std::uint32_t>(rng.index(theta_old.classes())), {}};
      rl::RolloutGroup grp{prompt, {}, {}, {}, std::nullopt};
      rl::anchor_inject(grp, detail::random_sequence(theta_old, rng), theta_old, 1.0);
      grp.advantages = {1.0};
      const auto a = rl::anchor_term(theta_old, grp, cfg);
      const auto s = rl::sft_gradient(theta_old, {{prompt, grp.rollouts[0].completion}});
      sft_reduction.max_error = std::max(sft_reduction.max_error, detail::max_abs_diff(a, s));
      ++sft_reduction.trials;
    }

    // Push one ground-truth token's ratio just below, exactly at, and just
    // above 1 + eps by editing its target logit.
    {
      policy::Prompt prompt{0, {}};
      const PolicyParams base = theta_old;
      std::vector<Token> y{static_cast<Token>(rng.index(base.vocab().size()))};
      std::vector<policy::Rollout> rs;
      for (int i = 0; i < 3; ++i) {
        auto z = detail::random_sequence(base, rng);
        rs.push_back({prompt, z, policy::logprob(base, prompt, z), false});
      }
      auto grp = rl::make_group(prompt, std::move(rs), {0.0, 0.0, 0.0});
      rl::anchor_inject(grp, y, base, 1.0);
      const std::size_t row = base.row(0, y, 0);
      const double p_old = std::exp(policy::logprob(base, prompt, y)[0]);
      auto with_ratio = [&](double w) {
        PolicyParams t = base;
        double rest = 0;
        const double* lg = base.row_ptr(row);
        for (std::size_t j = 0; j < base.vocab().size(); ++j) {
          if (j != y[0]) rest += std::exp(lg[j]);
        }
        const double p = std::min(w * p_old, 1 - 1e-9);
        t.row_ptr(row)[y[0]] = std::log(p * rest / (1 - p));
        return t;
      };
      const double eps = cfg.clip_ratio;
      if (p_old * (1 + eps + 1e-3) < 1 - 1e-6) {
        const auto below = with_ratio(1 + eps - 1e-3);
        const auto above = with_ratio(1 + eps + 1e-3);
        const auto alpha_below = rl::anchor_alphas(below, grp, cfg);
        const auto alpha_above = rl::anchor_alphas(above, grp, cfg);
        const double w_below = std::exp(policy::logprob(below, prompt, y)[0]) / p_old;
        clip_cross.max_error = std::max(clip_cross.max_error, std::abs(alpha_below[0] - w_below));
        clip_cross.max_error = std::max(clip_cross.max_error, std::abs(alpha_above[0]));
        clip_cross.max_error = std::max(clip_cross.max_error, detail::max_abs(rl::anchor_term(above, grp, cfg)));
        ++clip_cross.trials;
        const auto at = with_ratio(1 + eps);
        const double w_at = std::exp(policy::logprob(at, prompt, y)[0]) / p_old;
        if (w_at == 1 + eps) ++clip_cross.skipped;  // kink point: subgradient is a choice
      } else {
        ++clip_cross.skipped;
      }
    }

    // Identical rewards: exact zero gradient without the KL term.
    {
      auto grp = detail::random_group(theta_old, rng, 1 + rng.index(6), false);
      for (auto& r : grp.rewards) r = 1.0;
      grp.recompute_advantages();
      const auto g = rl::grpo_gradient(detail::perturbed(theta_old, rng, 0.3), grp, cfg);
      collapse.max_error = std::max(collapse.max_error, detail::max_abs(g));
      ++collapse.trials;
    }
  }
  return {{fd_logprob, fd_surrogate, fd_sft, fd_kl, decomposition, restricted, ratio_one, sft_reduction, clip_cross,
           collapse}};
}

}  // namespace anchorlab::gradcheck
