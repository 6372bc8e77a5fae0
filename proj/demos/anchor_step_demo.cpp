// One optimizer step on an unsolved prompt: the plain group gives no
// gradient, the group with the injected target does.

#include <cstdio>

#include "anchorlab/micro_env.hpp"

using namespace anchorlab;

int main() {
  const auto env = micro::build_micro_env(micro::MicroConfig::hard());
  const auto theta = rl::initial_policy(env);
  const rl::RlConfig cfg;
  const auto& p = env.prompts[0];

  Rng rng(1);
  std::vector<policy::Rollout> rs;
  std::vector<double> rewards;
  for (std::size_t i = 0; i < cfg.group_size; ++i) {
    rs.push_back(policy::sample(theta, p.prompt, cfg.sampling, rng));
    rewards.push_back(rl::completion_reward(env, p, rs.back().completion, cfg));
    std::printf("rollout %zu: reward %.3f  %s\n", i, rewards.back(), env.vocab.decode(rs.back().completion).c_str());
  }
  auto grp = rl::make_group(p.prompt, rs, rewards);
  std::printf("grpo gradient norm   %.6g\n", rl::l2_norm(rl::grpo_gradient(theta, grp, cfg)));

  rl::anchor_inject(grp, p.gt, theta, rl::completion_reward(env, p, p.gt, cfg));
  std::printf("target: %s\n", env.vocab.decode(p.gt).c_str());
  std::printf("advantages:");
  for (double a : grp.advantages) std::printf(" %.4f", a);
  std::printf("\nanchor gradient norm %.6g\n", rl::l2_norm(rl::grpo_gradient(theta, grp, cfg)));
}
