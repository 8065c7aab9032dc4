#pragma once

#include "misprior/core.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>

namespace misprior {

// Reward distribution D(mu) restricted to the pulled arm.
struct GaussianNoise {
  double obs_var = 1.0;
};
struct BernoulliReward {};
struct DeterministicReward {};

using RewardModel = std::variant<GaussianNoise, BernoulliReward, DeterministicReward>;

inline double sample_reward(const RewardModel& model, double mean, RngStream& rng) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianNoise>) {
          return rng.normal(mean, std::sqrt(m.obs_var));
        } else if constexpr (std::is_same_v<T, BernoulliReward>) {
          if (!(mean >= 0.0 && mean <= 1.0)) {
            throw std::domain_error("Bernoulli reward model requires means in [0,1]");
          }
          return rng.bernoulli(mean) ? 1.0 : 0.0;
        } else {
          return mean;
        }
      },
      model);
}

/// log p(reward | mean) up to a reward-only constant; -inf outside support.
inline double log_likelihood(const RewardModel& model, double mean, double reward) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianNoise>) {
          const double d = reward - mean;
          return -0.5 * d * d / m.obs_var;
        } else if constexpr (std::is_same_v<T, BernoulliReward>) {
          const double p = reward > 0.5 ? mean : 1.0 - mean;
          return p > 0.0 ? std::log(p) : neg_inf;
        } else {
          return reward == mean ? 0.0 : neg_inf;
        }
      },
      model);
}

}  // namespace misprior
