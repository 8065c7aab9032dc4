#pragma once

#include "misprior/belief.hpp"
#include "misprior/core.hpp"
#include "misprior/priors.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace misprior {

struct TSKind {};

struct KTSKind {
  int k = 1;
};

/// Maps k sampled mean vectors to a distribution over actions.
using Selector = std::function<std::vector<double>(const std::vector<MeanVector>&)>;

struct PosteriorSampleKind {
  int k = 1;
  Selector selector;
};

/// Two-step receding-horizon control; alpha = 1 is Monte-Carlo knowledge gradient.
struct RHC2Kind {
  double alpha = 1.0;
  int k1 = 10;
  int k2 = 10;
  bool random_ties = false;
};

using PolicyKind = std::variant<TSKind, KTSKind, PosteriorSampleKind, RHC2Kind>;

/// An action-selection rule together with the (possibly misspecified) prior it believes.
struct Policy {
  PolicyKind kind;
  Prior prior;
};

inline void validate(const PolicyKind& kind) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KTSKind>) {
          if (p.k < 1) throw std::invalid_argument("KTS: k must be >= 1");
        } else if constexpr (std::is_same_v<T, PosteriorSampleKind>) {
          if (p.k < 1) throw std::invalid_argument("PosteriorSample: k must be >= 1");
          if (!p.selector) throw std::invalid_argument("PosteriorSample: missing selector");
        } else if constexpr (std::is_same_v<T, RHC2Kind>) {
          if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) throw std::invalid_argument("RHC2: alpha must lie in [0,1]");
          if (p.k1 < 1 || p.k2 < 1) throw std::invalid_argument("RHC2: k1 and k2 must be >= 1");
        }
      },
      kind);
}

inline std::string policy_name(const PolicyKind& kind) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TSKind>) return "TS";
        else if constexpr (std::is_same_v<T, KTSKind>) return "KTS(" + std::to_string(p.k) + ")";
        else if constexpr (std::is_same_v<T, PosteriorSampleKind>) return "PosteriorSample(" + std::to_string(p.k) + ")";
        else return "RHC2";
      },
      kind);
}

/// n such that the per-step action TV is at most n times the posterior TV.
inline long monte_carlo_n(const PolicyKind& kind, std::size_t num_arms) {
  return std::visit(
      [&](const auto& p) -> long {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TSKind>) return 1;
        else if constexpr (std::is_same_v<T, KTSKind>) return p.k;
        else if constexpr (std::is_same_v<T, PosteriorSampleKind>) return p.k;
        else return static_cast<long>(num_arms) * p.k1 * (2L * p.k2 + 3);
      },
      kind);
}

inline long monte_carlo_n(const Policy& policy) { return monte_carlo_n(policy.kind, num_arms(policy.prior)); }

/// Softmax over per-arm sums of the sampled means, at the given temperature.
inline Selector softmax_selector(double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("softmax_selector: temperature must be positive");
  return [temperature](const std::vector<MeanVector>& draws) {
    if (draws.empty()) throw std::invalid_argument("softmax_selector: no draws");
    Vector sums = Vector::Zero(draws.front().size());
    for (const auto& d : draws) sums += d;
    const Vector z = sums / temperature;
    const double top = z.maxCoeff();
    std::vector<double> probs(static_cast<std::size_t>(z.size()));
    double total = 0.0;
    for (Eigen::Index a = 0; a < z.size(); ++a) total += probs[a] = std::exp(z[a] - top);
    for (double& p : probs) p /= total;
    return probs;
  };
}

/// V_a = sum_i [(1 - alpha) mu~_a + alpha max_a' (1/k2) sum_j mu^_a'], where mu~ is a
/// posterior draw, r~ a reward hallucinated from D(mu~) on arm a, and mu^ draws
/// from the posterior updated with (a, r~).
inline double rhc2_value(const RHC2Kind& p, const Belief& belief, ActionIndex a, RngStream& rng) {
  check_action(a, belief.num_arms());
  const auto ai = static_cast<Eigen::Index>(a);
  const RewardModel model = belief.reward_model();
  double value = 0.0;
  for (int i = 0; i < p.k1; ++i) {
    const MeanVector draw = belief.sample(rng);
    double look = 0.0;
    if (p.alpha > 0.0) {
      const double r = sample_reward(model, draw[ai], rng);
      const Belief next = belief.lookahead(a, r);
      Vector avg = Vector::Zero(draw.size());
      for (int j = 0; j < p.k2; ++j) avg += next.sample(rng);
      look = avg.maxCoeff() / p.k2;
    }
    value += (1.0 - p.alpha) * draw[ai] + p.alpha * look;
  }
  return value;
}

/// Chooses an action from the current posterior. A collapsed (point-mass)
/// posterior plays the argmax of its atom, except for PosteriorSample whose
/// selector always defines the action law.
inline ActionIndex select_action(const PolicyKind& kind, const Belief& belief, RngStream& rng) {
  if (!std::holds_alternative<PosteriorSampleKind>(kind)) {
    if (auto atom = belief.point_mass()) return argmax_tiebreak(*atom);
  }
  return std::visit(
      [&](const auto& p) -> ActionIndex {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TSKind>) {
          return argmax_tiebreak(belief.sample(rng));
        } else if constexpr (std::is_same_v<T, KTSKind>) {
          Vector best = belief.sample(rng);
          for (int i = 1; i < p.k; ++i) best = best.cwiseMax(belief.sample(rng));
          return argmax_tiebreak(best);
        } else if constexpr (std::is_same_v<T, PosteriorSampleKind>) {
          std::vector<MeanVector> draws;
          draws.reserve(static_cast<std::size_t>(p.k));
          for (int i = 0; i < p.k; ++i) draws.push_back(belief.sample(rng));
          const std::vector<double> probs = p.selector(draws);
          if (probs.size() != belief.num_arms()) throw std::invalid_argument("selector returned wrong arm count");
          return rng.categorical(probs);
        } else {
          const std::size_t n = belief.num_arms();
          std::vector<double> v(n);
          for (std::size_t a = 0; a < n; ++a) v[a] = rhc2_value(p, belief, a, rng);
          return p.random_ties ? argmax_random_ties(v, rng) : argmax_tiebreak(v);
        }
      },
      kind);
}

}  // namespace misprior
