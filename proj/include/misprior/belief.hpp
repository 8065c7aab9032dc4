#pragma once

#include "misprior/core.hpp"
#include "misprior/model.hpp"
#include "misprior/posteriors.hpp"
#include "misprior/priors.hpp"

#include <optional>
#include <variant>

namespace misprior {

/// Running Gaussian posterior with a cached sampling factor.
class GaussianBelief {
 public:
  explicit GaussianBelief(GaussianPrior prior)
      : prior_(std::move(prior)), stats_(misprior::num_arms(prior_)), post_{prior_.mean, prior_.cov} {
    validate(prior_);
    factor_ = sampling_factor(post_.cov);
  }

  std::size_t num_arms() const { return stats_.num_arms(); }
  const GaussianPosterior& posterior() const { return post_; }
  const SufficientStats& stats() const { return stats_; }
  RewardModel reward_model() const { return GaussianNoise{prior_.obs_var}; }

  MeanVector sample(RngStream& rng) const { return mvn_sample_factored(post_.mean, factor_, rng); }

  void observe(ActionIndex a, double reward) {
    stats_.add(a, reward);
    post_ = gaussian_posterior(prior_, stats_);
    factor_ = sampling_factor(post_.cov);
  }

  std::optional<MeanVector> point_mass() const { return std::nullopt; }

 private:
  GaussianPrior prior_;
  SufficientStats stats_;
  GaussianPosterior post_;
  Matrix factor_;
};

class BetaBelief {
 public:
  explicit BetaBelief(const BetaProductPrior& prior) : post_{prior.alpha, prior.beta} { validate(prior); }

  std::size_t num_arms() const { return static_cast<std::size_t>(post_.alpha.size()); }
  const BetaPosterior& posterior() const { return post_; }
  RewardModel reward_model() const { return BernoulliReward{}; }

  MeanVector sample(RngStream& rng) const {
    Vector mu(post_.alpha.size());
    for (Eigen::Index a = 0; a < mu.size(); ++a) mu[a] = rng.beta(post_.alpha[a], post_.beta[a]);
    return mu;
  }

  void observe(ActionIndex a, double reward) {
    check_action(a, num_arms());
    if (reward != 0.0 && reward != 1.0) throw std::invalid_argument("BetaBelief: rewards must be 0 or 1");
    const auto i = static_cast<Eigen::Index>(a);
    post_.alpha[i] += reward;
    post_.beta[i] += 1.0 - reward;
  }

  std::optional<MeanVector> point_mass() const { return std::nullopt; }

 private:
  BetaPosterior post_;
};

class DiscreteBelief {
 public:
  DiscreteBelief(const DiscretePrior& prior, RewardModel model)
      : post_(discrete_posterior(prior)), model_(model) {}

  std::size_t num_arms() const { return post_.num_arms(); }
  const DiscretePosterior& posterior() const { return post_; }
  RewardModel reward_model() const { return model_; }

  MeanVector sample(RngStream& rng) const { return (*post_.atoms)[rng.categorical(post_.weights)]; }

  void observe(ActionIndex a, double reward) { post_ = discrete_posterior_update(post_, a, reward, model_); }

  std::optional<MeanVector> point_mass() const {
    if (post_.collapsed) return (*post_.atoms)[*post_.collapsed];
    return std::nullopt;
  }

 private:
  DiscretePosterior post_;
  RewardModel model_;
};

/// Posterior state of one policy within one episode.
class Belief {
 public:
  using State = std::variant<GaussianBelief, BetaBelief, DiscreteBelief>;

  explicit Belief(State s) : state_(std::move(s)) {}

  /// `model` only matters for discrete priors; Gaussian and Beta priors carry
  /// their own observation model.
  static Belief from_prior(const Prior& prior, const RewardModel& model) {
    return std::visit(
        [&](const auto& p) -> Belief {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, GaussianPrior>) {
            return Belief(GaussianBelief(p));
          } else if constexpr (std::is_same_v<T, BetaProductPrior>) {
            return Belief(BetaBelief(p));
          } else {
            return Belief(DiscreteBelief(p, model));
          }
        },
        prior);
  }

  std::size_t num_arms() const {
    return std::visit([](const auto& b) { return b.num_arms(); }, state_);
  }
  MeanVector sample(RngStream& rng) const {
    return std::visit([&](const auto& b) { return b.sample(rng); }, state_);
  }
  void observe(ActionIndex a, double reward) {
    std::visit([&](auto& b) { b.observe(a, reward); }, state_);
  }
  RewardModel reward_model() const {
    return std::visit([](const auto& b) { return b.reward_model(); }, state_);
  }
  std::optional<MeanVector> point_mass() const {
    return std::visit([](const auto& b) { return b.point_mass(); }, state_);
  }

  /// Copy updated with one extra observation of arm `a`.
  Belief lookahead(ActionIndex a, double reward) const {
    Belief next = *this;
    next.observe(a, reward);
    return next;
  }

  const State& state() const { return state_; }

 private:
  State state_;
};

}  // namespace misprior
