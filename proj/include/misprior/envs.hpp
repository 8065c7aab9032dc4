#pragma once

#include "misprior/belief.hpp"
#include "misprior/core.hpp"
#include "misprior/model.hpp"
#include "misprior/policies.hpp"
#include "misprior/priors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace misprior {

struct EpisodeTrace {
  MeanVector realized_mean;
  std::vector<ActionIndex> actions;
  std::vector<double> rewards;
  int horizon = 0;

  /// sum_h mu_{a_h}: the noiseless score whose expectation is R(theta, alg).
  double mean_reward() const {
    double s = 0.0;
    for (ActionIndex a : actions) s += realized_mean[static_cast<Eigen::Index>(a)];
    return s;
  }
};

/// Runs `policy` for `horizon` steps against a fixed mean vector.
inline EpisodeTrace play_episode_at(const MeanVector& mu, const Policy& policy, int horizon,
                                    const RewardModel& model, RngStream& rng) {
  if (horizon < 0) throw std::invalid_argument("play_episode: negative horizon");
  if (num_arms(policy.prior) != static_cast<std::size_t>(mu.size())) {
    throw std::invalid_argument("play_episode: policy prior and environment disagree on arm count");
  }
  EpisodeTrace trace;
  trace.realized_mean = mu;
  trace.horizon = horizon;
  trace.actions.reserve(static_cast<std::size_t>(horizon));
  trace.rewards.reserve(static_cast<std::size_t>(horizon));
  Belief belief = Belief::from_prior(policy.prior, model);
  for (int h = 0; h < horizon; ++h) {
    const ActionIndex a = select_action(policy.kind, belief, rng);
    const double r = sample_reward(model, mu[static_cast<Eigen::Index>(a)], rng);
    trace.actions.push_back(a);
    trace.rewards.push_back(r);
    if (h + 1 < horizon) belief.observe(a, r);
  }
  return trace;
}

/// Draws mu from the true prior, then plays one episode.
inline EpisodeTrace play_episode(const Prior& prior_true, const Policy& policy, int horizon,
                                 const RewardModel& model, RngStream& rng) {
  const MeanVector mu = sample_mean(prior_true, rng);
  return play_episode_at(mu, policy, horizon, model, rng);
}

// ---------------------------------------------------------------------------
// Two-arm instance: theta is a point mass at (1/2, 0); theta' moves eps of the
// mass to (1/2, 1).

inline std::pair<DiscretePrior, DiscretePrior> make_lb_pair(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("make_lb_pair: eps must lie in [0,1]");
  MeanVector base(2), alt(2);
  base << 0.5, 0.0;
  alt << 0.5, 1.0;
  DiscretePrior theta{{base, alt}, {1.0, 0.0}};
  DiscretePrior theta_prime{{base, alt}, {1.0 - eps, eps}};
  return {theta, theta_prime};
}

struct LbTvResult {
  double analytic_tv;
  double empirical_tv;
  double empirical_stderr;
  double reward_gap;  // R(theta, kTS(theta)) - R(theta, kTS(theta'))
  double gap_stderr;
};

/// Probability that k-TS(theta') ever leaves arm 0 on the theta environment
/// (Bernoulli rewards), against its closed form 1 - (1 - eps)^{Hk}.
inline LbTvResult lb_two_arm_tv(double eps, int horizon, int k, long trials, RngStream& rng) {
  if (horizon < 1 || k < 1) throw std::invalid_argument("lb_two_arm_tv: H and k must be >= 1");
  if (trials < 2) throw std::invalid_argument("lb_two_arm_tv: need at least two trials");
  const auto [theta, theta_prime] = make_lb_pair(eps);
  const Policy well{KTSKind{k}, theta};
  const Policy mis{KTSKind{k}, theta_prime};
  const RewardModel model = BernoulliReward{};

  long hits = 0;
  double sum = 0.0, sum_sq = 0.0;
  for (long t = 0; t < trials; ++t) {
    const MeanVector mu = sample_mean(theta, rng);
    const EpisodeTrace ref = play_episode_at(mu, well, horizon, model, rng);
    const EpisodeTrace alt = play_episode_at(mu, mis, horizon, model, rng);
    if (std::find(alt.actions.begin(), alt.actions.end(), ActionIndex{1}) != alt.actions.end()) ++hits;
    const double d = ref.mean_reward() - alt.mean_reward();
    sum += d;
    sum_sq += d * d;
  }
  const double n = static_cast<double>(trials);
  const double p = hits / n;
  const double gap = sum / n;
  const double var = std::max(0.0, (sum_sq - n * gap * gap) / (n - 1.0));
  return {1.0 - std::pow(1.0 - eps, static_cast<double>(horizon) * k), p, std::sqrt(p * (1.0 - p) / n), gap,
          std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------
// N+1 arm instance with deterministic rewards. Base arms are 0..N-1 and the
// informative arm is N. For abar in 1..N and b in {0,1}: arm abar-1 has mean
// 1 - delta, other base arms delta, and arm N has delta*abar/(2N) if b = 0
// and 1 if b = 1. theta draws b ~ Bernoulli(eps); theta' fixes b = 0.

struct AnLbInstance {
  int num_base_arms = 0;
  double eps = 0.0;
  double delta = 0.0;
  DiscretePrior theta;
  DiscretePrior theta_prime;
};

inline MeanVector anlb_mean(int num_base_arms, double delta, int abar, bool b) {
  MeanVector mu = MeanVector::Constant(num_base_arms + 1, delta);
  mu[abar - 1] = 1.0 - delta;
  mu[num_base_arms] = b ? 1.0 : delta * abar / (2.0 * num_base_arms);
  return mu;
}

inline AnLbInstance make_anlb_instance(int num_base_arms, double eps, double delta) {
  if (num_base_arms < 2) throw std::invalid_argument("make_anlb_instance: need N >= 2");
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("make_anlb_instance: eps must lie in [0,1]");
  if (!(delta > 0.0 && delta < 1.0 / 32.0)) throw std::invalid_argument("make_anlb_instance: delta must lie in (0, 2^-5)");
  AnLbInstance inst;
  inst.num_base_arms = num_base_arms;
  inst.eps = eps;
  inst.delta = delta;
  const double n = num_base_arms;
  for (int abar = 1; abar <= num_base_arms; ++abar) {
    const MeanVector low = anlb_mean(num_base_arms, delta, abar, false);
    inst.theta.atoms.push_back(low);
    inst.theta.weights.push_back((1.0 - eps) / n);
    inst.theta.atoms.push_back(anlb_mean(num_base_arms, delta, abar, true));
    inst.theta.weights.push_back(eps / n);
    inst.theta_prime.atoms.push_back(low);
    inst.theta_prime.weights.push_back(1.0 / n);
  }
  return inst;
}

enum class WhichPrior { Theta, ThetaPrime };

/// Exact k-TS under theta or theta' on the given mean vector, using the
/// structure of the posterior: once arm N is played its reward reveals the best
/// arm; otherwise each of the k draws selects arm N with probability eps, then
/// a revealed 1 - delta arm is replayed, else the lowest of k uniform draws from
/// the unplayed base arms is tried.
inline EpisodeTrace anlb_rollout_at(const AnLbInstance& inst, WhichPrior which, int k, int horizon,
                                    const MeanVector& mu, RngStream& rng) {
  if (horizon < 1 || k < 1) throw std::invalid_argument("anlb_rollout: H and k must be >= 1");
  const int n = inst.num_base_arms;
  const auto info_arm = static_cast<ActionIndex>(n);
  const double eps = which == WhichPrior::Theta ? inst.eps : 0.0;
  const double high = 1.0 - inst.delta;

  EpisodeTrace trace;
  trace.realized_mean = mu;
  trace.horizon = horizon;
  std::vector<ActionIndex> unplayed(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) unplayed[static_cast<std::size_t>(a)] = static_cast<ActionIndex>(a);
  std::optional<ActionIndex> revealed;  // best arm decoded from arm N
  std::optional<ActionIndex> found;     // base arm that returned 1 - delta

  for (int h = 0; h < horizon; ++h) {
    bool flag = false;
    for (int i = 0; i < k; ++i) flag = rng.bernoulli(eps) || flag;
    ActionIndex a;
    if (revealed) {
      a = *revealed;
    } else if (flag) {
      a = info_arm;
    } else if (found) {
      a = *found;
    } else {
      if (unplayed.empty()) throw std::logic_error("anlb_rollout: no unplayed base arm left");
      ActionIndex pick = std::numeric_limits<ActionIndex>::max();
      for (int i = 0; i < k; ++i) pick = std::min(pick, unplayed[rng.uniform_index(unplayed.size())]);
      a = pick;
    }
    const double r = mu[static_cast<Eigen::Index>(a)];
    trace.actions.push_back(a);
    trace.rewards.push_back(r);

    if (a == info_arm && !revealed) {
      if (r == 1.0) {
        revealed = info_arm;
      } else {
        const double x = 2.0 * n * r / inst.delta;
        const double abar = std::round(x);
        if (std::abs(x - abar) > 1e-9 * std::max(1.0, abar) || abar < 1 || abar > n) {
          throw NumericError("anlb_rollout: reward on arm N does not decode to a base arm");
        }
        revealed = static_cast<ActionIndex>(abar) - 1;
      }
    } else if (a < info_arm) {
      unplayed.erase(std::remove(unplayed.begin(), unplayed.end(), a), unplayed.end());
      if (r == high) found = a;
    }
  }
  return trace;
}

/// Environment drawn from theta; the policy uses `which`.
inline EpisodeTrace anlb_rollout(const AnLbInstance& inst, WhichPrior which, int k, int horizon, RngStream& rng) {
  const MeanVector mu = sample_mean(inst.theta, rng);
  return anlb_rollout_at(inst, which, k, horizon, mu, rng);
}

struct GapEstimate {
  double gap;
  double stderr_;
};

/// Paired Monte-Carlo estimate of R(theta, kTS(theta)) - R(theta, kTS(theta')).
inline GapEstimate anlb_reward_gap(const AnLbInstance& inst, int k, int horizon, long trials, RngStream& rng) {
  if (trials < 2) throw std::invalid_argument("anlb_reward_gap: need at least two trials");
  double sum = 0.0, sum_sq = 0.0;
  for (long t = 0; t < trials; ++t) {
    const MeanVector mu = sample_mean(inst.theta, rng);
    const double d = anlb_rollout_at(inst, WhichPrior::Theta, k, horizon, mu, rng).mean_reward() -
                     anlb_rollout_at(inst, WhichPrior::ThetaPrime, k, horizon, mu, rng).mean_reward();
    sum += d;
    sum_sq += d * d;
  }
  const double n = static_cast<double>(trials);
  const double mean = sum / n;
  return {mean, std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) / n)};
}

// ---------------------------------------------------------------------------
// Linear contextual bandit: reward of action a is N(<w, x_a>, obs_var) with
// fresh unit-norm contexts every step.

struct LinearCBEnv {
  GaussianPrior weight_prior;  // over R^d; obs_var is the reward noise variance
  int num_actions = 0;

  int dim() const { return static_cast<int>(weight_prior.mean.size()); }
};

/// A x d matrix of contexts, rows iid standard normal then l2-normalized.
inline Matrix sample_contexts(int num_actions, int dim, RngStream& rng) {
  Matrix x(num_actions, dim);
  for (int a = 0; a < num_actions; ++a) {
    double norm = 0.0;
    do {
      for (int j = 0; j < dim; ++j) x(a, j) = rng.normal();
      norm = x.row(a).norm();
    } while (norm == 0.0);
    x.row(a) /= norm;
  }
  return x;
}

/// Gaussian posterior over linear weights, updated in covariance form so that
/// singular (projected) priors remain usable.
struct LinearPosterior {
  Vector mean;
  Matrix cov;
  double obs_var = 1.0;

  explicit LinearPosterior(const GaussianPrior& prior) : mean(prior.mean), cov(prior.cov), obs_var(prior.obs_var) {
    validate(prior);
  }

  void update(const Vector& x, double reward) {
    const Vector cx = cov * x;
    const double s = x.dot(cx) + obs_var;
    const Vector gain = cx / s;
    mean += gain * (reward - x.dot(mean));
    cov = symmetrize(cov - gain * cx.transpose());
  }
};

inline ActionIndex lincb_select(const LinearPosterior& post, const Matrix& contexts, RngStream& rng) {
  const Vector w = mvn_sample(post.mean, post.cov, rng);
  return argmax_tiebreak(Vector(contexts * w));
}

struct LinCBTrace {
  EpisodeTrace trace;  // realized_mean holds the episode's weight vector
  std::vector<Matrix> contexts;
  std::vector<double> expected_rewards;  // <w, x_{a_h}>

  double mean_reward() const {
    double s = 0.0;
    for (double v : expected_rewards) s += v;
    return s;
  }
};

/// One episode at weight vector w. With a policy prior, actions come from TS
/// over the weight posterior; without one they are uniform.
inline LinCBTrace lincb_play_at(const LinearCBEnv& env, const Vector& w, const std::optional<GaussianPrior>& policy_prior,
                                int horizon, RngStream& rng) {
  const int d = env.dim();
  if (w.size() != d) throw std::invalid_argument("lincb_play: weight dimension mismatch");
  if (policy_prior && policy_prior->mean.size() != d) {
    throw std::invalid_argument("lincb_play: policy prior dimension mismatch");
  }
  LinCBTrace out;
  out.trace.realized_mean = w;
  out.trace.horizon = horizon;
  std::optional<LinearPosterior> post;
  if (policy_prior) post.emplace(*policy_prior);
  const double sd = std::sqrt(env.weight_prior.obs_var);
  for (int h = 0; h < horizon; ++h) {
    Matrix x = sample_contexts(env.num_actions, d, rng);
    const ActionIndex a = post ? lincb_select(*post, x, rng) : rng.uniform_index(static_cast<std::size_t>(env.num_actions));
    const Vector xa = x.row(static_cast<Eigen::Index>(a)).transpose();
    const double m = xa.dot(w);
    const double r = rng.normal(m, sd);
    if (post) post->update(xa, r);
    out.trace.actions.push_back(a);
    out.trace.rewards.push_back(r);
    out.expected_rewards.push_back(m);
    out.contexts.push_back(std::move(x));
  }
  return out;
}

inline LinCBTrace lincb_play_episode(const LinearCBEnv& env, const std::optional<GaussianPrior>& policy_prior,
                                     int horizon, RngStream& rng) {
  const Vector w = sample_mean(env.weight_prior, rng);
  return lincb_play_at(env, w, policy_prior, horizon, rng);
}

}  // namespace misprior
