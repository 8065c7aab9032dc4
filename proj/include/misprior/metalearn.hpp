#pragma once

#include "misprior/belief.hpp"
#include "misprior/bounds.hpp"
#include "misprior/core.hpp"
#include "misprior/envs.hpp"
#include "misprior/estimators.hpp"
#include "misprior/policies.hpp"
#include "misprior/presets.hpp"
#include "misprior/priors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace misprior {

enum class Baseline { Oracle, Misspecified, MetaETC };

enum class EstimatorKind {
  Full,   // Gaussian: uniform play for all H steps of each exploration episode
  NoCov,  // Gaussian: first step only, Psi fixed to I, interim TS on the running mean
  MoM,    // Beta-Bernoulli method of moments
  OLS,    // linear CB per-episode least squares
  Freq,   // discrete collapse frequencies
};

inline std::string to_string(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::BetaBernoulli: return "beta-bernoulli";
    case Family::Discrete: return "discrete";
    case Family::LinearCB: return "linear-cb";
  }
  return "?";
}

inline std::string to_string(Baseline b) {
  switch (b) {
    case Baseline::Oracle: return "oracle";
    case Baseline::Misspecified: return "misspecified";
    case Baseline::MetaETC: return "meta-etc";
  }
  return "?";
}

inline std::string to_string(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::Full: return "full";
    case EstimatorKind::NoCov: return "no-cov";
    case EstimatorKind::MoM: return "mom";
    case EstimatorKind::OLS: return "ols";
    case EstimatorKind::Freq: return "freq";
  }
  return "?";
}

inline EstimatorKind default_estimator(Family f) {
  switch (f) {
    case Family::Gaussian: return EstimatorKind::Full;
    case Family::BetaBernoulli: return EstimatorKind::MoM;
    case Family::Discrete: return EstimatorKind::Freq;
    case Family::LinearCB: return EstimatorKind::OLS;
  }
  return EstimatorKind::Full;
}

struct MetaConfig {
  int num_episodes = 1000;
  int explore_episodes = 0;
  int horizon = 10;
  PolicyKind base_policy = TSKind{};
  Baseline baseline = Baseline::Oracle;
  EstimatorKind estimator = EstimatorKind::Full;
  int replicates = 2;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::optional<Prior> mis_prior;  // overrides the instance default for Misspecified
};

inline void validate(const MetaConfig& c, const Instance& inst) {
  if (c.num_episodes < 1) throw std::invalid_argument("num_episodes must be >= 1");
  if (c.explore_episodes < 0 || c.explore_episodes > c.num_episodes) {
    throw std::invalid_argument("explore_episodes must lie in [0, num_episodes]");
  }
  if (c.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (c.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  validate(c.base_policy);
  if (inst.family == Family::LinearCB && !std::holds_alternative<TSKind>(c.base_policy)) {
    throw std::invalid_argument("base_policy: linear CB supports TS only");
  }
  if (c.baseline != Baseline::MetaETC) return;
  const bool ok = [&] {
    switch (inst.family) {
      case Family::Gaussian: return c.estimator == EstimatorKind::Full || c.estimator == EstimatorKind::NoCov;
      case Family::BetaBernoulli: return c.estimator == EstimatorKind::MoM;
      case Family::Discrete: return c.estimator == EstimatorKind::Freq;
      case Family::LinearCB: return c.estimator == EstimatorKind::OLS;
    }
    return false;
  }();
  if (!ok) throw std::invalid_argument("estimator '" + to_string(c.estimator) + "' does not fit family " + to_string(inst.family));
  if (c.explore_episodes > 0 && c.horizon < 2 &&
      (inst.family == Family::BetaBernoulli || inst.family == Family::LinearCB)) {
    throw std::invalid_argument("horizon must be >= 2 for this estimator");
  }
}

/// Prior used when an estimator cannot produce one.
inline Prior fallback_prior(const Instance& inst) {
  const auto n = static_cast<Eigen::Index>(inst.num_actions);
  switch (inst.family) {
    case Family::Gaussian: {
      const auto& g = std::get<GaussianPrior>(inst.true_prior);
      return GaussianPrior{MeanVector::Zero(n), CovMatrix::Identity(n, n), g.obs_var};
    }
    case Family::LinearCB: {
      const auto& g = std::get<GaussianPrior>(inst.true_prior);
      const auto d = g.mean.size();
      return GaussianPrior{MeanVector::Zero(d), CovMatrix::Identity(d, d), g.obs_var};
    }
    case Family::BetaBernoulli: return BetaProductPrior{Vector::Ones(n), Vector::Ones(n)};
    case Family::Discrete: return uniform_discrete(std::get<DiscretePrior>(inst.true_prior).atoms);
  }
  throw std::logic_error("fallback_prior: unknown family");
}

/// TV (or its Pinsker upper bound) between an estimate and the truth.
inline double divergence_to_truth(const Prior& est, const Prior& truth) {
  if (const auto* g = std::get_if<GaussianPrior>(&est)) {
    const auto& t = std::get<GaussianPrior>(truth);
    double kl = kl_gaussian(*g, t);  // +inf when the estimate is singular
    if (Eigen::LLT<Matrix>(g->cov).info() == Eigen::Success) kl = std::min(kl, kl_gaussian(t, *g));
    return std::isfinite(kl) ? pinsker(kl) : 1.0;
  }
  if (const auto* b = std::get_if<BetaProductPrior>(&est)) return tv_upper_beta(*b, std::get<BetaProductPrior>(truth));
  return tv_discrete(std::get<DiscretePrior>(est), std::get<DiscretePrior>(truth));
}

struct ReplicateOutcome {
  std::vector<double> rewards;            // per episode, sum_h mu_{a_h}
  std::vector<ActionIndex> first_actions; // per episode
  std::optional<Prior> estimate;
  double divergence = std::numeric_limits<double>::quiet_NaN();
  long fallback_events = 0;
};

namespace detail {

struct EpisodeResult {
  double reward;
  ActionIndex first_action;
  std::vector<ActionIndex> actions;
  std::vector<double> rewards;
};

/// Runs one MAB episode. `forced` fixes the first action when set. Without a
/// policy every action is uniform. A discrete belief whose observation falls
/// outside its support is rebuilt from `retry_prior` and the episode so far is
/// replayed into it.
inline EpisodeResult run_mab_episode(const MeanVector& mu, const std::optional<Policy>& policy, int horizon,
                                     const RewardModel& model, RngStream& rng, std::optional<ActionIndex> forced,
                                     const std::optional<Prior>& retry_prior, long& fallback_events) {
  const auto n = static_cast<std::size_t>(mu.size());
  EpisodeResult out{0.0, 0, {}, {}};
  std::optional<Belief> belief;
  if (policy) belief.emplace(Belief::from_prior(policy->prior, model));
  for (int h = 0; h < horizon; ++h) {
    ActionIndex a;
    if (h == 0 && forced) a = *forced;
    else if (belief) a = select_action(policy->kind, *belief, rng);
    else a = rng.uniform_index(n);
    const double r = sample_reward(model, mu[static_cast<Eigen::Index>(a)], rng);
    out.actions.push_back(a);
    out.rewards.push_back(r);
    out.reward += mu[static_cast<Eigen::Index>(a)];
    if (h == 0) out.first_action = a;
    if (!belief || h + 1 == horizon) continue;
    try {
      belief->observe(a, r);
    } catch (const NumericError&) {
      if (!retry_prior) throw;
      ++fallback_events;
      belief.emplace(Belief::from_prior(*retry_prior, model));
      for (std::size_t i = 0; i < out.actions.size(); ++i) belief->observe(out.actions[i], out.rewards[i]);
    }
  }
  return out;
}

}  // namespace detail

/// One replicate of the episodic protocol. MetaETC explores for the first
/// explore_episodes episodes, fits its estimator, then runs base_policy with
/// the fitted prior; Oracle and Misspecified run base_policy throughout.
inline ReplicateOutcome run_meta(const MetaConfig& cfg, const Instance& inst, RngStream& rng) {
  validate(cfg, inst);
  const int T = cfg.num_episodes, T0 = cfg.explore_episodes, H = cfg.horizon;
  const auto A = static_cast<std::size_t>(inst.num_actions);
  const Prior fallback = fallback_prior(inst);
  const bool meta = cfg.baseline == Baseline::MetaETC;

  ReplicateOutcome out;
  out.rewards.reserve(static_cast<std::size_t>(T));
  out.first_actions.reserve(static_cast<std::size_t>(T));

  Prior committed = cfg.baseline == Baseline::Oracle ? inst.true_prior
                    : cfg.baseline == Baseline::Misspecified ? cfg.mis_prior.value_or(inst.misspecified)
                                                             : fallback;
  std::optional<Prior> retry;
  if (inst.family == Family::Discrete) retry = fallback;

  // exploration logs
  std::vector<EpisodeTrace> full_log;
  std::vector<ActionReward> first_round;
  std::vector<std::vector<int>> successes(A);
  std::vector<std::optional<std::size_t>> collapses;
  std::vector<LinCBTrace> lincb_log;
  Vector nocov_sum = Vector::Zero(static_cast<Eigen::Index>(A));

  auto fit = [&]() -> Prior {
    if (T0 == 0) return fallback;
    try {
      switch (cfg.estimator) {
        case EstimatorKind::Full: {
          const double s2 = std::get<GaussianPrior>(inst.true_prior).obs_var;
          const auto est = gaussian_full_episode(full_log, A, H, s2);
          return GaussianPrior{est.mean_hat, est.cov_hat, s2};
        }
        case EstimatorKind::NoCov: {
          const double s2 = std::get<GaussianPrior>(inst.true_prior).obs_var;
          const auto n = static_cast<Eigen::Index>(A);
          return GaussianPrior{gaussian_mean_first_round(first_round, A), CovMatrix::Identity(n, n), s2};
        }
        case EstimatorKind::MoM: {
          BetaProductPrior p{Vector::Ones(static_cast<Eigen::Index>(A)), Vector::Ones(static_cast<Eigen::Index>(A))};
          for (std::size_t a = 0; a < A; ++a) {
            try {
              if (successes[a].empty()) throw DegenerateMoments();
              const auto f = beta_binomial_mom(successes[a], H);
              p.alpha[static_cast<Eigen::Index>(a)] = f.alpha_hat;
              p.beta[static_cast<Eigen::Index>(a)] = f.beta_hat;
            } catch (const DegenerateMoments&) {
              ++out.fallback_events;
            }
          }
          return p;
        }
        case EstimatorKind::OLS: {
          const auto& g = std::get<GaussianPrior>(inst.true_prior);
          const auto est = lincb_prior_estimator(lincb_log, static_cast<int>(g.mean.size()), g.obs_var);
          return GaussianPrior{est.mean_hat, est.cov_hat, g.obs_var};
        }
        case EstimatorKind::Freq: {
          const auto& d = std::get<DiscretePrior>(inst.true_prior);
          return DiscretePrior{d.atoms, discrete_prior_freq(collapses, d.atoms.size())};
        }
      }
    } catch (const std::exception&) {
      ++out.fallback_events;
    }
    return fallback;
  };

  for (int t = 0; t < T; ++t) {
    const bool exploring = meta && t < T0;
    if (meta && t == T0) {
      committed = fit();
      out.estimate = committed;
      if (T0 > 0) out.divergence = divergence_to_truth(committed, inst.true_prior);
    }

    if (inst.family == Family::LinearCB) {
      const LinearCBEnv env{std::get<GaussianPrior>(inst.true_prior), inst.num_actions};
      std::optional<GaussianPrior> pp;
      if (!exploring) pp = std::get<GaussianPrior>(committed);
      LinCBTrace tr = lincb_play_episode(env, pp, H, rng);
      out.rewards.push_back(tr.mean_reward());
      out.first_actions.push_back(tr.trace.actions.front());
      if (exploring) lincb_log.push_back(std::move(tr));
      continue;
    }

    const MeanVector mu = sample_mean(inst.true_prior, rng);
    std::optional<Policy> policy;
    std::optional<ActionIndex> forced;
    if (!exploring) {
      policy = Policy{cfg.base_policy, committed};
    } else if (cfg.estimator == EstimatorKind::NoCov) {
      const auto n = static_cast<Eigen::Index>(A);
      const MeanVector nu_t = t == 0 ? MeanVector::Zero(n) : MeanVector(nocov_sum * (static_cast<double>(A) / t));
      policy = Policy{TSKind{}, GaussianPrior{nu_t, CovMatrix::Identity(n, n), std::get<GaussianPrior>(inst.true_prior).obs_var}};
      forced = rng.uniform_index(A);
    } else if (cfg.estimator == EstimatorKind::MoM) {
      forced = static_cast<ActionIndex>(t % static_cast<int>(A));
    }

    if (exploring && cfg.estimator == EstimatorKind::MoM) {
      // one arm for the whole episode
      const ActionIndex a = *forced;
      int wins = 0;
      double score = 0.0;
      for (int h = 0; h < H; ++h) {
        wins += sample_reward(inst.model, mu[static_cast<Eigen::Index>(a)], rng) > 0.5 ? 1 : 0;
        score += mu[static_cast<Eigen::Index>(a)];
      }
      successes[a].push_back(wins);
      out.rewards.push_back(score);
      out.first_actions.push_back(a);
      continue;
    }

    if (exploring && cfg.estimator == EstimatorKind::Freq) {
      // uniform play while tracking the posterior from the uniform task prior
      DiscreteBelief belief(std::get<DiscretePrior>(fallback), inst.model);
      double score = 0.0;
      ActionIndex first = 0;
      for (int h = 0; h < H; ++h) {
        const ActionIndex a = rng.uniform_index(A);
        if (h == 0) first = a;
        const double r = sample_reward(inst.model, mu[static_cast<Eigen::Index>(a)], rng);
        score += mu[static_cast<Eigen::Index>(a)];
        belief.observe(a, r);
      }
      collapses.push_back(belief.posterior().collapsed);
      out.rewards.push_back(score);
      out.first_actions.push_back(first);
      continue;
    }

    const bool uniform = exploring && cfg.estimator == EstimatorKind::Full;
    const auto ep = detail::run_mab_episode(mu, uniform ? std::nullopt : policy, H, inst.model, rng, forced, retry,
                                            out.fallback_events);
    out.rewards.push_back(ep.reward);
    out.first_actions.push_back(ep.first_action);
    if (exploring && cfg.estimator == EstimatorKind::Full) {
      EpisodeTrace tr;
      tr.realized_mean = mu;
      tr.actions = ep.actions;
      tr.rewards = ep.rewards;
      tr.horizon = H;
      full_log.push_back(std::move(tr));
    } else if (exploring && cfg.estimator == EstimatorKind::NoCov) {
      first_round.push_back({ep.actions.front(), ep.rewards.front()});
      nocov_sum[static_cast<Eigen::Index>(ep.actions.front())] += ep.rewards.front();
    }
  }
  if (meta && T0 == T) {
    out.estimate = fit();
    if (T0 > 0) out.divergence = divergence_to_truth(*out.estimate, inst.true_prior);
  }
  return out;
}

struct MetaResult {
  std::string label;
  int num_episodes = 0;
  int explore_episodes = 0;
  std::vector<double> mean;            // per-episode reward, mean over replicates
  std::vector<double> stderr_;         // standard error of the above
  std::vector<double> running_mean;    // cumulative average per-episode reward
  std::vector<double> running_stderr;
  std::vector<std::vector<double>> per_replicate;
  std::vector<std::optional<Prior>> estimates;
  std::vector<double> divergences;
  std::vector<long> first_action_counts;  // over all episodes and replicates
  long fallback_events = 0;
};

struct MeanSe {
  double mean;
  double se;
};

inline MeanSe mean_and_se(const std::vector<double>& xs) {
  if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double n = static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += x;
  const double m = s / n;
  if (xs.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

/// Replicate r uses RngStream(seed, r). Up to `jobs` replicates run at once;
/// results are merged in replicate order, so output does not depend on jobs.
inline MetaResult run_replicates(const MetaConfig& cfg, const Instance& inst, std::string label = {}) {
  validate(cfg, inst);
  if (cfg.replicates < 2) throw std::invalid_argument("replicates must be >= 2");
  const int R = cfg.replicates;
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(R));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int r = next++; r < R; r = next++) {
      try {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(r));
        outcomes[static_cast<std::size_t>(r)] = run_meta(cfg, inst, rng);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int jobs = std::min(cfg.jobs, R);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const int T = cfg.num_episodes;
  MetaResult res;
  res.label = std::move(label);
  res.num_episodes = T;
  res.explore_episodes = cfg.baseline == Baseline::MetaETC ? cfg.explore_episodes : 0;
  res.first_action_counts.assign(static_cast<std::size_t>(inst.num_actions), 0);
  std::vector<std::vector<double>> running(static_cast<std::size_t>(R));
  for (int r = 0; r < R; ++r) {
    auto& o = outcomes[static_cast<std::size_t>(r)];
    auto& run = running[static_cast<std::size_t>(r)];
    run.resize(static_cast<std::size_t>(T));
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
      acc += o.rewards[static_cast<std::size_t>(t)];
      run[static_cast<std::size_t>(t)] = acc / (t + 1);
    }
    for (ActionIndex a : o.first_actions) ++res.first_action_counts[a];
    res.estimates.push_back(o.estimate);
    res.divergences.push_back(o.divergence);
    res.fallback_events += o.fallback_events;
    res.per_replicate.push_back(std::move(o.rewards));
  }
  std::vector<double> col(static_cast<std::size_t>(R)), col_run(static_cast<std::size_t>(R));
  for (int t = 0; t < T; ++t) {
    for (int r = 0; r < R; ++r) {
      col[static_cast<std::size_t>(r)] = res.per_replicate[static_cast<std::size_t>(r)][static_cast<std::size_t>(t)];
      col_run[static_cast<std::size_t>(r)] = running[static_cast<std::size_t>(r)][static_cast<std::size_t>(t)];
    }
    const auto e = mean_and_se(col);
    const auto c = mean_and_se(col_run);
    res.mean.push_back(e.mean);
    res.stderr_.push_back(e.se);
    res.running_mean.push_back(c.mean);
    res.running_stderr.push_back(c.se);
  }
  return res;
}

/// Per-replicate average reward over episodes [from, to), summarized across replicates.
inline MeanSe window_reward(const MetaResult& res, int from, int to) {
  if (from < 0 || to > res.num_episodes || from >= to) throw std::invalid_argument("window_reward: bad window");
  std::vector<double> avgs;
  for (const auto& series : res.per_replicate) {
    double s = 0.0;
    for (int t = from; t < to; ++t) s += series[static_cast<std::size_t>(t)];
    avgs.push_back(s / (to - from));
  }
  return mean_and_se(avgs);
}

/// Paired difference a - b of window rewards, replicate by replicate.
inline MeanSe window_difference(const MetaResult& a, const MetaResult& b, int from, int to) {
  if (a.per_replicate.size() != b.per_replicate.size()) throw std::invalid_argument("window_difference: replicate count mismatch");
  std::vector<double> d;
  for (std::size_t r = 0; r < a.per_replicate.size(); ++r) {
    double s = 0.0;
    for (int t = from; t < to; ++t) s += a.per_replicate[r][static_cast<std::size_t>(t)] - b.per_replicate[r][static_cast<std::size_t>(t)];
    d.push_back(s / (to - from));
  }
  return mean_and_se(d);
}

struct Envelope {
  std::vector<double> values;
  std::vector<std::size_t> best;  // index of the config attaining each point
};

/// Pointwise max over configurations of the given series.
inline Envelope upper_envelope(const std::vector<std::vector<double>>& series) {
  Envelope env;
  if (series.empty()) return env;
  const std::size_t T = series.front().size();
  for (const auto& s : series) {
    if (s.size() != T) throw std::invalid_argument("upper_envelope: series lengths differ");
  }
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < series.size(); ++c) {
      if (series[c][t] > series[arg][t]) arg = c;
    }
    env.values.push_back(series[arg][t]);
    env.best.push_back(arg);
  }
  return env;
}

inline Envelope upper_envelope(const std::vector<const MetaResult*>& results) {
  std::vector<std::vector<double>> s;
  for (const auto* r : results) s.push_back(r->running_mean);
  return upper_envelope(s);
}

struct SensitivityResult {
  long n;
  double tv;
  double B;
  double bound;
  double gap;
  double gap_stderr;
};

/// Paired Monte-Carlo estimate of R(theta, alg(theta)) - R(theta, alg(theta'))
/// against 2 n H^2 eps B with exact discrete TV and support diameter.
inline SensitivityResult sensitivity_experiment(const DiscretePrior& theta, const DiscretePrior& theta_prime,
                                                const PolicyKind& kind, int horizon, long trials,
                                                const RewardModel& model, RngStream& rng) {
  if (trials < 2) throw std::invalid_argument("sensitivity_experiment: need at least two trials");
  const Policy well{kind, theta};
  const Policy mis{kind, theta_prime};
  SensitivityResult res{};
  res.n = monte_carlo_n(well);
  res.tv = tv_discrete(theta, theta_prime);
  res.B = support_diameter(theta);
  res.bound = sensitivity_bound(static_cast<int>(res.n), horizon, res.tv, BoundedTail{res.B}, num_arms(theta));
  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(trials));
  for (long t = 0; t < trials; ++t) {
    const MeanVector mu = sample_mean(theta, rng);
    diffs.push_back(play_episode_at(mu, well, horizon, model, rng).mean_reward() -
                    play_episode_at(mu, mis, horizon, model, rng).mean_reward());
  }
  const auto ms = mean_and_se(diffs);
  res.gap = ms.mean;
  res.gap_stderr = ms.se;
  return res;
}

}  // namespace misprior
