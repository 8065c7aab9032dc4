#pragma once

#include "misprior/core.hpp"
#include "misprior/model.hpp"
#include "misprior/priors.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace misprior {

/// Per-arm pull counts and reward sums.
struct SufficientStats {
  std::vector<long> counts;
  Vector sums;

  SufficientStats() = default;
  explicit SufficientStats(std::size_t num_arms) : counts(num_arms, 0), sums(Vector::Zero(num_arms)) {}

  std::size_t num_arms() const { return counts.size(); }

  void add(ActionIndex a, double reward) {
    check_action(a, counts.size());
    ++counts[a];
    sums[a] += reward;
  }

  long total() const {
    long n = 0;
    for (long c : counts) n += c;
    return n;
  }
};

struct GaussianPosterior {
  MeanVector mean;
  CovMatrix cov;
};

namespace detail {

// S = D^{1/2} with D = diag(tau)/obs_var, and S xbar (zero where tau = 0).
inline std::pair<Vector, Vector> whitened_data(const SufficientStats& stats, double obs_var) {
  const auto n = static_cast<Eigen::Index>(stats.num_arms());
  Vector s(n), s_xbar(n);
  const double sd = std::sqrt(obs_var);
  for (Eigen::Index a = 0; a < n; ++a) {
    const double tau = static_cast<double>(stats.counts[a]);
    if (tau > 0) {
      s[a] = std::sqrt(tau) / sd;
      s_xbar[a] = stats.sums[a] / (sd * std::sqrt(tau));
    } else {
      s[a] = 0.0;
      s_xbar[a] = 0.0;
    }
  }
  return {s, s_xbar};
}

}  // namespace detail

/// Conjugate update of N(nu, Psi) on per-arm Gaussian observations:
///   cov = (Psi^-1 + D)^-1,  mean = cov (Psi^-1 nu + D xbar).
/// Evaluated as cov = Psi - Psi S K^-1 S Psi with K = I + S Psi S and S = D^{1/2},
/// which stays well defined for singular Psi.
inline GaussianPosterior gaussian_posterior(const GaussianPrior& prior, const SufficientStats& stats) {
  const auto n = prior.mean.size();
  if (static_cast<Eigen::Index>(stats.num_arms()) != n) {
    throw std::invalid_argument("gaussian_posterior: stats dimension mismatch");
  }
  if (stats.total() == 0) return {prior.mean, prior.cov};
  const auto [s, s_xbar] = detail::whitened_data(stats, prior.obs_var);
  const Matrix psi_s = prior.cov * s.asDiagonal();  // Psi S
  Matrix k = s.asDiagonal() * psi_s;                // S Psi S
  k.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(symmetrize(k));
  if (llt.info() != Eigen::Success) throw NumericError("gaussian_posterior: singular update");
  const Vector innovation = s_xbar - s.asDiagonal() * prior.mean;
  GaussianPosterior post;
  post.mean = prior.mean + psi_s * llt.solve(innovation);
  post.cov = symmetrize(prior.cov - psi_s * llt.solve(psi_s.transpose()));
  return post;
}

struct BetaPosterior {
  Vector alpha;
  Vector beta;
};

inline BetaPosterior beta_posterior(const BetaProductPrior& prior, const std::vector<long>& successes,
                                    const std::vector<long>& failures) {
  validate(prior);
  const auto n = prior.alpha.size();
  if (static_cast<Eigen::Index>(successes.size()) != n || static_cast<Eigen::Index>(failures.size()) != n) {
    throw std::invalid_argument("beta_posterior: count dimension mismatch");
  }
  BetaPosterior post{prior.alpha, prior.beta};
  for (Eigen::Index a = 0; a < n; ++a) {
    if (successes[a] < 0 || failures[a] < 0) throw std::invalid_argument("beta_posterior: negative count");
    post.alpha[a] += static_cast<double>(successes[a]);
    post.beta[a] += static_cast<double>(failures[a]);
  }
  return post;
}

inline constexpr double kCollapseThreshold = 1.0 - 1e-12;

/// Posterior over a fixed atom set, kept as log-weights. `weights` is the
/// normalized view, refreshed after every update.
struct DiscretePosterior {
  std::shared_ptr<const std::vector<MeanVector>> atoms;
  std::vector<double> logw;
  std::vector<double> weights;
  std::optional<std::size_t> collapsed;

  std::size_t num_arms() const { return atoms->empty() ? 0 : static_cast<std::size_t>(atoms->front().size()); }

  void normalize() {
    double top = -std::numeric_limits<double>::infinity();
    for (double l : logw) top = std::max(top, l);
    if (!std::isfinite(top)) throw NumericError("observation outside prior support");
    weights.resize(logw.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logw.size(); ++i) total += weights[i] = std::exp(logw[i] - top);
    collapsed.reset();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      weights[i] /= total;
      if (weights[i] > kCollapseThreshold) collapsed = i;
    }
  }
};

inline DiscretePosterior discrete_posterior(const DiscretePrior& prior) {
  validate(prior);
  DiscretePosterior post;
  post.atoms = std::make_shared<const std::vector<MeanVector>>(prior.atoms);
  post.logw.reserve(prior.weights.size());
  for (double w : prior.weights) {
    post.logw.push_back(w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity());
  }
  post.normalize();
  return post;
}

inline DiscretePosterior discrete_posterior_update(const DiscretePosterior& post, ActionIndex action,
                                                   double reward, const RewardModel& model) {
  check_action(action, post.num_arms());
  DiscretePosterior next = post;
  const auto& atoms = *post.atoms;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (std::isinf(next.logw[i]) && next.logw[i] < 0) continue;
    next.logw[i] += log_likelihood(model, atoms[i][static_cast<Eigen::Index>(action)], reward);
  }
  next.normalize();
  return next;
}

/// log evidence of the data under N(mu, cov) priors, up to a data-only constant:
///   -1/2 (log det(I + cov D) + |xbar - mu|_B^2),  B = D - D (D + cov^-1)^-1 D.
/// Uses B = S K^-1 S and det(I + cov D) = det K with K = I + S cov S.
inline double log_marginal_likelihood_gaussian(const MeanVector& mu, const CovMatrix& cov,
                                               const SufficientStats& stats, double obs_var) {
  if (!(obs_var > 0.0)) throw std::invalid_argument("log_marginal_likelihood_gaussian: obs_var must be positive");
  const auto n = mu.size();
  if (cov.rows() != n || static_cast<Eigen::Index>(stats.num_arms()) != n) {
    throw std::invalid_argument("log_marginal_likelihood_gaussian: dimension mismatch");
  }
  const auto [s, s_xbar] = detail::whitened_data(stats, obs_var);
  Matrix k = s.asDiagonal() * cov * s.asDiagonal();
  k.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(symmetrize(k));
  if (llt.info() != Eigen::Success) throw NumericError("log_marginal_likelihood_gaussian: singular system");
  const Matrix l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const Vector resid = s_xbar - s.asDiagonal() * mu;  // S (xbar - mu)
  const double quad = resid.dot(llt.solve(resid));
  return -0.5 * (log_det + quad);
}

struct EpisodeSummary {
  double xbar;
  long tau;
};

/// Consistent estimate of the prior mean from adaptively stopped 1-arm episodes:
/// sum_i xbar_i (1 - s_i) / sum_i (1 - s_i),  s_i = obs_var / (prior_var tau_i + obs_var).
inline double mle_weighted_mean(const std::vector<EpisodeSummary>& episodes, double obs_var, double prior_var) {
  if (episodes.empty()) throw std::invalid_argument("mle_weighted_mean: no episodes");
  if (!(obs_var > 0.0) || !(prior_var > 0.0)) throw std::invalid_argument("mle_weighted_mean: variances must be positive");
  double num = 0.0, den = 0.0;
  for (const auto& [xbar, tau] : episodes) {
    if (tau < 1) throw std::invalid_argument("mle_weighted_mean: tau must be >= 1");
    const double w = 1.0 - obs_var / (prior_var * static_cast<double>(tau) + obs_var);
    num += xbar * w;
    den += w;
  }
  return num / den;
}

}  // namespace misprior
