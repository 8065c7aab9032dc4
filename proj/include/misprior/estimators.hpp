#pragma once

#include "misprior/core.hpp"
#include "misprior/envs.hpp"
#include "misprior/priors.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace misprior {

/// Raised when method-of-moments inversion has no valid solution.
class DegenerateMoments : public std::runtime_error {
 public:
  DegenerateMoments() : std::runtime_error("degenerate moments") {}
};

struct BetaBinomialMoments {
  double m1;
  double m2;
};

/// First two raw moments of Binomial(n, p) with p ~ Beta(alpha, beta).
inline BetaBinomialMoments beta_binomial_moments(double alpha, double beta, int n) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("beta_binomial_moments: parameters must be positive");
  if (n < 2) throw std::invalid_argument("beta_binomial_moments: n must be >= 2");
  const double s = alpha + beta;
  const double m1 = n * alpha / s;
  const double m2 = n * alpha * (n * (1.0 + alpha) + beta) / (s * (1.0 + s));
  return {m1, m2};
}

struct BetaBinomialFit {
  double alpha_hat;
  double beta_hat;
  double m1_hat;
  double m2_hat;
};

/// Inverts the moment map. Throws DegenerateMoments when the inversion is
/// undefined or leaves the positive quadrant.
inline BetaBinomialFit beta_binomial_mom(double m1, double m2, int n) {
  if (n < 2) throw std::invalid_argument("beta_binomial_mom: n must be >= 2");
  if (!(m1 > 0.0)) throw DegenerateMoments();
  const double den = n * (m2 / m1 - m1 - 1.0) + m1;
  if (!(den > 1e-12)) throw DegenerateMoments();
  const double a = (n * m1 - m2) / den;
  const double b = (n - m1) * (n - m2 / m1) / den;
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) throw DegenerateMoments();
  return {a, b, m1, m2};
}

/// Plug-in moments of success counts in [0, n], then inversion.
inline BetaBinomialFit beta_binomial_mom(const std::vector<int>& samples, int n) {
  if (samples.empty()) throw std::invalid_argument("beta_binomial_mom: no samples");
  if (n < 2) throw std::invalid_argument("beta_binomial_mom: n must be >= 2");
  double s1 = 0.0, s2 = 0.0;
  for (int x : samples) {
    if (x < 0 || x > n) throw std::invalid_argument("beta_binomial_mom: sample outside [0, n]");
    s1 += x;
    s2 += static_cast<double>(x) * x;
  }
  const double t = static_cast<double>(samples.size());
  return beta_binomial_mom(s1 / t, s2 / t, n);
}

/// One uniformly chosen action and its reward.
struct ActionReward {
  ActionIndex a;
  double r;
};

/// Two independent uniform actions from one episode.
struct PairRecord {
  ActionIndex a;
  double r;
  ActionIndex b;
  double s;
};

/// nu_hat = (A/T) sum_t r_t e_{a_t}.
inline MeanVector gaussian_mean_first_round(const std::vector<ActionReward>& log, std::size_t num_actions) {
  if (log.empty()) throw std::invalid_argument("gaussian_mean_first_round: empty log");
  Vector nu = Vector::Zero(static_cast<Eigen::Index>(num_actions));
  for (const auto& [a, r] : log) {
    check_action(a, num_actions);
    nu[static_cast<Eigen::Index>(a)] += r;
  }
  return nu * (static_cast<double>(num_actions) / static_cast<double>(log.size()));
}

/// Psi_hat = (A^2/2T) sum_t (r_t - nu_a)(s_t - nu_b)(e_a e_b^T + e_b e_a^T), mean known.
inline CovMatrix gaussian_cov_pairs(const std::vector<PairRecord>& log, const MeanVector& nu, std::size_t num_actions) {
  if (log.empty()) throw std::invalid_argument("gaussian_cov_pairs: empty log");
  if (static_cast<std::size_t>(nu.size()) != num_actions) throw std::invalid_argument("gaussian_cov_pairs: mean dimension mismatch");
  Matrix acc = Matrix::Zero(nu.size(), nu.size());
  for (const auto& rec : log) {
    check_action(rec.a, num_actions);
    check_action(rec.b, num_actions);
    const auto a = static_cast<Eigen::Index>(rec.a), b = static_cast<Eigen::Index>(rec.b);
    const double v = (rec.r - nu[a]) * (rec.s - nu[b]);
    acc(a, b) += v;
    acc(b, a) += v;
  }
  const double A = static_cast<double>(num_actions);
  return acc * (A * A / (2.0 * static_cast<double>(log.size())));
}

/// Mean-free variant from episode pairs sharing (a, b): consecutive records
/// 2i and 2i+1 form a pair.
///   Psi_hat = (A^2/4T) sum_t (r_t - r~_t)(s_t - s~_t)(e_a e_b^T + e_b e_a^T),  T pairs.
inline CovMatrix gaussian_cov_diff(const std::vector<PairRecord>& log, std::size_t num_actions) {
  if (log.empty()) throw std::invalid_argument("gaussian_cov_diff: empty log");
  if (log.size() % 2 != 0) throw std::invalid_argument("gaussian_cov_diff: odd number of records; episodes must be paired");
  const auto n = static_cast<Eigen::Index>(num_actions);
  Matrix acc = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < log.size(); i += 2) {
    const auto& x = log[i];
    const auto& y = log[i + 1];
    if (x.a != y.a || x.b != y.b) throw std::invalid_argument("gaussian_cov_diff: paired episodes must share actions");
    check_action(x.a, num_actions);
    check_action(x.b, num_actions);
    const auto a = static_cast<Eigen::Index>(x.a), b = static_cast<Eigen::Index>(x.b);
    const double v = (x.r - y.r) * (x.s - y.s);
    acc(a, b) += v;
    acc(b, a) += v;
  }
  const double A = static_cast<double>(num_actions);
  const double pairs = static_cast<double>(log.size() / 2);
  return acc * (A * A / (4.0 * pairs));
}

struct GaussianPriorEstimate {
  MeanVector mean_hat;
  CovMatrix cov_hat;  // PSD
  CovMatrix raw_cov;
  long skipped = 0;   // episodes not usable by the estimator
};

/// Estimate from episodes whose H actions were all uniform. Per episode,
/// m_i = (A/H) sum_h r_h e_{a_h} is unbiased for mu. Second moments:
///   diagonal     (A/H) sum_h 1{a_h = a} r_h^2 - obs_var
///   off-diagonal (H/(H-1)) m_ia m_ib   (pairs of distinct steps; 0 when H = 1)
/// Psi_hat is their average minus nu_hat nu_hat^T, projected onto the PSD cone.
inline GaussianPriorEstimate gaussian_full_episode(const std::vector<EpisodeTrace>& log, std::size_t num_actions,
                                                   int horizon, double obs_var) {
  if (log.empty()) throw std::invalid_argument("gaussian_full_episode: empty log");
  if (horizon < 1) throw std::invalid_argument("gaussian_full_episode: horizon must be >= 1");
  const auto n = static_cast<Eigen::Index>(num_actions);
  const double A = static_cast<double>(num_actions), H = horizon;
  const double off_scale = horizon > 1 ? H / (H - 1.0) : 0.0;
  Vector sum_m = Vector::Zero(n);
  Matrix sum_second = Matrix::Zero(n, n);
  for (const auto& ep : log) {
    if (static_cast<int>(ep.actions.size()) != horizon || ep.rewards.size() != ep.actions.size()) {
      throw std::invalid_argument("gaussian_full_episode: episode length differs from horizon");
    }
    Vector m = Vector::Zero(n), sq = Vector::Zero(n);
    for (std::size_t h = 0; h < ep.actions.size(); ++h) {
      check_action(ep.actions[h], num_actions);
      const auto a = static_cast<Eigen::Index>(ep.actions[h]);
      m[a] += ep.rewards[h];
      sq[a] += ep.rewards[h] * ep.rewards[h];
    }
    m *= A / H;
    sq *= A / H;
    Matrix second = off_scale * (m * m.transpose());
    second.diagonal() = sq.array() - obs_var;
    sum_m += m;
    sum_second += second;
  }
  const double t = static_cast<double>(log.size());
  GaussianPriorEstimate est;
  est.mean_hat = sum_m / t;
  est.raw_cov = symmetrize(sum_second / t - est.mean_hat * est.mean_hat.transpose());
  est.cov_hat = psd_project(est.raw_cov);
  return est;
}

/// Per-episode OLS weights w_i = Sigma_i^-1 sum_h x_h r_h with Sigma_i = sum_h x_h x_h^T;
/// nu_hat their mean and Psi_hat = mean(w_i w_i^T - obs_var Sigma_i^-1) - nu_hat nu_hat^T.
/// Episodes with a singular design are skipped and counted.
inline GaussianPriorEstimate lincb_prior_estimator(const std::vector<LinCBTrace>& log, int dim, double obs_var) {
  if (log.empty()) throw std::invalid_argument("lincb_prior_estimator: empty log");
  Vector sum_w = Vector::Zero(dim);
  Matrix sum_second = Matrix::Zero(dim, dim);
  long used = 0, skipped = 0;
  for (const auto& ep : log) {
    Matrix gram = Matrix::Zero(dim, dim);
    Vector xr = Vector::Zero(dim);
    for (std::size_t h = 0; h < ep.trace.actions.size(); ++h) {
      const Vector x = ep.contexts[h].row(static_cast<Eigen::Index>(ep.trace.actions[h])).transpose();
      if (x.size() != dim) throw std::invalid_argument("lincb_prior_estimator: context dimension mismatch");
      gram.noalias() += x * x.transpose();
      xr += x * ep.trace.rewards[h];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 1e-10 * scale) {
      ++skipped;
      continue;
    }
    const Matrix& v = eig.eigenvectors();
    const Matrix inv = v * eig.eigenvalues().cwiseInverse().asDiagonal() * v.transpose();
    const Vector w = inv * xr;
    sum_w += w;
    sum_second += w * w.transpose() - obs_var * inv;
    ++used;
  }
  if (used == 0) throw NumericError("lincb_prior_estimator: every episode has a singular design");
  GaussianPriorEstimate est;
  est.mean_hat = sum_w / static_cast<double>(used);
  est.raw_cov = symmetrize(sum_second / static_cast<double>(used) - est.mean_hat * est.mean_hat.transpose());
  est.cov_hat = psd_project(est.raw_cov);
  est.skipped = skipped;
  return est;
}

/// Empirical task frequencies over episodes whose posterior collapsed; uniform
/// if none did.
inline std::vector<double> discrete_prior_freq(const std::vector<std::optional<std::size_t>>& outcomes,
                                               std::size_t num_atoms) {
  if (num_atoms == 0) throw std::invalid_argument("discrete_prior_freq: no atoms");
  std::vector<double> counts(num_atoms, 0.0);
  double total = 0.0;
  for (const auto& o : outcomes) {
    if (!o) continue;
    if (*o >= num_atoms) throw std::out_of_range("discrete_prior_freq: atom index out of range");
    counts[*o] += 1.0;
    total += 1.0;
  }
  if (total == 0.0) return std::vector<double>(num_atoms, 1.0 / static_cast<double>(num_atoms));
  for (double& c : counts) c /= total;
  return counts;
}

}  // namespace misprior
