#pragma once

#include "misprior/core.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <variant>
#include <vector>

namespace misprior {

/// N(mean, cov) over arm means; rewards are N(mu_a, obs_var).
struct GaussianPrior {
  MeanVector mean;
  CovMatrix cov;
  double obs_var = 1.0;
};

/// Independent Beta(alpha_a, beta_a) per arm.
struct BetaProductPrior {
  Vector alpha;
  Vector beta;
};

/// Finite mixture of point masses over mean vectors.
struct DiscretePrior {
  std::vector<MeanVector> atoms;
  std::vector<double> weights;
};

using Prior = std::variant<GaussianPrior, BetaProductPrior, DiscretePrior>;

inline void validate(const GaussianPrior& p) {
  if (p.cov.rows() != p.mean.size() || p.cov.cols() != p.mean.size()) {
    throw std::invalid_argument("GaussianPrior: cov must be A x A");
  }
  if (!(p.obs_var > 0.0)) throw std::invalid_argument("GaussianPrior: obs_var must be positive");
  if (!p.mean.allFinite() || !p.cov.allFinite()) {
    throw std::invalid_argument("GaussianPrior: non-finite parameters");
  }
  if ((p.cov - p.cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("GaussianPrior: cov not symmetric");
  }
}

inline void validate(const BetaProductPrior& p) {
  if (p.alpha.size() != p.beta.size()) throw std::invalid_argument("BetaProductPrior: size mismatch");
  if (p.alpha.size() == 0) throw std::invalid_argument("BetaProductPrior: no arms");
  if (!(p.alpha.array() > 0.0).all() || !(p.beta.array() > 0.0).all()) {
    throw std::invalid_argument("BetaProductPrior: parameters must be positive");
  }
}

inline void validate(const DiscretePrior& p) {
  if (p.atoms.empty() || p.atoms.size() != p.weights.size()) {
    throw std::invalid_argument("DiscretePrior: atoms and weights must be nonempty and equal length");
  }
  double total = 0.0;
  for (double w : p.weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("DiscretePrior: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("DiscretePrior: weights must sum to 1");
  const auto dim = p.atoms.front().size();
  for (const auto& atom : p.atoms) {
    if (atom.size() != dim) throw std::invalid_argument("DiscretePrior: atoms differ in dimension");
  }
}

inline void validate(const Prior& p) {
  std::visit([](const auto& q) { validate(q); }, p);
}

inline std::size_t num_arms(const GaussianPrior& p) { return static_cast<std::size_t>(p.mean.size()); }
inline std::size_t num_arms(const BetaProductPrior& p) { return static_cast<std::size_t>(p.alpha.size()); }
inline std::size_t num_arms(const DiscretePrior& p) {
  return p.atoms.empty() ? 0 : static_cast<std::size_t>(p.atoms.front().size());
}
inline std::size_t num_arms(const Prior& p) {
  return std::visit([](const auto& q) { return num_arms(q); }, p);
}

inline MeanVector sample_mean(const GaussianPrior& p, RngStream& rng) {
  return mvn_sample(p.mean, p.cov, rng);
}

inline MeanVector sample_mean(const BetaProductPrior& p, RngStream& rng) {
  Vector mu(p.alpha.size());
  for (Eigen::Index a = 0; a < mu.size(); ++a) mu[a] = rng.beta(p.alpha[a], p.beta[a]);
  return mu;
}

inline MeanVector sample_mean(const DiscretePrior& p, RngStream& rng) {
  return p.atoms[rng.categorical(p.weights)];
}

inline MeanVector sample_mean(const Prior& p, RngStream& rng) {
  return std::visit([&](const auto& q) { return sample_mean(q, rng); }, p);
}

inline DiscretePrior uniform_discrete(std::vector<MeanVector> atoms) {
  const double w = 1.0 / static_cast<double>(atoms.size());
  std::vector<double> weights(atoms.size(), w);
  return DiscretePrior{std::move(atoms), std::move(weights)};
}

/// KL(p || q) for Gaussians. With L L^T = q.cov the whitened covariance
/// M = L^-1 p.cov L^-T has the same spectrum as q^-1/2 p q^-1/2, so
/// KL = 1/2 (sum(lambda - 1 - ln lambda) + |L^-1 (p.mean - q.mean)|^2).
/// Returns +inf when p.cov is singular.
inline double kl_gaussian(const GaussianPrior& p, const GaussianPrior& q) {
  if (p.mean.size() != q.mean.size()) throw std::invalid_argument("kl_gaussian: dimension mismatch");
  Eigen::LLT<Matrix> llt(symmetrize(q.cov));
  if (llt.info() != Eigen::Success) throw NumericError("kl_gaussian: singular reference covariance");
  const auto L = llt.matrixL();
  Matrix whitened = L.solve(symmetrize(p.cov));
  whitened = L.solve(whitened.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(whitened), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("kl_gaussian: eigendecomposition failed");
  double kl = 0.0;
  for (double lambda : eig.eigenvalues()) {
    if (lambda <= 0.0) return std::numeric_limits<double>::infinity();
    kl += lambda - 1.0 - std::log(lambda);
  }
  const Vector diff = L.solve(p.mean - q.mean);
  kl = 0.5 * (kl + diff.squaredNorm());
  return std::max(0.0, kl);
}

inline double pinsker(double kl) {
  if (!(kl >= 0.0)) throw std::invalid_argument("pinsker: KL must be nonnegative");
  return std::min(1.0, std::sqrt(kl / 2.0));
}

inline double tv_upper_gaussian(const GaussianPrior& p, const GaussianPrior& q) {
  return pinsker(kl_gaussian(p, q));
}

/// Sum over arms of KL(Beta(alpha, beta) || Beta(alpha', beta')).
inline double kl_beta_product(const BetaProductPrior& p, const BetaProductPrior& q) {
  validate(p);
  validate(q);
  if (p.alpha.size() != q.alpha.size()) throw std::invalid_argument("kl_beta_product: size mismatch");
  using boost::math::digamma;
  auto log_beta = [](double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); };
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.alpha.size(); ++i) {
    const double a = p.alpha[i], b = p.beta[i], a2 = q.alpha[i], b2 = q.beta[i];
    kl += log_beta(a2, b2) - log_beta(a, b) + (a - a2) * digamma(a) + (b - b2) * digamma(b) +
          (a2 - a + b2 - b) * digamma(a + b);
  }
  return std::max(0.0, kl);
}

inline double tv_upper_beta(const BetaProductPrior& p, const BetaProductPrior& q) {
  return pinsker(kl_beta_product(p, q));
}

/// Exact TV between finite priors. Atoms are matched by exact coordinate equality.
inline double tv_discrete(const DiscretePrior& p, const DiscretePrior& q) {
  struct Less {
    bool operator()(const Vector& x, const Vector& y) const {
      return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
    }
  };
  std::map<Vector, std::pair<double, double>, Less> mass;
  for (std::size_t i = 0; i < p.atoms.size(); ++i) mass[p.atoms[i]].first += p.weights[i];
  for (std::size_t i = 0; i < q.atoms.size(); ++i) mass[q.atoms[i]].second += q.weights[i];
  double total = 0.0;
  for (const auto& [atom, w] : mass) total += std::abs(w.first - w.second);
  return std::min(1.0, 0.5 * total);
}

/// Largest diam(mu) over atoms carrying positive mass: the exact B of a finite prior.
inline double support_diameter(const DiscretePrior& p) {
  double b = 0.0;
  for (std::size_t i = 0; i < p.atoms.size(); ++i) {
    if (p.weights[i] > 0.0) b = std::max(b, diameter(p.atoms[i]));
  }
  return b;
}

}  // namespace misprior
