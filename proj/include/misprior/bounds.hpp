#pragma once

#include "misprior/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace misprior {

// Tail conditions on diam(mu) under the true prior. Magnitudes in reward units.
struct BoundedTail {
  double bound;
};
struct SubGaussianTail {
  double sigma;
  double mean_diam;
};
struct SubGammaTail {
  double sigma;
  double nu;
  double mean_diam;
};
using TailSpec = std::variant<BoundedTail, SubGaussianTail, SubGammaTail>;

struct Atom {
  double value;
  double prob;
};

/// Upper tail expectation Psi_X(p) = sup{ E[XY]/p : 0 <= Y <= 1, E[Y] <= p }
/// for a finitely supported nonnegative X, via its quantile form:
///   Psi_X(p) = (E[X 1{X > q}] + q (p - Pr[X > q])) / p,  q = q_X(p),
/// so the boundary atom at q receives weight (p - Pr[X > q]) / Pr[X = q].
/// For p >= 1 this is E[X].
inline double tail_expectation_discrete(std::vector<Atom> dist, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("tail_expectation_discrete: p must be positive");
  if (dist.empty()) throw std::invalid_argument("tail_expectation_discrete: empty distribution");
  double total = 0.0;
  for (const auto& [v, q] : dist) {
    if (v < 0.0) throw std::invalid_argument("tail_expectation_discrete: negative value");
    if (q < 0.0) throw std::invalid_argument("tail_expectation_discrete: negative probability");
    total += q;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("tail_expectation_discrete: probabilities must sum to 1");
  }

  if (p >= 1.0) {
    double mean = 0.0;
    for (const auto& [v, q] : dist) mean += v * q;
    return mean;
  }

  std::sort(dist.begin(), dist.end(), [](const Atom& x, const Atom& y) { return x.value > y.value; });

  // Walk distinct values from the top until Pr[X >= v] first reaches p; that v is q_X(p).
  double mass_above = 0.0;   // Pr[X > v]
  double moment_above = 0.0; // E[X 1{X > v}]
  std::size_t i = 0;
  while (i < dist.size()) {
    const double v = dist[i].value;
    double mass_at = 0.0;
    std::size_t j = i;
    while (j < dist.size() && dist[j].value == v) mass_at += dist[j++].prob;
    if (mass_above + mass_at >= p || j == dist.size()) {
      const double boundary = std::max(0.0, p - mass_above);
      const double take = std::min(boundary, mass_at);
      return (moment_above + v * take) / p;
    }
    mass_above += mass_at;
    moment_above += v * mass_at;
    i = j;
  }
  return moment_above / p;
}

/// Upper bound on Psi_theta(p) implied by a tail condition (evaluated at min(1, p)).
inline double tail_bound(const TailSpec& spec, std::size_t num_arms, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("tail_bound: p must be positive");
  if (num_arms < 1) throw std::invalid_argument("tail_bound: need at least one arm");
  const double pp = std::min(1.0, p);
  const double log_term = std::log(2.0 * static_cast<double>(num_arms) / pp);
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BoundedTail>) {
          if (s.bound < 0.0) throw std::invalid_argument("tail_bound: negative bound");
          return s.bound;
        } else if constexpr (std::is_same_v<T, SubGaussianTail>) {
          if (s.sigma < 0.0 || s.mean_diam < 0.0) throw std::invalid_argument("tail_bound: negative magnitude");
          return s.mean_diam + s.sigma * (8.0 + 5.0 * std::sqrt(log_term));
        } else {
          if (s.sigma < 0.0 || s.nu < 0.0 || s.mean_diam < 0.0) {
            throw std::invalid_argument("tail_bound: negative magnitude");
          }
          return s.mean_diam + s.sigma * (8.0 + 5.0 * std::sqrt(log_term)) +
                 s.nu * (11.0 + 7.0 * log_term);
        }
      },
      spec);
}

/// |R(theta, alg(theta)) - R(theta, alg(theta'))| <= 2 n H^2 eps Psi(2 n H eps)
/// for an n-Monte-Carlo family at prior TV eps.
inline double sensitivity_bound(int n, int horizon, double eps, const TailSpec& spec,
                                std::size_t num_arms) {
  if (n < 1 || horizon < 1) throw std::invalid_argument("sensitivity_bound: n and H must be >= 1");
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("sensitivity_bound: eps must lie in [0,1]");
  if (eps == 0.0) return 0.0;
  const double nd = n, hd = horizon;
  return 2.0 * nd * hd * hd * eps * tail_bound(spec, num_arms, 2.0 * nd * hd * eps);
}

/// TV between joint (mean, trajectory) laws of alg(theta) and alg(theta').
inline double trajectory_tv_bound(int n, int horizon, double eps) {
  if (n < 1 || horizon < 1) throw std::invalid_argument("trajectory_tv_bound: n and H must be >= 1");
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("trajectory_tv_bound: eps must lie in [0,1]");
  return std::min(1.0, 2.0 * n * horizon * eps);
}

struct MisspecificationComparison {
  double eps_tilde;  // |A| |nu - nu_hat|_inf / sigma0
  double eps_ours;   // |nu - nu_hat|_2 / sigma0
};

/// Compares the sup-norm misspecification level used for isotropic Gaussian
/// priors in prior meta-TS analyses with the TV-based level used here.
inline MisspecificationComparison sup_norm_comparison(const Vector& nu, const Vector& nu_hat, double sigma0) {
  if (!(sigma0 > 0.0)) throw std::invalid_argument("sup_norm_comparison: sigma0 must be positive");
  if (nu.size() != nu_hat.size()) throw std::invalid_argument("sup_norm_comparison: dimension mismatch");
  const Vector err = nu - nu_hat;
  const double a = static_cast<double>(nu.size());
  const double inf_norm = err.size() ? err.cwiseAbs().maxCoeff() : 0.0;
  return {a * inf_norm / sigma0, err.norm() / sigma0};
}

}  // namespace misprior
