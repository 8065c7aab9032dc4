#pragma once

#include <Eigen/Dense>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace misprior {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Per-arm mean vector (reward units).
using MeanVector = Vector;
using CovMatrix = Matrix;
using ActionIndex = std::size_t;

/// Raised when a numeric routine cannot produce a meaningful result
/// (non-PSD covariance, singular system, observation outside support).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void check_action(ActionIndex a, std::size_t num_arms) {
  if (a >= num_arms) {
    throw std::out_of_range("action " + std::to_string(a) + " out of range for " +
                            std::to_string(num_arms) + " arms");
  }
}

/// Seeded random stream. Two streams built from the same (seed, stream_id)
/// produce identical draw sequences.
///
/// Engine: std::mt19937_64 seeded through std::seed_seq (both fully specified
/// by the standard). Variates come from Boost.Random, whose algorithms are
/// fixed in the library source: normals use the ziggurat method, gammas
/// Marsaglia-Tsang, integers unbiased rejection. Draw sequences are therefore
/// identical across compilers for a given Boost release.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x6d697370u};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return boost::random::uniform_01<double>{}(engine_); }

  double normal() { return boost::random::normal_distribution<double>{}(engine_); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double gamma(double shape) { return boost::random::gamma_distribution<double>{shape}(engine_); }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer on [0, n).
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    return boost::random::uniform_int_distribution<std::size_t>{0, n - 1}(engine_);
  }

  /// Draw an index with probability proportional to `weights` (need not sum to 1).
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
    double u = uniform() * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return last_positive;
  }

  /// Deterministic child stream keyed by `key`; consumes one draw from this stream.
  RngStream split(std::uint64_t key) { return RngStream(next_u64(), key); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Lower-triangular factor L with L L^T = cov. Falls back to a
/// clamped eigen-factor for singular PSD matrices; throws when `cov` is
/// materially indefinite.
inline Matrix sampling_factor(const CovMatrix& cov) {
  const auto n = cov.rows();
  if (cov.cols() != n) throw std::invalid_argument("covariance must be square");
  if (!cov.allFinite()) throw NumericError("covariance not PSD: non-finite entries");
  const Matrix sym = symmetrize(cov);
  if (n == 0) return sym;

  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  // Singular but PSD: eigen-factor with clamped eigenvalues.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError("covariance not PSD");
  const Vector& lambda = eig.eigenvalues();
  const double scale = std::max(1.0, std::abs(lambda.maxCoeff()));
  if (lambda.minCoeff() < -1e-8 * scale) throw NumericError("covariance not PSD");
  return eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

/// mean + L z with z standard normal and L = sampling_factor(cov).
inline MeanVector mvn_sample_factored(const MeanVector& mean, const Matrix& factor,
                                      RngStream& rng) {
  Vector z(factor.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + factor * z;
}

inline MeanVector mvn_sample(const MeanVector& mean, const CovMatrix& cov, RngStream& rng) {
  if (cov.rows() != mean.size()) throw std::invalid_argument("mvn_sample: dimension mismatch");
  return mvn_sample_factored(mean, sampling_factor(cov), rng);
}

/// Nearest PSD matrix in Frobenius norm: symmetrize, clamp eigenvalues at zero.
inline CovMatrix psd_project(const CovMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("psd_project: matrix must be square");
  if (!m.allFinite()) throw NumericError("psd_project: non-finite entries");
  const Matrix sym = symmetrize(m);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError("psd_project: eigendecomposition failed");
  const Matrix& v = eig.eigenvectors();
  Matrix out = v * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * v.transpose();
  return symmetrize(out);
}

/// Smallest index attaining the maximum.
inline ActionIndex argmax_tiebreak(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax_tiebreak: empty input");
  ActionIndex best = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) throw std::invalid_argument("argmax_tiebreak: non-finite value");
    if (values[i] > values[best]) best = i;
  }
  return best;
}

inline ActionIndex argmax_tiebreak(const Vector& values) {
  return argmax_tiebreak(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

/// Uniformly random index among those attaining the maximum.
inline ActionIndex argmax_random_ties(std::span<const double> values, RngStream& rng) {
  const ActionIndex first = argmax_tiebreak(values);
  std::vector<ActionIndex> ties;
  for (std::size_t i = first; i < values.size(); ++i) {
    if (values[i] == values[first]) ties.push_back(i);
  }
  return ties.size() == 1 ? ties.front() : ties[rng.uniform_index(ties.size())];
}

inline double diameter(const Vector& mu) {
  if (mu.size() == 0) return 0.0;
  return mu.maxCoeff() - mu.minCoeff();
}

}  // namespace misprior
