#include "misprior/belief.hpp"
#include "misprior/estimators.hpp"
#include "misprior/presets.hpp"

#include <gtest/gtest.h>

using namespace misprior;

namespace {

// Raw moments of the Beta-Binomial law by summing its pmf.
std::pair<double, double> bb_moments_by_pmf(double a, double b, int n) {
  auto log_beta = [](double x, double y) { return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y); };
  double m1 = 0, m2 = 0;
  for (int k = 0; k <= n; ++k) {
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    const double p = std::exp(log_choose + log_beta(k + a, n - k + b) - log_beta(a, b));
    m1 += k * p;
    m2 += k * k * p;
  }
  return {m1, m2};
}

}  // namespace

TEST(BetaBinomial, MomentExamples) {
  auto m = beta_binomial_moments(1, 1, 2);
  EXPECT_NEAR(m.m1, 1.0, 1e-15);
  EXPECT_NEAR(m.m2, 5.0 / 3.0, 1e-15);
  m = beta_binomial_moments(2, 3, 4);
  EXPECT_NEAR(m.m1, 1.6, 1e-15);
  EXPECT_NEAR(m.m2, 4.0, 1e-14);
  EXPECT_THROW(beta_binomial_moments(1, 1, 1), std::invalid_argument);
  EXPECT_THROW(beta_binomial_moments(0, 1, 3), std::invalid_argument);
}

TEST(BetaBinomial, MomentsMatchPmf) {
  for (double a : {0.5, 1.0, 2.0, 7.5}) {
    for (double b : {0.3, 1.0, 4.0}) {
      for (int n : {2, 5, 13}) {
        const auto m = beta_binomial_moments(a, b, n);
        const auto [p1, p2] = bb_moments_by_pmf(a, b, n);
        EXPECT_NEAR(m.m1, p1, 1e-10);
        EXPECT_NEAR(m.m2, p2, 1e-9);
      }
    }
  }
}

TEST(BetaBinomial, MomentsMatchSampling) {
  RngStream rng(1, 0);
  const int n = 4, T = 1000000;
  double s1 = 0, s2 = 0;
  for (int t = 0; t < T; ++t) {
    const double q = rng.beta(2, 3);
    int x = 0;
    for (int i = 0; i < n; ++i) x += rng.bernoulli(q);
    s1 += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s1 / T, 1.6, 0.01);
  EXPECT_NEAR(s2 / T, 4.0, 0.01 * 4);
}

TEST(BetaBinomial, MomRoundTrip) {
  auto fit = beta_binomial_mom(1.0, 5.0 / 3.0, 2);
  EXPECT_NEAR(fit.alpha_hat, 1.0, 1e-9);
  EXPECT_NEAR(fit.beta_hat, 1.0, 1e-9);
  fit = beta_binomial_mom(1.6, 4.0, 4);
  EXPECT_NEAR(fit.alpha_hat, 2.0, 1e-9);
  EXPECT_NEAR(fit.beta_hat, 3.0, 1e-9);
  for (double a : {0.5, 3.0, 10.0}) {
    for (double b : {0.7, 2.0}) {
      const auto m = beta_binomial_moments(a, b, 6);
      fit = beta_binomial_mom(m.m1, m.m2, 6);
      EXPECT_NEAR(fit.alpha_hat, a, 1e-9 * a);
      EXPECT_NEAR(fit.beta_hat, b, 1e-9 * b);
    }
  }
}

TEST(BetaBinomial, DegenerateMoments) {
  // Binomial(4, 1/2) moments: no overdispersion, so no finite Beta prior.
  EXPECT_THROW(beta_binomial_mom(2.0, 5.0, 4), DegenerateMoments);
  EXPECT_THROW(beta_binomial_mom(std::vector<int>{0, 0, 0}, 3), DegenerateMoments);
  EXPECT_THROW(beta_binomial_mom(std::vector<int>{2, 2}, 3), DegenerateMoments);
  EXPECT_THROW(beta_binomial_mom(std::vector<int>{4}, 3), std::invalid_argument);
  EXPECT_THROW(beta_binomial_mom(std::vector<int>{}, 3), std::invalid_argument);
}

TEST(GaussianMean, Examples) {
  const auto nu = gaussian_mean_first_round({{0, 0.6}}, 2);
  EXPECT_NEAR(nu[0], 1.2, 1e-15);
  EXPECT_EQ(nu[1], 0.0);
  EXPECT_EQ(gaussian_mean_first_round({{0, 0.0}, {1, 0.0}}, 2), Vector::Zero(2));
  EXPECT_THROW(gaussian_mean_first_round({}, 2), std::invalid_argument);
  EXPECT_THROW(gaussian_mean_first_round({{2, 1.0}}, 2), std::out_of_range);
}

TEST(GaussianCovPairs, Examples) {
  const auto c = gaussian_cov_pairs({{0, 1.0, 1, 1.0}}, Vector::Zero(2), 2);
  EXPECT_NEAR(c(0, 1), 2.0, 1e-15);
  EXPECT_NEAR(c(1, 0), 2.0, 1e-15);
  EXPECT_EQ(c(0, 0), 0.0);
  EXPECT_EQ(c(1, 1), 0.0);
  Vector nu(2);
  nu << 0.3, -0.1;
  EXPECT_EQ(gaussian_cov_pairs({{0, 0.3, 1, -0.1}, {1, -0.1, 1, -0.1}}, nu, 2), Matrix::Zero(2, 2));
}

TEST(GaussianCovDiff, Examples) {
  EXPECT_EQ(gaussian_cov_diff({{0, 0.5, 1, 2.0}, {0, 0.5, 1, 2.0}}, 2), Matrix::Zero(2, 2));
  const auto c = gaussian_cov_diff({{0, 3.0, 1, 1.5}, {0, 1.0, 1, 0.5}}, 2);
  EXPECT_NEAR(c(0, 1), 2.0, 1e-15);
  EXPECT_NEAR(c(1, 0), 2.0, 1e-15);
  EXPECT_THROW(gaussian_cov_diff({{0, 3.0, 1, 1.5}}, 2), std::invalid_argument);
  EXPECT_THROW(gaussian_cov_diff({{0, 3.0, 1, 1.5}, {1, 3.0, 1, 1.5}}, 2), std::invalid_argument);
}

TEST(GaussianFullEpisode, Examples) {
  EpisodeTrace ep;
  ep.horizon = 1;
  ep.actions = {0};
  ep.rewards = {2.0};
  ep.realized_mean = Vector::Constant(1, 2.0);
  auto est = gaussian_full_episode({ep}, 1, 1, 1.0);
  EXPECT_NEAR(est.mean_hat[0], 2.0, 1e-15);
  EXPECT_NEAR(est.raw_cov(0, 0), -1.0, 1e-12);
  EXPECT_NEAR(est.cov_hat(0, 0), 0.0, 1e-12);

  EpisodeTrace zero;
  zero.horizon = 3;
  zero.actions = {0, 1, 1};
  zero.rewards = {0, 0, 0};
  est = gaussian_full_episode({zero}, 2, 3, 1.0);
  EXPECT_EQ(est.mean_hat, Vector::Zero(2));
  EXPECT_NEAR(est.raw_cov(0, 0), -1.0, 1e-15);
  EXPECT_LT(est.cov_hat.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(gaussian_full_episode({zero}, 2, 4, 1.0), std::invalid_argument);
}

TEST(GaussianFullEpisode, RecoversMeanOnMabPreset) {
  const auto inst = preset_mab();
  RngStream rng(2, 0);
  std::vector<EpisodeTrace> log;
  for (int t = 0; t < 5000; ++t) {
    EpisodeTrace ep;
    ep.horizon = 10;
    ep.realized_mean = sample_mean(inst.true_prior, rng);
    for (int h = 0; h < 10; ++h) {
      const ActionIndex a = rng.uniform_index(6);
      ep.actions.push_back(a);
      ep.rewards.push_back(sample_reward(inst.model, ep.realized_mean[static_cast<Eigen::Index>(a)], rng));
    }
    log.push_back(ep);
  }
  const auto est = gaussian_full_episode(log, 6, 10, 1.0);
  const Vector& nu = std::get<GaussianPrior>(inst.true_prior).mean;
  EXPECT_LT((est.mean_hat - nu).cwiseAbs().maxCoeff(), 0.1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(est.cov_hat);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
}

TEST(LinCBEstimator, NoiselessRecoversWeights) {
  RngStream rng(3, 0);
  std::vector<LinCBTrace> log;
  std::vector<Vector> ws;
  for (int i = 0; i < 3; ++i) {
    LinCBTrace ep;
    Vector w(3);
    for (int j = 0; j < 3; ++j) w[j] = rng.normal();
    ws.push_back(w);
    for (int h = 0; h < 6; ++h) {
      const Matrix x = sample_contexts(2, 3, rng);
      ep.contexts.push_back(x);
      ep.trace.actions.push_back(0);
      ep.trace.rewards.push_back(x.row(0).dot(w));
    }
    log.push_back(ep);
  }
  const auto est = lincb_prior_estimator(log, 3, 0.0);
  const Vector mean = (ws[0] + ws[1] + ws[2]) / 3.0;
  EXPECT_LT((est.mean_hat - mean).cwiseAbs().maxCoeff(), 1e-8);
  Matrix second = Matrix::Zero(3, 3);
  for (const auto& w : ws) second += w * w.transpose() / 3.0;
  EXPECT_LT((est.raw_cov - (second - mean * mean.transpose())).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(LinCBEstimator, OneDimensionalExample) {
  const double w = 0.8;
  const int H = 5;
  LinCBTrace ep;
  for (int h = 0; h < H; ++h) {
    const double x = h % 2 ? 1.0 : -1.0;
    ep.contexts.push_back(Matrix::Constant(1, 1, x));
    ep.trace.actions.push_back(0);
    ep.trace.rewards.push_back(w * x);
  }
  const auto est = lincb_prior_estimator({ep}, 1, 1.0);
  EXPECT_NEAR(est.mean_hat[0], w, 1e-12);
  EXPECT_NEAR(est.raw_cov(0, 0), -1.0 / H, 1e-12);
  EXPECT_NEAR(est.cov_hat(0, 0), 0.0, 1e-12);
}

TEST(LinCBEstimator, SkipsSingularDesigns) {
  LinCBTrace bad;
  for (int h = 0; h < 3; ++h) {
    Matrix x(1, 2);
    x << 1.0, 0.0;
    bad.contexts.push_back(x);
    bad.trace.actions.push_back(0);
    bad.trace.rewards.push_back(1.0);
  }
  EXPECT_THROW(lincb_prior_estimator({bad}, 2, 1.0), NumericError);
  LinCBTrace good = bad;
  good.contexts[1](0, 0) = 0.0;
  good.contexts[1](0, 1) = 1.0;
  const auto est = lincb_prior_estimator({bad, good}, 2, 1.0);
  EXPECT_EQ(est.skipped, 1);
}

TEST(LinCBEstimator, RecoversMeanOnPreset) {
  const auto inst = preset_lincb();
  const LinearCBEnv env{std::get<GaussianPrior>(inst.true_prior), 6};
  RngStream rng(4, 0);
  std::vector<LinCBTrace> log;
  for (int t = 0; t < 1000; ++t) log.push_back(lincb_play_episode(env, std::nullopt, 20, rng));
  const auto est = lincb_prior_estimator(log, 6, 1.0);
  EXPECT_LT((est.mean_hat - Vector::Ones(6)).cwiseAbs().maxCoeff(), 0.15);
}

TEST(DiscreteFreq, Examples) {
  const auto w = discrete_prior_freq({0, 0, 0, 1, std::nullopt}, 4);
  EXPECT_EQ(w, (std::vector<double>{0.75, 0.25, 0, 0}));
  EXPECT_EQ(discrete_prior_freq({std::nullopt}, 4), std::vector<double>(4, 0.25));
  EXPECT_THROW(discrete_prior_freq({7}, 4), std::out_of_range);
}

TEST(DiscreteFreq, UniformExplorationOnTaskPreset) {
  const auto inst = preset_discrete();
  const auto uniform = std::get<DiscretePrior>(inst.misspecified);
  RngStream rng(5, 0);
  std::vector<std::optional<std::size_t>> outcomes;
  for (int t = 0; t < 200; ++t) {
    const Vector mu = sample_mean(inst.true_prior, rng);
    DiscreteBelief b(uniform, inst.model);
    for (int h = 0; h < 10; ++h) {
      const ActionIndex a = rng.uniform_index(20);
      b.observe(a, mu[static_cast<Eigen::Index>(a)]);
    }
    outcomes.push_back(b.posterior().collapsed);
  }
  const auto w = discrete_prior_freq(outcomes, 16);
  EXPECT_NEAR(w[0] + w[1] + w[2] + w[3], 0.9, 0.06);
}
