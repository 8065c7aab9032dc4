#include "misprior/envs.hpp"
#include "misprior/posteriors.hpp"
#include "misprior/presets.hpp"

#include <gtest/gtest.h>

using namespace misprior;

TEST(PlayEpisode, ZeroHorizonIsEmpty) {
  RngStream rng(1, 0);
  const auto inst = preset_mab();
  const auto t = play_episode(inst.true_prior, Policy{TSKind{}, inst.true_prior}, 0, inst.model, rng);
  EXPECT_TRUE(t.actions.empty());
  EXPECT_TRUE(t.rewards.empty());
  EXPECT_EQ(t.mean_reward(), 0.0);
}

TEST(PlayEpisode, PointMassDeterministicEarnsMax) {
  RngStream rng(2, 0);
  Vector mu(3);
  mu << 0.2, 0.9, 0.4;
  const DiscretePrior p{{mu}, {1.0}};
  const auto t = play_episode(p, Policy{KTSKind{2}, p}, 7, DeterministicReward{}, rng);
  ASSERT_EQ(t.rewards.size(), 7u);
  for (double r : t.rewards) EXPECT_EQ(r, 0.9);
  EXPECT_NEAR(t.mean_reward(), 6.3, 1e-12);
}

TEST(PlayEpisode, DegenerateGaussianPriorIsGreedy) {
  RngStream rng(3, 0);
  const auto inst = preset_mab();
  const GaussianPrior flat{std::get<GaussianPrior>(inst.true_prior).mean, Matrix::Zero(6, 6), 1.0};
  const int H = 10, n = 10000;
  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double r = play_episode(flat, Policy{TSKind{}, flat}, H, inst.model, rng).mean_reward();
    s += r;
    ss += r * r;
  }
  const double m = s / n, se = std::sqrt(std::max(0.0, ss / n - m * m) / n);
  EXPECT_NEAR(m, H * 0.5, 3 * se + 1e-9);
}

TEST(PlayEpisode, ArmCountMismatchThrows) {
  RngStream rng(3, 0);
  const auto inst = preset_mab();
  EXPECT_THROW(play_episode_at(Vector::Zero(3), Policy{TSKind{}, inst.true_prior}, 2, inst.model, rng),
               std::invalid_argument);
}

TEST(BernoulliModel, RejectsMeansOutsideUnitInterval) {
  RngStream rng(3, 0);
  EXPECT_THROW(sample_reward(BernoulliReward{}, 1.5, rng), std::domain_error);
  EXPECT_EQ(sample_reward(DeterministicReward{}, 0.37, rng), 0.37);
}

TEST(LbPair, Examples) {
  auto [t, tp] = make_lb_pair(0.01);
  EXPECT_NEAR(tv_discrete(t, tp), 0.01, 1e-15);
  std::tie(t, tp) = make_lb_pair(0.0);
  EXPECT_EQ(tv_discrete(t, tp), 0.0);
  std::tie(t, tp) = make_lb_pair(1.0);
  EXPECT_EQ(tv_discrete(t, tp), 1.0);
  EXPECT_EQ(tp.weights[1], 1.0);
  EXPECT_THROW(make_lb_pair(1.5), std::invalid_argument);
}

TEST(LbTwoArmTv, Examples) {
  RngStream rng(4, 0);
  const auto zero = lb_two_arm_tv(0.0, 5, 1, 1000, rng);
  EXPECT_EQ(zero.analytic_tv, 0.0);
  EXPECT_EQ(zero.empirical_tv, 0.0);
  const auto r = lb_two_arm_tv(0.01, 5, 1, 20000, rng);
  EXPECT_NEAR(r.analytic_tv, 1.0 - std::pow(0.99, 5), 1e-15);
  EXPECT_NEAR(r.analytic_tv, 0.049010, 1e-6);
  EXPECT_NEAR(r.empirical_tv, r.analytic_tv, 4 * r.empirical_stderr);
  // Half the trajectories that leave arm 0 lose 1/2 on that step.
  EXPECT_NEAR(r.reward_gap, r.empirical_tv / 2, 1e-12);
  for (double eps : {0.001, 0.01, 0.05}) {
    for (int H : {2, 5}) {
      for (int k : {1, 3}) {
        if (eps <= 1.0 / (2 * H * k)) EXPECT_GE(1.0 - std::pow(1.0 - eps, H * k), eps * H * k / 2);
      }
    }
  }
}

TEST(AnLb, InstanceInvariants) {
  const auto inst = make_anlb_instance(10, 0.02, 0.01);
  EXPECT_NEAR(tv_discrete(inst.theta, inst.theta_prime), 0.02, 1e-12);
  for (const auto* p : {&inst.theta, &inst.theta_prime}) {
    EXPECT_NO_THROW(validate(*p));
    for (const auto& atom : p->atoms) {
      EXPECT_GE(atom.minCoeff(), 0.0);
      EXPECT_LE(atom.maxCoeff(), 1.0);
    }
  }
  for (const auto& atom : inst.theta_prime.atoms) EXPECT_LT(atom[10], atom.maxCoeff());
  EXPECT_THROW(make_anlb_instance(10, 0.02, 1.0 / 32), std::invalid_argument);
  EXPECT_THROW(make_anlb_instance(1, 0.02, 0.01), std::invalid_argument);
}

TEST(AnLb, RolloutProperties) {
  RngStream rng(5, 0);
  const auto inst = make_anlb_instance(20, 0.1, 1.0 / 64);
  for (int i = 0; i < 500; ++i) {
    const auto t = anlb_rollout(inst, WhichPrior::ThetaPrime, 2, 15, rng);
    for (ActionIndex a : t.actions) EXPECT_NE(a, 20u);
  }
  const auto sure = make_anlb_instance(20, 1.0, 1.0 / 64);
  for (int i = 0; i < 100; ++i) {
    const auto t = anlb_rollout(sure, WhichPrior::Theta, 1, 3, rng);
    EXPECT_EQ(t.actions.front(), 20u);
    EXPECT_EQ(t.actions[1], t.actions[2]);
    EXPECT_EQ(t.realized_mean[static_cast<Eigen::Index>(t.actions[1])], 1.0);
  }
}

TEST(AnLb, RolloutMatchesGenericKts) {
  // The structural rollout must have the same reward law as generic k-TS on
  // the discrete posterior.
  const auto inst = make_anlb_instance(12, 0.15, 1.0 / 64);
  const int H = 8, n = 20000;
  for (int k : {1, 2}) {
    for (auto which : {WhichPrior::Theta, WhichPrior::ThetaPrime}) {
      RngStream r1(6, static_cast<std::uint64_t>(k)), r2(7, static_cast<std::uint64_t>(k));
      const Policy pol{KTSKind{k}, which == WhichPrior::Theta ? inst.theta : inst.theta_prime};
      double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
      for (int i = 0; i < n; ++i) {
        const double a = anlb_rollout(inst, which, k, H, r1).mean_reward();
        const double b = play_episode(inst.theta, pol, H, DeterministicReward{}, r2).mean_reward();
        s1 += a;
        q1 += a * a;
        s2 += b;
        q2 += b * b;
      }
      const double m1 = s1 / n, m2 = s2 / n;
      const double se = std::sqrt((q1 / n - m1 * m1 + q2 / n - m2 * m2) / n);
      EXPECT_NEAR(m1, m2, 4 * se) << "k=" << k;
    }
  }
}

TEST(LinearCB, ContextsHaveUnitNorm) {
  RngStream rng(8, 0);
  for (int i = 0; i < 100; ++i) {
    const Matrix x = sample_contexts(6, 4, rng);
    for (Eigen::Index a = 0; a < 6; ++a) EXPECT_NEAR(x.row(a).norm(), 1.0, 1e-12);
  }
}

TEST(LinearCB, OneDimensionalReducesToGaussianMab) {
  const GaussianPrior prior{Vector::Constant(1, 0.2), Matrix::Constant(1, 1, 2.0), 0.5};
  LinearPosterior post(prior);
  SufficientStats st(1);
  for (double r : {0.4, -1.0, 2.5}) {
    post.update(Vector::Ones(1), r);
    st.add(0, r);
  }
  const auto want = gaussian_posterior(prior, st);
  EXPECT_NEAR(post.mean[0], want.mean[0], 1e-12);
  EXPECT_NEAR(post.cov(0, 0), want.cov(0, 0), 1e-12);
}

TEST(LinearCB, SequentialUpdateMatchesBatch) {
  const auto inst = preset_lincb();
  const auto& prior = std::get<GaussianPrior>(inst.true_prior);
  RngStream rng(9, 0);
  LinearPosterior post(prior);
  Matrix xtx = Matrix::Zero(6, 6);
  Vector xty = Vector::Zero(6);
  for (int h = 0; h < 30; ++h) {
    const Vector x = sample_contexts(1, 6, rng).row(0).transpose();
    const double r = rng.normal();
    post.update(x, r);
    xtx += x * x.transpose();
    xty += x * r;
  }
  const Matrix pinv = prior.cov.inverse();
  const Matrix cov = (pinv + xtx / prior.obs_var).inverse();
  const Vector mean = cov * (pinv * prior.mean + xty / prior.obs_var);
  EXPECT_LT((post.mean - mean).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((post.cov - cov).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LinearCB, PointMassPrefersLargerInnerProduct) {
  RngStream rng(10, 0);
  const LinearPosterior post(GaussianPrior{Vector::Ones(1), Matrix::Zero(1, 1), 1.0});
  Matrix x(2, 1);
  x << 0.6, 0.8;
  for (int i = 0; i < 20; ++i) EXPECT_EQ(lincb_select(post, x, rng), 1u);
}

TEST(LinearCB, EpisodeShapes) {
  RngStream rng(11, 0);
  const auto inst = preset_lincb();
  const LinearCBEnv env{std::get<GaussianPrior>(inst.true_prior), 6};
  const auto t = lincb_play_episode(env, std::get<GaussianPrior>(inst.misspecified), 20, rng);
  EXPECT_EQ(t.trace.actions.size(), 20u);
  EXPECT_EQ(t.contexts.size(), 20u);
  double s = 0;
  for (int h = 0; h < 20; ++h) {
    const Vector xa = t.contexts[static_cast<std::size_t>(h)].row(static_cast<Eigen::Index>(t.trace.actions[static_cast<std::size_t>(h)])).transpose();
    EXPECT_NEAR(t.expected_rewards[static_cast<std::size_t>(h)], xa.dot(t.trace.realized_mean), 1e-12);
    s += t.expected_rewards[static_cast<std::size_t>(h)];
  }
  EXPECT_NEAR(t.mean_reward(), s, 1e-12);
}
