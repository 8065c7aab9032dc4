#pragma once

#include "misprior/core.hpp"
#include "misprior/model.hpp"
#include "misprior/priors.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace misprior {

enum class Family { Gaussian, BetaBernoulli, Discrete, LinearCB };

/// A true prior, its reward model, and the default misspecified prior.
struct Instance {
  std::string name;
  Family family = Family::Gaussian;
  Prior true_prior;
  RewardModel model;
  int num_actions = 0;
  Prior misspecified;
};

/// 6x6 matrix with two 3x3 blocks of unit diagonal and 0.9 off-diagonal.
inline CovMatrix block_covariance() {
  CovMatrix c = CovMatrix::Zero(6, 6);
  for (int blk = 0; blk < 2; ++blk) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) c(3 * blk + i, 3 * blk + j) = i == j ? 1.0 : 0.9;
    }
  }
  return c;
}

inline Instance preset_mab() {
  MeanVector nu(6);
  nu << 0.5, 0.0, 0.0, 0.1, 0.0, 0.0;
  Instance inst;
  inst.name = "gaussian-mab";
  inst.family = Family::Gaussian;
  inst.true_prior = GaussianPrior{nu, block_covariance(), 1.0};
  inst.model = GaussianNoise{1.0};
  inst.num_actions = 6;
  inst.misspecified = GaussianPrior{MeanVector::Zero(6), CovMatrix::Identity(6, 6), 1.0};
  return inst;
}

inline Instance preset_lincb() {
  Instance inst;
  inst.name = "linear-cb";
  inst.family = Family::LinearCB;
  inst.true_prior = GaussianPrior{MeanVector::Ones(6), 0.1 * block_covariance(), 1.0};
  inst.model = GaussianNoise{1.0};
  inst.num_actions = 6;
  inst.misspecified = GaussianPrior{MeanVector::Zero(6), CovMatrix::Identity(6, 6), 1.0};
  return inst;
}

/// 20 arms, 16 tasks, deterministic rewards. Arms 0, 5, 10, 15 identify a
/// group g of four tasks; task 4g + j has its unique reward-1 arm at 5g + 1 + j.
/// Identifying arm 5g pays 0.05 (j + 1) on tasks of group g and 0 elsewhere,
/// so one pull pins down the task within its group. Tasks 0..3 carry 9/40
/// each and the remaining twelve 1/120 each.
inline std::vector<MeanVector> discrete_tasks() {
  std::vector<MeanVector> tasks;
  for (int g = 0; g < 4; ++g) {
    for (int j = 0; j < 4; ++j) {
      MeanVector mu = MeanVector::Zero(20);
      mu[5 * g] = 0.05 * (j + 1);
      mu[5 * g + 1 + j] = 1.0;
      tasks.push_back(mu);
    }
  }
  return tasks;
}

inline Instance preset_discrete() {
  std::vector<MeanVector> tasks = discrete_tasks();
  std::vector<double> w(16, 1.0 / 120.0);
  for (int t = 0; t < 4; ++t) w[static_cast<std::size_t>(t)] = 9.0 / 40.0;
  Instance inst;
  inst.name = "discrete";
  inst.family = Family::Discrete;
  inst.true_prior = DiscretePrior{tasks, w};
  inst.model = DeterministicReward{};
  inst.num_actions = 20;
  inst.misspecified = uniform_discrete(tasks);
  return inst;
}

inline Instance preset_by_name(const std::string& name) {
  if (name == "gaussian-mab") return preset_mab();
  if (name == "linear-cb") return preset_lincb();
  if (name == "discrete") return preset_discrete();
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace misprior
