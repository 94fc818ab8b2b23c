// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "uacgan/autograd.hpp"
#include "uacgan/models.hpp"
#include "uacgan/rng.hpp"

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uacgan {

/// A Donsker-Varadhan bound evaluated on one batch.
struct MIEstimate {
  double value = 0.0;  // joint_mean − log_mean_exp_marginal, exactly
  double joint_mean = 0.0;
  double log_mean_exp_marginal = 0.0;
  int batch_size = 0;
  double ema_denominator = 1.0;  // running E[e^T] used for the bias-corrected gradient
};

class MineOverflow : public std::runtime_error {
 public:
  explicit MineOverflow(double max_value);
  double max_value() const { return max_value_; }

 private:
  double max_value_;
};

/// mean(t_joint) − log mean exp(t_marginal), with a max shift in the exp.
MIEstimate dv_estimate(std::span<const double> t_joint, std::span<const double> t_marginal);

enum class MarginalStrategy { prior, permute };
MarginalStrategy parse_marginal_strategy(std::string_view name);
std::string to_string(MarginalStrategy s);

/// Labels ȳ for the product-of-marginals term: i.i.d. draws from P_Y
/// ("prior") or a uniform permutation of the batch labels ("permute").
std::vector<int> resample_marginal_labels(std::span<const int> labels, const LabelSpec& spec,
                                          MarginalStrategy strategy, Rng& rng);

/// Donsker-Varadhan objective for T with a moving-average denominator.
///
/// The reported estimate always uses batch statistics. The gradient of
/// `surrogate` w.r.t. T is ∇mean(T_joint) − mean(e^{T_marg} ∇T_marg) / ema,
/// where ema is the running mean of E[e^T] (ema_rate = 1 gives the plain
/// batch gradient). The moving average lives in log space.
class MineCritic {
 public:
  explicit MineCritic(double ema_rate = 0.01);

  struct Step {
    MIEstimate estimate;
    ag::Var surrogate;  // ascend this to train T
    ag::Var value;      // batch DV bound as a graph node
  };

  // Builds the bound for (x, y) vs (x, ȳ) and advances the moving average.
  Step step(StatisticsNet& t, const ag::Var& x, const LabelInput& y, const LabelInput& y_bar);

  double ema_rate() const { return ema_rate_; }
  bool initialized() const { return initialized_; }
  double log_ema() const { return log_ema_; }
  void restore(bool initialized, double log_ema);

 private:
  double ema_rate_;
  bool initialized_ = false;
  double log_ema_ = 0.0;
};

/// Batch DV bound as a differentiable node, for use in the generator loss.
ag::Var dv_bound(const ag::Var& t_joint, const ag::Var& t_marginal);

/// Draws a batch from some joint P(x, y).
struct JointSampler {
  std::function<std::pair<Matrix, LabelInput>(Rng&, int)> sample;
  // Empty for continuous y; then the marginal term permutes y.
  std::optional<LabelSpec> labels;
  DataShape x_shape;
  int y_width = 1;
};

/// (X, Y) standard bivariate normal with correlation rho; continuous y.
JointSampler gaussian_pair_sampler(double rho);
/// X standard normal, class label 1{ρX + sqrt(1 − ρ²)ε > 0} with ε ~ N(0, 1).
JointSampler sign_bucket_sampler(double rho);

struct StandaloneOptions {
  int steps = 3000;
  int batch = 512;
  double learning_rate = 1e-3;
  double ema_rate = 0.01;
  MarginalStrategy strategy = MarginalStrategy::prior;
  int hidden = 64;
  int feature_dim = 64;
  std::uint64_t seed = 0;
  double divergence_limit = 50.0;
};

struct StandaloneResult {
  double estimate = 0.0;  // median of the last 10% of step estimates
  std::vector<double> trace;
};

class MineDiverged : public std::runtime_error {
 public:
  MineDiverged(int step, double value);
};

/// Trains a fresh statistics network ("projection-T" or "concat-T") to
/// maximize the DV bound on samples from `sampler`.
StandaloneResult estimate_mi_standalone(const JointSampler& sampler, const std::string& t_arch,
                                        const StandaloneOptions& opt);

}  // namespace uacgan
