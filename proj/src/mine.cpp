// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/mine.hpp"

#include "uacgan/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace uacgan {

MineOverflow::MineOverflow(double max_value)
    : std::runtime_error("DV estimate overflow: max statistic value " + std::to_string(max_value)),
      max_value_(max_value) {}

MineDiverged::MineDiverged(int step, double value)
    : std::runtime_error("MINE diverged at step " + std::to_string(step) + ": estimate " +
                         std::to_string(value) + " nats") {}

MIEstimate dv_estimate(std::span<const double> t_joint, std::span<const double> t_marginal) {
  if (t_joint.empty() || t_marginal.empty()) throw std::invalid_argument("dv_estimate: empty batch");
  const double m = *std::max_element(t_marginal.begin(), t_marginal.end());
  if (!std::isfinite(m)) throw MineOverflow(m);
  double s = 0.0;
  for (double t : t_marginal) s += std::exp(t - m);
  MIEstimate e;
  e.joint_mean = std::accumulate(t_joint.begin(), t_joint.end(), 0.0) / static_cast<double>(t_joint.size());
  e.log_mean_exp_marginal = m + std::log(s / static_cast<double>(t_marginal.size()));
  e.value = e.joint_mean - e.log_mean_exp_marginal;
  e.batch_size = static_cast<int>(t_joint.size());
  e.ema_denominator = std::exp(e.log_mean_exp_marginal);
  return e;
}

MarginalStrategy parse_marginal_strategy(std::string_view name) {
  if (name == "prior") return MarginalStrategy::prior;
  if (name == "permute") return MarginalStrategy::permute;
  throw std::invalid_argument("unknown marginal strategy '" + std::string(name) + "' (expected prior or permute)");
}

std::string to_string(MarginalStrategy s) { return s == MarginalStrategy::prior ? "prior" : "permute"; }

std::vector<int> resample_marginal_labels(std::span<const int> labels, const LabelSpec& spec,
                                          MarginalStrategy strategy, Rng& rng) {
  if (strategy == MarginalStrategy::prior) return spec.sample(rng, labels.size());
  std::vector<int> out(labels.begin(), labels.end());
  rng.shuffle(out);
  return out;
}

ag::Var dv_bound(const ag::Var& t_joint, const ag::Var& t_marginal) {
  return ag::mean(t_joint) - ag::log_mean_exp(t_marginal);
}

MineCritic::MineCritic(double ema_rate) : ema_rate_(ema_rate) {
  if (!(ema_rate > 0.0 && ema_rate <= 1.0)) throw std::invalid_argument("ema_rate must lie in (0, 1]");
}

void MineCritic::restore(bool initialized, double log_ema) {
  initialized_ = initialized;
  log_ema_ = log_ema;
}

MineCritic::Step MineCritic::step(StatisticsNet& t, const ag::Var& x, const LabelInput& y,
                                  const LabelInput& y_bar) {
  ag::Var t_joint = t.forward(x, y);
  ag::Var t_marg = t.forward(x, y_bar);
  const Matrix& tm = t_marg.value();
  const double m = tm.maxCoeff();
  if (!std::isfinite(m)) throw MineOverflow(m);
  Step out;
  out.estimate = dv_estimate(std::span<const double>(t_joint.value().data(), t_joint.value().size()),
                             std::span<const double>(tm.data(), tm.size()));
  const double lme = out.estimate.log_mean_exp_marginal;
  if (!initialized_ || ema_rate_ >= 1.0) {
    log_ema_ = lme;
    initialized_ = true;
  } else {
    // log((1 − r)·ema + r·batch), evaluated without leaving log space.
    const double a = std::log1p(-ema_rate_) + log_ema_;
    const double b = std::log(ema_rate_) + lme;
    const double hi = std::max(a, b);
    log_ema_ = hi + std::log(std::exp(a - hi) + std::exp(b - hi));
  }
  out.estimate.ema_denominator = std::exp(log_ema_);
  out.value = dv_bound(t_joint, t_marg);
  // Gradient of mean(e^{t − log_ema}) is mean(e^t ∇t) / ema.
  out.surrogate = ag::mean(t_joint) - ag::mean(ag::exp(ag::add_scalar(t_marg, -log_ema_)));
  return out;
}

JointSampler gaussian_pair_sampler(double rho) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("rho must lie in (-1, 1)");
  JointSampler sampler;
  sampler.x_shape = DataShape::scalar();
  sampler.y_width = 1;
  sampler.sample = [rho](Rng& rng, int n) {
    Matrix x(n, 1);
    Matrix y(n, 1);
    for (int i = 0; i < n; ++i) {
      const double a = rng.normal();
      const double b = rng.normal();
      x(i, 0) = a;
      y(i, 0) = rho * a + std::sqrt(1.0 - rho * rho) * b;
    }
    return std::pair{x, LabelInput::from_values(std::move(y))};
  };
  return sampler;
}

JointSampler sign_bucket_sampler(double rho) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("rho must lie in (-1, 1)");
  JointSampler sampler;
  sampler.x_shape = DataShape::scalar();
  sampler.labels = LabelSpec::uniform(2);
  sampler.y_width = 2;
  sampler.sample = [rho](Rng& rng, int n) {
    Matrix x(n, 1);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double a = rng.normal();
      const double b = rng.normal();
      x(i, 0) = a;
      y[static_cast<std::size_t>(i)] = rho * a + std::sqrt(1.0 - rho * rho) * b > 0.0 ? 1 : 0;
    }
    return std::pair{x, LabelInput::from_classes(y, 2)};
  };
  return sampler;
}

StandaloneResult estimate_mi_standalone(const JointSampler& sampler, const std::string& t_arch,
                                        const StandaloneOptions& opt) {
  if (opt.steps < 1) throw std::invalid_argument("estimate_mi_standalone: steps must be >= 1");
  if (opt.batch < 2) throw std::invalid_argument("estimate_mi_standalone: batch must be >= 2");
  ArchConfig arch = ArchConfig::from_key(t_arch, sampler.x_shape);
  arch.hidden = opt.hidden;
  arch.feature_dim = opt.feature_dim;
  const int k = sampler.labels ? sampler.labels->num_classes : 0;
  Rng init_rng(opt.seed, "init.T");
  auto t = make_statistics_net(arch, sampler.x_shape, k, sampler.labels ? k : sampler.y_width, init_rng);
  AdamOptions adam_opt;
  adam_opt.learning_rate = opt.learning_rate;
  adam_opt.beta1 = 0.9;
  Adam adam(t->parameters(), adam_opt);
  MineCritic critic(opt.ema_rate);
  Rng data_rng(opt.seed, "data");
  Rng bar_rng(opt.seed, "ybar");

  StandaloneResult result;
  result.trace.reserve(static_cast<std::size_t>(opt.steps));
  for (int s = 0; s < opt.steps; ++s) {
    auto [x, y] = sampler.sample(data_rng, opt.batch);
    LabelInput y_bar;
    if (sampler.labels) {
      y_bar = LabelInput::from_classes(resample_marginal_labels(y.classes, *sampler.labels, opt.strategy, bar_rng), k);
    } else {
      // Continuous y: shuffle rows, which samples the product of marginals.
      const auto perm = bar_rng.permutation(static_cast<int>(y.values.rows()));
      Matrix shuffled(y.values.rows(), y.values.cols());
      for (std::size_t i = 0; i < perm.size(); ++i) shuffled.row(static_cast<Eigen::Index>(i)) = y.values.row(perm[i]);
      y_bar = LabelInput::from_values(std::move(shuffled));
    }
    adam.zero_grad();
    auto step = critic.step(*t, ag::Var::constant(std::move(x)), y, y_bar);
    const double v = step.estimate.value;
    if (!std::isfinite(v) || v > opt.divergence_limit) throw MineDiverged(s, v);
    result.trace.push_back(v);
    ag::backward(-step.surrogate);
    adam.step();
  }
  const std::size_t tail = std::max<std::size_t>(1, result.trace.size() / 10);
  std::vector<double> last(result.trace.end() - static_cast<std::ptrdiff_t>(tail), result.trace.end());
  std::sort(last.begin(), last.end());
  const std::size_t n = last.size();
  result.estimate = n % 2 == 1 ? last[n / 2] : 0.5 * (last[n / 2 - 1] + last[n / 2]);
  return result;
}

}  // namespace uacgan
