// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/oracle.hpp"
#include "uacgan/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace uacgan {
namespace {

using oracle::DiscreteJoint;

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Binary entropy, written out independently of oracle::entropy.
double h2(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }

TEST(ConditionalEntropy, Examples) {
  EXPECT_NEAR(oracle::conditional_entropy(DiscreteJoint::from_table(Matrix::Constant(2, 2, 0.25))), std::log(2.0),
              1e-15);
  EXPECT_NEAR(oracle::conditional_entropy(DiscreteJoint::from_table(mat({{0.5, 0.0}, {0.0, 0.5}}))), 0.0, 1e-15);
  const auto j = DiscreteJoint::from_table(mat({{0.4, 0.1}, {0.1, 0.4}}));
  EXPECT_NEAR(oracle::conditional_entropy(j), h2(0.8), 1e-14);
  EXPECT_NEAR(h2(0.8), 0.5004, 5e-5);
}

TEST(MutualInformation, Examples) {
  Rng rng(1);
  const Vector px = DiscreteJoint::random(rng, 4, 1).x_marginal();
  const Vector py = DiscreteJoint::random(rng, 3, 1).x_marginal();
  const auto product = DiscreteJoint::from_table(px * py.transpose());
  EXPECT_NEAR(oracle::mutual_information(product).via_labels, 0.0, 1e-15);
  EXPECT_NEAR(oracle::mutual_information(product).via_data, 0.0, 1e-15);

  const auto identity = DiscreteJoint::from_table(Matrix::Identity(4, 4) / 4.0);
  EXPECT_NEAR(oracle::mutual_information(identity).via_labels, std::log(4.0), 1e-15);

  const auto j = DiscreteJoint::from_table(mat({{0.4, 0.1}, {0.1, 0.4}}));
  EXPECT_NEAR(oracle::mutual_information(j).via_labels, std::log(2.0) - h2(0.8), 1e-14);
  EXPECT_NEAR(oracle::mutual_information(j).via_labels, 0.1927, 5e-5);
}

TEST(MutualInformation, DecompositionsAgreeOnRandomJoints) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const auto j = DiscreteJoint::random(rng, 2 + rng.uniform_int(8), 2 + rng.uniform_int(5));
    const auto mi = oracle::mutual_information(j);
    ASSERT_NEAR(mi.via_labels, mi.via_data, 1e-10);
    ASSERT_GE(mi.via_labels, -1e-12);
  }
}

TEST(DiscreteJoint, RejectsBadMass) {
  EXPECT_THROW(DiscreteJoint::from_table(Matrix::Constant(2, 2, 0.3)), std::invalid_argument);
  EXPECT_THROW(DiscreteJoint::from_table(mat({{1.1, -0.1}})), std::invalid_argument);
}

TEST(KlIdentity, Examples) {
  const Matrix p = mat({{0.7, 0.3}, {0.2, 0.8}});
  const std::vector<double> m = {0.5, 0.5};
  const auto same = oracle::kl_identity_check(p, p, m);
  EXPECT_NEAR(same.lhs, 0.0, 1e-15);
  EXPECT_NEAR(same.rhs, 0.0, 1e-15);

  const auto halves = oracle::kl_identity_check(mat({{1, 0}, {1, 0}}), Matrix::Constant(2, 2, 0.5), m);
  EXPECT_NEAR(halves.rhs, std::log(2.0), 1e-15);
  EXPECT_NEAR(halves.lhs, std::log(2.0), 1e-15);

  Rng rng(3);
  const auto j = DiscreteJoint::random(rng, 5, 3);
  const auto q = DiscreteJoint::random(rng, 5, 3).posterior();
  const Vector jm = j.x_marginal();
  const auto r = oracle::kl_identity_check(j.posterior(), q, std::vector<double>(jm.data(), jm.data() + jm.size()));
  EXPECT_NEAR(r.lhs, r.rhs, 1e-10);
}

TEST(DegeneratePosterior, Examples) {
  const std::vector<double> q = {0.3, 0.3, 0.4};
  EXPECT_EQ(oracle::degenerate_posterior(q, q), (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(oracle::degenerate_posterior(std::vector<double>{0.8, 0.2}, std::vector<double>{0.5, 0.5}),
            (std::vector<double>{0, 1}));
  const std::vector<double> q_mi = {0.2, 0.3, 0.5};
  const std::vector<double> q_c = {0.5, 0.3, 0.2};
  EXPECT_EQ(oracle::degenerate_posterior(q_mi, q_c), (std::vector<double>{1, 0, 0}));
  const auto r = oracle::log_ratio_row(q_mi, q_c);
  EXPECT_NEAR(r[0], std::log(0.4), 1e-15);
  EXPECT_NEAR(r[1], 0.0, 1e-15);
  EXPECT_NEAR(r[2], std::log(2.5), 1e-15);
}

TEST(DegeneratePosterior, ZeroClassifierEntryThrows) {
  EXPECT_THROW(oracle::degenerate_posterior(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}),
               std::invalid_argument);
}

TEST(DegeneratePosterior, InvariantUnderCommonShiftOfLogits) {
  // Scaling both unnormalized posteriors by the same per-class factor leaves
  // the ratio, hence the argmin, unchanged.
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(4), b(4), s(4);
    for (auto* v : {&a, &b, &s}) {
      for (double& x : *v) x = 0.05 + rng.uniform();
    }
    auto norm = [](std::vector<double> v) {
      double z = 0;
      for (double x : v) z += x;
      for (double& x : v) x /= z;
      return v;
    };
    std::vector<double> as(4), bs(4);
    for (int k = 0; k < 4; ++k) {
      as[k] = a[k] * s[k];
      bs[k] = b[k] * s[k];
    }
    ASSERT_EQ(oracle::degenerate_posterior(norm(a), norm(b)), oracle::degenerate_posterior(norm(as), norm(bs)));
  }
}

TEST(GeneratorPosteriorObjective, Examples) {
  const std::vector<double> q_mi = {0.2, 0.3, 0.5};
  const std::vector<double> q_c = {0.5, 0.3, 0.2};
  const auto one_hot = oracle::degenerate_posterior(q_mi, q_c);
  EXPECT_NEAR(oracle::generator_posterior_objective(one_hot, q_mi, q_c), std::log(0.4), 1e-15);
  const std::vector<double> uniform = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  EXPECT_NEAR(oracle::generator_posterior_objective(uniform, q_mi, q_c), 0.0, 1e-15);
  EXPECT_GE(oracle::simplex_grid_minimum(q_mi, q_c, 0.01) - std::log(0.4), -1e-12);
}

TEST(Dv, OptimalStatisticRecoversMutualInformation) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto j = DiscreteJoint::random(rng, 6, 4);
    const double mi = oracle::mutual_information(j).via_labels;
    ASSERT_NEAR(oracle::exhaustive_dv(j, oracle::optimal_statistic(j, 3.7)), mi, 1e-9);
    ASSERT_LE(oracle::exhaustive_dv(j, rng.normal_matrix(6, 4)), mi + 1e-12);
  }
}

TEST(GaussianMi, Examples) {
  EXPECT_EQ(oracle::gaussian_mi(0.0), 0.0);
  EXPECT_NEAR(oracle::gaussian_mi(0.5), 0.1438, 5e-5);
  EXPECT_NEAR(oracle::gaussian_mi(0.9), 0.8304, 5e-5);
  EXPECT_THROW(oracle::gaussian_mi(1.0), std::invalid_argument);
}

TEST(MixtureMi, MatchesLimits) {
  // Far-apart components: X determines Y, so I = H(Y) = ln 3.
  const std::vector<oracle::GaussianComponent> apart = {{0, 1}, {100, 1}, {200, 1}};
  const std::vector<double> prior = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  EXPECT_NEAR(oracle::mixture_mutual_information(apart, prior), std::log(3.0), 1e-6);
  const std::vector<oracle::GaussianComponent> same = {{0, 1}, {0, 1}, {0, 1}};
  EXPECT_NEAR(oracle::mixture_mutual_information(same, prior), 0.0, 1e-9);
}

TEST(SignBucketMi, MatchesLimitsAndDiscreteOracle) {
  EXPECT_NEAR(oracle::sign_bucket_mi(0.0), 0.0, 1e-9);
  // As rho -> 1, sign(Y) = sign(X): I -> ln 2.
  EXPECT_NEAR(oracle::sign_bucket_mi(0.999999), std::log(2.0), 2e-3);
  // Binning X finely gives a discrete lower bound that approaches the value.
  const double rho = 0.7;
  const int bins = 4000;
  Matrix t(bins, 2);
  const double lo = -8, hi = 8, w = (hi - lo) / bins;
  const double s = std::sqrt(1 - rho * rho);
  for (int i = 0; i < bins; ++i) {
    const double x = lo + (i + 0.5) * w;
    const double px = std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi) * w;
    const double p_pos = 0.5 * std::erfc(-(rho * x / s) / std::sqrt(2.0));
    t(i, 0) = px * (1 - p_pos);
    t(i, 1) = px * p_pos;
  }
  t /= t.sum();
  const double discrete = oracle::mutual_information(DiscreteJoint::from_table(t)).via_labels;
  EXPECT_NEAR(oracle::sign_bucket_mi(rho), discrete, 1e-5);
}

TEST(FiniteDifference, QuadraticAndConstant) {
  Rng rng(6);
  const Matrix a = rng.normal_matrix(5, 5);
  const Matrix q = a * a.transpose();
  const Vector x0 = rng.normal_matrix(5, 1);
  auto quad = [&](const Vector& x) { return 0.5 * x.dot(q * x); };
  EXPECT_LT(oracle::finite_difference_check(quad, x0, q * x0, 1e-4, rng).max_relative_error, 1e-6);
  auto constant = [](const Vector&) { return 2.5; };
  EXPECT_EQ(oracle::finite_difference_check(constant, x0, Vector::Zero(5), 1e-4, rng).max_relative_error, 0.0);
  EXPECT_THROW(oracle::finite_difference_check(quad, x0, q * x0, 1e-2, rng), std::invalid_argument);
  auto blows_up = [](const Vector& x) { return x(0) > 0 ? std::nan("") : 0.0; };
  EXPECT_THROW(oracle::finite_difference_check(blows_up, Vector::Zero(1), Vector::Zero(1), 1e-4, rng),
               std::runtime_error);
}

TEST(TheorySuite, AllChecksPass) {
  for (const auto& r : run_theory_suite(11, 1000)) {
    EXPECT_TRUE(r.pass) << r.name << " worst " << r.worst;
    EXPECT_EQ(r.instances, 1000) << r.name;
  }
}

}  // namespace
}  // namespace uacgan
