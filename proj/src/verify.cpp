// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/verify.hpp"

#include "uacgan/oracle.hpp"
#include "uacgan/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

namespace uacgan {

namespace {

using oracle::DiscreteJoint;

Matrix random_posterior(Rng& rng, int n_x, int k) {
  Matrix p(n_x, k);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) p(i, j) = 0.01 - std::log(1.0 - rng.uniform());
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

std::vector<double> to_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::span<const double> row(const Matrix& m, Eigen::Index i) {
  return {m.row(i).data(), static_cast<std::size_t>(m.cols())};
}

CheckResult timed(const std::string& name, double tolerance, int instances,
                  const std::function<double(Rng&)>& one, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r;
  r.name = name;
  r.tolerance = tolerance;
  r.instances = instances;
  Rng rng(seed, name);
  for (int i = 0; i < instances; ++i) r.worst = std::max(r.worst, one(rng));
  r.pass = r.worst <= tolerance;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

std::vector<CheckResult> run_theory_suite(std::uint64_t seed, int instances) {
  std::vector<CheckResult> out;
  auto dims = [](Rng& rng) { return std::pair{2 + rng.uniform_int(7), 2 + rng.uniform_int(4)}; };

  // −H_P(Y|X) + CE(P, C) = E_x KL(P_{Y|X} ‖ C_{Y|X}) on the real joint.
  out.push_back(timed("kl_identity_real", 1e-10, instances,
                      [&](Rng& rng) {
                        const auto [n_x, k] = dims(rng);
                        const auto p = DiscreteJoint::random(rng, n_x, k);
                        const auto c = oracle::kl_identity_check(p.posterior(), random_posterior(rng, n_x, k),
                                                                 to_vector(p.x_marginal()));
                        return std::abs(c.lhs - c.rhs);
                      },
                      seed));

  // Same identity under the generator's joint Q with marginal Q_X.
  out.push_back(timed("kl_identity_fake", 1e-10, instances,
                      [&](Rng& rng) {
                        const auto [n_x, k] = dims(rng);
                        const Matrix q_post = random_posterior(rng, n_x, k);
                        const auto qx = DiscreteJoint::random(rng, n_x, 1).x_marginal();
                        const auto q = DiscreteJoint::from_conditional(to_vector(qx), q_post);
                        const auto c = oracle::kl_identity_check(q.posterior(), random_posterior(rng, n_x, k),
                                                                 to_vector(q.x_marginal()));
                        return std::abs(c.lhs - c.rhs);
                      },
                      seed));

  // No point of the 2-simplex grid beats the one-hot minimizer.
  out.push_back(timed("degenerate_posterior_optimal", 1e-12, instances,
                      [&](Rng& rng) {
                        const Matrix q = random_posterior(rng, 2, 3);
                        const auto one_hot = oracle::degenerate_posterior(row(q, 0), row(q, 1));
                        const double at_one_hot = oracle::generator_posterior_objective(one_hot, row(q, 0), row(q, 1));
                        const double grid = oracle::simplex_grid_minimum(row(q, 0), row(q, 1), 0.01);
                        return std::max(0.0, at_one_hot - grid);
                      },
                      seed));

  out.push_back(timed("mi_decompositions_agree", 1e-12, instances,
                      [&](Rng& rng) {
                        const auto [n_x, k] = dims(rng);
                        const auto mi = oracle::mutual_information(DiscreteJoint::random(rng, n_x, k));
                        return std::abs(mi.via_labels - mi.via_data);
                      },
                      seed));

  // Plugging the optimal statistic into the exact DV expression gives I(X;Y).
  out.push_back(timed("optimal_statistic_recovers_mi", 1e-9, instances,
                      [&](Rng& rng) {
                        const auto [n_x, k] = dims(rng);
                        const auto j = DiscreteJoint::random(rng, n_x, k);
                        const double offset = 10.0 * (rng.uniform() - 0.5);
                        const double dv = oracle::exhaustive_dv(j, oracle::optimal_statistic(j, offset));
                        return std::abs(dv - oracle::mutual_information(j).via_labels);
                      },
                      seed));

  // Any statistic gives at most I(X;Y).
  out.push_back(timed("dv_is_lower_bound", 1e-12, instances,
                      [&](Rng& rng) {
                        const auto [n_x, k] = dims(rng);
                        const auto j = DiscreteJoint::random(rng, n_x, k);
                        const Matrix t = rng.normal_matrix(n_x, k, 2.0);
                        return std::max(0.0, oracle::exhaustive_dv(j, t) - oracle::mutual_information(j).via_labels);
                      },
                      seed));

  // E log C(y|x) ≤ −H(Y|X), with equality at the true posterior.
  out.push_back(timed("classifier_bound_on_conditional_entropy", 1e-12, instances,
                      [&](Rng& rng) {
                        const auto [n_x, k] = dims(rng);
                        const auto j = DiscreteJoint::random(rng, n_x, k);
                        const double h = oracle::conditional_entropy(j);
                        const double at_truth = oracle::expected_log_likelihood(j, j.posterior());
                        const double other = oracle::expected_log_likelihood(j, random_posterior(rng, n_x, k));
                        return std::max(std::abs(at_truth + h), std::max(0.0, other + h));
                      },
                      seed));
  return out;
}

}  // namespace uacgan
