// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

// Exhaustive and analytic references. Nothing here touches the training code
// path; the tests use these functions to check it. Natural logs throughout.

#pragma once

#include "uacgan/autograd.hpp"
#include "uacgan/rng.hpp"

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace uacgan::oracle {

/// Joint table over a finite X (rows) and K labels (columns).
struct DiscreteJoint {
  Matrix table;

  static DiscreteJoint from_table(Matrix table);
  // Σ_x m(x) δ_x ⊗ post(·|x).
  static DiscreteJoint from_conditional(std::span<const double> x_marginal, const Matrix& posterior);
  static DiscreteJoint random(Rng& rng, int n_x, int k);

  void validate() const;
  Vector x_marginal() const;
  Vector y_marginal() const;
  // Rows are p(y|x); rows of zero-mass x are left uniform.
  Matrix posterior() const;
};

double entropy(std::span<const double> p);

/// H(Y|X) = −Σ p(x,y) log p(y|x), with 0·log 0 = 0.
double conditional_entropy(const DiscreteJoint& joint);

struct MutualInformation {
  double via_labels;  // H(Y) − H(Y|X)
  double via_data;    // H(X) − H(X|Y)
};
MutualInformation mutual_information(const DiscreteJoint& joint);

struct IdentityCheck {
  double lhs;
  double rhs;
};

/// lhs = −H(Y|X) − E_{x,y} log q_c(y|x) (negative conditional entropy plus the
/// classification cross-entropy), rhs = E_x KL(p(·|x) ‖ q_c(·|x)). With the
/// real posterior this is the real-data identity; with the generator's
/// posterior and marginal it is the fake-data one.
IdentityCheck kl_identity_check(const Matrix& p_post, const Matrix& q_c_post, std::span<const double> marginal);

/// r_x(k) = log(q_mi(k) / q_c(k)).
std::vector<double> log_ratio_row(std::span<const double> q_mi_row, std::span<const double> q_c_row);

/// One-hot at argmin_k r_x(k); ties resolve to the lowest index.
std::vector<double> degenerate_posterior(std::span<const double> q_mi_row, std::span<const double> q_c_row);

/// Σ_k q_post(k) r_x(k): the per-x objective the generator minimizes when
/// both classifiers are fixed.
double generator_posterior_objective(std::span<const double> q_post_row, std::span<const double> q_mi_row,
                                     std::span<const double> q_c_row);

/// Grid over the 2-simplex with the given step; returns min objective found.
double simplex_grid_minimum(std::span<const double> q_mi_row, std::span<const double> q_c_row, double step);

/// Σ p(x,y) log c(y|x) for a classifier given as a posterior table.
double expected_log_likelihood(const DiscreteJoint& joint, const Matrix& classifier_post);

/// Exact DV value Σ p(x,y) T(x,y) − log Σ p(x) p(y) e^{T(x,y)}.
double exhaustive_dv(const DiscreteJoint& joint, const Matrix& statistic);

/// log p(y|x) − log p(y) + offset; −inf where p(y|x) = 0.
Matrix optimal_statistic(const DiscreteJoint& joint, double offset = 0.0);

/// I(X;Y) for a bivariate normal with correlation rho.
double gaussian_mi(double rho);

struct GaussianComponent {
  double mean;
  double stddev;
};

/// I(X;Y) for x | y=k ~ N(mean_k, std_k²), by Simpson quadrature.
double mixture_mutual_information(std::span<const GaussianComponent> components, std::span<const double> prior,
                                  int intervals = 20000);

/// I(X; sign(Y)) for a standard bivariate normal (X, Y) with correlation rho.
double sign_bucket_mi(double rho, int intervals = 20000);

struct GradientCheck {
  double max_relative_error = 0.0;
  int coordinates = 0;
  // Coordinate attaining the maximum, with both derivative estimates.
  int worst_coordinate = -1;
  double worst_numeric = 0.0;
  double worst_analytic = 0.0;
  // Coordinates left out because a probe changed the piece fingerprint.
  int kinks_skipped = 0;
};

/// Returns an identifier of the smooth piece used by the most recent loss
/// evaluation (see ag::PieceRecorder).
using PieceFingerprint = std::function<std::uint64_t()>;

/// Central differences vs the supplied gradient on up to `max_coords`
/// randomly chosen coordinates. Relative error per coordinate is
/// |fd − g| / max(|fd|, |g|, 1e-8). With `fingerprint`, a coordinate whose
/// ±eps probes land on a different piece than `params` is skipped, since the
/// central difference straddles a kink there.
GradientCheck finite_difference_check(const std::function<double(const Vector&)>& loss, const Vector& params,
                                      const Vector& gradient, double eps, Rng& rng, int max_coords = 200,
                                      const PieceFingerprint& fingerprint = {});

}  // namespace uacgan::oracle
