// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace uacgan::oracle {

namespace {

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

void check_simplex(std::span<const double> row, const char* what) {
  double total = 0.0;
  for (double p : row) {
    if (!(p >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
}

std::span<const double> row_span(const Matrix& m, Eigen::Index i) {
  return {m.row(i).data(), static_cast<std::size_t>(m.cols())};
}

double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

double log_normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

template <class F>
double simpson(F&& f, double a, double b, int intervals) {
  if (intervals % 2 == 1) ++intervals;
  const double h = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

}  // namespace

DiscreteJoint DiscreteJoint::from_table(Matrix table) {
  DiscreteJoint j{std::move(table)};
  j.validate();
  return j;
}

DiscreteJoint DiscreteJoint::from_conditional(std::span<const double> x_marginal, const Matrix& posterior) {
  if (static_cast<Eigen::Index>(x_marginal.size()) != posterior.rows()) {
    throw std::invalid_argument("from_conditional: marginal and posterior disagree in size");
  }
  Matrix t = posterior;
  for (Eigen::Index i = 0; i < t.rows(); ++i) t.row(i) *= x_marginal[static_cast<std::size_t>(i)];
  return from_table(std::move(t));
}

DiscreteJoint DiscreteJoint::random(Rng& rng, int n_x, int k) {
  Matrix t(n_x, k);
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = -std::log(1.0 - rng.uniform());
  }
  t /= t.sum();
  return DiscreteJoint{std::move(t)};
}

void DiscreteJoint::validate() const {
  if (table.size() == 0) throw std::invalid_argument("DiscreteJoint: empty table");
  if ((table.array() < 0.0).any()) throw std::invalid_argument("DiscreteJoint: negative entry");
  if (std::abs(table.sum() - 1.0) > 1e-12) throw std::invalid_argument("DiscreteJoint: mass is not 1");
}

Vector DiscreteJoint::x_marginal() const { return table.rowwise().sum(); }
Vector DiscreteJoint::y_marginal() const { return table.colwise().sum().transpose(); }

Matrix DiscreteJoint::posterior() const {
  Matrix post(table.rows(), table.cols());
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    const double m = table.row(i).sum();
    if (m > 0.0) {
      post.row(i) = table.row(i) / m;
    } else {
      post.row(i).setConstant(1.0 / static_cast<double>(table.cols()));
    }
  }
  return post;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) h -= xlogx(v);
  return h;
}

double conditional_entropy(const DiscreteJoint& joint) {
  // H(Y|X) = H(X,Y) − H(X)
  const Vector px = joint.x_marginal();
  double h_xy = 0.0;
  for (Eigen::Index i = 0; i < joint.table.size(); ++i) h_xy -= xlogx(joint.table.data()[i]);
  return h_xy - entropy({px.data(), static_cast<std::size_t>(px.size())});
}

MutualInformation mutual_information(const DiscreteJoint& joint) {
  const Vector px = joint.x_marginal();
  const Vector py = joint.y_marginal();
  const Matrix post = joint.posterior();
  double h_y_given_x = 0.0;
  for (Eigen::Index i = 0; i < joint.table.rows(); ++i) {
    for (Eigen::Index k = 0; k < joint.table.cols(); ++k) h_y_given_x -= px(i) * xlogx(post(i, k));
  }
  double h_x_given_y = 0.0;
  for (Eigen::Index k = 0; k < joint.table.cols(); ++k) {
    if (py(k) <= 0.0) continue;
    for (Eigen::Index i = 0; i < joint.table.rows(); ++i) h_x_given_y -= py(k) * xlogx(joint.table(i, k) / py(k));
  }
  MutualInformation mi;
  mi.via_labels = entropy({py.data(), static_cast<std::size_t>(py.size())}) - h_y_given_x;
  mi.via_data = entropy({px.data(), static_cast<std::size_t>(px.size())}) - h_x_given_y;
  return mi;
}

IdentityCheck kl_identity_check(const Matrix& p_post, const Matrix& q_c_post, std::span<const double> marginal) {
  if (p_post.rows() != q_c_post.rows() || p_post.cols() != q_c_post.cols() ||
      static_cast<Eigen::Index>(marginal.size()) != p_post.rows()) {
    throw std::invalid_argument("kl_identity_check: shape mismatch");
  }
  check_simplex(marginal, "kl_identity_check marginal");
  double neg_cond_entropy = 0.0;
  double cross_entropy = 0.0;
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p_post.rows(); ++i) {
    check_simplex(row_span(p_post, i), "kl_identity_check p_post");
    check_simplex(row_span(q_c_post, i), "kl_identity_check q_c_post");
    const double m = marginal[static_cast<std::size_t>(i)];
    double kl_row = 0.0;
    for (Eigen::Index k = 0; k < p_post.cols(); ++k) {
      const double p = p_post(i, k);
      if (p <= 0.0) continue;
      const double q = q_c_post(i, k);
      neg_cond_entropy += m * p * std::log(p);
      cross_entropy -= m * p * std::log(q);
      kl_row += p * (std::log(p) - std::log(q));
    }
    kl += m * kl_row;
  }
  return {neg_cond_entropy + cross_entropy, kl};
}

std::vector<double> log_ratio_row(std::span<const double> q_mi_row, std::span<const double> q_c_row) {
  if (q_mi_row.size() != q_c_row.size()) throw std::invalid_argument("log_ratio_row: length mismatch");
  std::vector<double> r(q_c_row.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!(q_c_row[k] > 0.0)) {
      throw std::invalid_argument("q_c must be strictly positive (entry " + std::to_string(k) + " is zero)");
    }
    r[k] = std::log(q_mi_row[k]) - std::log(q_c_row[k]);
  }
  return r;
}

std::vector<double> degenerate_posterior(std::span<const double> q_mi_row, std::span<const double> q_c_row) {
  const auto r = log_ratio_row(q_mi_row, q_c_row);
  // Strict < keeps the first minimum.
  std::size_t best = 0;
  for (std::size_t k = 1; k < r.size(); ++k) {
    if (r[k] < r[best]) best = k;
  }
  std::vector<double> out(r.size(), 0.0);
  out[best] = 1.0;
  return out;
}

double generator_posterior_objective(std::span<const double> q_post_row, std::span<const double> q_mi_row,
                                     std::span<const double> q_c_row) {
  check_simplex(q_post_row, "generator_posterior_objective q_post");
  const auto r = log_ratio_row(q_mi_row, q_c_row);
  if (q_post_row.size() != r.size()) throw std::invalid_argument("generator_posterior_objective: length mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (q_post_row[k] > 0.0) acc += q_post_row[k] * r[k];
  }
  return acc;
}

double simplex_grid_minimum(std::span<const double> q_mi_row, std::span<const double> q_c_row, double step) {
  if (q_c_row.size() != 3) throw std::invalid_argument("simplex_grid_minimum: expects 3 classes");
  const auto r = log_ratio_row(q_mi_row, q_c_row);
  const int n = static_cast<int>(std::lround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      const double a = static_cast<double>(i) / n;
      const double b = static_cast<double>(j) / n;
      const double c = static_cast<double>(n - i - j) / n;
      best = std::min(best, a * r[0] + b * r[1] + c * r[2]);
    }
  }
  return best;
}

double expected_log_likelihood(const DiscreteJoint& joint, const Matrix& classifier_post) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < joint.table.rows(); ++i) {
    for (Eigen::Index k = 0; k < joint.table.cols(); ++k) {
      const double p = joint.table(i, k);
      if (p > 0.0) acc += p * std::log(classifier_post(i, k));
    }
  }
  return acc;
}

double exhaustive_dv(const DiscreteJoint& joint, const Matrix& statistic) {
  const Vector px = joint.x_marginal();
  const Vector py = joint.y_marginal();
  double joint_term = 0.0;
  double max_t = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < statistic.rows(); ++i) {
    for (Eigen::Index k = 0; k < statistic.cols(); ++k) {
      if (joint.table(i, k) > 0.0) joint_term += joint.table(i, k) * statistic(i, k);
      if (px(i) * py(k) > 0.0) max_t = std::max(max_t, statistic(i, k));
    }
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < statistic.rows(); ++i) {
    for (Eigen::Index k = 0; k < statistic.cols(); ++k) {
      const double w = px(i) * py(k);
      if (w > 0.0) s += w * std::exp(statistic(i, k) - max_t);
    }
  }
  return joint_term - (max_t + std::log(s));
}

Matrix optimal_statistic(const DiscreteJoint& joint, double offset) {
  const Matrix post = joint.posterior();
  const Vector py = joint.y_marginal();
  Matrix t(post.rows(), post.cols());
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index k = 0; k < t.cols(); ++k) {
      t(i, k) = post(i, k) > 0.0 ? std::log(post(i, k)) - std::log(py(k)) + offset
                                 : -std::numeric_limits<double>::infinity();
    }
  }
  return t;
}

double gaussian_mi(double rho) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("gaussian_mi: |rho| must be < 1");
  return -0.5 * std::log(1.0 - rho * rho);
}

double mixture_mutual_information(std::span<const GaussianComponent> components, std::span<const double> prior,
                                  int intervals) {
  if (components.size() != prior.size() || components.empty()) {
    throw std::invalid_argument("mixture_mutual_information: components and prior disagree");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& c : components) {
    lo = std::min(lo, c.mean - 14.0 * c.stddev);
    hi = std::max(hi, c.mean + 14.0 * c.stddev);
  }
  double mi = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (prior[k] <= 0.0) continue;
    auto integrand = [&](double x) {
      double px = 0.0;
      for (std::size_t j = 0; j < components.size(); ++j) {
        px += prior[j] * normal_pdf(x, components[j].mean, components[j].stddev);
      }
      const double pk = normal_pdf(x, components[k].mean, components[k].stddev);
      if (pk <= 0.0 || px <= 0.0) return 0.0;
      return pk * (log_normal_pdf(x, components[k].mean, components[k].stddev) - std::log(px));
    };
    mi += prior[k] * simpson(integrand, lo, hi, intervals);
  }
  return mi;
}

double sign_bucket_mi(double rho, int intervals) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("sign_bucket_mi: |rho| must be < 1");
  const double scale = rho / std::sqrt(1.0 - rho * rho);
  auto integrand = [&](double x) {
    const double p = 0.5 * std::erfc(-scale * x / std::sqrt(2.0));
    return normal_pdf(x, 0.0, 1.0) * -(xlogx(p) + xlogx(1.0 - p));
  };
  return std::log(2.0) - simpson(integrand, -12.0, 12.0, intervals);
}

GradientCheck finite_difference_check(const std::function<double(const Vector&)>& loss, const Vector& params,
                                      const Vector& gradient, double eps, Rng& rng, int max_coords,
                                      const PieceFingerprint& fingerprint) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) throw std::invalid_argument("finite_difference_check: eps outside [1e-6, 1e-3]");
  if (gradient.size() != params.size()) throw std::invalid_argument("finite_difference_check: gradient size mismatch");
  const int n = static_cast<int>(params.size());
  std::vector<int> coords;
  if (n <= max_coords) {
    for (int i = 0; i < n; ++i) coords.push_back(i);
  } else {
    auto perm = rng.permutation(n);
    coords.assign(perm.begin(), perm.begin() + max_coords);
  }
  GradientCheck out;
  std::uint64_t base_piece = 0;
  if (fingerprint) {
    loss(params);
    base_piece = fingerprint();
  }
  Vector probe = params;
  for (int i : coords) {
    probe(i) = params(i) + eps;
    const double up = loss(probe);
    const bool up_same = !fingerprint || fingerprint() == base_piece;
    probe(i) = params(i) - eps;
    const double down = loss(probe);
    const bool down_same = !fingerprint || fingerprint() == base_piece;
    probe(i) = params(i);
    if (!up_same || !down_same) {
      ++out.kinks_skipped;
      continue;
    }
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::runtime_error("finite_difference_check: non-finite loss at coordinate " + std::to_string(i));
    }
    const double fd = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(gradient(i)), 1e-8});
    const double rel = std::abs(fd - gradient(i)) / denom;
    if (rel > out.max_relative_error || out.worst_coordinate < 0) {
      out.max_relative_error = rel;
      out.worst_coordinate = i;
      out.worst_numeric = fd;
      out.worst_analytic = gradient(i);
    }
    ++out.coordinates;
  }
  return out;
}

}  // namespace uacgan::oracle
