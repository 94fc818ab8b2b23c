// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the unit tests and the acceptance binary.

#pragma once

#include "uacgan/autograd.hpp"
#include "uacgan/oracle.hpp"
#include "uacgan/rng.hpp"

#include <functional>
#include <vector>

namespace uacgan::testing {

inline Eigen::Index total_size(const std::vector<ag::Var>& params) {
  Eigen::Index n = 0;
  for (const auto& p : params) n += p.value().size();
  return n;
}

inline Vector flatten_values(const std::vector<ag::Var>& params) {
  Vector out(total_size(params));
  Eigen::Index at = 0;
  for (const auto& p : params) {
    out.segment(at, p.value().size()) = p.value().reshaped<Eigen::RowMajor>();
    at += p.value().size();
  }
  return out;
}

inline Vector flatten_grads(const std::vector<ag::Var>& params) {
  Vector out = Vector::Zero(total_size(params));
  Eigen::Index at = 0;
  for (const auto& p : params) {
    if (p.has_grad()) out.segment(at, p.value().size()) = p.grad().reshaped<Eigen::RowMajor>();
    at += p.value().size();
  }
  return out;
}

inline void assign_values(std::vector<ag::Var>& params, const Vector& v) {
  Eigen::Index at = 0;
  for (auto& p : params) {
    Matrix& m = p.mutable_value();
    m.reshaped<Eigen::RowMajor>() = v.segment(at, m.size());
    at += m.size();
  }
}

/// Backprop gradient of `build()` with respect to `params`, compared against
/// central differences of the same scalar. With `skip_kinks`, coordinates
/// whose probes flip a relu sign are skipped and counted.
inline oracle::GradientCheck check_gradient(std::vector<ag::Var> params, const std::function<ag::Var()>& build,
                                            double eps, std::uint64_t seed, int max_coords = 200,
                                            bool skip_kinks = false) {
  for (auto& p : params) p.zero_grad();
  ag::backward(build());
  const Vector grad = flatten_grads(params);
  const Vector x0 = flatten_values(params);
  ag::PieceRecorder pieces;
  auto loss = [&](const Vector& x) {
    assign_values(params, x);
    pieces.reset();
    return build().item();
  };
  oracle::PieceFingerprint fingerprint;
  if (skip_kinks) fingerprint = [&] { return pieces.fingerprint(); };
  Rng rng(seed, "fd");
  const auto result = oracle::finite_difference_check(loss, x0, grad, eps, rng, max_coords, fingerprint);
  assign_values(params, x0);
  return result;
}

}  // namespace uacgan::testing
