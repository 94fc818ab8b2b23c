// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/optim.hpp"

#include <cmath>

namespace uacgan {

Adam::Adam(std::vector<ag::Var> params, AdamOptions options) : options_(options) {
  slots_.reserve(params.size());
  for (auto& p : params) {
    slots_.push_back({p, Matrix::Zero(p.rows(), p.cols()), Matrix::Zero(p.rows(), p.cols())});
  }
}

void Adam::step() {
  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double step_size = options_.learning_rate / correction1;
  for (auto& s : slots_) {
    if (!s.param.has_grad()) continue;
    const Matrix& g = s.param.grad();
    s.m = b1 * s.m + (1.0 - b1) * g;
    s.v = b2 * s.v + (1.0 - b2) * g.cwiseProduct(g);
    auto denom = (s.v.array() / correction2).sqrt() + options_.eps;
    s.param.mutable_value().array() -= step_size * s.m.array() / denom;
  }
}

void Adam::zero_grad() {
  for (auto& s : slots_) s.param.zero_grad();
}

}  // namespace uacgan
