// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "uacgan/autograd.hpp"

#include <cstdint>
#include <vector>

namespace uacgan {

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  struct Slot {
    ag::Var param;
    Matrix m;
    Matrix v;
  };

  Adam(std::vector<ag::Var> params, AdamOptions options);

  // Parameters without an accumulated gradient are left untouched.
  void step();
  void zero_grad();

  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }
  std::int64_t steps_taken() const { return t_; }
  void set_steps_taken(std::int64_t t) { t_ = t; }
  AdamOptions& options() { return options_; }

 private:
  AdamOptions options_;
  std::vector<Slot> slots_;
  std::int64_t t_ = 0;
};

}  // namespace uacgan
