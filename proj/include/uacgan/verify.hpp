// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

// Exhaustive checks of the information-theoretic identities the objectives
// rely on, run on random finite toy distributions.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uacgan {

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;       // largest observed violation
  double tolerance = 0.0;
  int instances = 0;
  double seconds = 0.0;
};

std::vector<CheckResult> run_theory_suite(std::uint64_t seed = 0, int instances = 1000);

}  // namespace uacgan
