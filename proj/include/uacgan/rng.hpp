// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "uacgan/autograd.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uacgan {

/// Derives the seed of a named stream from the master seed.
///
/// Every consumer of randomness (network init, latent draws, label draws,
/// marginal resampling, data order) gets its own stream so that enabling one
/// consumer never shifts the draws seen by another. The stream seed is
/// SplitMix64 applied to master ^ FNV-1a-64(name).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

std::uint64_t fnv1a64(std::string_view bytes);

// Draws are defined in terms of raw 64-bit engine output only, so sequences
// are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  Rng(std::uint64_t master, std::string_view stream) : engine_(derive_seed(master, stream)) {}

  // Uniform in [0, 1).
  double uniform();
  // Box-Muller; the second variate is discarded so the stream holds no cache.
  double normal();
  int uniform_int(int n);
  int categorical(std::span<const double> probs);

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0);
  std::vector<int> permutation(int n);
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_int(static_cast<int>(i)))]);
    }
  }

  std::string state() const;
  void set_state(const std::string& s);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace uacgan
