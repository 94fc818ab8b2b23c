// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

// Single-file container: magic, version, JSON manifest, raw array blob.
// The byte layout is described in docs/checkpoint-format.md.

#pragma once

#include "uacgan/autograd.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

namespace uacgan {

inline constexpr char kCheckpointMagic[8] = {'U', 'A', 'C', 'G', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointData {
  nlohmann::json meta;                 // free-form, stored under "meta" in the manifest
  std::map<std::string, Matrix> arrays;  // name -> 2-D float64 array
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::filesystem::path& path);

}  // namespace uacgan
