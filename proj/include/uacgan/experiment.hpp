// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

// Experiment configuration shared by the command-line tool: the merged
// training, architecture and benchmark settings, their JSON form, and the
// defaults < file < flags layering.

#pragma once

#include "uacgan/synthbench.hpp"
#include "uacgan/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace uacgan {

struct BenchOptions {
  int runs = 5;
  int samples_per_class = 10000;
  int bandwidth_points = 2000;
  bool plots = true;
};

struct MineOptions {
  std::string sampler = "gaussian";  // gaussian | independent | sign-bucket | mog
  double rho = 0.5;                  // correlation for gaussian and sign-bucket
  std::string statistics = "concat-T";
  StandaloneOptions standalone;
};

struct ImageOptions {
  int epochs = 0;  // > 0 overrides train.steps with whole epochs
  int score_samples = 10000;
  int grid_rows = 10;
  int grid_cols = 10;
  std::string scorer;  // weights path; empty selects the shipped scorer
};

struct ExperimentConfig {
  std::string dataset = "mog";  // mog | mnist | mnist-5k | cifar10
  TrainConfig train;
  ArchConfig arch;
  int latent_dim = 2;
  MoGSpec mog;
  BenchOptions bench;
  MineOptions mine;
  ImageOptions image;
  std::string output_dir = "runs";
  std::string data_cache;  // empty selects data_cache_dir()
};

/// Defaults for a dataset: MoG runs use the small MLPs, image datasets the
/// matching convolutional preset and a 100-d latent. $UACGAN_OUTPUT_ROOT, if
/// set, replaces the default output_dir.
ExperimentConfig default_experiment_config(const std::string& dataset = "mog");

nlohmann::json to_json(const ExperimentConfig& c);
/// Unknown fields throw std::invalid_argument naming the dotted path.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig base);

class ConfigFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a JSON config file; throws ConfigFileError with the path if it is
/// missing or malformed.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// `path` is dotted ("train.learning_rates.G"). The value is read as JSON
/// unless the field currently holds a string, in which case it is taken
/// verbatim.
using ConfigOverride = std::pair<std::string, std::string>;

/// Parses "a.b=value".
ConfigOverride parse_override(const std::string& assignment);

/// defaults(dataset) < file < overrides, applied in order. The dataset is
/// taken from the overrides, else the file, else "mog".
ExperimentConfig resolve_experiment_config(const std::optional<nlohmann::json>& file,
                                           const std::vector<ConfigOverride>& overrides);

/// Hex FNV-1a of the canonical JSON form.
std::string experiment_hash(const ExperimentConfig& c);

/// Creates `root/name` and writes the config snapshot to config.json.
std::filesystem::path prepare_run_dir(const ExperimentConfig& c, const std::string& name);

}  // namespace uacgan
