// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "uacgan/mine.hpp"
#include "uacgan/models.hpp"
#include "uacgan/objectives.hpp"
#include "uacgan/optim.hpp"
#include "uacgan/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace uacgan {

struct TrainConfig {
  ObjectiveKind objective = ObjectiveKind::uac;
  int steps = 1000;
  int batch_size = 64;
  // Keys: G, D, C, Cmi, T, DY.
  std::map<std::string, double> learning_rates = {{"G", 2e-4},  {"D", 2e-4}, {"C", 2e-4},
                                                  {"Cmi", 2e-4}, {"T", 2e-4}, {"DY", 2e-4}};
  double beta1 = 0.5;
  double beta2 = 0.999;
  double lambda_mi = 1.0;
  // MI weight at step s is lambda_mi * mi_decay^s; 1 disables the schedule.
  double mi_decay = 1.0;
  int n_critic = 1;  // critic updates per generator update
  std::uint64_t seed = 0;
  double ema_rate = 0.01;
  MarginalStrategy marginal = MarginalStrategy::prior;
  bool classifier_on_fake = true;
  bool saturating = false;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  int mi_log_every = 10;

  void validate() const;
  ComposeOptions compose_options(std::int64_t step) const;
};

nlohmann::json to_json(const TrainConfig& c);
// Fields absent from `j` keep their value from `base`; unknown fields throw.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json to_json(const ArchConfig& a);
ArchConfig arch_config_from_json(const nlohmann::json& j, ArchConfig base = {});

/// Stable 64-bit hash (FNV-1a) of the canonical JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);

/// Source of real batches. Batch `index` must be a deterministic function of
/// the index so a resumed run sees the same data as an uninterrupted one.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual LabeledBatch batch(std::int64_t index, int size) = 0;
  virtual DataShape shape() const = 0;
  virtual LabelSpec labels() const = 0;
};

/// A fixed labeled set, visited in epochs of seeded random order.
class InMemoryDataSource final : public DataSource {
 public:
  InMemoryDataSource(Matrix x, std::vector<int> y, DataShape shape, LabelSpec labels, std::uint64_t seed);
  LabeledBatch batch(std::int64_t index, int size) override;
  DataShape shape() const override { return shape_; }
  LabelSpec labels() const override { return labels_; }
  Eigen::Index size() const { return x_.rows(); }

 private:
  Matrix x_;
  std::vector<int> y_;
  DataShape shape_;
  LabelSpec labels_;
  std::uint64_t seed_;
  std::int64_t cached_epoch_ = -1;
  int cached_size_ = 0;
  std::vector<int> order_;
};

struct RunningAverage {
  double sum = 0.0;
  std::int64_t count = 0;
  void add(double v) {
    sum += v;
    ++count;
  }
  double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
};

struct TrainState {
  TrainConfig config;
  NetworkBundle nets;
  std::map<std::string, std::unique_ptr<Adam>> optimizers;
  MineCritic critic;
  // Separate streams so that switching objectives never shifts the draws
  // another phase sees.
  Rng rng_z;
  Rng rng_y;
  Rng rng_ybar;
  Rng rng_dy;
  std::int64_t step = 0;  // completed generator updates
  std::map<std::string, RunningAverage> aggregates;
  std::optional<MIEstimate> last_mi;
  std::optional<LossReport> last_report;  // most recent finite report
  // Called after each optimizer step with the updated network's name.
  std::function<void(const std::string&)> after_update;
};

TrainState make_train_state(const TrainConfig& config, const ArchConfig& arch, const DataShape& shape,
                            const LabelSpec& labels, const LatentSpec& latent);

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(std::int64_t step, std::optional<LossReport> last_finite, const std::string& what);
  std::int64_t step() const { return step_; }
  const std::optional<LossReport>& last_finite() const { return last_finite_; }

 private:
  std::int64_t step_;
  std::optional<LossReport> last_finite_;
};

/// One round of updates: D, C, the objective's own critic (C^mi, or D_Y then
/// T), and, if `update_generator`, G with every critic frozen. Throws
/// TrainingAborted (without applying the offending update) on a non-finite
/// loss.
LossReport train_step(TrainState& state, const LabeledBatch& real_batch, bool update_generator = true);

// Checkpoint meta carries the config hash; loading into a state built from a
// different configuration throws.
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
void load_checkpoint(TrainState& state, const std::filesystem::path& path);
/// Rebuilds networks and optimizer state from the configuration stored in
/// the checkpoint itself.
TrainState restore_train_state(const std::filesystem::path& path);

struct MIRow {
  std::int64_t step;
  MIEstimate estimate;
};

struct FitOptions {
  std::optional<std::filesystem::path> run_dir;  // metrics.csv, mi.csv, checkpoints/
  std::optional<std::filesystem::path> resume_from;
  std::function<void(std::int64_t, const LossReport&)> on_step;
};

struct FitResult {
  TrainState state;
  std::vector<LossReport> reports;  // one per step run in this call
  std::vector<MIRow> mi_rows;
};

FitResult fit(const TrainConfig& config, const ArchConfig& arch, const LatentSpec& latent, DataSource& data,
              const FitOptions& options = {});

std::string metrics_header();
std::string metrics_row(std::int64_t step, const LossReport& r);

}  // namespace uacgan
