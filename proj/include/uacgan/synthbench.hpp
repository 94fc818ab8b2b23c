// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

// 1-D three-component mixture benchmark: sampling, MMD, KDE, and the
// train-then-score loop over several seeds.

#pragma once

#include "uacgan/mine.hpp"
#include "uacgan/models.hpp"
#include "uacgan/oracle.hpp"
#include "uacgan/rng.hpp"
#include "uacgan/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uacgan {

struct MoGSpec {
  // (mean, second parameter); the second parameter is a standard deviation
  // unless `variance_convention` is set.
  std::vector<oracle::GaussianComponent> components = {{0.0, 1.0}, {3.0, 2.0}, {6.0, 3.0}};
  std::vector<double> prior = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  bool variance_convention = false;

  void validate() const;
  int num_classes() const { return static_cast<int>(components.size()); }
  double stddev(int k) const;
  // Components with the second parameter resolved to a standard deviation.
  std::vector<oracle::GaussianComponent> resolved() const;
  LabelSpec label_spec() const { return LabelSpec{num_classes(), prior}; }
};

LabeledBatch sample_mog(const MoGSpec& spec, int n, Rng& rng);
LabeledBatch sample_mog(const MoGSpec& spec, int n, std::uint64_t seed);
// n draws from component k alone.
std::vector<double> sample_mog_class(const MoGSpec& spec, int k, int n, Rng& rng);

/// (x, class) pairs from the mixture, for standalone MI estimation.
JointSampler mog_joint_sampler(const MoGSpec& spec);

/// Fresh mixture samples for every batch index.
class MoGDataSource final : public DataSource {
 public:
  MoGDataSource(MoGSpec spec, std::uint64_t seed);
  LabeledBatch batch(std::int64_t index, int size) override;
  DataShape shape() const override { return DataShape::scalar(); }
  LabelSpec labels() const override { return spec_.label_spec(); }

 private:
  MoGSpec spec_;
  std::uint64_t seed_;
};

/// Biased (V-statistic) MMD² with k(a, b) = exp(−(a − b)² / (2σ²)).
double mmd_squared(std::span<const double> xs, std::span<const double> ys, double sigma);

/// Median of |a_i − a_j| over pairs i < j of at most `max_points` evenly
/// strided points.
double median_pairwise_distance(std::span<const double> xs, std::size_t max_points = 2000);

/// Gaussian-kernel density estimate evaluated on `grid`.
std::vector<double> kde(std::span<const double> samples, double bandwidth, std::span<const double> grid);

/// 0.9 · min(sd, IQR / 1.34) · n^(−1/5).
double silverman_bandwidth(std::span<const double> samples);

struct RunMMD {
  std::uint64_t seed = 0;
  std::vector<double> per_class;
  double marginal = 0.0;
  double seconds = 0.0;
  std::string status = "ok";  // "ok" or the abort message
};

struct MMDSummary {
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
};

struct MMDReport {
  std::string kind;
  double bandwidth = 0.0;
  int samples_per_class = 0;
  std::vector<RunMMD> runs;
  std::vector<MMDSummary> per_class;
  MMDSummary marginal;
  bool complete = true;  // false if a run aborted
};

MMDSummary summarize(std::span<const double> values);
void finalize_report(MMDReport& report);

struct MoGBenchOptions {
  MoGSpec spec;
  int runs = 5;
  std::uint64_t seed = 0;  // run r trains with seed + r
  int samples_per_class = 10000;
  int bandwidth_points = 2000;
  std::optional<std::filesystem::path> out_dir;  // per-run CSV, density plots, run dirs
  bool plots = true;
  std::function<void(const std::string&)> log;
};

/// Real reference sample used for scoring: `n` draws per class from a stream
/// that depends only on `seed`.
std::vector<std::vector<double>> reference_sample(const MoGSpec& spec, int n, std::uint64_t seed);

/// Per-class and marginal MMD² of class-conditional generated samples
/// against the reference.
RunMMD score_samples(const std::vector<std::vector<double>>& real, const std::vector<std::vector<double>>& fake,
                     double bandwidth);

/// Class-conditional samples from a generator: n per class.
std::vector<std::vector<double>> generate_per_class(GeneratorNet& g, int num_classes, int n, Rng& rng);

MMDReport run_mog_benchmark(ObjectiveKind kind, const TrainConfig& train, const ArchConfig& arch,
                            const LatentSpec& latent, const MoGBenchOptions& options);

/// Same scoring with a second real sample in place of the generator.
MMDReport real_vs_real_control(const MoGBenchOptions& options);

void write_mmd_csv(const MMDReport& report, const std::filesystem::path& path);
nlohmann::json to_json(const MMDReport& report);

/// Overlaid KDE curves, real solid and generated dashed, one panel per class
/// plus the marginal. Returns the maximum absolute gap between paired curves.
double emit_density_plot(const std::vector<std::vector<double>>& real, const std::vector<std::vector<double>>& fake,
                         const std::filesystem::path& png_path, double lo = -10.0, double hi = 16.0,
                         int grid_points = 521);

}  // namespace uacgan
