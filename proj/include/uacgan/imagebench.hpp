// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "uacgan/models.hpp"
#include "uacgan/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace uacgan {

// ---- datasets ---------------------------------------------------------------

struct ImageDataset {
  std::string name;   // mnist | mnist-5k | cifar10
  std::string split;  // train | test
  DataShape shape;
  Matrix images;  // one flattened CHW image per row, pixels in [-1, 1]
  std::vector<int> labels;
  int num_classes = 10;

  std::size_t size() const { return labels.size(); }
  void validate() const;
  std::vector<std::size_t> class_counts() const;
};

/// Expected image count of a named split; throws for unknown names.
std::size_t official_split_size(const std::string& name, const std::string& split);

/// IDX image + label files, gzip-compressed or raw.
ImageDataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                      const std::string& name, const std::string& split);

/// CIFAR-10 binary batches: 1 label byte then 3072 pixel bytes per record.
ImageDataset read_cifar10_batches(const std::vector<std::vector<std::uint8_t>>& batches, const std::string& split);
/// Extracts the binary batches for `split` from cifar-10-binary.tar.gz.
ImageDataset read_cifar10_archive(const std::filesystem::path& archive, const std::string& split);

struct RemoteFile {
  std::string filename;
  std::string url;
  std::string md5;
};

const std::vector<RemoteFile>& remote_files(const std::string& dataset);

/// $UACGAN_DATA_DIR, else $XDG_CACHE_HOME/uacgan, else ~/.cache/uacgan.
std::filesystem::path data_cache_dir();

/// Directory of the bundled 5,000-image MNIST subset ($UACGAN_BUNDLED_DATA
/// overrides the build-time location).
std::filesystem::path bundled_mnist_dir();

std::string md5_file(const std::filesystem::path& path);
std::string sha256_file(const std::filesystem::path& path);

class ChecksumMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ensures `cache_dir/file.filename` exists with the expected MD5, fetching
/// it (any libcurl URL, including file://) when absent. A corrupt download is
/// deleted and reported.
std::filesystem::path fetch(const RemoteFile& file, const std::filesystem::path& cache_dir);

/// "mnist" and "cifar10" come from the cache (fetched when `download`);
/// "mnist-5k" is read from the bundled subset.
ImageDataset load_dataset(const std::string& name, const std::string& split,
                          const std::optional<std::filesystem::path>& cache_dir = std::nullopt,
                          bool download = true);

// ---- scoring ----------------------------------------------------------------

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

/// exp(mean KL(p(y|x) ‖ p_split(y))) per contiguous split; mean and
/// population std across splits. Rows beyond n_splits · floor(n / n_splits)
/// are ignored.
MeanStd inception_score(const Matrix& class_probs, int n_splits = 10);

struct GaussianMoments {
  Vector mean;
  Matrix cov;

  static GaussianMoments of(const Matrix& features);
};

struct FrechetResult {
  double value = 0.0;
  // Most negative eigenvalue clipped inside the square root (0 if none).
  double clipped_eigenvalue = 0.0;
};

FrechetResult frechet_distance_detail(const Vector& mu1, const Matrix& s1, const Vector& mu2, const Matrix& s2);
double frechet_distance(const Vector& mu1, const Matrix& s1, const Vector& mu2, const Matrix& s2);

/// Maps images to (features, class probabilities).
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  virtual std::string weights_hash() const = 0;
  virtual DataShape input_shape() const = 0;
  virtual std::pair<Matrix, Matrix> extract(const Matrix& images) = 0;
};

/// Small MLP classifier on MNIST: 784 -> 128 -> 64 -> 10, ReLU. The 64-wide
/// layer supplies FID features, the softmax supplies IS probabilities.
class MnistScorer final : public FeatureExtractor {
 public:
  static constexpr const char* kId = "mnist-mlp-v1";

  explicit MnistScorer(std::uint64_t seed = 0);
  static std::unique_ptr<MnistScorer> load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::string id() const override { return kId; }
  std::string weights_hash() const override { return hash_; }
  DataShape input_shape() const override { return {1, 28, 28}; }
  std::pair<Matrix, Matrix> extract(const Matrix& images) override;

  struct TrainReport {
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
  };
  TrainReport train(const ImageDataset& train, const ImageDataset& test, int epochs, std::uint64_t seed);
  double accuracy(const ImageDataset& data);
  // Features are divided by this, fixed after training so the training split
  // has unit mean per-dimension variance.
  double feature_scale() const { return feature_scale_; }

 private:
  std::unique_ptr<nn::Sequential> trunk_;  // up to the feature layer
  std::unique_ptr<nn::Linear> head_;
  double feature_scale_ = 1.0;
  std::string hash_ = "untrained";
};

/// Location of the shipped scorer weights ($UACGAN_SCORER overrides).
std::filesystem::path default_scorer_path();

/// Extractor for a dataset. MNIST variants load the shipped scorer; CIFAR-10
/// needs Inception-v3 pool3 weights, which this build cannot load, so it
/// throws with instructions.
std::unique_ptr<FeatureExtractor> load_extractor(const std::string& dataset,
                                                 const std::optional<std::filesystem::path>& weights = std::nullopt);

struct ScoreReport {
  MeanStd inception_score;
  double fid = 0.0;
  int n_samples = 0;
  std::string extractor_id;
  std::string weights_hash;
  double clipped_eigenvalue = 0.0;
};

nlohmann::json to_json(const ScoreReport& r);

/// Generated samples: labels drawn from `labels`, in chunks.
Matrix sample_generator(GeneratorNet& g, const LabelSpec& labels, int n, Rng& rng);

ScoreReport score_images(FeatureExtractor& extractor, const Matrix& images, const GaussianMoments& reference,
                         int n_splits = 10);
ScoreReport score_generator(GeneratorNet& g, const LabelSpec& labels, const ImageDataset& real,
                            FeatureExtractor& extractor, int n_samples, std::uint64_t seed);

/// FID between two disjoint halves of a dataset (seeded split).
double self_fid(const ImageDataset& data, FeatureExtractor& extractor, std::uint64_t seed);

struct GridResult {
  double variance = 0.0;  // mean per-pixel variance across the grid's samples
  bool collapsed = false;
};

/// Flags a grid as collapsed when its per-pixel variance falls below this
/// fraction of the mean squared pixel value (or is exactly 0).
inline constexpr double kCollapseRelativeVariance = 1e-4;

GridResult grid_statistics(const Matrix& samples);

/// Writes a rows x cols PNG of G(z_i, k) for i.i.d. z drawn from `seed`.
GridResult class_grid(GeneratorNet& g, int k, int rows, int cols, std::uint64_t seed,
                      const std::filesystem::path& png_path,
                      const std::function<void(const std::string&)>& log = nullptr);

/// Tiles images (rows of `samples`, shape `shape`) into a PNG.
void write_image_grid(const Matrix& samples, const DataShape& shape, int rows, int cols,
                      const std::filesystem::path& png_path);

}  // namespace uacgan
