// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "uacgan/autograd.hpp"
#include "uacgan/nn.hpp"
#include "uacgan/rng.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace uacgan {

struct LatentSpec {
  int dim = 2;  // z ~ N(0, I_dim)

  void validate() const;
  Matrix sample(Rng& rng, Eigen::Index batch) const;
};

struct LabelSpec {
  int num_classes = 3;
  std::vector<double> prior;  // P_Y

  static LabelSpec uniform(int k);
  void validate() const;
  std::vector<int> sample(Rng& rng, std::size_t n) const;
};

struct DataShape {
  int channels = 1;
  int height = 1;
  int width = 1;

  static DataShape scalar() { return {}; }
  static DataShape vector(int dim) { return {dim, 1, 1}; }
  int size() const { return channels * height * width; }
  bool is_image() const { return height > 1 || width > 1; }
  bool operator==(const DataShape&) const = default;
  std::string to_string() const;
};

/// Samples paired with class labels, from P_XY or from the generator.
struct LabeledBatch {
  Matrix x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
};

/// Second argument of a statistics network. Projection networks read
/// `classes`; input-concat networks read `values` (one-hot rows for class
/// labels, raw values for continuous variables).
struct LabelInput {
  std::vector<int> classes;
  Matrix values;

  static LabelInput from_classes(std::span<const int> labels, int num_classes);
  static LabelInput from_values(Matrix values);
  Eigen::Index size() const;
};

class GeneratorNet final : public nn::Module {
 public:
  GeneratorNet(std::unique_ptr<nn::Sequential> body, LatentSpec latent, int num_classes, DataShape out);

  // (z, y) -> x; z is batch × latent.dim.
  ag::Var forward(const ag::Var& z, std::span<const int> labels);
  Matrix generate(const Matrix& z, std::span<const int> labels);

  const LatentSpec& latent() const { return latent_; }
  const DataShape& output_shape() const { return out_; }
  int num_classes() const { return num_classes_; }

 private:
  std::unique_ptr<nn::Sequential> body_;
  LatentSpec latent_;
  int num_classes_;
  DataShape out_;
};

class DiscriminatorNet final : public nn::Module {
 public:
  explicit DiscriminatorNet(std::unique_ptr<nn::Sequential> body);
  ag::Var logits(const ag::Var& x);
  // sigmoid(logits), strictly inside (0, 1) for finite logits of moderate size.
  Matrix probability(const Matrix& x);

 private:
  std::unique_ptr<nn::Sequential> body_;
};

class ClassifierNet final : public nn::Module {
 public:
  ClassifierNet(std::unique_ptr<nn::Sequential> body, int num_classes);
  ag::Var logits(const ag::Var& x);
  ag::Var log_probs(const ag::Var& x);
  Matrix probs(const Matrix& x);
  int num_classes() const { return num_classes_; }

 private:
  std::unique_ptr<nn::Sequential> body_;
  int num_classes_;
};

/// D_Y: a per-class logit table.
class LabelDiscriminatorNet final : public nn::Module {
 public:
  explicit LabelDiscriminatorNet(int num_classes);
  ag::Var logits(std::span<const int> labels);
  ag::Var& table() { return table_; }
  int num_classes() const { return static_cast<int>(table_.rows()); }

 private:
  ag::Var table_;  // K × 1
};

class StatisticsNet : public nn::Module {
 public:
  virtual ag::Var forward(const ag::Var& x, const LabelInput& y) = 0;
  virtual int num_classes() const = 0;
};

/// T(x, y) = v_yᵀ φ(x) + ψ(φ(x)) + c_y  [− D̃_Y(y) + log K].
class ProjectionStatisticsNet final : public StatisticsNet {
 public:
  struct Terms {
    ag::Var projection;   // v_yᵀ φ(x)
    ag::Var scalar_head;  // ψ(φ(x))
    ag::Var class_bias;   // c_y
    ag::Var label_term;   // −D̃_Y(y) + log K, undefined without a label discriminator
  };

  ProjectionStatisticsNet(std::unique_ptr<nn::Sequential> feature, int num_classes, Rng& rng);

  ag::Var forward(const ag::Var& x, const LabelInput& y) override;
  Terms terms(const ag::Var& x, std::span<const int> labels);
  int num_classes() const override { return static_cast<int>(embedding_.rows()); }

  // Not owned; D̃_Y enters T as a constant.
  void attach_label_discriminator(LabelDiscriminatorNet* dy) { label_discriminator_ = dy; }
  bool uses_label_discriminator() const { return label_discriminator_ != nullptr; }

  nn::Sequential& feature() { return *feature_; }
  ag::Var& embedding() { return embedding_; }
  nn::Linear& scalar_head() { return *psi_; }
  ag::Var& class_bias() { return bias_; }
  int feature_dim() const { return static_cast<int>(embedding_.cols()); }

 private:
  std::unique_ptr<nn::Sequential> feature_;
  std::unique_ptr<nn::Linear> psi_;
  ag::Var embedding_;  // K × F
  ag::Var bias_;       // K × 1
  LabelDiscriminatorNet* label_discriminator_ = nullptr;
};

/// Ablation baseline: T is a plain network on the concatenation of x and y.
class ConcatStatisticsNet final : public StatisticsNet {
 public:
  ConcatStatisticsNet(std::unique_ptr<nn::Sequential> body, DataShape x_shape, int label_width,
                      int num_classes);
  ag::Var forward(const ag::Var& x, const LabelInput& y) override;
  int num_classes() const override { return num_classes_; }

 private:
  std::unique_ptr<nn::Sequential> body_;
  DataShape x_shape_;
  int label_width_;
  int num_classes_;
};

struct ArchConfig {
  std::string preset = "mog-mlp";          // mog-mlp | mnist-conv | cifar10-conv
  std::string statistics = "projection-T";  // projection-T | concat-T
  int hidden = 64;
  int feature_dim = 64;
  bool use_label_discriminator = false;

  // Accepts any registered key; "projection-T"/"concat-T" pick the backbone
  // matching `shape`.
  static ArchConfig from_key(const std::string& key, const DataShape& shape);
  void validate(const DataShape& shape) const;
};

const std::vector<std::string>& registered_presets();

struct NetworkBundle {
  ArchConfig arch;
  DataShape data_shape;
  LabelSpec labels;
  LatentSpec latent;

  std::unique_ptr<GeneratorNet> generator;
  std::unique_ptr<DiscriminatorNet> discriminator;
  std::unique_ptr<ClassifierNet> classifier;
  std::unique_ptr<ClassifierNet> twin_classifier;
  std::unique_ptr<StatisticsNet> statistics;
  std::unique_ptr<LabelDiscriminatorNet> label_discriminator;

  // Checkpoint names: G, D, C, Cmi, T, DY (absent members omitted).
  std::map<std::string, nn::Module*> modules() const;
};

/// Statistics network alone. `label_width` is the width of LabelInput::values
/// (K for one-hot labels, the variable's dimension for continuous y).
std::unique_ptr<StatisticsNet> make_statistics_net(const ArchConfig& arch, const DataShape& x_shape,
                                                   int num_classes, int label_width, Rng& rng);

/// Fresh networks; each one is initialized from its own derived stream
/// ("init.G", "init.D", ...) so adding a network never perturbs the others.
NetworkBundle build_networks(const ArchConfig& arch, const DataShape& shape, const LabelSpec& labels,
                             const LatentSpec& latent, std::uint64_t seed);

/// T(x, y) for a single point.
double statistic_forward(StatisticsNet& t, const Matrix& x_row, int label);

/// Optimal logit of D_Y against uniform labels: log q_y + log K. Zero-mass
/// classes map to -infinity.
std::vector<double> optimal_label_logit(std::span<const double> q_y, int num_classes);

}  // namespace uacgan
