// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/models.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace uacgan {

namespace {

using nn::ActivationKind;

constexpr double kSlope = 0.2;

std::unique_ptr<nn::Sequential> mlp_body(int in, int hidden, int out, ActivationKind act, Rng& rng) {
  return nn::make_mlp(in, hidden, /*depth=*/2, out, act, rng);
}

// k4/s2/p1 convolutions, each halving the spatial size, then a linear head.
std::unique_ptr<nn::Sequential> conv_trunk(const DataShape& s, const std::vector<int>& channels, int out,
                                           Rng& rng) {
  auto net = std::make_unique<nn::Sequential>(s.size());
  int c = s.channels;
  int h = s.height;
  int w = s.width;
  for (int oc : channels) {
    ag::ConvGeometry g{c, oc, 4, 2, 1, h, w};
    net->emplace<nn::Conv2d>(g, rng);
    net->activate(ActivationKind::leaky_relu, kSlope);
    c = oc;
    h = g.conv_out_height();
    w = g.conv_out_width();
  }
  net->emplace<nn::Linear>(c * h * w, out, rng);
  return net;
}

std::unique_ptr<nn::Sequential> deconv_generator(int in, const DataShape& s, const std::vector<int>& channels,
                                                 Rng& rng) {
  const int layers = static_cast<int>(channels.size());
  int h = s.height >> layers;
  int w = s.width >> layers;
  auto net = std::make_unique<nn::Sequential>(in);
  net->emplace<nn::Linear>(in, channels.front() * h * w, rng);
  net->activate(ActivationKind::relu);
  for (int i = 0; i < layers; ++i) {
    const int ic = channels[static_cast<std::size_t>(i)];
    const int oc = i + 1 < layers ? channels[static_cast<std::size_t>(i) + 1] : s.channels;
    ag::ConvGeometry g{ic, oc, 4, 2, 1, h, w};
    net->emplace<nn::ConvTranspose2d>(g, rng);
    net->activate(i + 1 < layers ? ActivationKind::relu : ActivationKind::tanh);
    h = g.transpose_out_height();
    w = g.transpose_out_width();
  }
  if (h != s.height || w != s.width) throw std::logic_error("deconv_generator: spatial size mismatch");
  return net;
}

std::vector<int> trunk_channels(const std::string& preset) {
  if (preset == "mnist-conv") return {32, 64};
  return {32, 64, 128};
}

std::vector<int> generator_channels(const std::string& preset) {
  if (preset == "mnist-conv") return {64, 32};
  return {128, 64, 32};
}

}  // namespace

void LatentSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("LatentSpec: dim must be >= 1");
}

Matrix LatentSpec::sample(Rng& rng, Eigen::Index batch) const { return rng.normal_matrix(batch, dim); }

LabelSpec LabelSpec::uniform(int k) {
  return LabelSpec{k, std::vector<double>(static_cast<std::size_t>(k), 1.0 / k)};
}

void LabelSpec::validate() const {
  if (num_classes < 2) throw std::invalid_argument("LabelSpec: need at least 2 classes");
  if (static_cast<int>(prior.size()) != num_classes) {
    throw std::invalid_argument("LabelSpec: prior has " + std::to_string(prior.size()) +
                                " entries for " + std::to_string(num_classes) + " classes");
  }
  double total = 0.0;
  for (double p : prior) {
    if (!(p >= 0.0)) throw std::invalid_argument("LabelSpec: negative prior entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("LabelSpec: prior does not sum to 1");
}

std::vector<int> LabelSpec::sample(Rng& rng, std::size_t n) const {
  std::vector<int> out(n);
  for (auto& y : out) y = rng.categorical(prior);
  return out;
}

std::string DataShape::to_string() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

LabelInput LabelInput::from_classes(std::span<const int> labels, int num_classes) {
  LabelInput in;
  in.classes.assign(labels.begin(), labels.end());
  in.values = ag::one_hot(labels, num_classes);
  return in;
}

LabelInput LabelInput::from_values(Matrix values) {
  LabelInput in;
  in.values = std::move(values);
  return in;
}

Eigen::Index LabelInput::size() const {
  return classes.empty() ? values.rows() : static_cast<Eigen::Index>(classes.size());
}

GeneratorNet::GeneratorNet(std::unique_ptr<nn::Sequential> body, LatentSpec latent, int num_classes,
                           DataShape out)
    : body_(std::move(body)), latent_(latent), num_classes_(num_classes), out_(out) {
  register_module("body", body_.get());
}

ag::Var GeneratorNet::forward(const ag::Var& z, std::span<const int> labels) {
  if (z.cols() != latent_.dim) throw std::invalid_argument("GeneratorNet: latent width mismatch");
  auto input = ag::concat_cols(z, ag::Var::constant(ag::one_hot(labels, num_classes_)));
  return body_->forward(input);
}

Matrix GeneratorNet::generate(const Matrix& z, std::span<const int> labels) {
  return forward(ag::Var::constant(z), labels).value();
}

DiscriminatorNet::DiscriminatorNet(std::unique_ptr<nn::Sequential> body) : body_(std::move(body)) {
  register_module("body", body_.get());
}

ag::Var DiscriminatorNet::logits(const ag::Var& x) { return body_->forward(x); }

Matrix DiscriminatorNet::probability(const Matrix& x) {
  return ag::sigmoid(logits(ag::Var::constant(x))).value();
}

ClassifierNet::ClassifierNet(std::unique_ptr<nn::Sequential> body, int num_classes)
    : body_(std::move(body)), num_classes_(num_classes) {
  register_module("body", body_.get());
}

ag::Var ClassifierNet::logits(const ag::Var& x) { return body_->forward(x); }
ag::Var ClassifierNet::log_probs(const ag::Var& x) { return ag::log_softmax(logits(x)); }
Matrix ClassifierNet::probs(const Matrix& x) { return ag::softmax(logits(ag::Var::constant(x))).value(); }

LabelDiscriminatorNet::LabelDiscriminatorNet(int num_classes) {
  table_ = register_parameter("logit", Matrix::Zero(num_classes, 1));
}

ag::Var LabelDiscriminatorNet::logits(std::span<const int> labels) { return ag::gather_rows(table_, labels); }

ProjectionStatisticsNet::ProjectionStatisticsNet(std::unique_ptr<nn::Sequential> feature, int num_classes,
                                                 Rng& rng)
    : feature_(std::move(feature)) {
  const int f = feature_->output_size();
  register_module("phi", feature_.get());
  embedding_ = register_parameter("v", rng.normal_matrix(num_classes, f, nn::kInitStd));
  psi_ = std::make_unique<nn::Linear>(f, 1, rng);
  register_module("psi", psi_.get());
  bias_ = register_parameter("c", Matrix::Zero(num_classes, 1));
}

ProjectionStatisticsNet::Terms ProjectionStatisticsNet::terms(const ag::Var& x, std::span<const int> labels) {
  for (int y : labels) {
    if (y < 0 || y >= num_classes()) throw std::out_of_range("statistics net: label " + std::to_string(y));
  }
  Terms t;
  ag::Var phi = feature_->forward(x);
  t.projection = ag::row_dot(ag::gather_rows(embedding_, labels), phi);
  t.scalar_head = psi_->forward(phi);
  t.class_bias = ag::gather_rows(bias_, labels);
  if (label_discriminator_ != nullptr) {
    Matrix dy = label_discriminator_->logits(labels).value();
    t.label_term = ag::Var::constant((-dy.array() + std::log(static_cast<double>(num_classes()))).matrix());
  }
  return t;
}

ag::Var ProjectionStatisticsNet::forward(const ag::Var& x, const LabelInput& y) {
  if (y.classes.empty() && x.rows() > 0) {
    throw std::invalid_argument("projection statistics net needs class labels");
  }
  Terms t = terms(x, y.classes);
  ag::Var out = t.projection + t.scalar_head + t.class_bias;
  if (t.label_term.defined()) out = out + t.label_term;
  return out;
}

ConcatStatisticsNet::ConcatStatisticsNet(std::unique_ptr<nn::Sequential> body, DataShape x_shape,
                                         int label_width, int num_classes)
    : body_(std::move(body)), x_shape_(x_shape), label_width_(label_width), num_classes_(num_classes) {
  register_module("body", body_.get());
}

ag::Var ConcatStatisticsNet::forward(const ag::Var& x, const LabelInput& y) {
  if (y.values.cols() != label_width_ || y.values.rows() != x.rows()) {
    throw std::invalid_argument("concat statistics net: label values have the wrong shape");
  }
  if (!x_shape_.is_image()) return body_->forward(ag::concat_cols(x, ag::Var::constant(y.values)));
  // Labels become constant planes appended after the image channels.
  const int plane = x_shape_.height * x_shape_.width;
  Matrix planes(x.rows(), static_cast<Eigen::Index>(label_width_) * plane);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < label_width_; ++j) planes.row(i).segment(j * plane, plane).setConstant(y.values(i, j));
  }
  return body_->forward(ag::concat_cols(x, ag::Var::constant(std::move(planes))));
}

const std::vector<std::string>& registered_presets() {
  static const std::vector<std::string> presets{"mog-mlp", "mnist-conv", "cifar10-conv", "concat-T",
                                                "projection-T"};
  return presets;
}

ArchConfig ArchConfig::from_key(const std::string& key, const DataShape& shape) {
  ArchConfig arch;
  if (key == "mog-mlp" || key == "mnist-conv" || key == "cifar10-conv") {
    arch.preset = key;
  } else if (key == "concat-T" || key == "projection-T") {
    arch.statistics = key;
    if (shape == DataShape{1, 28, 28}) {
      arch.preset = "mnist-conv";
    } else if (shape == DataShape{3, 32, 32}) {
      arch.preset = "cifar10-conv";
    } else {
      arch.preset = "mog-mlp";
    }
  } else {
    throw std::invalid_argument("unknown architecture preset '" + key + "'");
  }
  if (arch.preset != "mog-mlp") arch.feature_dim = 128;
  arch.validate(shape);
  return arch;
}

void ArchConfig::validate(const DataShape& shape) const {
  if (preset == "mog-mlp") {
    if (shape.is_image()) {
      throw std::invalid_argument("preset mog-mlp needs vector data, got " + shape.to_string());
    }
  } else if (preset == "mnist-conv") {
    if (!(shape == DataShape{1, 28, 28})) {
      throw std::invalid_argument("preset mnist-conv needs 1x28x28 data, got " + shape.to_string());
    }
  } else if (preset == "cifar10-conv") {
    if (!(shape == DataShape{3, 32, 32})) {
      throw std::invalid_argument("preset cifar10-conv needs 3x32x32 data, got " + shape.to_string());
    }
  } else {
    throw std::invalid_argument("unknown architecture preset '" + preset + "'");
  }
  if (statistics != "projection-T" && statistics != "concat-T") {
    throw std::invalid_argument("unknown statistics network '" + statistics + "'");
  }
  if (hidden < 1 || feature_dim < 1) throw std::invalid_argument("hidden and feature_dim must be positive");
}

std::map<std::string, nn::Module*> NetworkBundle::modules() const {
  std::map<std::string, nn::Module*> out;
  if (generator) out["G"] = generator.get();
  if (discriminator) out["D"] = discriminator.get();
  if (classifier) out["C"] = classifier.get();
  if (twin_classifier) out["Cmi"] = twin_classifier.get();
  if (statistics) out["T"] = statistics.get();
  if (label_discriminator) out["DY"] = label_discriminator.get();
  return out;
}

std::unique_ptr<StatisticsNet> make_statistics_net(const ArchConfig& arch, const DataShape& x_shape,
                                                   int num_classes, int label_width, Rng& rng) {
  arch.validate(x_shape);
  const bool image = arch.preset != "mog-mlp";
  if (arch.statistics == "projection-T") {
    if (num_classes < 1) throw std::invalid_argument("projection-T needs class-valued labels");
    std::unique_ptr<nn::Sequential> phi;
    if (image) {
      phi = conv_trunk(x_shape, trunk_channels(arch.preset), arch.feature_dim, rng);
    } else {
      phi = std::make_unique<nn::Sequential>(x_shape.size());
      phi->emplace<nn::Linear>(x_shape.size(), arch.hidden, rng);
      phi->activate(ActivationKind::leaky_relu, kSlope);
      phi->emplace<nn::Linear>(arch.hidden, arch.feature_dim, rng);
    }
    phi->activate(ActivationKind::leaky_relu, kSlope);
    return std::make_unique<ProjectionStatisticsNet>(std::move(phi), num_classes, rng);
  }
  if (image) {
    DataShape with_labels{x_shape.channels + label_width, x_shape.height, x_shape.width};
    return std::make_unique<ConcatStatisticsNet>(conv_trunk(with_labels, trunk_channels(arch.preset), 1, rng),
                                                 x_shape, label_width, num_classes);
  }
  return std::make_unique<ConcatStatisticsNet>(
      mlp_body(x_shape.size() + label_width, arch.hidden, 1, ActivationKind::leaky_relu, rng), x_shape,
      label_width, num_classes);
}

NetworkBundle build_networks(const ArchConfig& arch, const DataShape& shape, const LabelSpec& labels,
                             const LatentSpec& latent, std::uint64_t seed) {
  arch.validate(shape);
  labels.validate();
  latent.validate();

  NetworkBundle b;
  b.arch = arch;
  b.data_shape = shape;
  b.labels = labels;
  b.latent = latent;
  const int k = labels.num_classes;
  const int x_size = shape.size();
  const bool image = arch.preset != "mog-mlp";

  Rng rng_g(seed, "init.G");
  Rng rng_d(seed, "init.D");
  Rng rng_c(seed, "init.C");
  Rng rng_cmi(seed, "init.Cmi");
  Rng rng_t(seed, "init.T");

  if (image) {
    b.generator = std::make_unique<GeneratorNet>(
        deconv_generator(latent.dim + k, shape, generator_channels(arch.preset), rng_g), latent, k, shape);
    const auto channels = trunk_channels(arch.preset);
    b.discriminator = std::make_unique<DiscriminatorNet>(conv_trunk(shape, channels, 1, rng_d));
    b.classifier = std::make_unique<ClassifierNet>(conv_trunk(shape, channels, k, rng_c), k);
    b.twin_classifier = std::make_unique<ClassifierNet>(conv_trunk(shape, channels, k, rng_cmi), k);
  } else {
    const int h = arch.hidden;
    auto g_body = mlp_body(latent.dim + k, h, x_size, ActivationKind::leaky_relu, rng_g);
    b.generator = std::make_unique<GeneratorNet>(std::move(g_body), latent, k, shape);
    b.discriminator = std::make_unique<DiscriminatorNet>(mlp_body(x_size, h, 1, ActivationKind::leaky_relu, rng_d));
    b.classifier = std::make_unique<ClassifierNet>(mlp_body(x_size, h, k, ActivationKind::leaky_relu, rng_c), k);
    b.twin_classifier =
        std::make_unique<ClassifierNet>(mlp_body(x_size, h, k, ActivationKind::leaky_relu, rng_cmi), k);
  }

  b.statistics = make_statistics_net(arch, shape, k, k, rng_t);

  if (arch.use_label_discriminator) {
    auto* projection = dynamic_cast<ProjectionStatisticsNet*>(b.statistics.get());
    if (projection == nullptr) {
      throw std::invalid_argument("use_label_discriminator requires the projection statistics network");
    }
    b.label_discriminator = std::make_unique<LabelDiscriminatorNet>(k);
    projection->attach_label_discriminator(b.label_discriminator.get());
  }
  return b;
}

double statistic_forward(StatisticsNet& t, const Matrix& x_row, int label) {
  if (label < 0 || label >= t.num_classes()) {
    throw std::out_of_range("statistic_forward: label " + std::to_string(label) + " outside 0.." +
                            std::to_string(t.num_classes() - 1));
  }
  const int one[1] = {label};
  return t.forward(ag::Var::constant(x_row), LabelInput::from_classes(one, t.num_classes())).item();
}

std::vector<double> optimal_label_logit(std::span<const double> q_y, int num_classes) {
  if (static_cast<int>(q_y.size()) != num_classes) {
    throw std::invalid_argument("optimal_label_logit: q_y length differs from K");
  }
  std::vector<double> out(q_y.size());
  const double log_k = std::log(static_cast<double>(num_classes));
  for (std::size_t i = 0; i < q_y.size(); ++i) {
    out[i] = q_y[i] > 0.0 ? std::log(q_y[i]) + log_k : -std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace uacgan
