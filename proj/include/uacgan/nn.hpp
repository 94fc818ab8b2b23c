// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "uacgan/autograd.hpp"
#include "uacgan/rng.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace uacgan::nn {

// Standard GAN init: zero-mean Gaussian weights, zero biases.
inline constexpr double kInitStd = 0.02;

class Module {
 public:
  virtual ~Module() = default;
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  // Recursive, deterministic order; child names are dot-joined.
  std::vector<std::pair<std::string, ag::Var>> named_parameters() const;
  std::vector<ag::Var> parameters() const;
  std::size_t parameter_count() const;

  // Frozen modules still pass gradients through to their inputs.
  void set_trainable(bool on);
  void zero_grad();

 protected:
  ag::Var& register_parameter(std::string name, Matrix init);
  void register_module(std::string name, Module* child);

 private:
  std::vector<std::pair<std::string, ag::Var>> params_;
  std::vector<std::pair<std::string, Module*>> children_;
};

class Layer : public Module {
 public:
  virtual ag::Var forward(const ag::Var& x) = 0;
  // Width of the flattened output row.
  virtual int output_size() const = 0;
};

class Linear final : public Layer {
 public:
  Linear(int in, int out, Rng& rng, double init_std = kInitStd);
  ag::Var forward(const ag::Var& x) override;
  int output_size() const override { return out_; }

  ag::Var& weight() { return weight_; }
  ag::Var& bias() { return bias_; }

 private:
  int out_;
  ag::Var weight_;
  ag::Var bias_;
};

class Conv2d final : public Layer {
 public:
  Conv2d(const ag::ConvGeometry& geometry, Rng& rng, double init_std = kInitStd);
  ag::Var forward(const ag::Var& x) override;
  int output_size() const override;

 private:
  ag::ConvGeometry geometry_;
  ag::Var weight_;
  ag::Var bias_;
};

class ConvTranspose2d final : public Layer {
 public:
  ConvTranspose2d(const ag::ConvGeometry& geometry, Rng& rng, double init_std = kInitStd);
  ag::Var forward(const ag::Var& x) override;
  int output_size() const override;

 private:
  ag::ConvGeometry geometry_;
  ag::Var weight_;
  ag::Var bias_;
};

enum class ActivationKind { relu, leaky_relu, tanh, sigmoid };

class Activation final : public Layer {
 public:
  Activation(ActivationKind kind, int width, double slope = 0.2)
      : kind_(kind), width_(width), slope_(slope) {}
  ag::Var forward(const ag::Var& x) override;
  int output_size() const override { return width_; }

 private:
  ActivationKind kind_;
  int width_;
  double slope_;
};

class Sequential final : public Layer {
 public:
  explicit Sequential(int input_size) : input_size_(input_size) {}

  template <class L, class... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    register_module(std::to_string(layers_.size()), layer.get());
    layers_.push_back(std::move(layer));
    return ref;
  }
  // Appends an activation sized to the current output.
  Sequential& activate(ActivationKind kind, double slope = 0.2);

  ag::Var forward(const ag::Var& x) override;
  int output_size() const override;
  int input_size() const { return input_size_; }
  std::size_t size() const { return layers_.size(); }

 private:
  int input_size_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Fully connected stack: in -> hidden (x depth, activated) -> out.
std::unique_ptr<Sequential> make_mlp(int in, int hidden, int depth, int out, ActivationKind act,
                                     Rng& rng);

}  // namespace uacgan::nn
