// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/nn.hpp"

#include <stdexcept>

namespace uacgan::nn {

std::vector<std::pair<std::string, ag::Var>> Module::named_parameters() const {
  std::vector<std::pair<std::string, ag::Var>> out = params_;
  for (const auto& [name, child] : children_) {
    for (auto& [sub, var] : child->named_parameters()) out.emplace_back(name + "." + sub, var);
  }
  return out;
}

std::vector<ag::Var> Module::parameters() const {
  std::vector<ag::Var> out;
  for (auto& [name, var] : named_parameters()) out.push_back(var);
  return out;
}

std::size_t Module::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += static_cast<std::size_t>(p.value().size());
  return n;
}

void Module::set_trainable(bool on) {
  for (auto& p : parameters()) p.set_requires_grad(on);
}

void Module::zero_grad() {
  for (auto& p : parameters()) p.zero_grad();
}

ag::Var& Module::register_parameter(std::string name, Matrix init) {
  params_.emplace_back(std::move(name), ag::Var::parameter(std::move(init)));
  return params_.back().second;
}

void Module::register_module(std::string name, Module* child) {
  children_.emplace_back(std::move(name), child);
}

Linear::Linear(int in, int out, Rng& rng, double init_std) : out_(out) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("Linear: sizes must be positive");
  weight_ = register_parameter("weight", rng.normal_matrix(out, in, init_std));
  bias_ = register_parameter("bias", Matrix::Zero(1, out));
}

ag::Var Linear::forward(const ag::Var& x) { return ag::linear(x, weight_, bias_); }

Conv2d::Conv2d(const ag::ConvGeometry& geometry, Rng& rng, double init_std) : geometry_(geometry) {
  const int kk = geometry.kernel * geometry.kernel;
  weight_ = register_parameter("weight",
                               rng.normal_matrix(geometry.out_channels, geometry.in_channels * kk, init_std));
  bias_ = register_parameter("bias", Matrix::Zero(1, geometry.out_channels));
}

ag::Var Conv2d::forward(const ag::Var& x) { return ag::conv2d(x, weight_, bias_, geometry_); }

int Conv2d::output_size() const {
  return geometry_.out_channels * geometry_.conv_out_height() * geometry_.conv_out_width();
}

ConvTranspose2d::ConvTranspose2d(const ag::ConvGeometry& geometry, Rng& rng, double init_std)
    : geometry_(geometry) {
  const int kk = geometry.kernel * geometry.kernel;
  weight_ = register_parameter("weight",
                               rng.normal_matrix(geometry.in_channels, geometry.out_channels * kk, init_std));
  bias_ = register_parameter("bias", Matrix::Zero(1, geometry.out_channels));
}

ag::Var ConvTranspose2d::forward(const ag::Var& x) {
  return ag::conv_transpose2d(x, weight_, bias_, geometry_);
}

int ConvTranspose2d::output_size() const {
  return geometry_.out_channels * geometry_.transpose_out_height() * geometry_.transpose_out_width();
}

ag::Var Activation::forward(const ag::Var& x) {
  switch (kind_) {
    case ActivationKind::relu:
      return ag::relu(x);
    case ActivationKind::leaky_relu:
      return ag::leaky_relu(x, slope_);
    case ActivationKind::tanh:
      return ag::tanh(x);
    case ActivationKind::sigmoid:
      return ag::sigmoid(x);
  }
  throw std::logic_error("unknown activation");
}

Sequential& Sequential::activate(ActivationKind kind, double slope) {
  emplace<Activation>(kind, output_size(), slope);
  return *this;
}

ag::Var Sequential::forward(const ag::Var& x) {
  ag::Var h = x;
  for (auto& layer : layers_) h = layer->forward(h);
  return h;
}

int Sequential::output_size() const {
  return layers_.empty() ? input_size_ : layers_.back()->output_size();
}

std::unique_ptr<Sequential> make_mlp(int in, int hidden, int depth, int out, ActivationKind act,
                                     Rng& rng) {
  auto net = std::make_unique<Sequential>(in);
  int width = in;
  for (int i = 0; i < depth; ++i) {
    net->emplace<Linear>(width, hidden, rng);
    net->activate(act);
    width = hidden;
  }
  net->emplace<Linear>(width, out, rng);
  return net;
}

}  // namespace uacgan::nn
