// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace uacgan {

// Activations are always 2-D: one row per sample. Images are flattened in
// (channel, row, column) order.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

namespace ag {

struct Node;

/// Handle to a value in a reverse-mode computation graph.
///
/// Copies share the underlying node. Leaves created with `parameter` persist
/// across steps and accumulate gradients until `zero_grad` is called; every
/// other node lives as long as some handle or downstream node refers to it.
class Var {
 public:
  Var() = default;

  static Var constant(Matrix value);
  static Var parameter(Matrix value);

  const Matrix& value() const;
  Matrix& mutable_value();
  double item() const;
  Eigen::Index rows() const;
  Eigen::Index cols() const;

  bool requires_grad() const;
  // Only meaningful on leaves; ops read the flag when they are built.
  void set_requires_grad(bool on);

  bool has_grad() const;
  const Matrix& grad() const;
  void zero_grad();

  bool defined() const { return node_ != nullptr; }
  Node* node() const { return node_.get(); }

 private:
  friend Var make_op(Matrix value, std::vector<Var> inputs,
                     std::function<void(const Node&)> backward);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  bool grad_ready = false;
  std::vector<Var> inputs;
  // Reads `grad` (and `value` if needed) and pushes into `inputs`.
  std::function<void(const Node&)> backward;

  template <class Expr>
  void accumulate_expr(const Expr& g) {
    if (!grad_ready) {
      grad = g;
      grad_ready = true;
    } else {
      grad += g;
    }
  }
};

// Builds an interior node. The node requires a gradient iff any input does;
// otherwise `backward` is dropped.
Var make_op(Matrix value, std::vector<Var> inputs, std::function<void(const Node&)> backward);

/// Runs reverse accumulation from a 1x1 root.
void backward(const Var& root);

// While alive, relu and leaky_relu fold the sign pattern of their inputs into
// a running fingerprint. Two forward passes with equal fingerprints used the
// same linear piece of every activation. One recorder per thread at a time.
class PieceRecorder {
 public:
  PieceRecorder();
  ~PieceRecorder();
  PieceRecorder(const PieceRecorder&) = delete;
  PieceRecorder& operator=(const PieceRecorder&) = delete;

  void reset() { hash_ = kOffset; }
  std::uint64_t fingerprint() const { return hash_; }
  void fold(const Matrix& pre_activation);

 private:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  std::uint64_t hash_ = kOffset;
  PieceRecorder* previous_;
};

Var detach(const Var& a);

// Elementwise arithmetic; shapes must match unless noted.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var neg(const Var& a);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator*(double s, const Var& a);
Var operator*(const Var& a, double s);

// x (n×in) · weightᵀ (in×out) + bias (1×out).
Var linear(const Var& x, const Var& weight, const Var& bias);
Var matmul(const Var& a, const Var& b);

Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var log_sigmoid(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);

Var log_softmax(const Var& a);
Var softmax(const Var& a);

// Row i of the result is a(i, labels[i]); shape n×1.
Var pick(const Var& a, std::span<const int> labels);
// Row i of the result is table.row(labels[i]).
Var gather_rows(const Var& table, std::span<const int> labels);
// Row-wise inner product, shape n×1.
Var row_dot(const Var& a, const Var& b);
Var concat_cols(const Var& a, const Var& b);

Var sum(const Var& a);
Var mean(const Var& a);
// log(mean(exp(a))) over every entry, evaluated with a max shift.
Var log_mean_exp(const Var& a);

struct ConvGeometry {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 4;
  int stride = 2;
  int padding = 1;
  // Spatial size of the input image.
  int height = 1;
  int width = 1;

  int conv_out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
  int conv_out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
  int transpose_out_height() const { return (height - 1) * stride - 2 * padding + kernel; }
  int transpose_out_width() const { return (width - 1) * stride - 2 * padding + kernel; }
};

// weight: out_channels × (in_channels·k·k); bias: 1 × out_channels.
Var conv2d(const Var& x, const Var& weight, const Var& bias, const ConvGeometry& g);
// weight: in_channels × (out_channels·k·k); bias: 1 × out_channels.
Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, const ConvGeometry& g);

Matrix one_hot(std::span<const int> labels, int num_classes);

}  // namespace ag
}  // namespace uacgan
