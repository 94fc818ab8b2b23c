// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/autograd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace uacgan::ag {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

bool wants(const Node* n) { return n->requires_grad; }

thread_local PieceRecorder* t_recorder = nullptr;

void record_pieces(const Matrix& pre) {
  if (t_recorder != nullptr) t_recorder->fold(pre);
}

// Images (N × C·H·W) to patch columns ((C·k·k) × (N·OH·OW)).
Matrix im2col(const Matrix& x, int channels, int height, int width, int kernel, int stride,
              int padding, int out_h, int out_w) {
  const Eigen::Index n = x.rows();
  const int plane = out_h * out_w;
  Matrix cols = Matrix::Zero(static_cast<Eigen::Index>(channels) * kernel * kernel, n * plane);
  for (Eigen::Index s = 0; s < n; ++s) {
    const double* img = x.row(s).data();
    for (int c = 0; c < channels; ++c) {
      for (int ki = 0; ki < kernel; ++ki) {
        for (int kj = 0; kj < kernel; ++kj) {
          double* dst = cols.row((c * kernel + ki) * kernel + kj).data() + s * plane;
          for (int oh = 0; oh < out_h; ++oh) {
            const int ih = oh * stride - padding + ki;
            if (ih < 0 || ih >= height) continue;
            const double* src = img + (c * height + ih) * width;
            for (int ow = 0; ow < out_w; ++ow) {
              const int iw = ow * stride - padding + kj;
              if (iw >= 0 && iw < width) dst[oh * out_w + ow] = src[iw];
            }
          }
        }
      }
    }
  }
  return cols;
}

// Adjoint of im2col: scatter-add patch columns back into images.
Matrix col2im(const Matrix& cols, Eigen::Index n, int channels, int height, int width, int kernel,
              int stride, int padding, int out_h, int out_w) {
  const int plane = out_h * out_w;
  Matrix x = Matrix::Zero(n, static_cast<Eigen::Index>(channels) * height * width);
  for (Eigen::Index s = 0; s < n; ++s) {
    double* img = x.row(s).data();
    for (int c = 0; c < channels; ++c) {
      for (int ki = 0; ki < kernel; ++ki) {
        for (int kj = 0; kj < kernel; ++kj) {
          const double* src = cols.row((c * kernel + ki) * kernel + kj).data() + s * plane;
          for (int oh = 0; oh < out_h; ++oh) {
            const int ih = oh * stride - padding + ki;
            if (ih < 0 || ih >= height) continue;
            double* dst = img + (c * height + ih) * width;
            for (int ow = 0; ow < out_w; ++ow) {
              const int iw = ow * stride - padding + kj;
              if (iw >= 0 && iw < width) dst[iw] += src[oh * out_w + ow];
            }
          }
        }
      }
    }
  }
  return x;
}

// (N × C·P) <-> (C × N·P) where P is a spatial plane size.
Matrix to_channel_major(const Matrix& x, int channels, int plane) {
  const Eigen::Index n = x.rows();
  Matrix out(channels, n * plane);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (int c = 0; c < channels; ++c) {
      out.row(c).segment(s * plane, plane) = x.row(s).segment(c * plane, plane);
    }
  }
  return out;
}

Matrix from_channel_major(const Matrix& m, Eigen::Index n, int channels, int plane) {
  Matrix out(n, static_cast<Eigen::Index>(channels) * plane);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (int c = 0; c < channels; ++c) {
      out.row(s).segment(c * plane, plane) = m.row(c).segment(s * plane, plane);
    }
  }
  return out;
}

}  // namespace

Var Var::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

const Matrix& Var::value() const { return node_->value; }
Matrix& Var::mutable_value() { return node_->value; }

double Var::item() const {
  if (node_->value.size() != 1) throw std::logic_error("item() on a non-scalar Var");
  return node_->value(0, 0);
}

Eigen::Index Var::rows() const { return node_->value.rows(); }
Eigen::Index Var::cols() const { return node_->value.cols(); }
bool Var::requires_grad() const { return node_->requires_grad; }
void Var::set_requires_grad(bool on) { node_->requires_grad = on; }
bool Var::has_grad() const { return node_->grad_ready; }

const Matrix& Var::grad() const {
  if (!node_->grad_ready) throw std::logic_error("grad() before any gradient was accumulated");
  return node_->grad;
}

void Var::zero_grad() {
  node_->grad_ready = false;
  node_->grad.resize(0, 0);
}

Var make_op(Matrix value, std::vector<Var> inputs, std::function<void(const Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const Var& in : inputs) {
    if (in.requires_grad()) {
      node->requires_grad = true;
      break;
    }
  }
  if (node->requires_grad) {
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

void backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1) throw std::invalid_argument("backward: root must be 1x1");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node(), 0}};
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].node();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate_expr(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && node->grad_ready) node->backward(*node);
  }
  // Interior gradients are scratch; only leaves keep theirs.
  for (Node* node : order) {
    if (node->backward) {
      node->grad_ready = false;
      node->grad.resize(0, 0);
    }
  }
}

Var detach(const Var& a) { return Var::constant(a.value()); }

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Node* an = a.node();
  Node* bn = b.node();
  return make_op(a.value() + b.value(), {a, b}, [an, bn](const Node& self) {
    if (wants(an)) an->accumulate_expr(self.grad);
    if (wants(bn)) bn->accumulate_expr(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Node* an = a.node();
  Node* bn = b.node();
  return make_op(a.value() - b.value(), {a, b}, [an, bn](const Node& self) {
    if (wants(an)) an->accumulate_expr(self.grad);
    if (wants(bn)) bn->accumulate_expr(-self.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Node* an = a.node();
  Node* bn = b.node();
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [an, bn](const Node& self) {
    if (wants(an)) an->accumulate_expr(self.grad.cwiseProduct(bn->value));
    if (wants(bn)) bn->accumulate_expr(self.grad.cwiseProduct(an->value));
  });
}

Var scale(const Var& a, double s) {
  Node* an = a.node();
  return make_op(a.value() * s, {a}, [an, s](const Node& self) { an->accumulate_expr(self.grad * s); });
}

Var add_scalar(const Var& a, double s) {
  Node* an = a.node();
  return make_op((a.value().array() + s).matrix(), {a},
                 [an](const Node& self) { an->accumulate_expr(self.grad); });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var operator+(const Var& a, const Var& b) { return add(a, b); }
Var operator-(const Var& a, const Var& b) { return sub(a, b); }
Var operator-(const Var& a) { return neg(a); }
Var operator*(double s, const Var& a) { return scale(a, s); }
Var operator*(const Var& a, double s) { return scale(a, s); }

Var linear(const Var& x, const Var& weight, const Var& bias) {
  if (x.cols() != weight.cols() || bias.rows() != 1 || bias.cols() != weight.rows()) {
    throw std::invalid_argument("linear: x is " + std::to_string(x.rows()) + "x" +
                                std::to_string(x.cols()) + ", weight is " +
                                std::to_string(weight.rows()) + "x" + std::to_string(weight.cols()));
  }
  Matrix out = x.value() * weight.value().transpose();
  out.rowwise() += bias.value().row(0);
  Node* xn = x.node();
  Node* wn = weight.node();
  Node* bn = bias.node();
  return make_op(std::move(out), {x, weight, bias}, [xn, wn, bn](const Node& self) {
    if (wants(xn)) xn->accumulate_expr(self.grad * wn->value);
    if (wants(wn)) wn->accumulate_expr(self.grad.transpose() * xn->value);
    if (wants(bn)) bn->accumulate_expr(self.grad.colwise().sum());
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Node* an = a.node();
  Node* bn = b.node();
  return make_op(a.value() * b.value(), {a, b}, [an, bn](const Node& self) {
    if (wants(an)) an->accumulate_expr(self.grad * bn->value.transpose());
    if (wants(bn)) bn->accumulate_expr(an->value.transpose() * self.grad);
  });
}

PieceRecorder::PieceRecorder() : previous_(t_recorder) { t_recorder = this; }

PieceRecorder::~PieceRecorder() { t_recorder = previous_; }

void PieceRecorder::fold(const Matrix& pre_activation) {
  // FNV-1a over one bit per element.
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  for (Eigen::Index i = 0; i < pre_activation.size(); ++i) {
    hash_ = (hash_ ^ (pre_activation.data()[i] > 0.0 ? 1U : 0U)) * kPrime;
  }
  hash_ = (hash_ ^ 2U) * kPrime;
}

Var relu(const Var& a) {
  record_pieces(a.value());
  Node* an = a.node();
  return make_op(a.value().cwiseMax(0.0), {a}, [an](const Node& self) {
    an->accumulate_expr((an->value.array() > 0.0).select(self.grad.array(), 0.0).matrix());
  });
}

Var leaky_relu(const Var& a, double slope) {
  record_pieces(a.value());
  Node* an = a.node();
  Matrix out = (a.value().array() > 0.0).select(a.value().array(), slope * a.value().array());
  return make_op(std::move(out), {a}, [an, slope](const Node& self) {
    an->accumulate_expr(
        (an->value.array() > 0.0).select(self.grad.array(), slope * self.grad.array()).matrix());
  });
}

Var tanh(const Var& a) {
  Node* an = a.node();
  return make_op(a.value().array().tanh().matrix(), {a}, [an](const Node& self) {
    an->accumulate_expr(
        (self.grad.array() * (1.0 - self.value.array().square())).matrix());
  });
}

Var sigmoid(const Var& a) {
  Node* an = a.node();
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return make_op(std::move(out), {a}, [an](const Node& self) {
    an->accumulate_expr(
        (self.grad.array() * self.value.array() * (1.0 - self.value.array())).matrix());
  });
}

Var log_sigmoid(const Var& a) {
  // log σ(a) = min(a, 0) − log1p(exp(−|a|))
  const auto& v = a.value().array();
  Matrix out = (v.min(0.0) - (-v.abs()).exp().log1p()).matrix();
  Node* an = a.node();
  return make_op(std::move(out), {a}, [an](const Node& self) {
    // d/da log σ(a) = σ(−a)
    const auto sig_neg = 1.0 / (1.0 + an->value.array().exp());
    an->accumulate_expr((self.grad.array() * sig_neg).matrix());
  });
}

Var exp(const Var& a) {
  Node* an = a.node();
  return make_op(a.value().array().exp().matrix(), {a}, [an](const Node& self) {
    an->accumulate_expr(self.grad.cwiseProduct(self.value));
  });
}

Var log(const Var& a) {
  Node* an = a.node();
  return make_op(a.value().array().log().matrix(), {a}, [an](const Node& self) {
    an->accumulate_expr((self.grad.array() / an->value.array()).matrix());
  });
}

Var log_softmax(const Var& a) {
  const Matrix& v = a.value();
  Vector row_max = v.rowwise().maxCoeff();
  Matrix shifted = v.colwise() - row_max;
  Vector lse = shifted.array().exp().rowwise().sum().log().matrix();
  Matrix out = shifted.colwise() - lse;
  Node* an = a.node();
  return make_op(std::move(out), {a}, [an](const Node& self) {
    Matrix soft = self.value.array().exp().matrix();
    Vector gsum = self.grad.rowwise().sum();
    Matrix g = self.grad - (soft.array().colwise() * gsum.array()).matrix();
    an->accumulate_expr(g);
  });
}

Var softmax(const Var& a) {
  const Matrix& v = a.value();
  Vector row_max = v.rowwise().maxCoeff();
  Matrix e = (v.colwise() - row_max).array().exp().matrix();
  Vector z = e.rowwise().sum();
  Matrix out = e.array().colwise() / z.array();
  Node* an = a.node();
  return make_op(std::move(out), {a}, [an](const Node& self) {
    Vector dot = self.grad.cwiseProduct(self.value).rowwise().sum();
    Matrix g = (self.value.array() * (self.grad.colwise() - dot).array()).matrix();
    an->accumulate_expr(g);
  });
}

Var pick(const Var& a, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != a.rows()) {
    throw std::invalid_argument("pick: label count does not match rows");
  }
  Matrix out(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const int k = labels[i];
    if (k < 0 || k >= a.cols()) throw std::out_of_range("pick: label " + std::to_string(k) + " out of range");
    out(i, 0) = a.value()(i, k);
  }
  Node* an = a.node();
  std::vector<int> idx(labels.begin(), labels.end());
  return make_op(std::move(out), {a}, [an, idx = std::move(idx)](const Node& self) {
    Matrix g = Matrix::Zero(an->value.rows(), an->value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) g(static_cast<Eigen::Index>(i), idx[i]) = self.grad(i, 0);
    an->accumulate_expr(g);
  });
}

Var gather_rows(const Var& table, std::span<const int> labels) {
  Matrix out(static_cast<Eigen::Index>(labels.size()), table.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int k = labels[i];
    if (k < 0 || k >= table.rows()) {
      throw std::out_of_range("gather_rows: index " + std::to_string(k) + " out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(k);
  }
  Node* tn = table.node();
  std::vector<int> idx(labels.begin(), labels.end());
  return make_op(std::move(out), {table}, [tn, idx = std::move(idx)](const Node& self) {
    Matrix g = Matrix::Zero(tn->value.rows(), tn->value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    tn->accumulate_expr(g);
  });
}

Var row_dot(const Var& a, const Var& b) {
  require_same_shape(a, b, "row_dot");
  Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
  Node* an = a.node();
  Node* bn = b.node();
  return make_op(std::move(out), {a, b}, [an, bn](const Node& self) {
    if (wants(an)) an->accumulate_expr((bn->value.array().colwise() * self.grad.col(0).array()).matrix());
    if (wants(bn)) bn->accumulate_expr((an->value.array().colwise() * self.grad.col(0).array()).matrix());
  });
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row counts differ");
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  Node* an = a.node();
  Node* bn = b.node();
  const Eigen::Index ac = a.cols();
  const Eigen::Index bc = b.cols();
  return make_op(std::move(out), {a, b}, [an, bn, ac, bc](const Node& self) {
    if (wants(an)) an->accumulate_expr(self.grad.leftCols(ac));
    if (wants(bn)) bn->accumulate_expr(self.grad.rightCols(bc));
  });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  Node* an = a.node();
  return make_op(std::move(out), {a}, [an](const Node& self) {
    an->accumulate_expr(Matrix::Constant(an->value.rows(), an->value.cols(), self.grad(0, 0)));
  });
}

Var mean(const Var& a) {
  if (a.value().size() == 0) throw std::invalid_argument("mean of an empty Var");
  Matrix out(1, 1);
  out(0, 0) = a.value().mean();
  Node* an = a.node();
  return make_op(std::move(out), {a}, [an](const Node& self) {
    const double g = self.grad(0, 0) / static_cast<double>(an->value.size());
    an->accumulate_expr(Matrix::Constant(an->value.rows(), an->value.cols(), g));
  });
}

Var log_mean_exp(const Var& a) {
  if (a.value().size() == 0) throw std::invalid_argument("log_mean_exp of an empty Var");
  const double m = a.value().maxCoeff();
  const double s = (a.value().array() - m).exp().sum();
  Matrix out(1, 1);
  out(0, 0) = m + std::log(s / static_cast<double>(a.value().size()));
  Node* an = a.node();
  return make_op(std::move(out), {a}, [an, m, s](const Node& self) {
    an->accumulate_expr(((an->value.array() - m).exp() * (self.grad(0, 0) / s)).matrix());
  });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, const ConvGeometry& g) {
  const int oh = g.conv_out_height();
  const int ow = g.conv_out_width();
  const int kk = g.kernel * g.kernel;
  if (x.cols() != static_cast<Eigen::Index>(g.in_channels) * g.height * g.width ||
      weight.rows() != g.out_channels || weight.cols() != g.in_channels * kk ||
      bias.cols() != g.out_channels) {
    throw std::invalid_argument("conv2d: tensor shapes disagree with geometry");
  }
  const Eigen::Index n = x.rows();
  Matrix cols = im2col(x.value(), g.in_channels, g.height, g.width, g.kernel, g.stride, g.padding, oh, ow);
  Matrix out_cm = weight.value() * cols;
  out_cm.colwise() += bias.value().row(0).transpose();
  Matrix out = from_channel_major(out_cm, n, g.out_channels, oh * ow);
  Node* xn = x.node();
  Node* wn = weight.node();
  Node* bn = bias.node();
  return make_op(std::move(out), {x, weight, bias},
                 [xn, wn, bn, g, oh, ow, n, cols = std::move(cols)](const Node& self) {
                   Matrix dout = to_channel_major(self.grad, g.out_channels, oh * ow);
                   if (wants(wn)) wn->accumulate_expr(dout * cols.transpose());
                   if (wants(bn)) bn->accumulate_expr(dout.rowwise().sum().transpose());
                   if (wants(xn)) {
                     Matrix dcols = wn->value.transpose() * dout;
                     xn->accumulate_expr(col2im(dcols, n, g.in_channels, g.height, g.width, g.kernel,
                                                g.stride, g.padding, oh, ow));
                   }
                 });
}

Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, const ConvGeometry& g) {
  const int oh = g.transpose_out_height();
  const int ow = g.transpose_out_width();
  const int kk = g.kernel * g.kernel;
  const int plane = g.height * g.width;
  if (x.cols() != static_cast<Eigen::Index>(g.in_channels) * plane ||
      weight.rows() != g.in_channels || weight.cols() != g.out_channels * kk ||
      bias.cols() != g.out_channels) {
    throw std::invalid_argument("conv_transpose2d: tensor shapes disagree with geometry");
  }
  const Eigen::Index n = x.rows();
  Matrix x_cm = to_channel_major(x.value(), g.in_channels, plane);
  Matrix cols = weight.value().transpose() * x_cm;
  // The small input grid plays the role of the convolution output grid.
  Matrix out = col2im(cols, n, g.out_channels, oh, ow, g.kernel, g.stride, g.padding, g.height, g.width);
  for (int c = 0; c < g.out_channels; ++c) {
    out.middleCols(static_cast<Eigen::Index>(c) * oh * ow, oh * ow).array() += bias.value()(0, c);
  }
  Node* xn = x.node();
  Node* wn = weight.node();
  Node* bn = bias.node();
  return make_op(std::move(out), {x, weight, bias},
                 [xn, wn, bn, g, oh, ow, plane, x_cm = std::move(x_cm)](const Node& self) {
                   Matrix dcols = im2col(self.grad, g.out_channels, oh, ow, g.kernel, g.stride,
                                         g.padding, g.height, g.width);
                   if (wants(wn)) wn->accumulate_expr(x_cm * dcols.transpose());
                   if (wants(bn)) {
                     Matrix db(1, g.out_channels);
                     for (int c = 0; c < g.out_channels; ++c) {
                       db(0, c) = self.grad.middleCols(static_cast<Eigen::Index>(c) * oh * ow, oh * ow).sum();
                     }
                     bn->accumulate_expr(db);
                   }
                   if (wants(xn)) {
                     Matrix dx_cm = wn->value * dcols;
                     xn->accumulate_expr(from_channel_major(dx_cm, self.grad.rows(), g.in_channels, plane));
                   }
                 });
}

Matrix one_hot(std::span<const int> labels, int num_classes) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw std::out_of_range("one_hot: label " + std::to_string(labels[i]) + " out of range");
    }
    out(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return out;
}

}  // namespace uacgan::ag
