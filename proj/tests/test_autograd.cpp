// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "uacgan/autograd.hpp"
#include "uacgan/nn.hpp"
#include "uacgan/optim.hpp"
#include "uacgan/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace uacgan {
namespace {

using testing::check_gradient;

constexpr double kEps = 1e-5;
constexpr double kTol = 1e-6;

ag::Var param(Rng& rng, int r, int c, double scale = 1.0) { return ag::Var::parameter(rng.normal_matrix(r, c, scale)); }

// Entries pushed away from 0 so that kinked ops are differentiable at every
// finite-difference probe.
ag::Var away_from_zero(Rng& rng, int r, int c) {
  Matrix m = rng.normal_matrix(r, c);
  for (double& v : m.reshaped()) v += v >= 0 ? 0.1 : -0.1;
  return ag::Var::parameter(m);
}

TEST(AutogradGradients, ElementwiseOps) {
  Rng rng(1);
  ag::Var a = param(rng, 3, 4);
  ag::Var b = param(rng, 3, 4);
  ag::Var pos = ag::Var::parameter((rng.normal_matrix(3, 4).array().abs() + 0.5).matrix());
  const std::vector<std::pair<const char*, std::function<ag::Var()>>> cases = {
      {"add", [&] { return ag::sum(ag::mul(a + b, a)); }},
      {"sub", [&] { return ag::sum(ag::mul(a - b, b)); }},
      {"scale", [&] { return ag::sum(ag::mul(ag::scale(a, -1.7), a)); }},
      {"add_scalar", [&] { return ag::sum(ag::mul(ag::add_scalar(a, 0.3), b)); }},
      {"neg", [&] { return ag::sum(ag::mul(-a, b)); }},
      {"tanh", [&] { return ag::sum(ag::mul(ag::tanh(a), b)); }},
      {"sigmoid", [&] { return ag::sum(ag::mul(ag::sigmoid(a), b)); }},
      {"log_sigmoid", [&] { return ag::sum(ag::mul(ag::log_sigmoid(a), b)); }},
      {"exp", [&] { return ag::sum(ag::mul(ag::exp(a), b)); }},
      {"log", [&] { return ag::sum(ag::mul(ag::log(pos), b)); }},
      {"mean", [&] { return ag::mean(ag::mul(a, a)); }},
  };
  for (const auto& [name, build] : cases) {
    const auto r = check_gradient({a, b, pos}, build, kEps, 7);
    EXPECT_LT(r.max_relative_error, kTol) << name;
  }
}

TEST(AutogradGradients, KinkedActivationsAwayFromKink) {
  Rng rng(2);
  ag::Var a = away_from_zero(rng, 4, 5);
  ag::Var w = param(rng, 4, 5);
  EXPECT_LT(check_gradient({a, w}, [&] { return ag::sum(ag::mul(ag::relu(a), w)); }, kEps, 1).max_relative_error,
            kTol);
  EXPECT_LT(check_gradient({a, w}, [&] { return ag::sum(ag::mul(ag::leaky_relu(a, 0.2), w)); }, kEps, 2)
                .max_relative_error,
            kTol);
}

TEST(AutogradGradients, ProbesStraddlingAKinkAreSkipped) {
  // Entry 0 sits 1e-5 above the relu kink, closer than eps; entry 1 is far.
  ag::Var a = ag::Var::parameter(Matrix{{1e-5, 0.7}});
  auto build = [&] { return ag::sum(ag::relu(a)); };
  const auto raw = check_gradient({a}, build, 1e-4, 1);
  EXPECT_NEAR(raw.max_relative_error, 1.0 - 0.55, 1e-9);  // fd (1e-4 + 1e-5) / 2e-4 vs 1
  const auto r = check_gradient({a}, build, 1e-4, 1, 200, true);
  EXPECT_EQ(r.kinks_skipped, 1);
  EXPECT_EQ(r.coordinates, 1);
  EXPECT_LT(r.max_relative_error, 1e-9);

  ag::PieceRecorder rec;
  ag::relu(ag::Var::constant(Matrix{{0.5, -0.5}}));
  const auto first = rec.fingerprint();
  rec.reset();
  ag::leaky_relu(ag::Var::constant(Matrix{{0.25, -2.0}}), 0.2);
  EXPECT_EQ(rec.fingerprint(), first);
  rec.reset();
  ag::relu(ag::Var::constant(Matrix{{-0.5, -0.5}}));
  EXPECT_NE(rec.fingerprint(), first);
}

TEST(AutogradGradients, MatrixOps) {
  Rng rng(3);
  ag::Var x = param(rng, 5, 3);
  ag::Var w = param(rng, 4, 3);
  ag::Var bias = param(rng, 1, 4);
  ag::Var m = param(rng, 3, 2);
  ag::Var t = param(rng, 5, 4);
  EXPECT_LT(check_gradient({x, w, bias}, [&] { return ag::sum(ag::mul(ag::linear(x, w, bias), t)); }, kEps, 1)
                .max_relative_error,
            kTol);
  EXPECT_LT(check_gradient({x, m}, [&] { return ag::sum(ag::tanh(ag::matmul(x, m))); }, kEps, 2).max_relative_error,
            kTol);
  ag::Var y = param(rng, 5, 2);
  EXPECT_LT(check_gradient({x, y}, [&] { return ag::sum(ag::tanh(ag::concat_cols(x, y))); }, kEps, 3)
                .max_relative_error,
            kTol);
  ag::Var u = param(rng, 5, 3);
  EXPECT_LT(check_gradient({x, u}, [&] { return ag::sum(ag::tanh(ag::row_dot(x, u))); }, kEps, 4).max_relative_error,
            kTol);
}

TEST(AutogradGradients, SoftmaxFamilyAndIndexing) {
  Rng rng(4);
  ag::Var logits = param(rng, 6, 4, 2.0);
  ag::Var table = param(rng, 4, 3);
  const std::vector<int> labels = {0, 3, 1, 1, 2, 0};
  EXPECT_LT(check_gradient({logits}, [&] { return ag::mean(ag::pick(ag::log_softmax(logits), labels)); }, kEps, 1)
                .max_relative_error,
            kTol);
  ag::Var w = param(rng, 6, 4);
  EXPECT_LT(check_gradient({logits, w}, [&] { return ag::sum(ag::mul(ag::softmax(logits), w)); }, kEps, 2)
                .max_relative_error,
            kTol);
  EXPECT_LT(check_gradient({logits}, [&] { return ag::log_mean_exp(logits); }, kEps, 3).max_relative_error, kTol);
  ag::Var v = param(rng, 6, 3);
  EXPECT_LT(check_gradient({table, v}, [&] { return ag::sum(ag::tanh(ag::row_dot(ag::gather_rows(table, labels), v))); },
                           kEps, 4)
                .max_relative_error,
            kTol);
}

// Direct loop over output pixels; zero padding.
Matrix naive_conv(const Matrix& x, const Matrix& w, const Matrix& b, const ag::ConvGeometry& g) {
  const int ho = g.conv_out_height();
  const int wo = g.conv_out_width();
  Matrix out = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(g.out_channels) * ho * wo);
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    for (int co = 0; co < g.out_channels; ++co) {
      for (int i = 0; i < ho; ++i) {
        for (int j = 0; j < wo; ++j) {
          double acc = b(0, co);
          for (int ci = 0; ci < g.in_channels; ++ci) {
            for (int ki = 0; ki < g.kernel; ++ki) {
              for (int kj = 0; kj < g.kernel; ++kj) {
                const int r = i * g.stride - g.padding + ki;
                const int c = j * g.stride - g.padding + kj;
                if (r < 0 || c < 0 || r >= g.height || c >= g.width) continue;
                acc += w(co, (ci * g.kernel + ki) * g.kernel + kj) * x(n, (ci * g.height + r) * g.width + c);
              }
            }
          }
          out(n, (co * ho + i) * wo + j) = acc;
        }
      }
    }
  }
  return out;
}

TEST(Convolution, MatchesDirectLoop) {
  Rng rng(5);
  const ag::ConvGeometry g{2, 3, 4, 2, 1, 6, 6};
  const Matrix x = rng.normal_matrix(2, 2 * 36);
  const Matrix w = rng.normal_matrix(3, 2 * 16);
  const Matrix b = rng.normal_matrix(1, 3);
  const Matrix got = ag::conv2d(ag::Var::constant(x), ag::Var::constant(w), ag::Var::constant(b), g).value();
  EXPECT_LT((got - naive_conv(x, w, b, g)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Convolution, TransposeIsAdjointOfConv) {
  Rng rng(6);
  const ag::ConvGeometry g{2, 3, 4, 2, 1, 6, 6};
  const ag::ConvGeometry gt{3, 2, 4, 2, 1, g.conv_out_height(), g.conv_out_width()};
  ASSERT_EQ(gt.transpose_out_height(), g.height);
  const Matrix x = rng.normal_matrix(1, 2 * 36);
  const Matrix y = rng.normal_matrix(1, 3 * 9);
  const Matrix w = rng.normal_matrix(3, 2 * 16);
  const ag::Var zero3 = ag::Var::constant(Matrix::Zero(1, 3));
  const ag::Var zero2 = ag::Var::constant(Matrix::Zero(1, 2));
  const Matrix cx = ag::conv2d(ag::Var::constant(x), ag::Var::constant(w), zero3, g).value();
  const Matrix ty = ag::conv_transpose2d(ag::Var::constant(y), ag::Var::constant(w), zero2, gt).value();
  EXPECT_NEAR((cx.array() * y.array()).sum(), (x.array() * ty.array()).sum(), 1e-10);
}

TEST(Convolution, Gradients) {
  Rng rng(7);
  const ag::ConvGeometry g{2, 3, 4, 2, 1, 6, 6};
  ag::Var x = param(rng, 2, 2 * 36);
  ag::Var w = param(rng, 3, 2 * 16, 0.3);
  ag::Var b = param(rng, 1, 3);
  EXPECT_LT(check_gradient({x, w, b}, [&] { return ag::sum(ag::tanh(ag::conv2d(x, w, b, g))); }, kEps, 1)
                .max_relative_error,
            kTol);
  const ag::ConvGeometry gt{3, 2, 4, 2, 1, 3, 3};
  ag::Var xt = param(rng, 2, 3 * 9);
  ag::Var wt = param(rng, 3, 2 * 16, 0.3);
  ag::Var bt = param(rng, 1, 2);
  EXPECT_LT(check_gradient({xt, wt, bt}, [&] { return ag::sum(ag::tanh(ag::conv_transpose2d(xt, wt, bt, gt))); },
                           kEps, 2)
                .max_relative_error,
            kTol);
}

TEST(Autograd, DetachBlocksGradient) {
  Rng rng(8);
  ag::Var a = param(rng, 2, 2);
  ag::backward(ag::sum(ag::mul(ag::detach(a), a)));
  EXPECT_LT((a.grad() - a.value()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Autograd, SharedSubgraphAccumulates) {
  ag::Var a = ag::Var::parameter(Matrix::Constant(1, 1, 3.0));
  ag::Var b = ag::mul(a, a);
  ag::backward(ag::sum(b + b));
  EXPECT_DOUBLE_EQ(a.grad()(0, 0), 12.0);
}

TEST(Autograd, LogMeanExpStableForLargeInputs) {
  const ag::Var big = ag::Var::constant(Matrix::Constant(1, 4, 1000.0));
  EXPECT_DOUBLE_EQ(ag::log_mean_exp(big).item(), 1000.0);
}

TEST(Nn, FrozenModuleReceivesNoGradient) {
  Rng rng(9);
  nn::Linear frozen(3, 2, rng);
  nn::Linear live(2, 1, rng);
  frozen.set_trainable(false);
  const ag::Var x = ag::Var::constant(rng.normal_matrix(4, 3));
  ag::backward(ag::sum(live.forward(frozen.forward(x))));
  EXPECT_FALSE(frozen.weight().has_grad());
  EXPECT_TRUE(live.weight().has_grad());
}

TEST(Nn, InitializationScale) {
  Rng rng(10);
  nn::Linear l(400, 300, rng);
  const Matrix& w = l.weight().value();
  const double mean = w.mean();
  const double sd = std::sqrt((w.array() - mean).square().mean());
  EXPECT_NEAR(mean, 0.0, 5e-4);
  EXPECT_NEAR(sd, nn::kInitStd, 5e-4);
  EXPECT_EQ(l.bias().value().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Optim, AdamFirstStepMovesByLearningRate) {
  // Bias correction makes the first step lr · g / (|g| + eps').
  ag::Var p = ag::Var::parameter(Matrix::Constant(1, 2, 1.0));
  AdamOptions o;
  o.learning_rate = 0.01;
  Adam adam({p}, o);
  ag::backward(ag::sum(ag::mul(p, ag::Var::constant((Matrix(1, 2) << 3.0, -0.5).finished()))));
  adam.step();
  EXPECT_NEAR(p.value()(0, 0), 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p.value()(0, 1), 1.0 + 0.01, 1e-9);
  EXPECT_EQ(adam.steps_taken(), 1);
}

TEST(Optim, AdamSkipsParametersWithoutGradient) {
  ag::Var a = ag::Var::parameter(Matrix::Constant(1, 1, 1.0));
  ag::Var b = ag::Var::parameter(Matrix::Constant(1, 1, 1.0));
  Adam adam({a, b}, AdamOptions{});
  ag::backward(ag::sum(ag::mul(a, a)));
  adam.step();
  EXPECT_NE(a.value()(0, 0), 1.0);
  EXPECT_EQ(b.value()(0, 0), 1.0);
}

TEST(Rng, StreamsAreIndependentOfConsumptionElsewhere) {
  Rng a(42, "z");
  Rng other(42, "y");
  for (int i = 0; i < 1000; ++i) other.uniform();
  Rng b(42, "z");
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.uniform(), b.uniform());
  EXPECT_NE(derive_seed(42, "z"), derive_seed(42, "y"));
}

TEST(Rng, StateRoundTrip) {
  Rng a(3);
  for (int i = 0; i < 17; ++i) a.normal();
  Rng b(0);
  b.set_state(a.state());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.normal(), b.normal());
}

}  // namespace
}  // namespace uacgan
