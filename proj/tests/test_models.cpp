// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/models.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace uacgan {
namespace {

NetworkBundle mog_bundle(std::uint64_t seed = 1, int feature_dim = 64) {
  ArchConfig arch;
  arch.feature_dim = feature_dim;
  return build_networks(arch, DataShape::scalar(), LabelSpec::uniform(3), LatentSpec{2}, seed);
}

// φ(x) = [x, 0] via a linear layer, ψ ≡ psi_bias, zero embeddings and biases.
std::unique_ptr<ProjectionStatisticsNet> hand_net(int k, double psi_bias) {
  Rng rng(0);
  auto phi = std::make_unique<nn::Sequential>(1);
  auto& lin = phi->emplace<nn::Linear>(1, 2, rng);
  lin.weight().mutable_value() << 1.0, 0.0;
  auto t = std::make_unique<ProjectionStatisticsNet>(std::move(phi), k, rng);
  t->embedding().mutable_value().setZero();
  t->scalar_head().weight().mutable_value().setZero();
  t->scalar_head().bias().mutable_value().setConstant(psi_bias);
  t->class_bias().mutable_value().setZero();
  return t;
}

TEST(BuildNetworks, MogShapes) {
  NetworkBundle b = mog_bundle();
  const Matrix z = Matrix::Ones(4, 2);
  const std::vector<int> y = {0, 1, 2, 0};
  EXPECT_EQ(b.generator->generate(z, y).rows(), 4);
  EXPECT_EQ(b.generator->generate(z, y).cols(), 1);
  EXPECT_EQ(b.modules().size(), 5u);  // G, D, C, Cmi, T
}

TEST(BuildNetworks, ProjectionShapes) {
  NetworkBundle b = mog_bundle(2, 16);
  auto* t = dynamic_cast<ProjectionStatisticsNet*>(b.statistics.get());
  ASSERT_NE(t, nullptr);
  EXPECT_EQ(t->embedding().rows(), 3);
  EXPECT_EQ(t->embedding().cols(), 16);
  EXPECT_EQ(t->class_bias().rows(), 3);
  EXPECT_EQ(t->class_bias().cols(), 1);
}

TEST(BuildNetworks, MnistGeneratorShape) {
  ArchConfig arch = ArchConfig::from_key("mnist-conv", {1, 28, 28});
  NetworkBundle b = build_networks(arch, {1, 28, 28}, LabelSpec::uniform(10), LatentSpec{100}, 3);
  Rng rng(1);
  const Matrix x = b.generator->generate(rng.normal_matrix(2, 100), std::vector<int>{3, 7});
  EXPECT_EQ(x.cols(), 784);
  EXPECT_TRUE(b.generator->output_shape() == (DataShape{1, 28, 28}));
  EXPECT_LE(x.cwiseAbs().maxCoeff(), 1.0);
}

TEST(BuildNetworks, Errors) {
  EXPECT_THROW(ArchConfig::from_key("resnet", DataShape::scalar()), std::invalid_argument);
  ArchConfig arch;
  arch.preset = "mnist-conv";
  EXPECT_THROW(build_networks(arch, DataShape::scalar(), LabelSpec::uniform(3), LatentSpec{2}, 0),
               std::invalid_argument);
  EXPECT_THROW(build_networks(ArchConfig{}, DataShape::scalar(), LabelSpec{3, {0.5, 0.5, 0.5}}, LatentSpec{2}, 0),
               std::invalid_argument);
  EXPECT_THROW(build_networks(ArchConfig{}, DataShape::scalar(), LabelSpec::uniform(3), LatentSpec{0}, 0),
               std::invalid_argument);
}

TEST(StatisticForward, HandEvaluatedAdditiveForm) {
  auto t = hand_net(2, 0.5);
  t->embedding().mutable_value().row(0) << 2.0, 3.0;
  t->class_bias().mutable_value()(0, 0) = -1.0;
  const Matrix x = Matrix::Constant(1, 1, 1.0);
  EXPECT_NEAR(statistic_forward(*t, x, 0), 1.5, 1e-15);

  LabelDiscriminatorNet dy(2);
  dy.table().mutable_value()(0, 0) = 0.2;
  t->attach_label_discriminator(&dy);
  EXPECT_NEAR(statistic_forward(*t, x, 0), 1.5 - 0.2 + std::log(2.0), 1e-15);
  EXPECT_NEAR(statistic_forward(*t, x, 0), 1.9931, 5e-5);
}

TEST(StatisticForward, ZeroParametersGiveZero) {
  auto t = hand_net(3, 0.0);
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(statistic_forward(*t, rng.normal_matrix(1, 1), i % 3), 0.0);
  }
}

TEST(StatisticForward, LabelOutOfRange) {
  NetworkBundle b = mog_bundle();
  EXPECT_THROW(statistic_forward(*b.statistics, Matrix::Zero(1, 1), 3), std::out_of_range);
  EXPECT_THROW(statistic_forward(*b.statistics, Matrix::Zero(1, 1), -1), std::out_of_range);
}

TEST(StatisticForward, DifferenceDependsOnlyOnProjectionAndBias) {
  NetworkBundle b = mog_bundle(5);
  auto& t = dynamic_cast<ProjectionStatisticsNet&>(*b.statistics);
  Rng rng(6);
  t.class_bias().mutable_value() = rng.normal_matrix(3, 1);
  t.embedding().mutable_value() = rng.normal_matrix(3, 64);
  for (int i = 0; i < 200; ++i) {
    const Matrix x = rng.normal_matrix(1, 1, 3.0);
    const int y = rng.uniform_int(3);
    const int y2 = rng.uniform_int(3);
    const Vector phi = t.feature().forward(ag::Var::constant(x)).value().row(0).transpose();
    const Matrix& v = t.embedding().value();
    const Matrix& c = t.class_bias().value();
    const double expected = (v.row(y) - v.row(y2)).dot(phi.transpose()) + c(y, 0) - c(y2, 0);
    const double got = statistic_forward(t, x, y) - statistic_forward(t, x, y2);
    ASSERT_NEAR(got, expected, 1e-5 * std::max(1.0, std::abs(expected)));
  }
}

TEST(OptimalLabelLogit, Examples) {
  for (double v : optimal_label_logit(std::vector<double>(4, 0.25), 4)) EXPECT_NEAR(v, 0.0, 1e-15);
  const auto l = optimal_label_logit(std::vector<double>{0.75, 0.25}, 2);
  EXPECT_NEAR(l[0], std::log(1.5), 1e-15);
  EXPECT_NEAR(l[1], std::log(0.5), 1e-15);
  const auto d = optimal_label_logit(std::vector<double>{1.0, 0.0}, 2);
  EXPECT_NEAR(d[0], std::log(2.0), 1e-15);
  EXPECT_TRUE(std::isinf(d[1]) && d[1] < 0);
}

TEST(Heads, ClassifierOutputsOnSimplex) {
  NetworkBundle b = mog_bundle(7);
  Rng rng(8);
  // Larger weights so the softmax is far from uniform.
  for (auto& p : b.classifier->parameters()) p.mutable_value() *= 5.0;
  const Matrix probs = b.classifier->probs(rng.normal_matrix(1000, 1, 5.0));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    ASSERT_GT(probs.row(i).minCoeff(), 0.0);
    ASSERT_NEAR(probs.row(i).sum(), 1.0, 1e-6);
  }
  const Matrix d = b.discriminator->probability(rng.normal_matrix(1000, 1, 5.0));
  EXPECT_GT(d.minCoeff(), 0.0);
  EXPECT_LT(d.maxCoeff(), 1.0);
}

TEST(Determinism, RepeatedForwardIsBitwiseEqual) {
  NetworkBundle b = mog_bundle(9);
  Rng rng(10);
  const Matrix z = rng.normal_matrix(64, 2);
  std::vector<int> y(64);
  for (auto& v : y) v = rng.uniform_int(3);
  const Matrix a = b.generator->generate(z, y);
  const Matrix c = b.generator->generate(z, y);
  EXPECT_TRUE(a == c);
  // Same seed, same parameters.
  NetworkBundle b2 = mog_bundle(9);
  EXPECT_TRUE(b2.generator->generate(z, y) == a);
}

TEST(Determinism, AddingLabelDiscriminatorKeepsOtherInits) {
  ArchConfig with;
  with.use_label_discriminator = true;
  NetworkBundle a = build_networks(ArchConfig{}, DataShape::scalar(), LabelSpec::uniform(3), LatentSpec{2}, 11);
  NetworkBundle b = build_networks(with, DataShape::scalar(), LabelSpec::uniform(3), LatentSpec{2}, 11);
  EXPECT_TRUE(a.generator->parameters()[0].value() == b.generator->parameters()[0].value());
  EXPECT_TRUE(a.statistics->parameters()[0].value() == b.statistics->parameters()[0].value());
  EXPECT_EQ(b.modules().count("DY"), 1u);
}

}  // namespace
}  // namespace uacgan
