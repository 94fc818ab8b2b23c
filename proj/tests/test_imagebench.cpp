// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/imagebench.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace uacgan {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("uacgan_imagebench_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string be32(std::uint32_t v) {
  return {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8), static_cast<char>(v)};
}

Matrix one_hot_rows(int n, int k, int (*cls)(int)) {
  Matrix m = Matrix::Zero(n, k);
  for (int i = 0; i < n; ++i) m(i, cls(i)) = 1.0;
  return m;
}

TEST(InceptionScore, Examples) {
  const auto uniform = inception_score(Matrix::Constant(100, 10, 0.1));
  EXPECT_NEAR(uniform.mean, 1.0, 1e-12);
  EXPECT_NEAR(uniform.stddev, 0.0, 1e-12);
  const auto covering = inception_score(one_hot_rows(100, 10, [](int i) { return i % 10; }));
  EXPECT_NEAR(covering.mean, 10.0, 1e-9);
  const auto same = inception_score(one_hot_rows(100, 10, [](int) { return 4; }));
  EXPECT_NEAR(same.mean, 1.0, 1e-9);
  EXPECT_THROW(inception_score(Matrix::Constant(5, 10, 0.1), 10), std::invalid_argument);
}

TEST(InceptionScore, InvariantToRowOrderWithinASplit) {
  Rng rng(1);
  Matrix p = rng.normal_matrix(60, 10).array().exp().matrix();
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
  const auto perm = rng.permutation(60);
  Matrix shuffled(60, 10);
  for (int i = 0; i < 60; ++i) shuffled.row(i) = p.row(perm[static_cast<std::size_t>(i)]);
  EXPECT_NEAR(inception_score(p, 1).mean, inception_score(shuffled, 1).mean, 1e-12);
  EXPECT_GE(inception_score(p, 3).mean, 1.0);
}

TEST(Frechet, Examples) {
  const Vector zero = Vector::Zero(1), one = Vector::Ones(1);
  const Matrix unit = Matrix::Identity(1, 1);
  EXPECT_NEAR(frechet_distance(zero, unit, zero, unit), 0.0, 1e-12);
  EXPECT_NEAR(frechet_distance(zero, unit, one, unit), 1.0, 1e-12);
  const Matrix s1 = Vector{{1.0, 4.0}}.asDiagonal();
  const Matrix s2 = Vector{{4.0, 1.0}}.asDiagonal();
  EXPECT_NEAR(frechet_distance(Vector::Zero(2), s1, Vector::Zero(2), s2), 2.0, 1e-12);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = 0.5;
  EXPECT_THROW(frechet_distance(Vector::Zero(2), bad, Vector::Zero(2), Matrix::Identity(2, 2)),
               std::invalid_argument);
}

TEST(Frechet, SymmetricAndZeroOnlyForEqualMoments) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = rng.normal_matrix(200, 5);
    const Matrix b = rng.normal_matrix(200, 5) * 1.3;
    const auto ma = GaussianMoments::of(a);
    const auto mb = GaussianMoments::of(b);
    const double ab = frechet_distance(ma.mean, ma.cov, mb.mean, mb.cov);
    const double ba = frechet_distance(mb.mean, mb.cov, ma.mean, ma.cov);
    EXPECT_NEAR(ab, ba, 1e-9 * std::max(1.0, ab));
    EXPECT_GT(ab, 1e-3);
    EXPECT_NEAR(frechet_distance(ma.mean, ma.cov, ma.mean, ma.cov), 0.0, 1e-9);
  }
}

TEST(Frechet, SquareRootMatchesNumericalSquareRootOnRandomPairs) {
  // Independent route: for commuting (diagonal) covariances the trace term
  // is Σ sqrt(a_i b_i).
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    Vector a(4), b(4);
    for (int i = 0; i < 4; ++i) {
      a(i) = 0.1 + rng.uniform() * 3;
      b(i) = 0.1 + rng.uniform() * 3;
    }
    double expected = 0.0;
    for (int i = 0; i < 4; ++i) expected += a(i) + b(i) - 2 * std::sqrt(a(i) * b(i));
    EXPECT_NEAR(frechet_distance(Vector::Zero(4), a.asDiagonal(), Vector::Zero(4), b.asDiagonal()), expected, 1e-10);
  }
}

TEST(Datasets, ReadsIdxAndRejectsBadMagic) {
  const fs::path dir = scratch("idx");
  std::string img = be32(0x803) + be32(3) + be32(2) + be32(2);
  img += std::string("\x00\xff\x00\xff", 4) + std::string(4, '\x80') + std::string(4, '\xff');
  std::string lab = be32(0x801) + be32(3) + std::string("\x07\x00\x09", 3);
  write_bytes(dir / "img", img);
  write_bytes(dir / "lab", lab);
  const ImageDataset d = read_idx(dir / "img", dir / "lab", "toy", "train");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.labels, (std::vector<int>{7, 0, 9}));
  EXPECT_EQ(d.images(0, 0), -1.0);
  EXPECT_EQ(d.images(0, 1), 1.0);
  EXPECT_NEAR(d.images(1, 0), 128 / 127.5 - 1, 1e-15);
  EXPECT_THROW(read_idx(dir / "lab", dir / "lab", "toy", "train"), std::runtime_error);
  write_bytes(dir / "short", img.substr(0, img.size() - 1));
  EXPECT_THROW(read_idx(dir / "short", dir / "lab", "toy", "train"), std::runtime_error);
}

TEST(Datasets, BundledSubsetHasOfficialCounts) {
  const ImageDataset train = load_dataset("mnist-5k", "train", std::nullopt, false);
  EXPECT_EQ(train.size(), official_split_size("mnist-5k", "train"));
  EXPECT_TRUE(train.shape == (DataShape{1, 28, 28}));
  for (std::size_t c : train.class_counts()) EXPECT_EQ(c, 400u);
  const ImageDataset test = load_dataset("mnist-5k", "test", std::nullopt, false);
  EXPECT_EQ(test.size(), 1000u);
  EXPECT_THROW(official_split_size("svhn", "train"), std::invalid_argument);
}

TEST(Fetch, FileUrlWithChecksumVerification) {
  const fs::path dir = scratch("fetch");
  write_bytes(dir / "source.bin", "abc");
  const fs::path cache = dir / "cache";
  const RemoteFile good{"abc.bin", "file://" + (dir / "source.bin").string(), "900150983cd24fb0d6963f7d28e17f72"};
  const fs::path got = fetch(good, cache);
  EXPECT_EQ(slurp(got), "abc");
  EXPECT_EQ(md5_file(got), good.md5);
  EXPECT_EQ(sha256_file(got), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  const RemoteFile bad{"bad.bin", good.url, "d41d8cd98f00b204e9800998ecf8427e"};
  EXPECT_THROW(fetch(bad, cache), ChecksumMismatch);
  EXPECT_FALSE(fs::exists(cache / "bad.bin"));
  const RemoteFile missing{"none.bin", "file://" + (dir / "absent").string(), good.md5};
  EXPECT_THROW(fetch(missing, cache), std::runtime_error);
}

std::unique_ptr<GeneratorNet> mnist_generator(std::uint64_t seed) {
  const DataShape shape{1, 28, 28};
  auto nets = build_networks(ArchConfig::from_key("mnist-conv", shape), shape, LabelSpec::uniform(10),
                             LatentSpec{100}, seed);
  return std::move(nets.generator);
}

TEST(ClassGrid, DeterministicBytesAndLabelRange) {
  auto g = mnist_generator(1);
  const fs::path dir = scratch("grid");
  const GridResult a = class_grid(*g, 3, 4, 4, 9, dir / "a.png");
  class_grid(*g, 3, 4, 4, 9, dir / "b.png");
  EXPECT_EQ(slurp(dir / "a.png"), slurp(dir / "b.png"));
  EXPECT_FALSE(a.collapsed);
  EXPECT_GT(a.variance, 0.0);
  EXPECT_THROW(class_grid(*g, 10, 2, 2, 9, dir / "c.png"), std::out_of_range);
  EXPECT_THROW(class_grid(*g, -1, 2, 2, 9, dir / "c.png"), std::out_of_range);
}

TEST(ClassGrid, ConstantGeneratorIsFlagged) {
  auto g = mnist_generator(2);
  for (auto& p : g->parameters()) p.mutable_value().setZero();
  std::vector<std::string> log;
  const GridResult r =
      class_grid(*g, 0, 3, 3, 1, scratch("collapse") / "g.png", [&](const std::string& m) { log.push_back(m); });
  EXPECT_TRUE(r.collapsed);
  EXPECT_EQ(r.variance, 0.0);
  ASSERT_FALSE(log.empty());
  EXPECT_NE(log.front().find("collapse"), std::string::npos);
  EXPECT_TRUE(grid_statistics(Matrix::Constant(4, 9, 0.3)).collapsed);
}

TEST(Scoring, SelfFidIsSmallAndReportCarriesExtractorIdentity) {
  const ImageDataset train = load_dataset("mnist-5k", "train", std::nullopt, false);
  MnistScorer scorer(5);
  EXPECT_LT(self_fid(train, scorer, 1), 2.0);
  const auto real = GaussianMoments::of(scorer.extract(train.images).first);
  const ScoreReport r = score_images(scorer, train.images.topRows(1000), real);
  EXPECT_EQ(r.extractor_id, "mnist-mlp-v1");
  EXPECT_EQ(r.n_samples, 1000);
  EXPECT_GE(r.inception_score.mean, 1.0);
  EXPECT_GE(r.fid, -1e-6);
  const auto j = to_json(r);
  EXPECT_TRUE(j.contains("weights_sha256"));
}

TEST(Scoring, ScorerRoundTripsThroughCheckpoint) {
  MnistScorer a(6);
  const fs::path p = scratch("scorer") / "s.ckpt";
  a.save(p);
  auto b = MnistScorer::load(p);
  const ImageDataset test = load_dataset("mnist-5k", "test", std::nullopt, false);
  const Matrix x = test.images.topRows(20);
  EXPECT_TRUE(a.extract(x).first == b->extract(x).first);
  EXPECT_EQ(b->weights_hash(), sha256_file(p));
  EXPECT_THROW(load_extractor("cifar10"), std::runtime_error);
}

}  // namespace
}  // namespace uacgan
