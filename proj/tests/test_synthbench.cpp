// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/synthbench.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace uacgan {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("uacgan_synthbench_" + name);
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

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

TEST(SampleMog, ClassMomentsAndCounts) {
  const MoGSpec spec;
  Rng rng(1);
  for (int k = 0; k < 3; ++k) {
    const auto xs = sample_mog_class(spec, k, 20000, rng);
    const double sd = spec.components[static_cast<std::size_t>(k)].stddev;
    EXPECT_NEAR(mean(xs), spec.components[static_cast<std::size_t>(k)].mean, 5 * sd / std::sqrt(20000.0));
    EXPECT_NEAR(stddev(xs), sd, 0.03 * sd);
  }
  const LabeledBatch b = sample_mog(spec, 30000, 7);
  std::vector<int> counts(3, 0);
  for (int y : b.y) ++counts[static_cast<std::size_t>(y)];
  const double sigma = std::sqrt(30000.0 * (1.0 / 3) * (2.0 / 3));
  for (int c : counts) EXPECT_LT(std::abs(c - 10000), 5 * sigma);
  EXPECT_TRUE(sample_mog(spec, 100, 7).x == sample_mog(spec, 100, 7).x);
}

TEST(SampleMog, VarianceConvention) {
  MoGSpec spec;
  spec.variance_convention = true;
  EXPECT_NEAR(spec.stddev(1), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(spec.resolved()[2].stddev, std::sqrt(3.0), 1e-15);
  spec.prior = {0.5, 0.5, 0.5};
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(Mmd, Examples) {
  const std::vector<double> a = {0.0}, b = {1.0};
  EXPECT_NEAR(mmd_squared(a, b, 1.0), 2 - 2 * std::exp(-0.5), 1e-15);
  EXPECT_NEAR(mmd_squared(a, b, 1.0), 0.7869, 5e-5);
  const std::vector<double> xs = {0.1, -2.0, 3.5, 0.7};
  EXPECT_NEAR(mmd_squared(xs, xs, 0.8), 0.0, 1e-15);
}

TEST(Mmd, SymmetricAndGrowsWithShift) {
  Rng rng(2);
  std::vector<double> xs(400), ys(300);
  for (double& v : xs) v = rng.normal();
  for (double& v : ys) v = rng.normal();
  EXPECT_EQ(mmd_squared(xs, ys, 1.0), mmd_squared(ys, xs, 1.0));
  double prev = mmd_squared(xs, ys, 1.0);
  for (double shift : {0.5, 1.0, 2.0, 4.0}) {
    std::vector<double> moved = ys;
    for (double& v : moved) v += shift;
    const double m = mmd_squared(xs, moved, 1.0);
    EXPECT_GT(m, prev);
    prev = m;
  }
}

TEST(Mmd, MedianPairwiseDistance) {
  EXPECT_EQ(median_pairwise_distance(std::vector<double>{0, 1, 3}), 2.0);
  EXPECT_EQ(median_pairwise_distance(std::vector<double>{0, 1, 3, 7}), 3.5);
}

TEST(Kde, SingleKernelAndNormalization) {
  const std::vector<double> one = {0.0};
  const std::vector<double> grid = {0.0, 1.0};
  const auto d = kde(one, 1.0, grid);
  EXPECT_NEAR(d[0], 1 / std::sqrt(2 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(d[1], std::exp(-0.5) / std::sqrt(2 * std::numbers::pi), 1e-15);

  Rng rng(3);
  std::vector<double> xs(20000);
  for (double& v : xs) v = rng.normal();
  const double h = silverman_bandwidth(xs);
  std::vector<double> g;
  for (double x = -8; x <= 8; x += 0.01) g.push_back(x);
  const auto dens = kde(xs, h, g);
  double integral = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    integral += dens[i] * 0.01;
    worst = std::max(worst, std::abs(dens[i] - std::exp(-0.5 * g[i] * g[i]) / std::sqrt(2 * std::numbers::pi)));
  }
  EXPECT_NEAR(integral, 1.0, 0.01);
  EXPECT_LT(worst, 0.02);
}

TEST(Summaries, MeanStdMedian) {
  const auto s = summarize(std::vector<double>{3, 1, 2, 10});
  EXPECT_EQ(s.mean, 4.0);
  EXPECT_EQ(s.median, 2.5);
  EXPECT_NEAR(s.stddev, std::sqrt(((1.0 + 9 + 4 + 36)) / 3), 1e-12);
}

TEST(Benchmark, RealVsRealControlIsSmall) {
  MoGBenchOptions opt;
  opt.runs = 2;
  opt.samples_per_class = 3000;
  const MMDReport r = real_vs_real_control(opt);
  ASSERT_EQ(r.runs.size(), 2u);
  for (const auto& run : r.runs) {
    for (double v : run.per_class) EXPECT_LT(v, 0.01);
    EXPECT_LT(run.marginal, 0.01);
  }
  EXPECT_GT(r.bandwidth, 0.0);
}

TEST(Benchmark, CsvHasOneRowPerRunAndClass) {
  MoGBenchOptions opt;
  opt.runs = 3;
  opt.samples_per_class = 200;
  const MMDReport r = real_vs_real_control(opt);
  const fs::path dir = scratch("csv");
  write_mmd_csv(r, dir / "mmd.csv");
  std::ifstream in(dir / "mmd.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "kind,run,seed,class,mmd2,bandwidth,samples_per_class,seconds,status");
  int rows = 0, class2 = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",Class_2,") != std::string::npos) ++class2;
  }
  EXPECT_EQ(rows, 3 * 4);
  EXPECT_EQ(class2, 3);
}

TEST(Benchmark, TinyTrainingRunProducesFiniteReport) {
  TrainConfig train;
  train.objective = ObjectiveKind::uac;
  train.steps = 5;
  train.batch_size = 32;
  MoGBenchOptions opt;
  opt.runs = 2;
  opt.samples_per_class = 100;
  opt.plots = false;
  const MMDReport r = run_mog_benchmark(ObjectiveKind::uac, train, ArchConfig{}, LatentSpec{2}, opt);
  EXPECT_TRUE(r.complete);
  ASSERT_EQ(r.runs.size(), 2u);
  EXPECT_EQ(r.runs[1].seed, 1u);
  for (const auto& run : r.runs) {
    EXPECT_EQ(run.status, "ok");
    for (double v : run.per_class) EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_EQ(to_json(r)["kind"], "uac");
}

TEST(DensityPlot, IdenticalSamplesOverlapAndBytesAreStable) {
  const MoGSpec spec;
  const auto real = reference_sample(spec, 2000, 4);
  const fs::path dir = scratch("plot");
  const double gap = emit_density_plot(real, real, dir / "a.png");
  EXPECT_LT(gap, 0.01);
  emit_density_plot(real, real, dir / "b.png");
  const std::string a = slurp(dir / "a.png");
  EXPECT_GT(a.size(), 8u);
  EXPECT_EQ(a.substr(1, 3), "PNG");
  EXPECT_EQ(a, slurp(dir / "b.png"));

  auto shifted = real;
  for (auto& cls : shifted) {
    for (double& v : cls) v += 3.0;
  }
  EXPECT_GT(emit_density_plot(real, shifted, dir / "c.png"), 0.05);
}

}  // namespace
}  // namespace uacgan
