// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/synthbench.hpp"

#include "uacgan/image.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace uacgan {

namespace {

// mean over (i, j) of exp(c · (a_i − b_j)²).
double kernel_mean(std::span<const double> a, std::span<const double> b, double c) {
  Eigen::Map<const Eigen::ArrayXd> bv(b.data(), static_cast<Eigen::Index>(b.size()));
  Eigen::ArrayXd buf(bv.size());
  double total = 0.0;
  for (double ai : a) {
    buf = (bv - ai).square() * c;
    total += buf.exp().sum();
  }
  return total / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

// Fixed argument order for the cross term, so swapping xs and ys gives the
// same floating-point result.
bool canonical_first(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return !std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

std::vector<double> pooled(const std::vector<std::vector<double>>& per_class) {
  std::vector<double> out;
  for (const auto& v : per_class) out.insert(out.end(), v.begin(), v.end());
  return out;
}

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return i + 1 < s.size() ? s[i] * (1.0 - frac) + s[i + 1] * frac : s[i];
}

}  // namespace

void MoGSpec::validate() const {
  if (components.size() < 2) throw std::invalid_argument("MoGSpec: need at least 2 components");
  if (prior.size() != components.size()) throw std::invalid_argument("MoGSpec: prior and components disagree");
  for (const auto& c : components) {
    if (!(c.stddev > 0.0)) throw std::invalid_argument("MoGSpec: component scale must be > 0");
  }
  LabelSpec{num_classes(), prior}.validate();
}

double MoGSpec::stddev(int k) const {
  const double s = components.at(static_cast<std::size_t>(k)).stddev;
  return variance_convention ? std::sqrt(s) : s;
}

std::vector<oracle::GaussianComponent> MoGSpec::resolved() const {
  std::vector<oracle::GaussianComponent> out;
  for (int k = 0; k < num_classes(); ++k) out.push_back({components[static_cast<std::size_t>(k)].mean, stddev(k)});
  return out;
}

LabeledBatch sample_mog(const MoGSpec& spec, int n, Rng& rng) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("sample_mog: n must be >= 1");
  LabeledBatch b;
  b.x.resize(n, 1);
  b.y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int k = rng.categorical(spec.prior);
    b.y[static_cast<std::size_t>(i)] = k;
    b.x(i, 0) = spec.components[static_cast<std::size_t>(k)].mean + spec.stddev(k) * rng.normal();
  }
  return b;
}

LabeledBatch sample_mog(const MoGSpec& spec, int n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_mog(spec, n, rng);
}

std::vector<double> sample_mog_class(const MoGSpec& spec, int k, int n, Rng& rng) {
  const double mean = spec.components.at(static_cast<std::size_t>(k)).mean;
  const double sd = spec.stddev(k);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = mean + sd * rng.normal();
  return out;
}

JointSampler mog_joint_sampler(const MoGSpec& spec) {
  spec.validate();
  JointSampler sampler;
  sampler.x_shape = DataShape::scalar();
  sampler.labels = spec.label_spec();
  sampler.y_width = spec.num_classes();
  sampler.sample = [spec](Rng& rng, int n) {
    LabeledBatch b = sample_mog(spec, n, rng);
    return std::pair{b.x, LabelInput::from_classes(b.y, spec.num_classes())};
  };
  return sampler;
}

MoGDataSource::MoGDataSource(MoGSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
  spec_.validate();
}

LabeledBatch MoGDataSource::batch(std::int64_t index, int size) {
  Rng rng(derive_seed(seed_, "data"), "batch." + std::to_string(index));
  return sample_mog(spec_, size, rng);
}

double mmd_squared(std::span<const double> xs, std::span<const double> ys, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("mmd_squared: bandwidth must be > 0");
  if (xs.empty() || ys.empty()) throw std::invalid_argument("mmd_squared: empty sample");
  const double c = -1.0 / (2.0 * sigma * sigma);
  const double kxx = kernel_mean(xs, xs, c);
  const double kyy = kernel_mean(ys, ys, c);
  const double kxy = canonical_first(xs, ys) ? kernel_mean(xs, ys, c) : kernel_mean(ys, xs, c);
  return kxx + kyy - 2.0 * kxy;
}

double median_pairwise_distance(std::span<const double> xs, std::size_t max_points) {
  if (xs.size() < 2) throw std::invalid_argument("median_pairwise_distance: need at least 2 points");
  const std::size_t stride = std::max<std::size_t>(1, (xs.size() + max_points - 1) / max_points);
  std::vector<double> pts;
  for (std::size_t i = 0; i < xs.size(); i += stride) pts.push_back(xs[i]);
  std::vector<double> d;
  d.reserve(pts.size() * (pts.size() - 1) / 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) d.push_back(std::abs(pts[i] - pts[j]));
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(d.begin(), mid));
}

std::vector<double> kde(std::span<const double> samples, double bandwidth, std::span<const double> grid) {
  if (samples.empty()) throw std::invalid_argument("kde: empty sample");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth must be > 0");
  Eigen::Map<const Eigen::ArrayXd> s(samples.data(), static_cast<Eigen::Index>(samples.size()));
  const double c = -0.5 / (bandwidth * bandwidth);
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(grid.size());
  Eigen::ArrayXd buf(s.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    buf = (s - grid[i]).square() * c;
    out[i] = buf.exp().sum() * norm;
  }
  return out;
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("silverman_bandwidth: need at least 2 samples");
  const auto n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1.0;
  return 0.9 * spread * std::pow(n, -0.2);
}

MMDSummary summarize(std::span<const double> values) {
  MMDSummary s;
  if (values.empty()) return s;
  const auto n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / (n - 1.0));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.median = quantile_sorted(sorted, 0.5);
  return s;
}

void finalize_report(MMDReport& report) {
  std::vector<const RunMMD*> ok;
  for (const auto& r : report.runs) {
    if (r.status == "ok") ok.push_back(&r);
  }
  report.per_class.clear();
  if (ok.empty()) return;
  const std::size_t k = ok.front()->per_class.size();
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> v;
    for (const auto* r : ok) v.push_back(r->per_class[c]);
    report.per_class.push_back(summarize(v));
  }
  std::vector<double> m;
  for (const auto* r : ok) m.push_back(r->marginal);
  report.marginal = summarize(m);
}

std::vector<std::vector<double>> reference_sample(const MoGSpec& spec, int n, std::uint64_t seed) {
  Rng rng(seed, "eval.real");
  std::vector<std::vector<double>> out;
  for (int k = 0; k < spec.num_classes(); ++k) out.push_back(sample_mog_class(spec, k, n, rng));
  return out;
}

RunMMD score_samples(const std::vector<std::vector<double>>& real, const std::vector<std::vector<double>>& fake,
                     double bandwidth) {
  if (real.size() != fake.size()) throw std::invalid_argument("score_samples: class counts differ");
  RunMMD r;
  for (std::size_t k = 0; k < real.size(); ++k) r.per_class.push_back(mmd_squared(real[k], fake[k], bandwidth));
  r.marginal = mmd_squared(pooled(real), pooled(fake), bandwidth);
  return r;
}

std::vector<std::vector<double>> generate_per_class(GeneratorNet& g, int num_classes, int n, Rng& rng) {
  g.set_trainable(false);
  constexpr int kChunk = 1000;
  std::vector<std::vector<double>> out(static_cast<std::size_t>(num_classes));
  for (int k = 0; k < num_classes; ++k) {
    auto& dst = out[static_cast<std::size_t>(k)];
    dst.reserve(static_cast<std::size_t>(n));
    for (int done = 0; done < n; done += kChunk) {
      const int m = std::min(kChunk, n - done);
      const Matrix z = g.latent().sample(rng, m);
      const std::vector<int> labels(static_cast<std::size_t>(m), k);
      const Matrix x = g.generate(z, labels);
      for (Eigen::Index i = 0; i < x.rows(); ++i) dst.push_back(x(i, 0));
    }
  }
  return out;
}

MMDReport run_mog_benchmark(ObjectiveKind kind, const TrainConfig& train, const ArchConfig& arch,
                            const LatentSpec& latent, const MoGBenchOptions& options) {
  options.spec.validate();
  if (options.runs < 1) throw std::invalid_argument("runs must be >= 1");
  const int k = options.spec.num_classes();
  MMDReport report;
  report.kind = to_string(kind);
  report.samples_per_class = options.samples_per_class;
  const auto real = reference_sample(options.spec, options.samples_per_class, options.seed);
  const auto all_real = pooled(real);
  report.bandwidth = median_pairwise_distance(all_real, static_cast<std::size_t>(options.bandwidth_points));

  for (int r = 0; r < options.runs; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig tc = train;
    tc.objective = kind;
    tc.seed = options.seed + static_cast<std::uint64_t>(r);
    MoGDataSource data(options.spec, tc.seed);
    FitOptions fo;
    if (options.out_dir) fo.run_dir = *options.out_dir / (report.kind + "_run" + std::to_string(r));
    RunMMD scored;
    try {
      FitResult fitted = fit(tc, arch, latent, data, fo);
      Rng eval_rng(tc.seed, "eval.z");
      const auto fake = generate_per_class(*fitted.state.nets.generator, k, options.samples_per_class, eval_rng);
      scored = score_samples(real, fake, report.bandwidth);
      if (options.out_dir && options.plots) {
        emit_density_plot(real, fake, *options.out_dir / (report.kind + "_run" + std::to_string(r) + "_density.png"));
      }
    } catch (const TrainingAborted& e) {
      scored.status = e.what();
      report.complete = false;
    }
    scored.seed = tc.seed;
    scored.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.runs.push_back(scored);
    if (options.log) {
      std::string line = report.kind + " run " + std::to_string(r) + " seed " + std::to_string(tc.seed) + ":";
      for (double v : scored.per_class) line += " " + std::to_string(v);
      line += " marginal " + std::to_string(scored.marginal) + " (" + std::to_string(scored.seconds) + " s)";
      options.log(scored.status == "ok" ? line : line + " " + scored.status);
    }
    if (!report.complete) break;
  }
  finalize_report(report);
  return report;
}

MMDReport real_vs_real_control(const MoGBenchOptions& options) {
  options.spec.validate();
  MMDReport report;
  report.kind = "real";
  report.samples_per_class = options.samples_per_class;
  const auto real = reference_sample(options.spec, options.samples_per_class, options.seed);
  report.bandwidth = median_pairwise_distance(pooled(real), static_cast<std::size_t>(options.bandwidth_points));
  for (int r = 0; r < options.runs; ++r) {
    Rng rng(options.seed + static_cast<std::uint64_t>(r), "eval.control");
    std::vector<std::vector<double>> other;
    for (int k = 0; k < options.spec.num_classes(); ++k) {
      other.push_back(sample_mog_class(options.spec, k, options.samples_per_class, rng));
    }
    RunMMD scored = score_samples(real, other, report.bandwidth);
    scored.seed = options.seed + static_cast<std::uint64_t>(r);
    report.runs.push_back(scored);
  }
  finalize_report(report);
  return report;
}

void write_mmd_csv(const MMDReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "kind,run,seed,class,mmd2,bandwidth,samples_per_class,seconds,status\n";
  for (std::size_t r = 0; r < report.runs.size(); ++r) {
    const auto& run = report.runs[r];
    auto row = [&](const std::string& cls, double v) {
      out << report.kind << ',' << r << ',' << run.seed << ',' << cls << ',' << v << ',' << report.bandwidth << ','
          << report.samples_per_class << ',' << run.seconds << ',' << '"' << run.status << '"' << '\n';
    };
    for (std::size_t k = 0; k < run.per_class.size(); ++k) row("Class_" + std::to_string(k), run.per_class[k]);
    row("marginal", run.marginal);
  }
}

nlohmann::json to_json(const MMDReport& report) {
  auto summary = [](const MMDSummary& s) {
    return nlohmann::json{{"mean", s.mean}, {"std", s.stddev}, {"median", s.median}};
  };
  nlohmann::json j;
  j["kind"] = report.kind;
  j["bandwidth"] = report.bandwidth;
  j["samples_per_class"] = report.samples_per_class;
  j["complete"] = report.complete;
  j["per_class"] = nlohmann::json::array();
  for (const auto& s : report.per_class) j["per_class"].push_back(summary(s));
  j["marginal"] = summary(report.marginal);
  j["runs"] = nlohmann::json::array();
  for (const auto& r : report.runs) {
    j["runs"].push_back({{"seed", r.seed},
                         {"per_class", r.per_class},
                         {"marginal", r.marginal},
                         {"seconds", r.seconds},
                         {"status", r.status}});
  }
  return j;
}

double emit_density_plot(const std::vector<std::vector<double>>& real, const std::vector<std::vector<double>>& fake,
                         const std::filesystem::path& png_path, double lo, double hi, int grid_points) {
  if (real.empty() || real.size() != fake.size()) throw std::invalid_argument("emit_density_plot: class counts differ");
  for (std::size_t k = 0; k < real.size(); ++k) {
    if (real[k].empty() || fake[k].empty()) throw std::invalid_argument("emit_density_plot: empty sample");
  }
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (grid_points - 1);

  std::vector<std::vector<double>> real_sets = real;
  std::vector<std::vector<double>> fake_sets = fake;
  real_sets.push_back(pooled(real));
  fake_sets.push_back(pooled(fake));

  constexpr int kPanelW = 360;
  constexpr int kPanelH = 280;
  RgbImage image(kPanelW * static_cast<int>(real_sets.size()), kPanelH + 30);
  const Rgb real_color{31, 119, 180};
  const Rgb fake_color{214, 39, 40};
  double max_gap = 0.0;
  for (std::size_t p = 0; p < real_sets.size(); ++p) {
    const auto dr = kde(real_sets[p], silverman_bandwidth(real_sets[p]), grid);
    const auto df = kde(fake_sets[p], silverman_bandwidth(fake_sets[p]), grid);
    double y_max = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      y_max = std::max({y_max, dr[i], df[i]});
      max_gap = std::max(max_gap, std::abs(dr[i] - df[i]));
    }
    const Curve curves[] = {{dr, real_color, false}, {df, fake_color, true}};
    const std::string title = p + 1 == real_sets.size() ? "MARGINAL" : "CLASS_" + std::to_string(p);
    const int x0 = kPanelW * static_cast<int>(p);
    draw_curve_panel(image, x0, 0, x0 + kPanelW, kPanelH, grid, curves, y_max * 1.1, title);
  }
  image.draw_line(12, kPanelH + 14, 42, kPanelH + 14, real_color, 2);
  image.draw_text(48, kPanelH + 10, "REAL", {60, 60, 60});
  for (int x = 100; x < 130; x += 14) image.draw_line(x, kPanelH + 14, x + 8, kPanelH + 14, fake_color, 2);
  image.draw_text(136, kPanelH + 10, "GENERATED", {60, 60, 60});
  write_png(image, png_path);
  return max_gap;
}

}  // namespace uacgan
