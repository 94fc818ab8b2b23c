// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

// uacgan: batch front end for training, benchmarks, scoring and checks.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error. Failures print a
// one-line JSON record {"error": {...}} on stderr.

#include "uacgan/checkpoint.hpp"
#include "uacgan/experiment.hpp"
#include "uacgan/imagebench.hpp"
#include "uacgan/mine.hpp"
#include "uacgan/oracle.hpp"
#include "uacgan/synthbench.hpp"
#include "uacgan/trainer.hpp"
#include "uacgan/verify.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace uacgan;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Options shared by the subcommands that take an experiment config.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<ConfigOverride> named;  // from dedicated flags, applied after --set
  std::string run_name;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "JSON experiment config");
    app->add_option("--set", sets, "Override a config field, e.g. --set train.lambda_mi=0.5 (repeatable)");
    app->add_option("--name", run_name, "Run directory name under output_dir");
  }
};

// Binds a flag to a config path; the override only exists if the flag is given.
void bind(CLI::App* app, ConfigFlags& flags, const std::string& name, const std::string& path,
          const std::string& help) {
  app->add_option_function<std::string>(
      name, [&flags, path](const std::string& v) { flags.named.emplace_back(path, v); }, help);
}

void bind_switch(CLI::App* app, ConfigFlags& flags, const std::string& name, const std::string& path,
                 const std::string& help) {
  app->add_flag_callback(name, [&flags, path] { flags.named.emplace_back(path, "true"); }, help);
}

ExperimentConfig resolve(const ConfigFlags& flags) {
  try {
    std::optional<json> file;
    if (!flags.config_path.empty()) file = read_config_file(flags.config_path);
    std::vector<ConfigOverride> overrides;
    for (const auto& s : flags.sets) overrides.push_back(parse_override(s));
    overrides.insert(overrides.end(), flags.named.begin(), flags.named.end());
    return resolve_experiment_config(file, overrides);
  } catch (const ConfigFileError& e) {
    throw UsageError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string run_name(const ConfigFlags& flags, const std::string& prefix, const ExperimentConfig& c) {
  if (!flags.run_name.empty()) return flags.run_name;
  return prefix + "_" + experiment_hash(c).substr(0, 8);
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::optional<std::filesystem::path> cache_of(const ExperimentConfig& c) {
  if (c.data_cache.empty()) return std::nullopt;
  return std::filesystem::path(c.data_cache);
}

LatentSpec latent_of(const ExperimentConfig& c) { return LatentSpec{c.latent_dim}; }

// ---- train ------------------------------------------------------------------

int cmd_train(const ConfigFlags& flags, const std::string& resume) {
  ExperimentConfig c = resolve(flags);
  std::unique_ptr<DataSource> data;
  if (c.dataset == "mog") {
    data = std::make_unique<MoGDataSource>(c.mog, c.train.seed);
  } else {
    ImageDataset d = load_dataset(c.dataset, "train", cache_of(c));
    const int k = d.num_classes;
    if (c.image.epochs > 0) c.train.steps = c.image.epochs * static_cast<int>(d.size() / c.train.batch_size);
    data = std::make_unique<InMemoryDataSource>(std::move(d.images), std::move(d.labels), d.shape,
                                                LabelSpec::uniform(k), c.train.seed);
  }
  const auto dir = prepare_run_dir(c, run_name(flags, "train_" + to_string(c.train.objective) + "_" + c.dataset, c));
  FitOptions opt;
  opt.run_dir = dir;
  if (!resume.empty()) opt.resume_from = resume;
  const std::int64_t every = std::max(1, c.train.steps / 20);
  opt.on_step = [&](std::int64_t s, const LossReport& r) {
    if (s % every == 0) {
      std::fprintf(stderr, "step %lld/%d  loss_D %.4f  loss_C %.4f  loss_G %.4f\n", static_cast<long long>(s),
                   c.train.steps, r.loss_D, r.loss_C, r.loss_G);
    }
  };
  FitResult result = fit(c.train, c.arch, latent_of(c), *data, opt);
  save_checkpoint(result.state, dir / "final.ckpt");

  json summary = {{"run_dir", dir.string()}, {"steps", result.state.step}, {"checkpoint", (dir / "final.ckpt").string()}};
  GeneratorNet& g = *result.state.nets.generator;
  if (c.dataset == "mog") {
    const auto real = reference_sample(c.mog, c.bench.samples_per_class, c.train.seed);
    std::vector<double> pooled;
    for (const auto& r : real) pooled.insert(pooled.end(), r.begin(), r.end());
    const double bw = median_pairwise_distance(pooled, static_cast<std::size_t>(c.bench.bandwidth_points));
    Rng rng(c.train.seed, "eval.z");
    const auto fake = generate_per_class(g, c.mog.num_classes(), c.bench.samples_per_class, rng);
    const RunMMD m = score_samples(real, fake, bw);
    summary["bandwidth"] = bw;
    summary["mmd_per_class"] = m.per_class;
    summary["mmd_marginal"] = m.marginal;
    if (c.bench.plots) emit_density_plot(real, fake, dir / "density.png");
  } else {
    json grids = json::array();
    for (int k = 0; k < g.num_classes(); ++k) {
      const auto png = dir / ("grid_class" + std::to_string(k) + ".png");
      const GridResult gr = class_grid(g, k, c.image.grid_rows, c.image.grid_cols, c.train.seed, png, log_line);
      grids.push_back({{"class", k}, {"png", png.string()}, {"variance", gr.variance}, {"collapsed", gr.collapsed}});
    }
    summary["grids"] = grids;
  }
  write_json(dir / "summary.json", summary);
  std::cout << summary.dump() << '\n';
  return 0;
}

// ---- bench-mog --------------------------------------------------------------

int cmd_bench_mog(const ConfigFlags& flags, bool control) {
  const ExperimentConfig c = resolve(flags);
  if (c.dataset != "mog") throw UsageError("bench-mog needs dataset 'mog', got '" + c.dataset + "'");
  const std::string kind = control ? "real" : to_string(c.train.objective);
  const auto dir = prepare_run_dir(c, run_name(flags, "bench-mog_" + kind, c));
  MoGBenchOptions o;
  o.spec = c.mog;
  o.runs = c.bench.runs;
  o.seed = c.train.seed;
  o.samples_per_class = c.bench.samples_per_class;
  o.bandwidth_points = c.bench.bandwidth_points;
  o.out_dir = dir;
  o.plots = c.bench.plots;
  o.log = log_line;
  const MMDReport report =
      control ? real_vs_real_control(o) : run_mog_benchmark(c.train.objective, c.train, c.arch, latent_of(c), o);
  write_mmd_csv(report, dir / "mmd.csv");
  json j = to_json(report);
  j["run_dir"] = dir.string();
  write_json(dir / "report.json", j);

  std::printf("%-10s %12s %12s %12s\n", "class", "median", "mean", "std");
  for (std::size_t k = 0; k < report.per_class.size(); ++k) {
    const auto& s = report.per_class[k];
    std::printf("Class_%-4zu %12.6g %12.6g %12.6g\n", k, s.median, s.mean, s.stddev);
  }
  std::printf("%-10s %12.6g %12.6g %12.6g\n", "marginal", report.marginal.median, report.marginal.mean,
              report.marginal.stddev);
  std::printf("bandwidth %.6g, csv %s\n", report.bandwidth, (dir / "mmd.csv").c_str());
  return report.complete ? 0 : 1;
}

// ---- estimate-mi ------------------------------------------------------------

int cmd_estimate_mi(const ConfigFlags& flags) {
  const ExperimentConfig c = resolve(flags);
  const auto& m = c.mine;
  JointSampler sampler;
  std::optional<double> target;
  if (m.sampler == "gaussian" || m.sampler == "independent") {
    const double rho = m.sampler == "gaussian" ? m.rho : 0.0;
    if (!(std::abs(rho) < 1.0)) throw UsageError("mine.rho must lie in (-1, 1)");
    sampler = gaussian_pair_sampler(rho);
    target = oracle::gaussian_mi(rho);
  } else if (m.sampler == "sign-bucket") {
    if (!(std::abs(m.rho) < 1.0)) throw UsageError("mine.rho must lie in (-1, 1)");
    sampler = sign_bucket_sampler(m.rho);
    target = oracle::sign_bucket_mi(m.rho);
  } else if (m.sampler == "mog") {
    sampler = mog_joint_sampler(c.mog);
    target = oracle::mixture_mutual_information(c.mog.resolved(), c.mog.prior);
  } else {
    throw UsageError("unknown mine.sampler '" + m.sampler + "' (expected gaussian, independent, sign-bucket or mog)");
  }
  const auto dir = prepare_run_dir(c, run_name(flags, "estimate-mi_" + m.sampler, c));
  const StandaloneResult r = estimate_mi_standalone(sampler, m.statistics, m.standalone);
  {
    std::ofstream out(dir / "estimates.csv", std::ios::trunc);
    out << "step,estimate\n";
    char buf[32];
    for (std::size_t s = 0; s < r.trace.size(); ++s) {
      std::snprintf(buf, sizeof(buf), "%.17g", r.trace[s]);
      out << s + 1 << ',' << buf << '\n';
    }
  }
  json summary = {{"estimate", r.estimate}, {"csv", (dir / "estimates.csv").string()}};
  if (target) summary["target"] = *target;
  write_json(dir / "summary.json", summary);
  std::cout << summary.dump() << '\n';
  return 0;
}

// ---- score / grid -----------------------------------------------------------

struct LoadedGenerator {
  TrainState state;
  std::string dataset;
};

LoadedGenerator load_generator(const std::string& checkpoint, const ExperimentConfig& c, bool untrained) {
  if (untrained) {
    ImageDataset probe = load_dataset(c.dataset, "test", cache_of(c));
    return {make_train_state(c.train, c.arch, probe.shape, LabelSpec::uniform(probe.num_classes), latent_of(c)),
            c.dataset};
  }
  if (checkpoint.empty()) throw UsageError("--checkpoint is required (or pass --untrained)");
  if (!std::filesystem::exists(checkpoint)) throw UsageError("checkpoint not found: " + checkpoint);
  return {restore_train_state(checkpoint), c.dataset};
}

int cmd_score(const ConfigFlags& flags, const std::string& checkpoint, bool untrained, bool real_only) {
  const ExperimentConfig c = resolve(flags);
  if (c.dataset == "mog") throw UsageError("score works on image datasets; use bench-mog for the mixture");
  std::optional<std::filesystem::path> weights;
  if (!c.image.scorer.empty()) weights = c.image.scorer;
  auto extractor = load_extractor(c.dataset, weights);
  const ImageDataset real = load_dataset(c.dataset, "train", cache_of(c));
  const auto dir = prepare_run_dir(c, run_name(flags, "score_" + c.dataset, c));
  json j;
  j["self_fid"] = self_fid(real, *extractor, c.train.seed);
  if (!real_only) {
    LoadedGenerator lg = load_generator(checkpoint, c, untrained);
    const ScoreReport r = score_generator(*lg.state.nets.generator, lg.state.nets.labels, real, *extractor,
                                          c.image.score_samples, c.train.seed);
    j.update(to_json(r));
    j["checkpoint"] = untrained ? std::string("untrained") : checkpoint;
  }
  write_json(dir / "score.json", j);
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_grid(const ConfigFlags& flags, const std::string& checkpoint, std::vector<int> classes) {
  const ExperimentConfig c = resolve(flags);
  if (c.dataset == "mog") throw UsageError("grid works on image datasets");
  LoadedGenerator lg = load_generator(checkpoint, c, false);
  GeneratorNet& g = *lg.state.nets.generator;
  if (classes.empty()) {
    for (int k = 0; k < g.num_classes(); ++k) classes.push_back(k);
  }
  const auto dir = prepare_run_dir(c, run_name(flags, "grid_" + c.dataset, c));
  json out = json::array();
  for (int k : classes) {
    if (k < 0 || k >= g.num_classes()) {
      throw UsageError("class " + std::to_string(k) + " outside 0.." + std::to_string(g.num_classes() - 1));
    }
    const auto png = dir / ("grid_class" + std::to_string(k) + ".png");
    const GridResult r = class_grid(g, k, c.image.grid_rows, c.image.grid_cols, c.train.seed, png, log_line);
    out.push_back({{"class", k}, {"png", png.string()}, {"variance", r.variance}, {"collapsed", r.collapsed}});
  }
  std::cout << out.dump() << '\n';
  return 0;
}

// ---- verify-theory ----------------------------------------------------------

int cmd_verify_theory(std::uint64_t seed, int instances) {
  const auto results = run_theory_suite(seed, instances);
  bool all = true;
  std::printf("%-42s %-5s %10s %10s %9s %8s\n", "check", "pass", "worst", "tolerance", "instances", "seconds");
  for (const auto& r : results) {
    std::printf("%-42s %-5s %10.3g %10.3g %9d %8.3f\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.worst,
                r.tolerance, r.instances, r.seconds);
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

// ---- data -------------------------------------------------------------------

int cmd_fetch(const std::string& dataset, const std::string& cache) {
  if (dataset != "mnist" && dataset != "cifar10") throw UsageError("fetch knows mnist and cifar10");
  const std::filesystem::path dir = cache.empty() ? data_cache_dir() : std::filesystem::path(cache);
  for (const auto& f : remote_files(dataset)) {
    log_line("fetching " + f.url);
    std::cout << fetch(f, dir).string() << '\n';
  }
  return 0;
}

int cmd_train_scorer(const std::string& dataset, const std::string& output, int epochs, std::uint64_t seed,
                     const std::string& cache) {
  std::optional<std::filesystem::path> dir;
  if (!cache.empty()) dir = cache;
  const ImageDataset train = load_dataset(dataset, "train", dir);
  const ImageDataset test = load_dataset(dataset, "test", dir);
  MnistScorer scorer(seed);
  const auto report = scorer.train(train, test, epochs, seed);
  if (auto parent = std::filesystem::path(output).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  scorer.save(output);
  json j = {{"output", output},
            {"sha256", sha256_file(output)},
            {"train_accuracy", report.train_accuracy},
            {"test_accuracy", report.test_accuracy}};
  std::cout << j.dump() << '\n';
  return 0;
}

void print_error(const char* kind, const std::string& subcommand, const std::string& message) {
  json e = {{"error", {{"kind", kind}, {"subcommand", subcommand}, {"message", message}}}};
  std::cerr << e.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uacgan: conditional GAN experiments (AC-GAN, TAC-GAN, UAC-GAN)"};
  app.require_subcommand(1);
  app.footer(
      "Config precedence: command-line flags > --config file > built-in defaults.\n"
      "Environment: UACGAN_DATA_DIR (dataset cache), UACGAN_OUTPUT_ROOT (default output_dir),\n"
      "UACGAN_SCORER (MNIST scorer weights).\n"
      "Exit codes: 0 success, 1 runtime failure, 2 usage error.");

  ConfigFlags train_flags, bench_flags, mi_flags, score_flags, grid_flags;

  auto* train = app.add_subcommand("train", "Train one model; writes metrics, checkpoints and plots");
  train_flags.add_to(train);
  std::string resume;
  bind(train, train_flags, "--kind", "train.objective", "ac | tac | uac");
  bind(train, train_flags, "--dataset", "dataset", "mog | mnist | mnist-5k | cifar10");
  bind(train, train_flags, "--steps", "train.steps", "Generator updates");
  bind(train, train_flags, "--epochs", "image.epochs", "Whole epochs (image datasets; overrides --steps)");
  bind(train, train_flags, "--seed", "train.seed", "Master seed");
  bind(train, train_flags, "--lambda-mi", "train.lambda_mi", "MI weight (uac)");
  bind(train, train_flags, "--out", "output_dir", "Output root");
  bind_switch(train, train_flags, "--variance-convention", "mog.variance_convention",
              "Read MoG scales as variances");
  train->add_option("--resume", resume, "Checkpoint to resume from");

  auto* bench = app.add_subcommand("bench-mog", "Mixture-of-Gaussians benchmark over several seeds");
  bench_flags.add_to(bench);
  bool control = false;
  bind(bench, bench_flags, "--kind", "train.objective", "ac | tac | uac");
  bind(bench, bench_flags, "--runs", "bench.runs", "Number of seeds");
  bind(bench, bench_flags, "--steps", "train.steps", "Generator updates per run");
  bind(bench, bench_flags, "--seed", "train.seed", "Seed of run 0 (run r uses seed + r)");
  bind(bench, bench_flags, "--out", "output_dir", "Output root");
  bind_switch(bench, bench_flags, "--variance-convention", "mog.variance_convention",
              "Read MoG scales as variances");
  bench->add_flag("--real-vs-real", control, "Score a second real sample instead of a generator");

  auto* mi = app.add_subcommand("estimate-mi", "Standalone MINE estimate; CSV of (step, estimate)");
  mi_flags.add_to(mi);
  bind(mi, mi_flags, "--sampler", "mine.sampler", "gaussian | independent | sign-bucket | mog");
  bind(mi, mi_flags, "--rho", "mine.rho", "Correlation (gaussian and sign-bucket samplers)");
  bind(mi, mi_flags, "--statistics", "mine.statistics", "projection-T | concat-T");
  bind(mi, mi_flags, "--steps", "mine.standalone.steps", "Training steps");
  bind(mi, mi_flags, "--seed", "mine.standalone.seed", "Seed");
  bind(mi, mi_flags, "--out", "output_dir", "Output root");

  auto* score = app.add_subcommand("score", "Inception score and FID of a generator checkpoint");
  score_flags.add_to(score);
  std::string score_ckpt;
  bool untrained = false;
  bool real_only = false;
  bind(score, score_flags, "--dataset", "dataset", "mnist | mnist-5k | cifar10");
  bind(score, score_flags, "--out", "output_dir", "Output root");
  score->add_option("--checkpoint", score_ckpt, "Checkpoint written by train");
  score->add_flag("--untrained", untrained, "Score a freshly initialized generator");
  score->add_flag("--real-only", real_only, "Only the self-FID of the real training set");

  auto* grid = app.add_subcommand("grid", "Single-class sample grids with a collapse flag");
  grid_flags.add_to(grid);
  std::string grid_ckpt;
  std::vector<int> classes;
  bind(grid, grid_flags, "--dataset", "dataset", "mnist | mnist-5k | cifar10");
  bind(grid, grid_flags, "--out", "output_dir", "Output root");
  grid->add_option("--checkpoint", grid_ckpt, "Checkpoint written by train")->required();
  grid->add_option("--class", classes, "Classes to draw (default: all)");

  auto* verify = app.add_subcommand("verify-theory", "Exhaustive identity checks on random discrete toys");
  std::uint64_t verify_seed = 0;
  int instances = 1000;
  verify->add_option("--seed", verify_seed, "Seed of the random instances");
  verify->add_option("--instances", instances, "Instances per check")->check(CLI::PositiveNumber);

  auto* fetch_cmd = app.add_subcommand("fetch", "Download and verify a dataset into the cache");
  std::string fetch_dataset;
  std::string fetch_cache;
  fetch_cmd->add_option("--dataset", fetch_dataset, "mnist | cifar10")->required();
  fetch_cmd->add_option("--data-dir", fetch_cache, "Cache directory (default $UACGAN_DATA_DIR)");

  auto* scorer_cmd = app.add_subcommand("train-scorer", "Train the MNIST feature extractor used by score");
  std::string scorer_dataset = "mnist-5k";
  std::string scorer_out = default_scorer_path().string();
  int scorer_epochs = 30;
  std::uint64_t scorer_seed = 0;
  std::string scorer_cache;
  scorer_cmd->add_option("--dataset", scorer_dataset, "mnist | mnist-5k");
  scorer_cmd->add_option("--output", scorer_out, "Weights file");
  scorer_cmd->add_option("--epochs", scorer_epochs, "Epochs")->check(CLI::PositiveNumber);
  scorer_cmd->add_option("--seed", scorer_seed, "Seed");
  scorer_cmd->add_option("--data-dir", scorer_cache, "Cache directory");

  if (argc > 1 && argv[1][0] != '-') {
    if (app.get_subcommand_no_throw(argv[1]) == nullptr) {
      print_error("usage", argv[1], std::string("unknown subcommand '") + argv[1] + "'; see --help");
      return 2;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) {
      print_error("usage", "", e.what());
      return 2;
    }
    return 0;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    if (sub == "train") return cmd_train(train_flags, resume);
    if (sub == "bench-mog") return cmd_bench_mog(bench_flags, control);
    if (sub == "estimate-mi") return cmd_estimate_mi(mi_flags);
    if (sub == "score") return cmd_score(score_flags, score_ckpt, untrained, real_only);
    if (sub == "grid") return cmd_grid(grid_flags, grid_ckpt, classes);
    if (sub == "verify-theory") return cmd_verify_theory(verify_seed, instances);
    if (sub == "fetch") return cmd_fetch(fetch_dataset, fetch_cache);
    if (sub == "train-scorer") return cmd_train_scorer(scorer_dataset, scorer_out, scorer_epochs, scorer_seed, scorer_cache);
    print_error("usage", sub, "unknown subcommand");
    return 2;
  } catch (const UsageError& e) {
    print_error("usage", sub, e.what());
    return 2;
  } catch (const TrainingAborted& e) {
    print_error("training_aborted", sub, e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("runtime", sub, e.what());
    return 1;
  }
}
