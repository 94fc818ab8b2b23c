// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

// Config layering and the command-line tool, run as a subprocess.

#include "uacgan/experiment.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>

#ifndef UACGAN_CLI_PATH
#error "UACGAN_CLI_PATH must point at the uacgan executable"
#endif

namespace uacgan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("uacgan_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Outcome {
  int exit_code = -1;
  std::string output;  // stdout then stderr, interleaved
};

Outcome run_cli(const std::string& args) {
  const std::string cmd = std::string(UACGAN_CLI_PATH) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return o;
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe)) o.output += buf;
  const int status = pclose(pipe);
  o.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

TEST(ExperimentConfig, JsonRoundTripAndHashStability) {
  for (const char* dataset : {"mog", "mnist-5k", "cifar10"}) {
    const ExperimentConfig c = default_experiment_config(dataset);
    const ExperimentConfig back = experiment_config_from_json(to_json(c), default_experiment_config("mog"));
    EXPECT_EQ(to_json(back), to_json(c)) << dataset;
    EXPECT_EQ(experiment_hash(back), experiment_hash(c));
  }
  EXPECT_NE(experiment_hash(default_experiment_config("mog")), experiment_hash(default_experiment_config("mnist")));
  EXPECT_THROW(default_experiment_config("svhn"), std::invalid_argument);
}

TEST(ExperimentConfig, UnknownFieldIsNamed) {
  try {
    experiment_config_from_json({{"train", {{"stepz", 3}}}}, default_experiment_config());
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("train.stepz"), std::string::npos) << e.what();
  }
  EXPECT_THROW(resolve_experiment_config(std::nullopt, {{"bench.nope", "1"}}), std::invalid_argument);
  EXPECT_THROW(parse_override("no_equals_sign"), std::invalid_argument);
  EXPECT_EQ(parse_override("a.b=c=d"), (ConfigOverride{"a.b", "c=d"}));
}

TEST(ExperimentConfig, DatasetSelectsDefaults) {
  const auto from_file = resolve_experiment_config(json{{"dataset", "mnist-5k"}}, {});
  EXPECT_EQ(from_file.latent_dim, 100);
  EXPECT_EQ(from_file.arch.preset, "mnist-conv");
  const auto flag_wins = resolve_experiment_config(json{{"dataset", "mnist-5k"}}, {{"dataset", "mog"}});
  EXPECT_EQ(flag_wins.latent_dim, 2);
  EXPECT_EQ(flag_wins.arch.preset, "mog-mlp");
}

// Fields with their own generator of random valid values.
struct Slot {
  const char* path;
  json (*draw)(Rng&);
};

const std::vector<Slot>& slots() {
  static const std::vector<Slot> s = {
      {"train.steps", [](Rng& r) { return json(1 + r.uniform_int(5000)); }},
      {"train.seed", [](Rng& r) { return json(r.uniform_int(1000)); }},
      {"train.lambda_mi", [](Rng& r) { return json(r.uniform() * 2); }},
      {"train.objective", [](Rng& r) { return json(std::vector<std::string>{"ac", "tac", "uac"}[r.uniform_int(3)]); }},
      {"bench.runs", [](Rng& r) { return json(1 + r.uniform_int(9)); }},
      {"mine.rho", [](Rng& r) { return json(r.uniform() * 1.8 - 0.9); }},
      {"output_dir", [](Rng& r) { return json("dir" + std::to_string(r.uniform_int(100))); }},
  };
  return s;
}

json::json_pointer pointer(const std::string& dotted) {
  std::string p = "/" + dotted;
  for (char& ch : p) {
    if (ch == '.') ch = '/';
  }
  return json::json_pointer(p);
}

json get_path(const json& j, const std::string& path) { return j.at(pointer(path)); }

void set_path(json& j, const std::string& path, const json& v) { j[pointer(path)] = v; }

TEST(ExperimentConfig, FlagsBeatFileBeatDefaults) {
  Rng rng(7);
  const json defaults = to_json(default_experiment_config("mog"));
  for (int trial = 0; trial < 300; ++trial) {
    json file = json::object();
    std::vector<ConfigOverride> overrides;
    std::map<std::string, json> expected;
    for (const auto& slot : slots()) {
      expected[slot.path] = get_path(defaults, slot.path);
      if (rng.uniform() < 0.5) {
        const json v = slot.draw(rng);
        set_path(file, slot.path, v);
        expected[slot.path] = v;
      }
      // Zero to two overrides per slot; the last one wins.
      for (int k = rng.uniform_int(3); k > 0; --k) {
        const json v = slot.draw(rng);
        overrides.emplace_back(slot.path, v.is_string() ? v.get<std::string>() : v.dump());
        expected[slot.path] = v;
      }
    }
    // Shuffle overrides across slots; order within a slot is preserved.
    std::stable_sort(overrides.begin(), overrides.end(),
                     [](const ConfigOverride& a, const ConfigOverride& b) { return a.first.size() < b.first.size(); });
    const json got = to_json(resolve_experiment_config(file, overrides));
    for (const auto& [path, v] : expected) {
      if (v.is_number_float()) {
        ASSERT_DOUBLE_EQ(get_path(got, path).get<double>(), v.get<double>()) << path << " trial " << trial;
      } else {
        ASSERT_EQ(get_path(got, path), v) << path << " trial " << trial;
      }
    }
  }
}

TEST(Cli, VerifyTheoryPasses) {
  const Outcome o = run_cli("verify-theory --instances 200");
  EXPECT_EQ(o.exit_code, 0) << o.output;
  EXPECT_NE(o.output.find("PASS"), std::string::npos);
  EXPECT_EQ(o.output.find("FAIL"), std::string::npos);
}

TEST(Cli, MissingConfigExitsTwoWithPath) {
  const Outcome o = run_cli("train --config /nonexistent/uacgan/cfg.json");
  EXPECT_EQ(o.exit_code, 2);
  EXPECT_NE(o.output.find("/nonexistent/uacgan/cfg.json"), std::string::npos) << o.output;
  EXPECT_NE(o.output.find("\"error\""), std::string::npos);
}

TEST(Cli, UnknownFieldAndSubcommandExitTwo) {
  const Outcome field = run_cli("train --set train.stepz=3");
  EXPECT_EQ(field.exit_code, 2);
  EXPECT_NE(field.output.find("train.stepz"), std::string::npos) << field.output;
  const Outcome sub = run_cli("launch-rockets");
  EXPECT_EQ(sub.exit_code, 2);
  EXPECT_NE(sub.output.find("launch-rockets"), std::string::npos) << sub.output;
}

TEST(Cli, BenchMogWritesFiveRowsPerClass) {
  const fs::path out = scratch("bench");
  const Outcome o = run_cli("bench-mog --kind ac --runs 5 --steps 2 --out " + out.string() +
                            " --name b --set bench.samples_per_class=50 --set bench.plots=false");
  ASSERT_EQ(o.exit_code, 0) << o.output;
  std::ifstream in(out / "b" / "mmd.csv");
  std::string line;
  std::getline(in, line);
  std::map<std::string, int> per_class;
  while (std::getline(in, line)) {
    std::stringstream s(line);
    std::string kind, run, seed, cls;
    std::getline(s, kind, ',');
    std::getline(s, run, ',');
    std::getline(s, seed, ',');
    std::getline(s, cls, ',');
    EXPECT_EQ(kind, "ac");
    ++per_class[cls];
  }
  EXPECT_EQ(per_class.size(), 4u);
  for (const auto& [cls, n] : per_class) EXPECT_EQ(n, 5) << cls;
  EXPECT_TRUE(fs::exists(out / "b" / "config.json"));
  EXPECT_TRUE(fs::exists(out / "b" / "report.json"));
}

TEST(Cli, TrainRunDirectoryReproducesMetrics) {
  const fs::path out = scratch("train");
  const std::string common = "train --kind uac --steps 3 --out " + out.string() + " --set bench.samples_per_class=50";
  ASSERT_EQ(run_cli(common + " --name a").exit_code, 0);
  // Re-run from the stored snapshot only.
  const Outcome again = run_cli("train --config " + (out / "a" / "config.json").string() + " --name b");
  ASSERT_EQ(again.exit_code, 0) << again.output;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  EXPECT_EQ(slurp(out / "a" / "metrics.csv"), slurp(out / "b" / "metrics.csv"));
  EXPECT_FALSE(slurp(out / "a" / "metrics.csv").empty());
  EXPECT_TRUE(fs::exists(out / "a" / "final.ckpt"));
}

}  // namespace
}  // namespace uacgan
