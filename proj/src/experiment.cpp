// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace uacgan {

namespace {

using nlohmann::json;

json to_json(const MoGSpec& s) {
  json comps = json::array();
  for (const auto& c : s.components) comps.push_back({c.mean, c.stddev});
  return {{"components", comps}, {"prior", s.prior}, {"variance_convention", s.variance_convention}};
}

json to_json(const StandaloneOptions& o) {
  return {{"steps", o.steps},
          {"batch", o.batch},
          {"learning_rate", o.learning_rate},
          {"ema_rate", o.ema_rate},
          {"marginal", to_string(o.strategy)},
          {"hidden", o.hidden},
          {"feature_dim", o.feature_dim},
          {"seed", o.seed},
          {"divergence_limit", o.divergence_limit}};
}

// Rejects keys of `j` that `schema` lacks, recursing into objects both share.
// Maps keyed by data (learning_rates) are left to the section parsers.
void check_known(const json& j, const json& schema, const std::string& prefix) {
  if (!j.is_object()) throw std::invalid_argument("config field '" + prefix + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!schema.contains(it.key())) throw std::invalid_argument("unknown config field '" + path + "'");
    const json& sub = schema.at(it.key());
    if (sub.is_object() && it.key() != "learning_rates") check_known(it.value(), sub, path);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("invalid value for config field '" + section + "." + key + "'");
  }
}

json::json_pointer pointer_of(const std::string& dotted) {
  std::string p;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const auto dot = dotted.find('.', start);
    const auto part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw std::invalid_argument("malformed config path '" + dotted + "'");
    p += "/" + part;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return json::json_pointer(p);
}

}  // namespace

ExperimentConfig default_experiment_config(const std::string& dataset) {
  ExperimentConfig c;
  c.dataset = dataset;
  if (const char* root = std::getenv("UACGAN_OUTPUT_ROOT"); root != nullptr && *root != '\0') c.output_dir = root;
  if (dataset == "mog") {
    c.train.steps = 10000;
    c.train.batch_size = 256;
    return c;
  }
  if (dataset != "mnist" && dataset != "mnist-5k" && dataset != "cifar10") {
    throw std::invalid_argument("unknown dataset '" + dataset + "' (expected mog, mnist, mnist-5k or cifar10)");
  }
  c.arch.preset = dataset == "cifar10" ? "cifar10-conv" : "mnist-conv";
  c.arch.hidden = 128;
  c.arch.feature_dim = 128;
  c.latent_dim = 100;
  c.train.batch_size = 64;
  c.image.epochs = 3;
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {{"dataset", c.dataset},
          {"train", to_json(c.train)},
          {"arch", to_json(c.arch)},
          {"latent_dim", c.latent_dim},
          {"mog", to_json(c.mog)},
          {"bench",
           {{"runs", c.bench.runs},
            {"samples_per_class", c.bench.samples_per_class},
            {"bandwidth_points", c.bench.bandwidth_points},
            {"plots", c.bench.plots}}},
          {"mine",
           {{"sampler", c.mine.sampler},
            {"rho", c.mine.rho},
            {"statistics", c.mine.statistics},
            {"standalone", to_json(c.mine.standalone)}}},
          {"image",
           {{"epochs", c.image.epochs},
            {"score_samples", c.image.score_samples},
            {"grid_rows", c.image.grid_rows},
            {"grid_cols", c.image.grid_cols},
            {"scorer", c.image.scorer}}},
          {"output_dir", c.output_dir},
          {"data_cache", c.data_cache}};
}

ExperimentConfig experiment_config_from_json(const json& j, ExperimentConfig c) {
  check_known(j, to_json(c), "");
  read(j, "dataset", c.dataset, "");
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
  if (j.contains("arch")) c.arch = arch_config_from_json(j.at("arch"), c.arch);
  read(j, "latent_dim", c.latent_dim, "");
  if (j.contains("mog")) {
    const json& m = j.at("mog");
    if (m.contains("components")) {
      c.mog.components.clear();
      try {
        for (const auto& comp : m.at("components")) {
          if (comp.size() != 2) throw std::invalid_argument("each component is [mean, scale]");
          c.mog.components.push_back({comp.at(0).get<double>(), comp.at(1).get<double>()});
        }
      } catch (const json::exception&) {
        throw std::invalid_argument("invalid value for config field 'mog.components'");
      }
      // A new component list without a prior gets the uniform one.
      if (!m.contains("prior")) {
        c.mog.prior.assign(c.mog.components.size(), 1.0 / static_cast<double>(c.mog.components.size()));
      }
    }
    read(m, "prior", c.mog.prior, "mog");
    read(m, "variance_convention", c.mog.variance_convention, "mog");
  }
  if (j.contains("bench")) {
    const json& b = j.at("bench");
    read(b, "runs", c.bench.runs, "bench");
    read(b, "samples_per_class", c.bench.samples_per_class, "bench");
    read(b, "bandwidth_points", c.bench.bandwidth_points, "bench");
    read(b, "plots", c.bench.plots, "bench");
  }
  if (j.contains("mine")) {
    const json& m = j.at("mine");
    read(m, "sampler", c.mine.sampler, "mine");
    read(m, "rho", c.mine.rho, "mine");
    read(m, "statistics", c.mine.statistics, "mine");
    if (m.contains("standalone")) {
      const json& s = m.at("standalone");
      auto& o = c.mine.standalone;
      read(s, "steps", o.steps, "mine.standalone");
      read(s, "batch", o.batch, "mine.standalone");
      read(s, "learning_rate", o.learning_rate, "mine.standalone");
      read(s, "ema_rate", o.ema_rate, "mine.standalone");
      if (s.contains("marginal")) o.strategy = parse_marginal_strategy(s.at("marginal").get<std::string>());
      read(s, "hidden", o.hidden, "mine.standalone");
      read(s, "feature_dim", o.feature_dim, "mine.standalone");
      read(s, "seed", o.seed, "mine.standalone");
      read(s, "divergence_limit", o.divergence_limit, "mine.standalone");
    }
  }
  if (j.contains("image")) {
    const json& im = j.at("image");
    read(im, "epochs", c.image.epochs, "image");
    read(im, "score_samples", c.image.score_samples, "image");
    read(im, "grid_rows", c.image.grid_rows, "image");
    read(im, "grid_cols", c.image.grid_cols, "image");
    read(im, "scorer", c.image.scorer, "image");
  }
  read(j, "output_dir", c.output_dir, "");
  read(j, "data_cache", c.data_cache, "");
  c.train.validate();
  c.mog.validate();
  if (c.latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (c.bench.runs < 1) throw std::invalid_argument("bench.runs must be >= 1");
  if (c.bench.samples_per_class < 2) throw std::invalid_argument("bench.samples_per_class must be >= 2");
  if (c.image.epochs < 0) throw std::invalid_argument("image.epochs must be >= 0");
  return c;
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigFileError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigFileError("malformed config file " + path.string() + ": " + e.what());
  }
}

ConfigOverride parse_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
  }
  return {assignment.substr(0, eq), assignment.substr(eq + 1)};
}

ExperimentConfig resolve_experiment_config(const std::optional<json>& file,
                                           const std::vector<ConfigOverride>& overrides) {
  std::string dataset = "mog";
  if (file && file->contains("dataset") && file->at("dataset").is_string()) dataset = file->at("dataset");
  for (const auto& [key, value] : overrides) {
    if (key == "dataset") dataset = value;
  }
  const ExperimentConfig defaults = default_experiment_config(dataset);
  json merged = to_json(defaults);
  if (file) {
    check_known(*file, merged, "");
    merged.merge_patch(*file);
  }
  for (const auto& [key, value] : overrides) {
    const auto ptr = pointer_of(key);
    if (!merged.contains(ptr)) throw std::invalid_argument("unknown config field '" + key + "'");
    json& slot = merged[ptr];
    if (slot.is_string()) {
      slot = value;
      continue;
    }
    try {
      slot = json::parse(value);
    } catch (const json::parse_error&) {
      throw std::invalid_argument("invalid value '" + value + "' for config field '" + key + "'");
    }
  }
  return experiment_config_from_json(merged, defaults);
}

std::string experiment_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(to_json(c))));
  return buf;
}

std::filesystem::path prepare_run_dir(const ExperimentConfig& c, const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(c.output_dir) / name;
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "config.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (dir / "config.json").string());
  out << to_json(c).dump(2) << '\n';
  return dir;
}

}  // namespace uacgan
