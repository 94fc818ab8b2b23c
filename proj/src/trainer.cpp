// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/trainer.hpp"

#include "uacgan/checkpoint.hpp"

#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace uacgan {

namespace {

using nlohmann::json;

const char* const kNetworkNames[] = {"G", "D", "C", "Cmi", "T", "DY"};

// Appends lines to a file from a background thread, in submission order.
class AsyncLineWriter {
 public:
  AsyncLineWriter(const std::filesystem::path& path, bool append)
      : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    worker_ = std::thread([this] { run(); });
  }
  ~AsyncLineWriter() {
    {
      std::lock_guard lock(mu_);
      done_ = true;
    }
    cv_.notify_one();
    worker_.join();
  }
  AsyncLineWriter(const AsyncLineWriter&) = delete;
  AsyncLineWriter& operator=(const AsyncLineWriter&) = delete;

  void push(std::string line) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(line));
    }
    cv_.notify_one();
  }

 private:
  void run() {
    std::unique_lock lock(mu_);
    for (;;) {
      cv_.wait(lock, [this] { return done_ || !queue_.empty(); });
      while (!queue_.empty()) {
        std::string line = std::move(queue_.front());
        queue_.pop_front();
        lock.unlock();
        out_ << line << '\n';
        lock.lock();
      }
      if (done_) break;
    }
    out_.flush();
  }

  std::ofstream out_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  bool done_ = false;
  std::thread worker_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

// Keeps the header and rows whose leading step is <= `step`.
void truncate_csv(const std::filesystem::path& path, std::int64_t step) {
  std::ifstream in(path);
  if (!in) return;
  std::vector<std::string> keep;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header || std::stoll(line.substr(0, line.find(','))) <= step) keep.push_back(line);
    header = false;
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
}

void freeze_all(NetworkBundle& n) {
  for (auto& [name, m] : n.modules()) m->set_trainable(false);
}

nn::Module& module_of(NetworkBundle& n, const std::string& name) {
  auto mods = n.modules();
  auto it = mods.find(name);
  if (it == mods.end()) throw std::logic_error("no network named " + name);
  return *it->second;
}

// Only `name` is trainable while its loss is built and descended.
void descend(TrainState& st, const std::string& name, const ag::Var& loss) {
  auto& opt = *st.optimizers.at(name);
  opt.zero_grad();
  ag::backward(loss);
  opt.step();
  if (st.after_update) st.after_update(name);
}

void only_trainable(NetworkBundle& n, const std::string& name) {
  freeze_all(n);
  module_of(n, name).set_trainable(true);
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw std::invalid_argument(std::string("unknown ") + what + " field '" + it.key() + "'");
  }
}

json trajectory_config(const TrainConfig& c, const NetworkBundle& n) {
  json j = to_json(c);
  // Run length and logging cadence do not affect the trajectory.
  j.erase("steps");
  j.erase("checkpoint_every");
  j.erase("mi_log_every");
  json labels = {{"num_classes", n.labels.num_classes}, {"prior", n.labels.prior}};
  return {{"train", j},
          {"arch", to_json(n.arch)},
          {"shape", {n.data_shape.channels, n.data_shape.height, n.data_shape.width}},
          {"labels", labels},
          {"latent_dim", n.latent.dim}};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json report_to_json(const LossReport& r) {
  json j = {{"term_a", r.term_a}, {"term_b", r.term_b}, {"term_c", r.term_c},
            {"loss_D", r.loss_D}, {"loss_G", r.loss_G}, {"loss_C", r.loss_C}};
  if (r.term_d) j["term_d"] = *r.term_d;
  if (r.v_mine) j["v_mine"] = *r.v_mine;
  if (r.loss_Cmi) j["loss_Cmi"] = *r.loss_Cmi;
  if (r.loss_T) j["loss_T"] = *r.loss_T;
  if (r.loss_DY) j["loss_DY"] = *r.loss_DY;
  return j;
}

LossReport report_from_json(const json& j) {
  LossReport r;
  r.term_a = j.at("term_a");
  r.term_b = j.at("term_b");
  r.term_c = j.at("term_c");
  r.loss_D = j.at("loss_D");
  r.loss_G = j.at("loss_G");
  r.loss_C = j.at("loss_C");
  if (j.contains("term_d")) r.term_d = j.at("term_d").get<double>();
  if (j.contains("v_mine")) r.v_mine = j.at("v_mine").get<double>();
  if (j.contains("loss_Cmi")) r.loss_Cmi = j.at("loss_Cmi").get<double>();
  if (j.contains("loss_T")) r.loss_T = j.at("loss_T").get<double>();
  if (j.contains("loss_DY")) r.loss_DY = j.at("loss_DY").get<double>();
  return r;
}

}  // namespace

void TrainConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
  for (const char* name : kNetworkNames) {
    auto it = learning_rates.find(name);
    if (it == learning_rates.end()) throw std::invalid_argument(std::string("missing learning rate for ") + name);
    if (!(it->second > 0.0)) throw std::invalid_argument(std::string("learning rate for ") + name + " must be > 0");
  }
  for (const auto& [name, lr] : learning_rates) {
    bool known = false;
    for (const char* n : kNetworkNames) known = known || name == n;
    if (!known) throw std::invalid_argument("learning rate for unknown network '" + name + "'");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(lambda_mi >= 0.0)) throw std::invalid_argument("lambda_mi must be >= 0");
  if (!(mi_decay > 0.0 && mi_decay <= 1.0)) throw std::invalid_argument("mi_decay must lie in (0, 1]");
  if (n_critic < 1) throw std::invalid_argument("n_critic must be >= 1");
  if (!(ema_rate > 0.0 && ema_rate <= 1.0)) throw std::invalid_argument("ema_rate must lie in (0, 1]");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
  if (mi_log_every < 1) throw std::invalid_argument("mi_log_every must be >= 1");
}

ComposeOptions TrainConfig::compose_options(std::int64_t step) const {
  ComposeOptions o;
  o.lambda_mi = mi_decay == 1.0 ? lambda_mi : lambda_mi * std::pow(mi_decay, static_cast<double>(step));
  o.classifier_on_fake = classifier_on_fake;
  return o;
}

json to_json(const TrainConfig& c) {
  return {{"objective", to_string(c.objective)},
          {"steps", c.steps},
          {"batch_size", c.batch_size},
          {"learning_rates", c.learning_rates},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"lambda_mi", c.lambda_mi},
          {"mi_decay", c.mi_decay},
          {"n_critic", c.n_critic},
          {"seed", c.seed},
          {"ema_rate", c.ema_rate},
          {"marginal", to_string(c.marginal)},
          {"classifier_on_fake", c.classifier_on_fake},
          {"saturating", c.saturating},
          {"checkpoint_every", c.checkpoint_every},
          {"mi_log_every", c.mi_log_every}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  reject_unknown(j,
                 {"objective", "steps", "batch_size", "learning_rates", "beta1", "beta2", "lambda_mi", "mi_decay",
                  "n_critic", "seed", "ema_rate", "marginal", "classifier_on_fake", "saturating",
                  "checkpoint_every", "mi_log_every"},
                 "train");
  try {
    if (j.contains("objective")) c.objective = parse_objective(j.at("objective").get<std::string>());
    if (j.contains("marginal")) c.marginal = parse_marginal_strategy(j.at("marginal").get<std::string>());
    if (j.contains("learning_rates")) {
      for (auto it = j.at("learning_rates").begin(); it != j.at("learning_rates").end(); ++it) {
        c.learning_rates[it.key()] = it.value().get<double>();
      }
    }
    read_field(j, "steps", c.steps);
    read_field(j, "batch_size", c.batch_size);
    read_field(j, "beta1", c.beta1);
    read_field(j, "beta2", c.beta2);
    read_field(j, "lambda_mi", c.lambda_mi);
    read_field(j, "mi_decay", c.mi_decay);
    read_field(j, "n_critic", c.n_critic);
    read_field(j, "seed", c.seed);
    read_field(j, "ema_rate", c.ema_rate);
    read_field(j, "classifier_on_fake", c.classifier_on_fake);
    read_field(j, "saturating", c.saturating);
    read_field(j, "checkpoint_every", c.checkpoint_every);
    read_field(j, "mi_log_every", c.mi_log_every);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const ArchConfig& a) {
  return {{"preset", a.preset},
          {"statistics", a.statistics},
          {"hidden", a.hidden},
          {"feature_dim", a.feature_dim},
          {"use_label_discriminator", a.use_label_discriminator}};
}

ArchConfig arch_config_from_json(const json& j, ArchConfig a) {
  reject_unknown(j, {"preset", "statistics", "hidden", "feature_dim", "use_label_discriminator"}, "arch");
  try {
    read_field(j, "preset", a.preset);
    read_field(j, "statistics", a.statistics);
    read_field(j, "hidden", a.hidden);
    read_field(j, "feature_dim", a.feature_dim);
    read_field(j, "use_label_discriminator", a.use_label_discriminator);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("arch config: ") + e.what());
  }
  return a;
}

std::uint64_t config_hash(const json& j) { return fnv1a64(j.dump()); }

InMemoryDataSource::InMemoryDataSource(Matrix x, std::vector<int> y, DataShape shape, LabelSpec labels,
                                       std::uint64_t seed)
    : x_(std::move(x)), y_(std::move(y)), shape_(shape), labels_(std::move(labels)), seed_(seed) {
  labels_.validate();
  if (x_.rows() == 0) throw std::invalid_argument("dataset is empty");
  if (static_cast<std::size_t>(x_.rows()) != y_.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(x_.rows()) + " samples but " +
                                std::to_string(y_.size()) + " labels");
  }
  if (x_.cols() != shape_.size()) {
    throw std::invalid_argument("dataset rows have width " + std::to_string(x_.cols()) + ", shape " +
                                shape_.to_string() + " needs " + std::to_string(shape_.size()));
  }
  for (int label : y_) {
    if (label < 0 || label >= labels_.num_classes) {
      throw std::invalid_argument("dataset label " + std::to_string(label) + " outside 0.." +
                                  std::to_string(labels_.num_classes - 1));
    }
  }
}

LabeledBatch InMemoryDataSource::batch(std::int64_t index, int size) {
  const auto n = static_cast<std::int64_t>(x_.rows());
  if (size < 1 || size > n) throw std::invalid_argument("batch size must lie in 1..dataset size");
  // Incomplete tail batches are dropped; each epoch has its own order.
  const std::int64_t per_epoch = n / size;
  const std::int64_t epoch = index / per_epoch;
  const std::int64_t pos = (index % per_epoch) * size;
  if (epoch != cached_epoch_ || size != cached_size_) {
    Rng rng(derive_seed(seed_, "data"), "epoch." + std::to_string(epoch));
    order_ = rng.permutation(static_cast<int>(n));
    cached_epoch_ = epoch;
    cached_size_ = size;
  }
  LabeledBatch b;
  b.x.resize(size, x_.cols());
  b.y.resize(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    const int src = order_[static_cast<std::size_t>(pos + i)];
    b.x.row(i) = x_.row(src);
    b.y[static_cast<std::size_t>(i)] = y_[static_cast<std::size_t>(src)];
  }
  return b;
}

TrainingAborted::TrainingAborted(std::int64_t step, std::optional<LossReport> last_finite, const std::string& what)
    : std::runtime_error("training aborted at step " + std::to_string(step) + ": " + what),
      step_(step),
      last_finite_(std::move(last_finite)) {}

TrainState make_train_state(const TrainConfig& config, const ArchConfig& arch, const DataShape& shape,
                            const LabelSpec& labels, const LatentSpec& latent) {
  config.validate();
  TrainState st{config,
                build_networks(arch, shape, labels, latent, config.seed),
                {},
                MineCritic(config.ema_rate),
                Rng(config.seed, "z"),
                Rng(config.seed, "y"),
                Rng(config.seed, "ybar"),
                Rng(config.seed, "dy"),
                0,
                {},
                std::nullopt,
                std::nullopt,
                {}};
  for (auto& [name, module] : st.nets.modules()) {
    AdamOptions o;
    o.learning_rate = config.learning_rates.at(name);
    o.beta1 = config.beta1;
    o.beta2 = config.beta2;
    st.optimizers.emplace(name, std::make_unique<Adam>(module->parameters(), o));
  }
  return st;
}

LossReport train_step(TrainState& st, const LabeledBatch& real, bool update_generator) {
  const TrainConfig& cfg = st.config;
  NetworkBundle& n = st.nets;
  const auto batch = static_cast<Eigen::Index>(cfg.batch_size);
  if (static_cast<Eigen::Index>(real.size()) != batch || real.x.rows() != batch) {
    throw std::invalid_argument("real batch has " + std::to_string(real.size()) + " samples, expected " +
                                std::to_string(cfg.batch_size));
  }
  if (real.x.cols() != n.data_shape.size()) throw std::invalid_argument("real batch width does not match data shape");

  const std::int64_t at = st.step + 1;
  auto check = [&](double v, const char* what) {
    if (!std::isfinite(v)) throw TrainingAborted(at, st.last_report, std::string(what) + " is not finite");
  };
  const ComposeOptions opt = cfg.compose_options(st.step);
  const int k = n.labels.num_classes;

  const Matrix z = n.latent.sample(st.rng_z, batch);
  const std::vector<int> y = n.labels.sample(st.rng_y, static_cast<std::size_t>(batch));
  freeze_all(n);
  const ag::Var x_real = ag::Var::constant(real.x);
  const ag::Var x_fake = ag::Var::constant(n.generator->generate(z, y));

  RawTerms<double> raw;
  std::optional<double> loss_dy;

  only_trainable(n, "D");
  {
    const ag::Var a = gan_value(n.discriminator->logits(x_real), n.discriminator->logits(x_fake));
    raw.term_a = a.item();
    check(raw.term_a, "D loss");
    descend(st, "D", -a);
  }

  only_trainable(n, "C");
  {
    const ag::Var b = cross_entropy_term(n.classifier->logits(x_real), real.y);
    const ag::Var c = cross_entropy_term(n.classifier->logits(x_fake), y);
    raw.term_b = b.item();
    raw.term_c = c.item();
    check(raw.term_b + raw.term_c, "C loss");
    descend(st, "C", opt.classifier_on_fake ? b + c : b);
  }

  std::vector<int> y_bar;
  if (cfg.objective == ObjectiveKind::tac) {
    only_trainable(n, "Cmi");
    const ag::Var d = tac_value(n.twin_classifier->logits(x_fake), y);
    raw.term_d = d.item();
    check(*raw.term_d, "C^mi loss");
    descend(st, "Cmi", -d);
  } else if (cfg.objective == ObjectiveKind::uac) {
    if (n.label_discriminator) {
      only_trainable(n, "DY");
      std::vector<int> uniform(static_cast<std::size_t>(batch));
      for (auto& u : uniform) u = st.rng_dy.uniform_int(k);
      const ag::Var pos = n.label_discriminator->logits(y);
      const ag::Var neg = n.label_discriminator->logits(uniform);
      const ag::Var l = -(ag::mean(ag::log_sigmoid(pos)) + ag::mean(ag::log_sigmoid(-neg)));
      loss_dy = l.item();
      check(*loss_dy, "D_Y loss");
      descend(st, "DY", l);
    }
    only_trainable(n, "T");
    y_bar = resample_marginal_labels(y, n.labels, cfg.marginal, st.rng_ybar);
    auto mine = st.critic.step(*n.statistics, x_fake, LabelInput::from_classes(y, k),
                               LabelInput::from_classes(y_bar, k));
    raw.v_mine = mine.estimate.value;
    check(*raw.v_mine, "MINE estimate");
    descend(st, "T", -mine.surrogate);
    st.last_mi = mine.estimate;
  }

  std::optional<double> loss_g;
  if (update_generator) {
    only_trainable(n, "G");
    const ag::Var x = n.generator->forward(ag::Var::constant(z), y);
    const ag::Var zero = ag::Var::constant(Matrix::Zero(1, 1));
    RawTerms<ag::Var> g_terms;
    g_terms.term_a = zero;
    g_terms.term_b = zero;
    g_terms.generator_gan = generator_gan_loss(n.discriminator->logits(x), cfg.saturating);
    g_terms.term_c = cross_entropy_term(n.classifier->logits(x), y);
    if (cfg.objective == ObjectiveKind::tac) g_terms.term_d = tac_value(n.twin_classifier->logits(x), y);
    if (cfg.objective == ObjectiveKind::uac) {
      g_terms.v_mine = dv_bound(n.statistics->forward(x, LabelInput::from_classes(y, k)),
                                n.statistics->forward(x, LabelInput::from_classes(y_bar, k)));
    }
    const ag::Var l = compose(cfg.objective, g_terms, opt).loss_G;
    raw.generator_gan = g_terms.generator_gan.item();
    loss_g = l.item();
    check(*loss_g, "G loss");
    descend(st, "G", l);
  }
  freeze_all(n);

  LossReport report = make_report(cfg.objective, raw, opt);
  if (loss_g) report.loss_G = *loss_g;
  report.loss_DY = loss_dy;
  if (!report.finite()) throw TrainingAborted(at, st.last_report, "non-finite loss report");

  st.aggregates["loss_D"].add(report.loss_D);
  st.aggregates["loss_C"].add(report.loss_C);
  if (loss_g) st.aggregates["loss_G"].add(report.loss_G);
  if (report.loss_Cmi) st.aggregates["loss_Cmi"].add(*report.loss_Cmi);
  if (report.loss_T) st.aggregates["loss_T"].add(*report.loss_T);
  if (report.loss_DY) st.aggregates["loss_DY"].add(*report.loss_DY);
  st.last_report = report;
  if (update_generator) ++st.step;
  return report;
}

void save_checkpoint(const TrainState& st, const std::filesystem::path& path) {
  CheckpointData data;
  const json traj = trajectory_config(st.config, st.nets);
  json meta;
  meta["config_hash"] = hex64(config_hash(traj));
  meta["config"] = traj;
  meta["step"] = st.step;
  meta["rng"] = {{"z", st.rng_z.state()}, {"y", st.rng_y.state()}, {"ybar", st.rng_ybar.state()},
                 {"dy", st.rng_dy.state()}};
  meta["critic"] = {{"initialized", st.critic.initialized()}, {"log_ema", st.critic.log_ema()}};
  json adam_steps = json::object();
  for (const auto& [name, module] : st.nets.modules()) {
    for (const auto& [pname, p] : module->named_parameters()) data.arrays["param/" + name + "." + pname] = p.value();
    const Adam& opt = *st.optimizers.at(name);
    adam_steps[name] = opt.steps_taken();
    const auto named = module->named_parameters();
    for (std::size_t i = 0; i < named.size(); ++i) {
      data.arrays["adam.m/" + name + "." + named[i].first] = opt.slots()[i].m;
      data.arrays["adam.v/" + name + "." + named[i].first] = opt.slots()[i].v;
    }
  }
  meta["adam_steps"] = adam_steps;
  json agg = json::object();
  for (const auto& [key, a] : st.aggregates) agg[key] = {{"sum", a.sum}, {"count", a.count}};
  meta["aggregates"] = agg;
  if (st.last_report) meta["last_report"] = report_to_json(*st.last_report);
  if (st.last_mi) {
    meta["last_mi"] = {{"value", st.last_mi->value},
                       {"joint_mean", st.last_mi->joint_mean},
                       {"log_mean_exp_marginal", st.last_mi->log_mean_exp_marginal},
                       {"batch_size", st.last_mi->batch_size},
                       {"ema_denominator", st.last_mi->ema_denominator}};
  }
  data.meta = std::move(meta);
  write_checkpoint(path, data);
}

void load_checkpoint(TrainState& st, const std::filesystem::path& path) {
  const CheckpointData data = read_checkpoint(path);
  const json& meta = data.meta;
  const std::string expected = hex64(config_hash(trajectory_config(st.config, st.nets)));
  if (meta.at("config_hash").get<std::string>() != expected) {
    throw CheckpointError("checkpoint " + path.string() + " was written under config " +
                          meta.at("config_hash").get<std::string>() + ", current config hashes to " + expected);
  }
  auto array = [&](const std::string& name, const Matrix& like) -> const Matrix& {
    auto it = data.arrays.find(name);
    if (it == data.arrays.end()) throw CheckpointError("checkpoint lacks array " + name);
    if (it->second.rows() != like.rows() || it->second.cols() != like.cols()) {
      throw CheckpointError("array " + name + " has the wrong shape");
    }
    return it->second;
  };
  for (const auto& [name, module] : st.nets.modules()) {
    Adam& opt = *st.optimizers.at(name);
    const auto named = module->named_parameters();
    for (std::size_t i = 0; i < named.size(); ++i) {
      ag::Var p = named[i].second;
      p.mutable_value() = array("param/" + name + "." + named[i].first, p.value());
      opt.slots()[i].m = array("adam.m/" + name + "." + named[i].first, opt.slots()[i].m);
      opt.slots()[i].v = array("adam.v/" + name + "." + named[i].first, opt.slots()[i].v);
    }
    opt.set_steps_taken(meta.at("adam_steps").at(name).get<std::int64_t>());
  }
  st.step = meta.at("step").get<std::int64_t>();
  st.rng_z.set_state(meta.at("rng").at("z"));
  st.rng_y.set_state(meta.at("rng").at("y"));
  st.rng_ybar.set_state(meta.at("rng").at("ybar"));
  st.rng_dy.set_state(meta.at("rng").at("dy"));
  st.critic.restore(meta.at("critic").at("initialized"), meta.at("critic").at("log_ema"));
  st.aggregates.clear();
  for (auto it = meta.at("aggregates").begin(); it != meta.at("aggregates").end(); ++it) {
    st.aggregates[it.key()] = RunningAverage{it.value().at("sum"), it.value().at("count")};
  }
  st.last_report.reset();
  if (meta.contains("last_report")) st.last_report = report_from_json(meta.at("last_report"));
  st.last_mi.reset();
  if (meta.contains("last_mi")) {
    const json& m = meta.at("last_mi");
    st.last_mi = MIEstimate{m.at("value"), m.at("joint_mean"), m.at("log_mean_exp_marginal"), m.at("batch_size"),
                            m.at("ema_denominator")};
  }
}

TrainState restore_train_state(const std::filesystem::path& path) {
  const CheckpointData data = read_checkpoint(path);
  const json& cfg = data.meta.at("config");
  const TrainConfig train = train_config_from_json(cfg.at("train"));
  const ArchConfig arch = arch_config_from_json(cfg.at("arch"));
  const auto& shape = cfg.at("shape");
  const DataShape data_shape{shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>()};
  const LabelSpec labels{cfg.at("labels").at("num_classes").get<int>(),
                         cfg.at("labels").at("prior").get<std::vector<double>>()};
  const LatentSpec latent{cfg.at("latent_dim").get<int>()};
  TrainState st = make_train_state(train, arch, data_shape, labels, latent);
  load_checkpoint(st, path);
  return st;
}

std::string metrics_header() {
  return "step,term_a,term_b,term_c,term_d,v_mine,loss_D,loss_C,loss_G,loss_Cmi,loss_T,loss_DY";
}

std::string metrics_row(std::int64_t step, const LossReport& r) {
  std::ostringstream s;
  s << step << ',' << fmt(r.term_a) << ',' << fmt(r.term_b) << ',' << fmt(r.term_c) << ',' << fmt(r.term_d) << ','
    << fmt(r.v_mine) << ',' << fmt(r.loss_D) << ',' << fmt(r.loss_C) << ',' << fmt(r.loss_G) << ','
    << fmt(r.loss_Cmi) << ',' << fmt(r.loss_T) << ',' << fmt(r.loss_DY);
  return s.str();
}

FitResult fit(const TrainConfig& config, const ArchConfig& arch, const LatentSpec& latent, DataSource& data,
              const FitOptions& options) {
  config.validate();
  FitResult result{make_train_state(config, arch, data.shape(), data.labels(), latent), {}, {}};
  TrainState& st = result.state;
  if (options.resume_from) load_checkpoint(st, *options.resume_from);
  const bool resumed = options.resume_from.has_value();

  std::unique_ptr<AsyncLineWriter> metrics;
  std::unique_ptr<AsyncLineWriter> mi_log;
  std::filesystem::path ckpt_dir;
  if (options.run_dir) {
    std::filesystem::create_directories(*options.run_dir);
    ckpt_dir = *options.run_dir / "checkpoints";
    const auto metrics_path = *options.run_dir / "metrics.csv";
    const auto mi_path = *options.run_dir / "mi.csv";
    const bool append = resumed && std::filesystem::exists(metrics_path);
    if (append) {
      truncate_csv(metrics_path, st.step);
      if (std::filesystem::exists(mi_path)) truncate_csv(mi_path, st.step);
    }
    metrics = std::make_unique<AsyncLineWriter>(metrics_path, append);
    if (!append) metrics->push(metrics_header());
    if (config.objective == ObjectiveKind::uac) {
      const bool mi_append = append && std::filesystem::exists(mi_path);
      mi_log = std::make_unique<AsyncLineWriter>(mi_path, mi_append);
      if (!mi_append) mi_log->push("step,value,joint_mean,log_mean_exp_marginal,ema_denominator");
    }
  }

  for (std::int64_t s = st.step + 1; s <= config.steps; ++s) {
    LossReport report;
    for (int r = 0; r < config.n_critic; ++r) {
      const LabeledBatch real = data.batch((s - 1) * config.n_critic + r, config.batch_size);
      report = train_step(st, real, r == config.n_critic - 1);
    }
    result.reports.push_back(report);
    if (metrics) metrics->push(metrics_row(s, report));
    if (config.objective == ObjectiveKind::uac && st.last_mi && (s % config.mi_log_every == 0 || s == 1)) {
      result.mi_rows.push_back({s, *st.last_mi});
      if (mi_log) {
        const MIEstimate& e = *st.last_mi;
        mi_log->push(std::to_string(s) + ',' + fmt(e.value) + ',' + fmt(e.joint_mean) + ',' +
                     fmt(e.log_mean_exp_marginal) + ',' + fmt(e.ema_denominator));
      }
    }
    if (options.on_step) options.on_step(s, report);
    if (options.run_dir && config.checkpoint_every > 0 && s % config.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "step_%08lld.ckpt", static_cast<long long>(s));
      save_checkpoint(st, ckpt_dir / name);
    }
  }
  return result;
}

}  // namespace uacgan
