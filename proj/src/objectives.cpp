// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/objectives.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace uacgan {

namespace {

std::atomic<std::size_t> g_clamp_events{0};

double clamped_log(double p) {
  if (p < kProbClamp || p > 1.0 - kProbClamp) {
    g_clamp_events.fetch_add(1, std::memory_order_relaxed);
    p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  }
  return std::log(p);
}

double mean_log_at_label(const Matrix& probs, std::span<const int> labels) {
  if (labels.empty() || static_cast<Eigen::Index>(labels.size()) != probs.rows()) {
    throw std::invalid_argument("class probabilities and labels disagree in size");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int k = labels[i];
    if (k < 0 || k >= probs.cols()) throw std::out_of_range("label " + std::to_string(k) + " out of range");
    acc += clamped_log(probs(static_cast<Eigen::Index>(i), k));
  }
  return acc / static_cast<double>(labels.size());
}

}  // namespace

ObjectiveKind parse_objective(std::string_view name) {
  if (name == "ac") return ObjectiveKind::ac;
  if (name == "tac") return ObjectiveKind::tac;
  if (name == "uac") return ObjectiveKind::uac;
  throw std::invalid_argument("unknown objective kind '" + std::string(name) + "' (expected ac, tac or uac)");
}

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::ac:
      return "ac";
    case ObjectiveKind::tac:
      return "tac";
    case ObjectiveKind::uac:
      return "uac";
  }
  return "?";
}

std::size_t clamp_events() { return g_clamp_events.load(); }
void reset_clamp_events() { g_clamp_events.store(0); }

double gan_value(std::span<const double> d_real, std::span<const double> d_fake) {
  if (d_real.empty() || d_fake.empty()) throw std::invalid_argument("gan_value: empty batch");
  double real = 0.0;
  for (double p : d_real) real += clamped_log(p);
  double fake = 0.0;
  for (double p : d_fake) fake += clamped_log(1.0 - p);
  return real / static_cast<double>(d_real.size()) + fake / static_cast<double>(d_fake.size());
}

double cross_entropy_term(const Matrix& class_probs, std::span<const int> labels) {
  return -mean_log_at_label(class_probs, labels);
}

double tac_value(const Matrix& class_probs, std::span<const int> labels) {
  return mean_log_at_label(class_probs, labels);
}

ag::Var gan_value(const ag::Var& d_real_logits, const ag::Var& d_fake_logits) {
  // log(1 − σ(l)) = log σ(−l)
  return ag::mean(ag::log_sigmoid(d_real_logits)) + ag::mean(ag::log_sigmoid(-d_fake_logits));
}

ag::Var generator_gan_loss(const ag::Var& d_fake_logits, bool saturating) {
  if (saturating) return ag::mean(ag::log_sigmoid(-d_fake_logits));
  return -ag::mean(ag::log_sigmoid(d_fake_logits));
}

ag::Var cross_entropy_term(const ag::Var& class_logits, std::span<const int> labels) {
  return -ag::mean(ag::pick(ag::log_softmax(class_logits), labels));
}

ag::Var tac_value(const ag::Var& class_logits, std::span<const int> labels) {
  return ag::mean(ag::pick(ag::log_softmax(class_logits), labels));
}

bool LossReport::finite() const {
  auto ok = [](double v) { return std::isfinite(v); };
  auto ok_opt = [&](const std::optional<double>& v) { return !v || ok(*v); };
  return ok(term_a) && ok(term_b) && ok(term_c) && ok_opt(term_d) && ok_opt(v_mine) && ok(loss_D) &&
         ok(loss_G) && ok(loss_C) && ok_opt(loss_Cmi) && ok_opt(loss_T) && ok_opt(loss_DY);
}

LossReport make_report(ObjectiveKind kind, const RawTerms<double>& terms, const ComposeOptions& opt) {
  RawTerms<double> t = terms;
  if (kind != ObjectiveKind::tac) t.term_d.reset();
  if (kind != ObjectiveKind::uac) t.v_mine.reset();
  const UpdateLosses<double> losses = compose(kind, t, opt);
  LossReport r;
  r.term_a = t.term_a;
  r.term_b = t.term_b;
  r.term_c = t.term_c;
  r.term_d = t.term_d;
  r.v_mine = t.v_mine;
  r.loss_D = losses.loss_D;
  r.loss_C = losses.loss_C;
  r.loss_G = losses.loss_G;
  r.loss_Cmi = losses.loss_Cmi;
  r.loss_T = losses.loss_T;
  return r;
}

}  // namespace uacgan
