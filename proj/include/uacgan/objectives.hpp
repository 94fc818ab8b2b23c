// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "uacgan/autograd.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace uacgan {

enum class ObjectiveKind { ac, tac, uac };

ObjectiveKind parse_objective(std::string_view name);
std::string to_string(ObjectiveKind kind);

// Probabilities are clamped to [1e-7, 1 - 1e-7] before logs.
inline constexpr double kProbClamp = 1e-7;

/// Number of probabilities clamped so far by the probability-level terms.
std::size_t clamp_events();
void reset_clamp_events();

// ---- probability-level terms -------------------------------------------

/// mean log d_real + mean log(1 − d_fake): the vanilla GAN value.
double gan_value(std::span<const double> d_real, std::span<const double> d_fake);
/// −mean log p[label]. Serves for both the real-data and the fake-data term.
double cross_entropy_term(const Matrix& class_probs, std::span<const int> labels);
/// mean log p[label], not negated: the twin classifier maximizes it and the
/// generator minimizes it.
double tac_value(const Matrix& class_probs, std::span<const int> labels);

// ---- graph terms on logits ----------------------------------------------
// These agree with the probability-level terms whenever no clamping occurs;
// they use log-sigmoid / log-softmax so no clamp is needed.

ag::Var gan_value(const ag::Var& d_real_logits, const ag::Var& d_fake_logits);
// Non-saturating: −mean log D(G(z,y)). Saturating: mean log(1 − D(G(z,y))).
ag::Var generator_gan_loss(const ag::Var& d_fake_logits, bool saturating);
ag::Var cross_entropy_term(const ag::Var& class_logits, std::span<const int> labels);
ag::Var tac_value(const ag::Var& class_logits, std::span<const int> labels);

// ---- composition ----------------------------------------------------------

struct ComposeOptions {
  double lambda_mi = 1.0;
  // Literal objective trains C on real and fake data; off trains on real only.
  bool classifier_on_fake = true;
};

template <class S>
struct RawTerms {
  S term_a{};         // vanilla GAN value
  S term_b{};         // cross-entropy on real data
  S term_c{};         // cross-entropy on generated data
  S generator_gan{};  // generator's GAN loss (see generator_gan_loss)
  std::optional<S> term_d;  // twin-classifier value (tac)
  std::optional<S> v_mine;  // Donsker-Varadhan value (uac)
};

template <class S>
struct UpdateLosses {
  S loss_D{};
  S loss_C{};
  S loss_G{};
  std::optional<S> loss_Cmi;
  std::optional<S> loss_T;
};

/// Routes raw terms to the loss each network descends.
///
/// D ascends term_a; C descends term_b (+ term_c); G descends its GAN loss
/// plus term_c, plus term_d for tac or lambda_mi * v_mine for uac; C^mi
/// ascends term_d; T ascends v_mine.
template <class S>
UpdateLosses<S> compose(ObjectiveKind kind, const RawTerms<S>& t, const ComposeOptions& opt) {
  UpdateLosses<S> out;
  out.loss_D = -t.term_a;
  out.loss_C = opt.classifier_on_fake ? t.term_b + t.term_c : t.term_b;
  out.loss_G = t.generator_gan + t.term_c;
  switch (kind) {
    case ObjectiveKind::ac:
      break;
    case ObjectiveKind::tac:
      if (!t.term_d) throw std::invalid_argument("compose: tac objective needs term_d");
      out.loss_G = out.loss_G + *t.term_d;
      out.loss_Cmi = -*t.term_d;
      break;
    case ObjectiveKind::uac:
      if (!t.v_mine) throw std::invalid_argument("compose: uac objective needs v_mine");
      out.loss_G = out.loss_G + opt.lambda_mi * *t.v_mine;
      out.loss_T = -*t.v_mine;
      break;
  }
  return out;
}

struct LossReport {
  double term_a = 0.0;
  double term_b = 0.0;
  double term_c = 0.0;
  std::optional<double> term_d;
  std::optional<double> v_mine;

  double loss_D = 0.0;
  double loss_G = 0.0;
  double loss_C = 0.0;
  std::optional<double> loss_Cmi;
  std::optional<double> loss_T;
  std::optional<double> loss_DY;

  bool finite() const;
};

/// Builds a report from scalar terms. Only the term matching `kind` is kept.
LossReport make_report(ObjectiveKind kind, const RawTerms<double>& terms, const ComposeOptions& opt);

}  // namespace uacgan
