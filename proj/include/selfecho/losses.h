// include/selfecho/losses.h

// Copyright 2026  selfecho authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SELFECHO_LOSSES_H_
#define SELFECHO_LOSSES_H_

#include <functional>
#include <optional>
#include <span>

#include "selfecho/gan.h"

namespace selfecho {

// Probabilities are clamped to [eps, 1 - eps] so every log is finite.
constexpr double kProbEpsilon = 1e-7;

Tensor Probabilities(const Tensor &logits);

// mean log d_real + mean log(1 - d_fake) over clamped probabilities.
double AdversarialValue(std::span<const double> d_real, std::span<const double> d_fake);

// Discriminator objective from logits. Log form:
//   -[mean log p(real) + mean log(1 - p(fake))]
// Least-squares form: 0.5 [mean (real - 1)^2 + mean fake^2].
Tensor DiscriminatorLoss(const Tensor &real_logits, const Tensor &fake_logits, AdvLossKind kind);
// Non-saturating generator objective: -mean log p(fake), or
// mean (fake - 1)^2 for least squares.
Tensor GeneratorLoss(const Tensor &fake_logits, AdvLossKind kind);

// Conditional pair: D sees x concatenated with y (real) and with g_out
// (fake). The caller decides whether g_out carries generator gradients.
Tensor CganDiscriminatorLoss(Discriminator &d, const Tensor &x, const Tensor &y,
                             const Tensor &g_out, ForwardContext &ctx,
                             AdvLossKind kind = AdvLossKind::kLog);
Tensor GeneratorAdvLoss(Discriminator &d, const Tensor &x, const Tensor &g_out,
                        ForwardContext &ctx, AdvLossKind kind = AdvLossKind::kLog);

Tensor L1Loss(const Tensor &a, const Tensor &b);

using ImageMap = std::function<Tensor(const Tensor &)>;

struct CycleTerms {
  Tensor forward;   // mean |F(G(x)) - x|
  Tensor backward;  // mean |G(F(y)) - y|
  Tensor total() const { return Add(forward, backward); }
};
CycleTerms CycleLossTerms(const ImageMap &g, const ImageMap &f, const Tensor &x, const Tensor &y);
Tensor CycleLoss(const ImageMap &g, const ImageMap &f, const Tensor &x, const Tensor &y);

struct LossWeights {
  double lambda_l1 = 100.0;
  double lambda_cyc = 10.0;
};

struct LossReport {
  double d_loss = 0.0;
  std::optional<double> g_adv_loss;    // G (paired) or G: X -> Y (unpaired)
  std::optional<double> g_adv_f_loss;  // F: Y -> X, unpaired only
  std::optional<double> l1_loss;
  std::optional<double> cycle_loss;
  double total_g_loss = 0.0;
};

// paired: g_adv + lambda_l1 * l1
// unpaired: g_adv(G) + g_adv(F) + lambda_cyc * cycle
// MissingPart when a required term is absent.
double TotalGeneratorObjective(TrainMode mode, const LossReport &parts, const LossWeights &weights);

}  // namespace selfecho

#endif  // SELFECHO_LOSSES_H_
