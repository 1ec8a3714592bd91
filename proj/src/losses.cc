// src/losses.cc

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

#include "selfecho/losses.h"

#include <algorithm>
#include <cmath>

#include "selfecho/error.h"

namespace selfecho {

namespace {

void RequireSameShape(const Tensor &a, const Tensor &b, const char *what) {
  if (a.shape() != b.shape())
    throw Error(ErrorKind::kShapeMismatch, std::string(what) + ": " + ShapeString(a.shape()) +
                                               " vs " + ShapeString(b.shape()));
}

double MeanLog(std::span<const double> p, bool complement) {
  if (p.empty()) throw Error(ErrorKind::kShapeMismatch, "empty probability batch");
  double s = 0.0;
  for (double v : p) {
    const double c = std::clamp(v, kProbEpsilon, 1.0 - kProbEpsilon);
    s += std::log(complement ? 1.0 - c : c);
  }
  return s / p.size();
}

}  // namespace

Tensor Probabilities(const Tensor &logits) {
  return Clamp(Sigmoid(logits), kProbEpsilon, 1.0 - kProbEpsilon);
}

double AdversarialValue(std::span<const double> d_real, std::span<const double> d_fake) {
  return MeanLog(d_real, false) + MeanLog(d_fake, true);
}

Tensor DiscriminatorLoss(const Tensor &real_logits, const Tensor &fake_logits, AdvLossKind kind) {
  if (kind == AdvLossKind::kLeastSquares) {
    const Tensor r = Mean(Square(AddScalar(real_logits, -1.0)));
    const Tensor f = Mean(Square(fake_logits));
    return Scale(Add(r, f), 0.5);
  }
  const Tensor log_real = Mean(Log(Probabilities(real_logits)));
  const Tensor log_fake = Mean(Log(AddScalar(Scale(Probabilities(fake_logits), -1.0), 1.0)));
  return Scale(Add(log_real, log_fake), -1.0);
}

Tensor GeneratorLoss(const Tensor &fake_logits, AdvLossKind kind) {
  if (kind == AdvLossKind::kLeastSquares) return Mean(Square(AddScalar(fake_logits, -1.0)));
  return Scale(Mean(Log(Probabilities(fake_logits))), -1.0);
}

Tensor CganDiscriminatorLoss(Discriminator &d, const Tensor &x, const Tensor &y,
                             const Tensor &g_out, ForwardContext &ctx, AdvLossKind kind) {
  RequireSameShape(x, y, "cgan real pair");
  RequireSameShape(x, g_out, "cgan fake pair");
  const Tensor real = d.Forward(ConcatChannels(x, y), ctx);
  const Tensor fake = d.Forward(ConcatChannels(x, g_out), ctx);
  return DiscriminatorLoss(real, fake, kind);
}

Tensor GeneratorAdvLoss(Discriminator &d, const Tensor &x, const Tensor &g_out,
                        ForwardContext &ctx, AdvLossKind kind) {
  RequireSameShape(x, g_out, "generator adversarial pair");
  return GeneratorLoss(d.Forward(ConcatChannels(x, g_out), ctx), kind);
}

Tensor L1Loss(const Tensor &a, const Tensor &b) {
  RequireSameShape(a, b, "l1");
  return Mean(Abs(Sub(a, b)));
}

CycleTerms CycleLossTerms(const ImageMap &g, const ImageMap &f, const Tensor &x, const Tensor &y) {
  if (x.numel() == 0 || y.numel() == 0) throw Error(ErrorKind::kShapeMismatch, "empty cycle batch");
  const Tensor x_back = f(g(x));
  const Tensor y_back = g(f(y));
  return {L1Loss(x_back, x), L1Loss(y_back, y)};
}

Tensor CycleLoss(const ImageMap &g, const ImageMap &f, const Tensor &x, const Tensor &y) {
  return CycleLossTerms(g, f, x, y).total();
}

double TotalGeneratorObjective(TrainMode mode, const LossReport &parts, const LossWeights &weights) {
  auto need = [](const std::optional<double> &v, const char *name) {
    if (!v) throw Error(ErrorKind::kMissingPart, std::string("loss report lacks ") + name);
    return *v;
  };
  if (mode == TrainMode::kPaired)
    return need(parts.g_adv_loss, "g_adv") + weights.lambda_l1 * need(parts.l1_loss, "l1");
  return need(parts.g_adv_loss, "g_adv") + need(parts.g_adv_f_loss, "g_adv_f") +
         weights.lambda_cyc * need(parts.cycle_loss, "cycle");
}

}  // namespace selfecho
