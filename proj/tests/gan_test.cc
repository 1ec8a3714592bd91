// tests/gan_test.cc

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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "gradcheck.h"
#include "selfecho/checkpoint.h"
#include "selfecho/error.h"
#include "selfecho/gan.h"
#include "selfecho/losses.h"

using namespace selfecho;
using selfecho::testing::GradCheck;
namespace fs = std::filesystem;

namespace {

Tensor Uniform01(Shape s, uint64_t seed) {
  Rng rng(seed);
  return Tensor::RandomUniform(std::move(s), rng, 0.0, 1.0);
}

Tensor Randn(Shape s, uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  return Tensor::RandomNormal(std::move(s), rng, 0.0, sd);
}

ErrorKind KindOf(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::kIoFailure;
}

double ClampedSigmoid(double z) {
  return std::clamp(1.0 / (1.0 + std::exp(-z)), kProbEpsilon, 1.0 - kProbEpsilon);
}

// Scalar oracle for the log-form discriminator loss.
double DLossOracle(const Tensor &real, const Tensor &fake) {
  double r = 0.0, f = 0.0;
  for (double z : real.data()) r += std::log(ClampedSigmoid(z));
  for (double z : fake.data()) f += std::log(1.0 - ClampedSigmoid(z));
  return -(r / real.numel() + f / fake.numel());
}

double GLossOracle(const Tensor &fake) {
  double f = 0.0;
  for (double z : fake.data()) f += std::log(ClampedSigmoid(z));
  return -f / fake.numel();
}

}  // namespace

TEST_SUITE("gan") {

TEST_CASE("generators keep shape and range") {
  for (GeneratorKind kind : {GeneratorKind::kUnet, GeneratorKind::kResnet})
    for (int side : {32, 64}) {
      GeneratorConfig cfg{.kind = kind, .image_size = side, .base_channels = 4};
      Generator g(cfg);
      Rng drop(1);
      ForwardContext ctx{false, true, &drop};
      Tensor x = Uniform01({2, 1, side, side}, 3);
      Tensor y = g.Forward(x, ctx);
      CHECK(y.shape() == x.shape());
      for (double v : y.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
}

TEST_CASE("unet at 128 keeps shape") {
  Generator g({.kind = GeneratorKind::kUnet, .image_size = 128, .base_channels = 2});
  ForwardContext ctx;
  CHECK(g.Forward(Uniform01({1, 1, 128, 128}, 4), ctx).shape() == Shape{1, 1, 128, 128});
}

TEST_CASE("patchgan logit map follows the conv shape formula") {
  DiscriminatorConfig cfg{.image_size = 128, .in_channels = 2, .base_channels = 4, .n_layers = 3};
  // Three stride-2 k4 p1 layers, then two stride-1 k4 p1 layers.
  int side = 128;
  for (int i = 0; i < 3; ++i) side = (side + 2 - 4) / 2 + 1;
  for (int i = 0; i < 2; ++i) side = (side + 2 - 4) / 1 + 1;
  CHECK(side == 14);
  CHECK(cfg.output_side() == side);
  Discriminator d(cfg);
  ForwardContext ctx;
  CHECK(d.Forward(Uniform01({2, 2, 128, 128}, 5), ctx).shape() == Shape{2, 1, side, side});

  DiscriminatorConfig small{.image_size = 32, .n_layers = 3};
  CHECK(small.output_side() == 2);
  DiscriminatorConfig too_deep{.image_size = 32, .n_layers = 4};
  CHECK(KindOf([&] { too_deep.Validate(); }) == ErrorKind::kBadConfig);
}

TEST_CASE("bad configs") {
  CHECK(KindOf([] { Generator({.image_size = 48}); }) == ErrorKind::kBadConfig);
  CHECK(KindOf([] { Generator({.image_size = 32, .depth = 6}); }) == ErrorKind::kBadConfig);
  CHECK(KindOf([] { Discriminator({.in_channels = 3}); }) == ErrorKind::kBadConfig);
  CHECK(KindOf([] { ParseGeneratorKind("vae"); }) == ErrorKind::kBadConfig);
}

TEST_CASE("same seed, same parameters") {
  GeneratorConfig cfg{.image_size = 32, .base_channels = 4, .seed = 9};
  Generator a(cfg), b(cfg);
  cfg.seed = 10;
  Generator c(cfg);
  auto pa = a.Parameters(), pb = b.Parameters(), pc = c.Parameters();
  REQUIRE(pa.size() == pb.size());
  bool differs = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(std::equal(pa[i].data().begin(), pa[i].data().end(), pb[i].data().begin()));
    differs |= !std::equal(pa[i].data().begin(), pa[i].data().end(), pc[i].data().begin());
  }
  CHECK(differs);
  // Initial weights are N(0, 0.02).
  double s = 0.0, s2 = 0.0;
  size_t n = 0;
  for (const auto &[name, t] : a.NamedParameters())
    if (t.rank() == 4)
      for (double v : t.data()) s += v, s2 += v * v, ++n;
  CHECK(std::abs(s / n) < 0.002);
  CHECK(std::sqrt(s2 / n) == doctest::Approx(0.02).epsilon(0.05));
}

TEST_CASE("adversarial value anchors") {
  std::vector<double> half(10, 0.5), one(10, 1.0), zero(10, 0.0);
  CHECK(AdversarialValue(half, half) == doctest::Approx(-2 * std::numbers::ln2).epsilon(1e-12));
  CHECK(std::abs(AdversarialValue(one, zero)) < 1e-6);
  Rng rng(2);
  std::vector<double> r(37), f(53);
  for (double &v : r) v = rng.Uniform(0.01, 0.99);
  for (double &v : f) v = rng.Uniform(0.01, 0.99);
  double oracle = 0.0, of = 0.0;
  for (double v : r) oracle += std::log(v);
  for (double v : f) of += std::log(1 - v);
  CHECK(std::abs(AdversarialValue(r, f) - (oracle / r.size() + of / f.size())) < 1e-9);
}

TEST_CASE("adversarial losses match scalar oracles") {
  Tensor zero({4, 1, 2, 2}, 0.0);
  CHECK(DiscriminatorLoss(zero, zero, AdvLossKind::kLog).item() ==
        doctest::Approx(2 * std::numbers::ln2).epsilon(1e-12));
  CHECK(GeneratorLoss(zero, AdvLossKind::kLog).item() ==
        doctest::Approx(std::numbers::ln2).epsilon(1e-12));
  CHECK(DiscriminatorLoss(Tensor({4}, 40.0), Tensor({4}, -40.0), AdvLossKind::kLog).item() < 1e-6);
  CHECK(GeneratorLoss(Tensor({4}, 40.0), AdvLossKind::kLog).item() < 1e-6);
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Tensor r = Randn({3, 1, 3, 3}, seed, 3.0), f = Randn({3, 1, 3, 3}, seed + 1000, 3.0);
    CHECK(std::abs(DiscriminatorLoss(r, f, AdvLossKind::kLog).item() - DLossOracle(r, f)) < 1e-9);
    CHECK(std::abs(GeneratorLoss(f, AdvLossKind::kLog).item() - GLossOracle(f)) < 1e-9);
    double lr = 0.0, lf = 0.0;
    for (double v : r.data()) lr += (v - 1) * (v - 1);
    for (double v : f.data()) lf += v * v;
    CHECK(std::abs(DiscriminatorLoss(r, f, AdvLossKind::kLeastSquares).item() -
                   0.5 * (lr / r.numel() + lf / f.numel())) < 1e-9);
  }
  // Saturated logits stay finite.
  CHECK(std::isfinite(DiscriminatorLoss(Tensor({2}, -1e3), Tensor({2}, 1e3), AdvLossKind::kLog).item()));
}

TEST_CASE("conditional losses on a real discriminator") {
  Discriminator d({.image_size = 32, .in_channels = 2, .base_channels = 4, .n_layers = 2, .seed = 3});
  ForwardContext ctx;
  Tensor x = Uniform01({2, 1, 32, 32}, 1), y = Uniform01({2, 1, 32, 32}, 2),
         g = Uniform01({2, 1, 32, 32}, 3);
  const Tensor real = d.Forward(ConcatChannels(x, y), ctx);
  const Tensor fake = d.Forward(ConcatChannels(x, g), ctx);
  CHECK(std::abs(CganDiscriminatorLoss(d, x, y, g, ctx).item() - DLossOracle(real, fake)) < 1e-9);
  CHECK(std::abs(GeneratorAdvLoss(d, x, g, ctx).item() - GLossOracle(fake)) < 1e-9);
  Tensor wrong = Uniform01({2, 1, 16, 16}, 4);
  CHECK(KindOf([&] { CganDiscriminatorLoss(d, x, wrong, g, ctx); }) == ErrorKind::kShapeMismatch);
  CHECK(KindOf([&] { GeneratorAdvLoss(d, x, wrong, ctx); }) == ErrorKind::kShapeMismatch);
}

TEST_CASE("generator adversarial gradient through the discriminator") {
  // Small generator stand-in: one conv layer feeding D.
  Discriminator d({.image_size = 32, .in_channels = 2, .base_channels = 2, .n_layers = 2,
                   .norm = LayerKind::kInstanceNorm, .seed = 5});
  Tensor x = Uniform01({1, 1, 32, 32}, 6);
  Tensor w = Randn({1, 1, 3, 3}, 7, 0.3);
  ForwardContext ctx;
  const double err = GradCheck(
      [&] { return GeneratorAdvLoss(d, x, Sigmoid(Conv2d(x, w, Tensor(), 1, 1)), ctx); }, {w});
  CHECK(err < 1e-4);
}

TEST_CASE("l1 loss") {
  Tensor a = Randn({2, 3, 4}, 1), b = Randn({2, 3, 4}, 2);
  CHECK(L1Loss(a, a).item() == 0.0);
  CHECK(L1Loss(Tensor({5}, 0.0), Tensor({5}, 1.0)).item() == 1.0);
  double s = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) s += std::abs(a[i] - b[i]);
  CHECK(std::abs(L1Loss(a, b).item() - s / a.numel()) < 1e-12);
  CHECK(KindOf([&] { L1Loss(a, Tensor({3})); }) == ErrorKind::kShapeMismatch);
}

TEST_CASE("cycle loss anchors and oracle") {
  Tensor x = Randn({2, 1, 4, 4}, 1), y = Randn({2, 1, 4, 4}, 2);
  ImageMap id = [](const Tensor &t) { return t; };
  CHECK(CycleLoss(id, id, x, y).item() == 0.0);
  ImageMap zero = [](const Tensor &t) { return Scale(t, 0.0); };
  Tensor ones({2, 1, 4, 4}, 1.0);
  CHECK(CycleLoss(zero, zero, ones, ones).item() == 2.0);

  Tensor wg = Randn({1, 1, 3, 3}, 3, 0.5), wf = Randn({1, 1, 3, 3}, 4, 0.5);
  ImageMap g = [&](const Tensor &t) { return Tanh(Conv2d(t, wg, Tensor(), 1, 1)); };
  ImageMap f = [&](const Tensor &t) { return Tanh(Conv2d(t, wf, Tensor(), 1, 1)); };
  // Oracle: plain loops over the same maps.
  auto conv = [](const Tensor &in, const Tensor &w, int n) {
    std::vector<double> out(in.numel());
    for (int b = 0; b < n; ++b)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          double s = 0.0;
          for (int ki = 0; ki < 3; ++ki)
            for (int kj = 0; kj < 3; ++kj) {
              const int r = i + ki - 1, c = j + kj - 1;
              if (r >= 0 && r < 4 && c >= 0 && c < 4) s += in[b * 16 + r * 4 + c] * w[ki * 3 + kj];
            }
          out[b * 16 + i * 4 + j] = std::tanh(s);
        }
    return Tensor({n, 1, 4, 4}, out);
  };
  const Tensor xb = conv(conv(x, wg, 2), wf, 2), yb = conv(conv(y, wf, 2), wg, 2);
  double s1 = 0.0, s2 = 0.0;
  for (size_t i = 0; i < x.numel(); ++i) s1 += std::abs(xb[i] - x[i]), s2 += std::abs(yb[i] - y[i]);
  CycleTerms t = CycleLossTerms(g, f, x, y);
  CHECK(std::abs(t.forward.item() - s1 / x.numel()) < 1e-9);
  CHECK(std::abs(t.backward.item() - s2 / y.numel()) < 1e-9);
  CHECK(GradCheck([&] { return CycleLoss(g, f, x, y); }, {wg, wf}) < 1e-4);
}

TEST_CASE("forward cycle couples F into the gradient at G's input") {
  Tensor x = Randn({1, 1, 4, 4}, 11);
  Tensor wg = Randn({1, 1, 3, 3}, 12, 0.5), wf = Randn({1, 1, 3, 3}, 13, 0.5);
  ImageMap g = [&](const Tensor &t) { return Tanh(Conv2d(t, wg, Tensor(), 1, 1)); };
  ImageMap f = [&](const Tensor &t) { return Tanh(Conv2d(t, wf, Tensor(), 1, 1)); };
  auto input_grad = [&] {
    Tensor xi = x.Detach();
    xi.set_requires_grad(true);
    L1Loss(f(g(xi)), x).Backward();
    return std::vector<double>(xi.grad().begin(), xi.grad().end());
  };
  const std::vector<double> base = input_grad();
  for (size_t k = 0; k < wf.numel(); ++k) {
    const double keep = wf[k];
    wf.mutable_data()[k] = keep + 1e-3;
    const std::vector<double> moved = input_grad();
    wf.mutable_data()[k] = keep;
    double delta = 0.0;
    for (size_t i = 0; i < base.size(); ++i) delta += std::abs(moved[i] - base[i]);
    CHECK(delta > 0.0);
  }
}

TEST_CASE("total generator objective") {
  LossWeights w;
  LossReport paired{.g_adv_loss = 0.5, .l1_loss = 0.01};
  CHECK(TotalGeneratorObjective(TrainMode::kPaired, paired, w) == doctest::Approx(1.5));
  LossReport zeros{.g_adv_loss = 0.0, .g_adv_f_loss = 0.0, .l1_loss = 0.0, .cycle_loss = 0.0};
  CHECK(TotalGeneratorObjective(TrainMode::kPaired, zeros, w) == 0.0);
  CHECK(TotalGeneratorObjective(TrainMode::kUnpaired, zeros, w) == 0.0);
  LossReport unpaired{.g_adv_loss = 0.7, .g_adv_f_loss = 0.3, .cycle_loss = 0.2};
  CHECK(TotalGeneratorObjective(TrainMode::kUnpaired, unpaired, w) == doctest::Approx(3.0));
  LossWeights none{0.0, 0.0};
  CHECK(TotalGeneratorObjective(TrainMode::kPaired, paired, none) == 0.5);
  CHECK(TotalGeneratorObjective(TrainMode::kUnpaired, unpaired, none) == doctest::Approx(1.0));
  LossReport partial{.g_adv_loss = 0.5};
  CHECK(KindOf([&] { TotalGeneratorObjective(TrainMode::kPaired, partial, w); }) ==
        ErrorKind::kMissingPart);
  CHECK(KindOf([&] { TotalGeneratorObjective(TrainMode::kUnpaired, paired, w); }) ==
        ErrorKind::kMissingPart);
}

TEST_CASE("parameter files round trip") {
  const fs::path dir = fs::temp_directory_path() / "selfecho_gan_test";
  fs::create_directories(dir);
  Generator a({.image_size = 32, .base_channels = 4, .seed = 1});
  Generator b({.image_size = 32, .base_channels = 4, .seed = 2});
  SaveGenerator(a, (dir / "g.tnsr").string());
  LoadGenerator(b, (dir / "g.tnsr").string());
  auto pa = a.Parameters(), pb = b.Parameters();
  for (size_t i = 0; i < pa.size(); ++i)
    for (size_t k = 0; k < pa[i].numel(); ++k)
      CHECK(static_cast<float>(pa[i][k]) == static_cast<float>(pb[i][k]));

  {
    std::ifstream is(dir / "g.tnsr", std::ios::binary);
    char magic[5];
    is.read(magic, 5);
    CHECK(std::string(magic, 5) == "TNSR1");
  }
  fs::copy_file(dir / "g.tnsr", dir / "cut.tnsr", fs::copy_options::overwrite_existing);
  fs::resize_file(dir / "cut.tnsr", fs::file_size(dir / "g.tnsr") - 7);
  CHECK(KindOf([&] { LoadGenerator(b, (dir / "cut.tnsr").string()); }) == ErrorKind::kCorruptFile);
  Generator other({.image_size = 32, .base_channels = 8});
  CHECK_THROWS_AS(LoadGenerator(other, (dir / "g.tnsr").string()), Error);

  Discriminator d({.image_size = 32, .base_channels = 4});
  SaveDiscriminator(d, (dir / "d.tnsr").string());
  Discriminator e({.image_size = 32, .base_channels = 4, .seed = 8});
  LoadDiscriminator(e, (dir / "d.tnsr").string());
  CHECK(static_cast<float>(d.Parameters()[0][0]) == static_cast<float>(e.Parameters()[0][0]));
}

}
