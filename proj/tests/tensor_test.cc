// tests/tensor_test.cc

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
#include <functional>
#include <vector>

#include "doctest.h"
#include "gradcheck.h"
#include "selfecho/adam.h"
#include "selfecho/error.h"
#include "selfecho/layers.h"
#include "selfecho/tensor.h"

using namespace selfecho;
using selfecho::testing::GradCheck;
using selfecho::testing::Project;

namespace {

constexpr double kTol = 1e-4;

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

// Gradient check through a single layer, covering input and parameters.
double LayerGradError(const LayerSpec &spec, Shape in, bool training, uint64_t seed) {
  Rng init(seed);
  Layer layer(spec, init, 0.3);
  std::vector<NamedTensor> named;
  layer.CollectParameters("l", &named);
  std::vector<Tensor> leaves{Randn(in, seed + 1)};
  for (auto &[name, t] : named) leaves.push_back(t);
  Tensor skip = Randn(in, seed + 2);
  return GradCheck(
      [&] {
        Rng drop(5);
        ForwardContext ctx{training, training, &drop};
        return Project(layer.Forward(leaves[0], ctx, &skip));
      },
      leaves);
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("all-ones 2x2 kernel on an all-ones 3x3 image") {
  Tensor x({1, 1, 3, 3}, 1.0);
  Tensor w({1, 1, 2, 2}, 1.0);
  Tensor y = Conv2d(x, w, Tensor(), 1, 0);
  REQUIRE(y.shape() == Shape{1, 1, 2, 2});
  for (double v : y.data()) CHECK(v == 4.0);
}

TEST_CASE("conv output geometry") {
  CHECK(ConvOutputSide(128, 4, 2, 1) == 64);
  CHECK(ConvOutputSide(7, 3, 1, 1) == 7);
  CHECK(ConvTransposeOutputSide(64, 4, 2, 1) == 128);
  Tensor x = Randn({2, 3, 16, 16}, 1);
  CHECK(Conv2d(x, Randn({5, 3, 4, 4}, 2), Tensor(), 2, 1).shape() == Shape{2, 5, 8, 8});
  CHECK(ConvTranspose2d(x, Randn({3, 5, 4, 4}, 3), Tensor(), 2, 1).shape() ==
        Shape{2, 5, 32, 32});
  CHECK(KindOf([&] { Conv2d(x, Randn({5, 4, 3, 3}, 2), Tensor(), 1, 1); }) ==
        ErrorKind::kShapeMismatch);
}

TEST_CASE("conv matches a direct sum") {
  // Both the GEMM path (many outputs) and the direct path (few outputs).
  for (int o : {1, 2, 6}) {
    Tensor x = Randn({2, 3, 7, 6}, 10);
    Tensor w = Randn({o, 3, 3, 3}, 11);
    Tensor b = Randn({o}, 12);
    const int stride = 2, pad = 1;
    Tensor y = Conv2d(x, w, b, stride, pad);
    const int oh = ConvOutputSide(7, 3, stride, pad), ow = ConvOutputSide(6, 3, stride, pad);
    REQUIRE(y.shape() == Shape{2, o, oh, ow});
    double worst = 0.0;
    for (int n = 0; n < 2; ++n)
      for (int oc = 0; oc < o; ++oc)
        for (int i = 0; i < oh; ++i)
          for (int j = 0; j < ow; ++j) {
            double s = b[oc];
            for (int c = 0; c < 3; ++c)
              for (int ki = 0; ki < 3; ++ki)
                for (int kj = 0; kj < 3; ++kj) {
                  const int r = i * stride - pad + ki, q = j * stride - pad + kj;
                  if (r < 0 || r >= 7 || q < 0 || q >= 6) continue;
                  s += x[((n * 3 + c) * 7 + r) * 6 + q] * w[((oc * 3 + c) * 3 + ki) * 3 + kj];
                }
            worst = std::max(worst, std::abs(s - y[((n * o + oc) * oh + i) * ow + j]));
          }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("transpose conv is the adjoint of conv") {
  // <conv(x), y> == <x, convT(y)> with the same weight.
  Tensor x = Randn({2, 3, 8, 8}, 20);
  Tensor w = Randn({4, 3, 4, 4}, 21);
  Tensor y = Conv2d(x, w, Tensor(), 2, 1);
  Tensor z = Randn(y.shape(), 22);
  Tensor back = ConvTranspose2d(z, w, Tensor(), 2, 1);
  REQUIRE(back.shape() == x.shape());
  double lhs = 0.0, rhs = 0.0;
  for (size_t i = 0; i < y.numel(); ++i) lhs += y[i] * z[i];
  for (size_t i = 0; i < x.numel(); ++i) rhs += x[i] * back[i];
  CHECK(std::abs(lhs - rhs) < 1e-9 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("elementwise op gradients") {
  Tensor a = Randn({3, 4}, 30), b = Randn({3, 4}, 31);
  Tensor pos = AddScalar(Abs(Randn({3, 4}, 32)), 0.5).Detach();
  CHECK(GradCheck([&] { return Project(Add(a, b)); }, {a, b}) < kTol);
  CHECK(GradCheck([&] { return Project(Sub(a, b)); }, {a, b}) < kTol);
  CHECK(GradCheck([&] { return Project(Mul(a, b)); }, {a, b}) < kTol);
  CHECK(GradCheck([&] { return Project(Scale(a, -1.7)); }, {a}) < kTol);
  CHECK(GradCheck([&] { return Project(AddScalar(a, 3.0)); }, {a}) < kTol);
  CHECK(GradCheck([&] { return Project(Abs(a)); }, {a}) < kTol);
  CHECK(GradCheck([&] { return Project(Log(pos)); }, {pos}) < kTol);
  CHECK(GradCheck([&] { return Project(Square(a)); }, {a}) < kTol);
  CHECK(GradCheck([&] { return Project(Sigmoid(a)); }, {a}) < kTol);
  CHECK(GradCheck([&] { return Project(Tanh(a)); }, {a}) < kTol);
  CHECK(GradCheck([&] { return Project(Relu(a)); }, {a}) < kTol);
  CHECK(GradCheck([&] { return Project(LeakyRelu(a, 0.2)); }, {a}) < kTol);
  CHECK(GradCheck([&] { return Project(Clamp(a, -0.5, 0.5)); }, {a}) < kTol);
  CHECK(GradCheck([&] { return Mean(Square(a)); }, {a}) < kTol);
  CHECK(GradCheck([&] { return Sum(Mul(a, a)); }, {a}) < kTol);
}

TEST_CASE("structural op gradients") {
  Tensor x = Randn({2, 3, 5, 5}, 40), s = Randn({2, 2, 5, 5}, 41);
  CHECK(GradCheck([&] { return Project(ConcatChannels(x, s)); }, {x, s}) < kTol);
  CHECK(GradCheck([&] { return Project(InstanceNorm2d(x, 1e-5)); }, {x}) < kTol);
  Tensor g = Randn({3}, 42), b = Randn({3}, 43);
  std::vector<double> rm(3, 0.0), rv(3, 1.0);
  RunningStats running{rm, rv};
  CHECK(GradCheck([&] { return Project(BatchNorm2d(x, g, b, &running, true, 0.1, 1e-5)); },
                  {x, g, b}) < kTol);
  CHECK(GradCheck([&] { return Project(BatchNorm2d(x, g, b, &running, false, 0.1, 1e-5)); },
                  {x, g, b}) < kTol);
  CHECK(GradCheck(
            [&] {
              Rng rng(8);
              return Project(Dropout(x, 0.5, true, rng));
            },
            {x}) < kTol);
}

TEST_CASE("conv gradients on both kernels paths") {
  Tensor x = Randn({2, 3, 6, 6}, 50);
  for (int o : {1, 2, 5}) {
    Tensor w = Randn({o, 3, 3, 3}, 51), b = Randn({o}, 52);
    CHECK(GradCheck([&] { return Project(Conv2d(x, w, b, 1, 1)); }, {x, w, b}) < kTol);
    Tensor w4 = Randn({o, 3, 4, 4}, 53);
    CHECK(GradCheck([&] { return Project(Conv2d(x, w4, b, 2, 1)); }, {x, w4, b}) < kTol);
    Tensor wt = Randn({3, o, 4, 4}, 54);
    CHECK(GradCheck([&] { return Project(ConvTranspose2d(x, wt, b, 2, 1)); }, {x, wt, b}) < kTol);
  }
}

TEST_CASE("every layer kind passes a gradient check") {
  const Shape in{2, 3, 6, 6};
  std::vector<LayerSpec> specs = {
      {.kind = LayerKind::kConv2d, .in_channels = 3, .out_channels = 4, .kernel = 4, .stride = 2,
       .padding = 1},
      {.kind = LayerKind::kTransposeConv2d, .in_channels = 3, .out_channels = 2, .kernel = 4,
       .stride = 2, .padding = 1},
      {.kind = LayerKind::kBatchNorm, .in_channels = 3},
      {.kind = LayerKind::kInstanceNorm, .in_channels = 3},
      {.kind = LayerKind::kLeakyRelu},
      {.kind = LayerKind::kRelu},
      {.kind = LayerKind::kTanh},
      {.kind = LayerKind::kSigmoid},
      {.kind = LayerKind::kDropout},
      {.kind = LayerKind::kResidualBlock, .in_channels = 3},
      {.kind = LayerKind::kResidualBlock, .in_channels = 3, .inner_norm = LayerKind::kBatchNorm},
      {.kind = LayerKind::kConcatSkip},
  };
  uint64_t seed = 60;
  for (const LayerSpec &s : specs) {
    for (bool training : {true, false}) {
      CAPTURE(LayerKindName(s.kind));
      CAPTURE(training);
      CHECK(LayerGradError(s, in, training, seed) < kTol);
    }
    seed += 10;
  }
}

TEST_CASE("layer validation") {
  Rng rng(1);
  LayerSpec bad{.kind = LayerKind::kConv2d, .in_channels = 0, .out_channels = 3};
  CHECK(KindOf([&] { bad.Validate(); }) == ErrorKind::kBadConfig);
  LayerSpec drop{.kind = LayerKind::kDropout, .drop_probability = 1.0};
  CHECK(KindOf([&] { drop.Validate(); }) == ErrorKind::kBadConfig);
  Layer conv({.kind = LayerKind::kConv2d, .in_channels = 3, .out_channels = 2, .kernel = 3,
              .padding = 1},
             rng);
  ForwardContext ctx;
  CHECK(KindOf([&] { conv.Forward(Tensor({1, 4, 5, 5}), ctx); }) == ErrorKind::kShapeMismatch);
}

TEST_CASE("backward is linear in the loss") {
  Tensor x = Randn({2, 3, 8, 8}, 70);
  Tensor w = Randn({4, 3, 3, 3}, 71);
  w.set_requires_grad(true);
  auto f = [&] { return Project(Tanh(Conv2d(x, w, Tensor(), 1, 1)), 1); };
  auto g = [&] { return Project(Relu(Conv2d(x, w, Tensor(), 2, 1)), 2); };
  f().Backward();
  std::vector<double> gf(w.grad().begin(), w.grad().end());
  w.ZeroGrad();
  g().Backward();
  std::vector<double> gg(w.grad().begin(), w.grad().end());
  w.ZeroGrad();
  Add(Scale(f(), 2.5), Scale(g(), -0.75)).Backward();
  double worst = 0.0;
  for (size_t i = 0; i < gf.size(); ++i)
    worst = std::max(worst, std::abs(w.grad()[i] - (2.5 * gf[i] - 0.75 * gg[i])));
  CHECK(worst < 1e-12);
}

TEST_CASE("leaf gradients accumulate across backward calls") {
  Tensor a = Randn({4}, 80);
  a.set_requires_grad(true);
  Sum(Square(a)).Backward();
  Sum(Square(a)).Backward();
  for (size_t i = 0; i < 4; ++i) CHECK(a.grad()[i] == doctest::Approx(4.0 * a[i]));
}

TEST_CASE("error kinds") {
  Tensor a({2, 2}, 1.0), b({3}, 1.0);
  CHECK(KindOf([&] { Add(a, b); }) == ErrorKind::kShapeMismatch);
  CHECK(KindOf([&] { Log(Tensor({2}, 0.0)); }) == ErrorKind::kNonFinite);
  CHECK(KindOf([&] { Sum(a).Backward(); }) == ErrorKind::kNoGraph);
  a.set_requires_grad(true);
  CHECK(KindOf([&] { Square(a).Backward(); }) == ErrorKind::kShapeMismatch);
  {
    NoGradGuard ng;
    CHECK_FALSE(GradEnabled());
    CHECK(KindOf([&] { Sum(Square(a)).Backward(); }) == ErrorKind::kNoGraph);
  }
  CHECK(GradEnabled());
}

TEST_CASE("handles share storage, detach copies") {
  Tensor a({3}, 1.0);
  Tensor b = a;
  b.mutable_data()[0] = 5.0;
  CHECK(a[0] == 5.0);
  Tensor c = a.Detach();
  c.mutable_data()[1] = 7.0;
  CHECK(a[1] == 1.0);
  CHECK(a.Reshape({1, 3}).shape() == Shape{1, 3});
}

TEST_CASE("dropout scaling and inactive identity") {
  Tensor x({100000}, 1.0);
  Rng rng(9);
  Tensor y = Dropout(x, 0.5, true, rng);
  double s = 0.0;
  for (double v : y.data()) {
    CHECK((v == 0.0 || v == 2.0));
    s += v;
  }
  CHECK(s / 100000 == doctest::Approx(1.0).epsilon(0.02));
  Tensor z = Dropout(x, 0.5, false, rng);
  for (double v : z.data()) CHECK(v == 1.0);
}

TEST_CASE("adam first step moves each parameter by about lr") {
  Tensor p = Randn({50}, 90);
  p.set_requires_grad(true);
  std::vector<double> before(p.data().begin(), p.data().end());
  Sum(Mul(p, Randn({50}, 91, 3.0))).Backward();
  std::vector<Tensor> params{p};
  AdamState st;
  AdamStep(params, st);
  CHECK(st.step_count == 1);
  for (size_t i = 0; i < 50; ++i)
    CHECK(std::abs(p[i] - before[i]) == doctest::Approx(st.learning_rate).epsilon(1e-3));
}

TEST_CASE("adam rejects mismatched moments") {
  Tensor p({4}, 0.0);
  std::vector<Tensor> params{p};
  AdamState st;
  AdamStep(params, st);
  std::vector<Tensor> other{Tensor({5}, 0.0)};
  CHECK(KindOf([&] { AdamStep(other, st); }) == ErrorKind::kShapeMismatch);
}

TEST_CASE("forward passes are deterministic") {
  Rng r1(4), r2(4);
  Sequential a({{.kind = LayerKind::kConv2d, .in_channels = 1, .out_channels = 4, .kernel = 3,
                 .padding = 1},
                {.kind = LayerKind::kDropout}},
               r1);
  Sequential b({{.kind = LayerKind::kConv2d, .in_channels = 1, .out_channels = 4, .kernel = 3,
                 .padding = 1},
                {.kind = LayerKind::kDropout}},
               r2);
  Tensor x = Randn({1, 1, 8, 8}, 5);
  Rng d1(6), d2(6);
  ForwardContext c1{true, true, &d1}, c2{true, true, &d2};
  Tensor ya = a.Forward(x, c1), yb = b.Forward(x, c2);
  for (size_t i = 0; i < ya.numel(); ++i) CHECK(ya[i] == yb[i]);
}

}
