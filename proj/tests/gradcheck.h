// tests/gradcheck.h

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

#ifndef SELFECHO_TESTS_GRADCHECK_H_
#define SELFECHO_TESTS_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "selfecho/tensor.h"

namespace selfecho::testing {

// Norm-wise relative error between reverse-mode gradients of `loss` with
// respect to each leaf and central differences with step h.
inline double GradCheck(const std::function<Tensor()> &loss, std::vector<Tensor> leaves,
                        double h = 1e-5) {
  for (Tensor &t : leaves) {
    t.set_requires_grad(true);
    t.ZeroGrad();
  }
  loss().Backward();
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (Tensor &t : leaves) {
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    auto data = t.mutable_data();
    for (size_t i = 0; i < t.numel(); ++i) {
      const double keep = data[i];
      double plus, minus;
      {
        NoGradGuard ng;
        data[i] = keep + h;
        plus = loss().item();
        data[i] = keep - h;
        minus = loss().item();
      }
      data[i] = keep;
      const double numeric = (plus - minus) / (2 * h);
      diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
    }
  }
  const double scale = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
  return std::sqrt(diff2) / scale;
}

// A fixed random projection turns any tensor into a scalar with generic
// per-element weights.
inline Tensor Project(const Tensor &t, uint64_t seed = 99) {
  Rng rng(seed);
  return Sum(Mul(t, Tensor::RandomNormal(t.shape(), rng, 0.0, 1.0)));
}

}  // namespace selfecho::testing

#endif  // SELFECHO_TESTS_GRADCHECK_H_
