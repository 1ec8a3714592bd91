// src/adam.cc

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

#include "selfecho/adam.h"

#include <cmath>

#include "selfecho/error.h"

namespace selfecho {

void AdamStep(std::vector<Tensor> &params, AdamState &state) {
  if (state.beta1 < 0.0 || state.beta1 >= 1.0 || state.beta2 < 0.0 || state.beta2 >= 1.0)
    throw Error(ErrorKind::kBadConfig, "adam betas must lie in [0, 1)");
  if (state.first_moment.empty() && state.step_count == 0) {
    for (const Tensor &p : params) {
      state.first_moment.emplace_back(p.numel(), 0.0);
      state.second_moment.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw Error(ErrorKind::kShapeMismatch, "adam state holds " +
                                               std::to_string(state.first_moment.size()) +
                                               " buffers for " + std::to_string(params.size()) +
                                               " parameters");
  for (size_t i = 0; i < params.size(); ++i)
    if (state.first_moment[i].size() != params[i].numel() ||
        state.second_moment[i].size() != params[i].numel())
      throw Error(ErrorKind::kShapeMismatch, "adam moment buffer " + std::to_string(i) +
                                                 " does not match its parameter");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor &p = params[i];
    const bool has_grad = p.has_grad();
    auto values = p.mutable_data();
    auto grad = p.grad();
    auto &m = state.first_moment[i];
    auto &v = state.second_moment[i];
    for (size_t j = 0; j < values.size(); ++j) {
      const double g = has_grad ? grad[j] : 0.0;
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace selfecho
