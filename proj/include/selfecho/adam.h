// include/selfecho/adam.h

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

#ifndef SELFECHO_ADAM_H_
#define SELFECHO_ADAM_H_

#include <cstdint>
#include <vector>

#include "selfecho/tensor.h"

namespace selfecho {

struct AdamState {
  uint64_t step_count = 0;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update over `params`, reading each parameter's
// accumulated gradient (a missing gradient counts as zero). Moment buffers
// are allocated on the first call and must match parameter shapes after.
void AdamStep(std::vector<Tensor> &params, AdamState &state);

}  // namespace selfecho

#endif  // SELFECHO_ADAM_H_
