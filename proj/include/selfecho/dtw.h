// include/selfecho/dtw.h

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

#ifndef SELFECHO_DTW_H_
#define SELFECHO_DTW_H_

#include <utility>
#include <vector>

#include "selfecho/stft.h"

namespace selfecho {

// Monotone alignment between the columns of two feature matrices. Starts at
// (0, 0), ends at (T_a - 1, T_b - 1), steps in {(1,0), (0,1), (1,1)}.
struct AlignmentPath {
  std::vector<std::pair<int, int>> pairs;
  double cost = 0.0;
};

// Minimal cumulative Euclidean-distance path (column i of a vs column j of
// b). Ties prefer the diagonal step.
AlignmentPath DtwAlign(const RealMatrix &a, const RealMatrix &b);

// Throws BadConfig if the path violates the boundary/step invariants.
void ValidatePath(const AlignmentPath &path, int len_a, int len_b);

}  // namespace selfecho

#endif  // SELFECHO_DTW_H_
