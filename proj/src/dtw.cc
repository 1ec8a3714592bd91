// src/dtw.cc

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

#include "selfecho/dtw.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "selfecho/error.h"

namespace selfecho {

AlignmentPath DtwAlign(const RealMatrix &a, const RealMatrix &b) {
  if (a.cols() < 1 || b.cols() < 1) throw Error(ErrorKind::kTooShort, "dtw needs non-empty inputs");
  if (a.rows() != b.rows()) throw Error(ErrorKind::kShapeMismatch, "dtw feature dimensions differ");
  const int n = static_cast<int>(a.cols()), m = static_cast<int>(b.cols());
  const double inf = std::numeric_limits<double>::infinity();
  RealMatrix acc = RealMatrix::Constant(n, m, inf);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double d = (a.col(i) - b.col(j)).norm();
      double best = 0.0;
      if (i > 0 || j > 0) {
        best = inf;
        if (i > 0 && j > 0) best = acc(i - 1, j - 1);
        if (i > 0) best = std::min(best, acc(i - 1, j));
        if (j > 0) best = std::min(best, acc(i, j - 1));
      }
      acc(i, j) = d + best;
    }

  AlignmentPath path;
  path.cost = acc(n - 1, m - 1);
  int i = n - 1, j = m - 1;
  path.pairs.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const double diag = acc(i - 1, j - 1), up = acc(i - 1, j), left = acc(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    } else if (i > 0) {
      --i;
    } else {
      --j;
    }
    path.pairs.emplace_back(i, j);
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return path;
}

void ValidatePath(const AlignmentPath &path, int len_a, int len_b) {
  auto fail = [](const std::string &m) { throw Error(ErrorKind::kBadConfig, "invalid path: " + m); };
  if (path.pairs.empty()) fail("empty");
  if (path.pairs.front() != std::make_pair(0, 0)) fail("does not start at (0,0)");
  if (path.pairs.back() != std::make_pair(len_a - 1, len_b - 1)) fail("does not end at the corner");
  for (size_t k = 1; k < path.pairs.size(); ++k) {
    const int di = path.pairs[k].first - path.pairs[k - 1].first;
    const int dj = path.pairs[k].second - path.pairs[k - 1].second;
    if (!((di == 1 && dj == 0) || (di == 0 && dj == 1) || (di == 1 && dj == 1)))
      fail("illegal step at " + std::to_string(k));
  }
}

}  // namespace selfecho
