// include/selfecho/mel.h

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

#ifndef SELFECHO_MEL_H_
#define SELFECHO_MEL_H_

#include <vector>

#include "selfecho/stft.h"

namespace selfecho {

// Slaney-style mel scale: linear below 1 kHz, logarithmic above.
double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filterbank, n_mels x (n_fft/2 + 1), bands ordered by centre.
class MelFilterbank {
 public:
  explicit MelFilterbank(const DspConfig &config);

  const RealMatrix &weights() const { return weights_; }
  // n_mels + 2 edge frequencies; band b spans edges[b] .. edges[b + 2].
  const std::vector<double> &edges_hz() const { return edges_hz_; }
  int n_mels() const { return static_cast<int>(weights_.rows()); }
  int n_bins() const { return static_cast<int>(weights_.cols()); }

  // weights * input. Throws ShapeMismatch unless input has n_bins rows.
  RealMatrix Project(const RealMatrix &input) const;
  // Nonnegative least-squares inverse of Project (projected accelerated
  // gradient). Throws ShapeMismatch unless input has n_mels rows.
  RealMatrix PseudoInverse(const RealMatrix &mel, int iterations = 300) const;
  // Copy with each band normalized to unit sum (a weighted average), used
  // when projecting dB values rather than magnitudes.
  MelFilterbank RowNormalized() const;

 private:
  MelFilterbank() = default;
  void ComputeStepSize();

  RealMatrix weights_;
  std::vector<double> edges_hz_;
  double lipschitz_ = 1.0;
};

}  // namespace selfecho

#endif  // SELFECHO_MEL_H_
