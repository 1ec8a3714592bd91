// include/selfecho/griffin_lim.h

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

#ifndef SELFECHO_GRIFFIN_LIM_H_
#define SELFECHO_GRIFFIN_LIM_H_

#include <cstdint>
#include <vector>

#include "selfecho/spectrogram.h"
#include "selfecho/stft.h"
#include "selfecho/wav_io.h"

namespace selfecho {

struct GriffinLimOptions {
  int iterations = 1000;
  // Negative selects cutoff_fraction * Nyquist from the DSP config.
  double cutoff_hz = -1.0;
  uint64_t seed = 0;
  int nnls_iterations = 300;
};

struct GriffinLimResult {
  std::vector<double> signal;
  // ||(|STFT(x_k)| - M)||_F for k = 0 .. iterations.
  std::vector<double> consistency_error;
};

// Alternating projections towards a signal whose STFT magnitude matches
// `target` (n_fft/2+1 x T). Starts from seeded uniform random phase.
GriffinLimResult GriffinLimMagnitude(const RealMatrix &target, int n_fft, int hop, int iterations,
                                     uint64_t seed);

// Image -> dB -> linear mel -> NNLS to linear bins -> low-pass -> phase
// reconstruction. Output covers the valid frames, fades in and out where
// fewer than two windows overlap, and is scaled down if its peak exceeds 1.
Waveform GriffinLim(const SpectrogramImage &image, const GriffinLimOptions &options);

// 10 log10(||M||^2 / ||(|STFT(x)| - M)||^2), capped at 120 dB.
double ConsistencySnrDb(const std::vector<double> &signal, const RealMatrix &target, int n_fft,
                        int hop);

}  // namespace selfecho

#endif  // SELFECHO_GRIFFIN_LIM_H_
