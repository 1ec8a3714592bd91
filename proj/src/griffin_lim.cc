// src/griffin_lim.cc

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

#include "selfecho/griffin_lim.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "selfecho/error.h"
#include "selfecho/rng.h"

namespace selfecho {

namespace {

double ConsistencyError(const StftMatrix &s, const RealMatrix &target) {
  double e = 0.0;
  for (int t = 0; t < s.n_frames(); ++t)
    for (int k = 0; k < s.n_bins(); ++k) {
      const double d = std::abs(s.at(k, t)) - target(k, t);
      e += d * d;
    }
  return std::sqrt(e);
}

// Near either end only one window overlaps and sum w^2 -> 0, so the
// least-squares overlap-add divides by almost nothing and an inconsistent
// spectrogram leaves spikes there. Fade those samples out.
void TaperEdges(std::vector<double> &x, int n_fft, int hop) {
  if (x.empty()) return;
  const std::vector<double> window = HannWindow(n_fft);
  std::vector<double> norm(x.size(), 0.0);
  for (size_t offset = 0; offset + n_fft <= x.size(); offset += hop)
    for (int n = 0; n < n_fft; ++n) norm[offset + n] += window[n] * window[n];
  // The weakest overlap away from the ends sets the knee.
  const size_t n = static_cast<size_t>(n_fft);
  const double knee = x.size() > 2 * n ? *std::min_element(norm.begin() + n, norm.end() - n)
                                       : 0.1 * *std::max_element(norm.begin(), norm.end());
  for (size_t i = 0; i < x.size(); ++i)
    if (norm[i] < knee) x[i] *= norm[i] / knee;
}

}  // namespace

GriffinLimResult GriffinLimMagnitude(const RealMatrix &target, int n_fft, int hop, int iterations,
                                     uint64_t seed) {
  if (iterations < 0) throw Error(ErrorKind::kBadConfig, "iterations must be >= 0");
  if (target.rows() != n_fft / 2 + 1 || target.cols() < 1)
    throw Error(ErrorKind::kShapeMismatch, "target magnitude has wrong shape");
  const int n_frames = static_cast<int>(target.cols());
  StftMatrix spec(n_fft, hop, n_frames);
  Rng rng(seed);
  for (int t = 0; t < n_frames; ++t)
    for (int k = 0; k < spec.n_bins(); ++k)
      spec.at(k, t) = std::polar(target(k, t), 2.0 * std::numbers::pi * rng.Uniform());

  GriffinLimResult result;
  result.signal = Istft(spec);
  for (int it = 0; it <= iterations; ++it) {
    StftMatrix analysed = Stft(result.signal, n_fft, hop);
    result.consistency_error.push_back(ConsistencyError(analysed, target));
    if (it == iterations) break;
    for (int t = 0; t < n_frames; ++t)
      for (int k = 0; k < spec.n_bins(); ++k) {
        const std::complex<double> z = analysed.at(k, t);
        const double mag = std::abs(z);
        spec.at(k, t) = mag > 0.0 ? target(k, t) * (z / mag) : std::complex<double>(target(k, t), 0.0);
      }
    result.signal = Istft(spec);
  }
  return result;
}

Waveform GriffinLim(const SpectrogramImage &image, const GriffinLimOptions &options) {
  const SpecMeta &m = image.meta;
  DspConfig config = m.ToDspConfig();
  const double cutoff = options.cutoff_hz >= 0.0 ? options.cutoff_hz
                                                 : config.cutoff_fraction * config.nyquist();
  RealMatrix linear = ImageToLinearMagnitude(image, options.nnls_iterations);
  linear = LowpassZero(linear, cutoff, m.sample_rate_hz, m.n_fft);
  GriffinLimResult r = GriffinLimMagnitude(linear, m.n_fft, m.hop, options.iterations, options.seed);
  Waveform out;
  out.sample_rate_hz = m.sample_rate_hz;
  out.samples = std::move(r.signal);
  TaperEdges(out.samples, m.n_fft, m.hop);
  double peak = 0.0;
  for (double s : out.samples) peak = std::max(peak, std::fabs(s));
  if (peak > 1.0)
    for (double &s : out.samples) s /= peak;
  return out;
}

double ConsistencySnrDb(const std::vector<double> &signal, const RealMatrix &target, int n_fft,
                        int hop) {
  StftMatrix s = Stft(signal, n_fft, hop);
  if (s.n_frames() != target.cols())
    throw Error(ErrorKind::kShapeMismatch, "frame count differs from target");
  const double e = ConsistencyError(s, target);
  const double power = target.squaredNorm();
  if (e * e <= power * 1e-12) return 120.0;
  return std::min(120.0, 10.0 * std::log10(power / (e * e)));
}

}  // namespace selfecho
