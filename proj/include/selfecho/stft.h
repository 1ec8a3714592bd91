// include/selfecho/stft.h

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

#ifndef SELFECHO_STFT_H_
#define SELFECHO_STFT_H_

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "selfecho/wav_io.h"

namespace selfecho {

using RealMatrix = Eigen::MatrixXd;

// Analysis/synthesis settings shared by the spectrogram pipeline.
struct DspConfig {
  int sample_rate_hz = 16000;
  int n_fft = 512;
  // One-third overlap of the 512-sample window.
  int hop = 342;
  int n_mels = 128;
  double mel_low_hz = 0.0;
  double mel_high_hz = 0.0;  // 0 selects Nyquist
  double db_floor = -80.0;
  double db_ceiling = 0.0;
  double db_epsilon = 1e-5;
  // true: linear magnitude -> mel -> dB. false: dB -> mel (literal order).
  bool mel_before_db = true;
  double noise_band = 0.05;
  // Low-pass cutoff as a fraction of Nyquist when no explicit value is given.
  double cutoff_fraction = 0.95;

  double nyquist() const { return sample_rate_hz / 2.0; }
  double mel_high() const { return mel_high_hz > 0.0 ? mel_high_hz : nyquist(); }
  int n_bins() const { return n_fft / 2 + 1; }
  void Validate() const;
};

// Complex STFT, (n_fft/2 + 1) bins x n_frames, stored frame-major.
class StftMatrix {
 public:
  StftMatrix() = default;
  StftMatrix(int n_fft, int hop, int n_frames);

  int n_fft() const { return n_fft_; }
  int hop() const { return hop_; }
  int n_bins() const { return n_fft_ / 2 + 1; }
  int n_frames() const { return n_frames_; }
  std::complex<double> &at(int bin, int frame) {
    return bins_[static_cast<size_t>(frame) * n_bins() + bin];
  }
  const std::complex<double> &at(int bin, int frame) const {
    return bins_[static_cast<size_t>(frame) * n_bins() + bin];
  }
  std::complex<double> *frame(int t) { return bins_.data() + static_cast<size_t>(t) * n_bins(); }
  const std::complex<double> *frame(int t) const {
    return bins_.data() + static_cast<size_t>(t) * n_bins();
  }
  RealMatrix Magnitude() const;

 private:
  int n_fft_ = 0, hop_ = 0, n_frames_ = 0;
  std::vector<std::complex<double>> bins_;
};

// Periodic Hann window.
std::vector<double> HannWindow(int length);

// Reusable real FFT of a fixed size.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;

  int size() const { return n_; }
  void Forward(const double *in, std::complex<double> *out);
  // Unnormalized inverse: Forward followed by Inverse scales by n.
  void Inverse(const std::complex<double> *in, double *out);

 private:
  struct Impl;
  int n_;
  std::unique_ptr<Impl> impl_;
};

double WindowSum(const std::vector<double> &window);
int NumFrames(size_t n_samples, int n_fft, int hop);
// Windowed DFT of each frame divided by the window sum, so a full-scale
// sinusoid centred on a bin has magnitude 0.5 (about -6 dB).
StftMatrix Stft(const std::vector<double> &samples, int n_fft, int hop);
StftMatrix Stft(const Waveform &wave, const DspConfig &config);
// Least-squares weighted overlap-add: x[n] = sum_t w y_t / sum_t w^2. Output
// length is (n_frames - 1) * hop + n_fft.
std::vector<double> Istft(const StftMatrix &stft);

// 20 log10(|X| + eps) clipped to [db_floor, db_ceiling].
RealMatrix MagnitudeDb(const StftMatrix &stft, const DspConfig &config);
RealMatrix AmplitudeToDb(const RealMatrix &magnitude, const DspConfig &config);
// Inverse of AmplitudeToDb above the floor; floor values map to 0.
RealMatrix DbToAmplitude(const RealMatrix &db, const DspConfig &config);

// Zeros every row whose bin frequency is strictly above cutoff_hz.
RealMatrix LowpassZero(const RealMatrix &linear_mag, double cutoff_hz, int sample_rate_hz,
                       int n_fft);

}  // namespace selfecho

#endif  // SELFECHO_STFT_H_
