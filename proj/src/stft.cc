// src/stft.cc

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

#include "selfecho/stft.h"

#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "selfecho/error.h"

namespace selfecho {

namespace {
// FFTW's planner is not thread-safe; executing a plan is.
std::mutex g_planner_mutex;
}  // namespace

void DspConfig::Validate() const {
  auto fail = [](const std::string &m) { throw Error(ErrorKind::kBadConfig, m); };
  if (sample_rate_hz <= 0) fail("sample_rate must be positive");
  if (n_fft < 8 || (n_fft & (n_fft - 1)) != 0) fail("n_fft must be a power of two >= 8");
  if (hop < 1 || hop > n_fft) fail("hop must be in [1, n_fft]");
  if (n_mels < 1) fail("n_mels must be >= 1");
  if (mel_low_hz < 0.0 || mel_high() > nyquist() || mel_low_hz >= mel_high())
    fail("mel range must satisfy 0 <= low < high <= Nyquist");
  if (db_floor >= db_ceiling) fail("db_floor must be below db_ceiling");
  if (db_epsilon <= 0.0) fail("db_epsilon must be positive");
  if (noise_band < 0.0 || noise_band > 1.0) fail("noise_band must be in [0, 1]");
  if (cutoff_fraction < 0.0 || cutoff_fraction > 1.0) fail("cutoff_fraction must be in [0, 1]");
}

StftMatrix::StftMatrix(int n_fft, int hop, int n_frames)
    : n_fft_(n_fft), hop_(hop), n_frames_(n_frames),
      bins_(static_cast<size_t>(n_frames) * (n_fft / 2 + 1)) {}

RealMatrix StftMatrix::Magnitude() const {
  RealMatrix m(n_bins(), n_frames_);
  for (int t = 0; t < n_frames_; ++t)
    for (int k = 0; k < n_bins(); ++k) m(k, t) = std::abs(at(k, t));
  return m;
}

std::vector<double> HannWindow(int length) {
  std::vector<double> w(length);
  for (int n = 0; n < length; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  return w;
}

struct RealFft::Impl {
  double *real = nullptr;
  fftw_complex *spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

RealFft::RealFft(int n) : n_(n), impl_(std::make_unique<Impl>()) {
  std::lock_guard<std::mutex> lock(g_planner_mutex);
  impl_->real = fftw_alloc_real(n);
  impl_->spec = fftw_alloc_complex(n / 2 + 1);
  impl_->forward = fftw_plan_dft_r2c_1d(n, impl_->real, impl_->spec, FFTW_ESTIMATE);
  impl_->inverse = fftw_plan_dft_c2r_1d(n, impl_->spec, impl_->real, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(g_planner_mutex);
  fftw_destroy_plan(impl_->forward);
  fftw_destroy_plan(impl_->inverse);
  fftw_free(impl_->real);
  fftw_free(impl_->spec);
}

void RealFft::Forward(const double *in, std::complex<double> *out) {
  std::copy(in, in + n_, impl_->real);
  fftw_execute(impl_->forward);
  for (int k = 0; k <= n_ / 2; ++k) out[k] = {impl_->spec[k][0], impl_->spec[k][1]};
}

void RealFft::Inverse(const std::complex<double> *in, double *out) {
  for (int k = 0; k <= n_ / 2; ++k) {
    impl_->spec[k][0] = in[k].real();
    impl_->spec[k][1] = in[k].imag();
  }
  // A real signal has purely real DC and Nyquist bins.
  impl_->spec[0][1] = 0.0;
  impl_->spec[n_ / 2][1] = 0.0;
  fftw_execute(impl_->inverse);
  std::copy(impl_->real, impl_->real + n_, out);
}

double WindowSum(const std::vector<double> &window) {
  double s = 0.0;
  for (double w : window) s += w;
  return s;
}

int NumFrames(size_t n_samples, int n_fft, int hop) {
  if (n_samples < static_cast<size_t>(n_fft)) return 0;
  return static_cast<int>((n_samples - n_fft) / hop) + 1;
}

StftMatrix Stft(const std::vector<double> &samples, int n_fft, int hop) {
  const int n_frames = NumFrames(samples.size(), n_fft, hop);
  if (n_frames < 1)
    throw Error(ErrorKind::kTooShort, std::to_string(samples.size()) + " samples, need at least " +
                                          std::to_string(n_fft));
  StftMatrix out(n_fft, hop, n_frames);
  const std::vector<double> window = HannWindow(n_fft);
  const double gain = 1.0 / WindowSum(window);
  RealFft fft(n_fft);
  std::vector<double> frame(n_fft);
  for (int t = 0; t < n_frames; ++t) {
    const double *src = samples.data() + static_cast<size_t>(t) * hop;
    for (int n = 0; n < n_fft; ++n) frame[n] = src[n] * window[n] * gain;
    fft.Forward(frame.data(), out.frame(t));
  }
  return out;
}

StftMatrix Stft(const Waveform &wave, const DspConfig &config) {
  return Stft(wave.samples, config.n_fft, config.hop);
}

std::vector<double> Istft(const StftMatrix &stft) {
  const int n_fft = stft.n_fft(), hop = stft.hop(), n_frames = stft.n_frames();
  if (n_frames == 0) return {};
  const size_t length = static_cast<size_t>(n_frames - 1) * hop + n_fft;
  std::vector<double> out(length, 0.0), norm(length, 0.0);
  const std::vector<double> window = HannWindow(n_fft);
  const double gain = WindowSum(window) / n_fft;
  RealFft fft(n_fft);
  std::vector<double> frame(n_fft);
  for (int t = 0; t < n_frames; ++t) {
    fft.Inverse(stft.frame(t), frame.data());
    const size_t offset = static_cast<size_t>(t) * hop;
    for (int n = 0; n < n_fft; ++n) {
      out[offset + n] += window[n] * frame[n] * gain;
      norm[offset + n] += window[n] * window[n];
    }
  }
  for (size_t i = 0; i < length; ++i) out[i] = norm[i] > 1e-10 ? out[i] / norm[i] : 0.0;
  return out;
}

RealMatrix AmplitudeToDb(const RealMatrix &magnitude, const DspConfig &config) {
  return magnitude.unaryExpr([&config](double m) {
    return std::clamp(20.0 * std::log10(m + config.db_epsilon), config.db_floor,
                      config.db_ceiling);
  });
}

RealMatrix DbToAmplitude(const RealMatrix &db, const DspConfig &config) {
  return db.unaryExpr([&config](double d) {
    // The floor stands for "at or below"; treat it as no energy.
    if (d <= config.db_floor) return 0.0;
    return std::max(0.0, std::pow(10.0, d / 20.0) - config.db_epsilon);
  });
}

RealMatrix MagnitudeDb(const StftMatrix &stft, const DspConfig &config) {
  return AmplitudeToDb(stft.Magnitude(), config);
}

RealMatrix LowpassZero(const RealMatrix &linear_mag, double cutoff_hz, int sample_rate_hz,
                       int n_fft) {
  if (!(cutoff_hz >= 0.0) || cutoff_hz > sample_rate_hz / 2.0)
    throw Error(ErrorKind::kBadCutoff, "cutoff " + std::to_string(cutoff_hz) +
                                           " Hz outside [0, Nyquist]");
  RealMatrix out = linear_mag;
  for (int k = 0; k < out.rows(); ++k)
    if (static_cast<double>(k) * sample_rate_hz / n_fft > cutoff_hz) out.row(k).setZero();
  return out;
}

}  // namespace selfecho
