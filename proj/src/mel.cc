// src/mel.cc

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

#include "selfecho/mel.h"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "selfecho/error.h"

namespace selfecho {

namespace {
constexpr double kLinearHzPerMel = 200.0 / 3.0;
constexpr double kBreakHz = 1000.0;
constexpr double kBreakMel = kBreakHz / kLinearHzPerMel;
const double kLogStep = std::log(6.4) / 27.0;
}  // namespace

double HzToMel(double hz) {
  if (hz < kBreakHz) return hz / kLinearHzPerMel;
  return kBreakMel + std::log(hz / kBreakHz) / kLogStep;
}

double MelToHz(double mel) {
  if (mel < kBreakMel) return mel * kLinearHzPerMel;
  return kBreakHz * std::exp(kLogStep * (mel - kBreakMel));
}

MelFilterbank::MelFilterbank(const DspConfig &config) {
  config.Validate();
  const int n_bins = config.n_bins();
  const int n_mels = config.n_mels;
  const double lo = HzToMel(config.mel_low_hz), hi = HzToMel(config.mel_high());
  edges_hz_.resize(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges_hz_[i] = MelToHz(lo + (hi - lo) * i / (n_mels + 1));

  weights_ = RealMatrix::Zero(n_mels, n_bins);
  for (int b = 0; b < n_mels; ++b) {
    const double left = edges_hz_[b], centre = edges_hz_[b + 1], right = edges_hz_[b + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * config.sample_rate_hz / config.n_fft;
      const double rise = (f - left) / (centre - left);
      const double fall = (right - f) / (right - centre);
      weights_(b, k) = std::max(0.0, std::min(rise, fall));
    }
    if (weights_.row(b).maxCoeff() <= 0.0)
      throw Error(ErrorKind::kBadConfig, "mel band " + std::to_string(b) +
                                             " covers no FFT bin; narrow n_mels or widen range");
  }
  ComputeStepSize();
}

void MelFilterbank::ComputeStepSize() {
  // Lipschitz constant of the NNLS gradient: largest eigenvalue of W W^T.
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(weights_ * weights_.transpose(),
                                                   Eigen::EigenvaluesOnly);
  lipschitz_ = solver.eigenvalues().maxCoeff();
}

MelFilterbank MelFilterbank::RowNormalized() const {
  MelFilterbank out;
  out.edges_hz_ = edges_hz_;
  out.weights_ = weights_;
  for (int b = 0; b < out.weights_.rows(); ++b) out.weights_.row(b) /= out.weights_.row(b).sum();
  out.ComputeStepSize();
  return out;
}

RealMatrix MelFilterbank::Project(const RealMatrix &input) const {
  if (input.rows() != n_bins())
    throw Error(ErrorKind::kShapeMismatch, "mel projection expects " + std::to_string(n_bins()) +
                                               " rows, got " + std::to_string(input.rows()));
  return weights_ * input;
}

RealMatrix MelFilterbank::PseudoInverse(const RealMatrix &mel, int iterations) const {
  if (mel.rows() != n_mels())
    throw Error(ErrorKind::kShapeMismatch, "mel inverse expects " + std::to_string(n_mels()) +
                                               " rows, got " + std::to_string(mel.rows()));
  const RealMatrix wt = weights_.transpose();
  // Start from the transpose normalized so that each bin receives the
  // weighted average of the bands covering it.
  Eigen::VectorXd col_sums = weights_.colwise().sum().transpose();
  RealMatrix x = wt * mel;
  for (int k = 0; k < x.rows(); ++k)
    x.row(k) /= col_sums(k) > 0.0 ? col_sums(k) : 1.0;
  x = x.cwiseMax(0.0);

  const double step = 1.0 / lipschitz_;
  RealMatrix y = x, x_prev = x;
  double momentum = 1.0;
  for (int it = 0; it < iterations; ++it) {
    RealMatrix grad = wt * (weights_ * y - mel);
    x = (y - step * grad).cwiseMax(0.0);
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = x + ((momentum - 1.0) / next) * (x - x_prev);
    x_prev = x;
    momentum = next;
  }
  return x;
}

}  // namespace selfecho
