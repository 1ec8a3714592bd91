// include/selfecho/psola.h

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

#ifndef SELFECHO_PSOLA_H_
#define SELFECHO_PSOLA_H_

#include <string>
#include <vector>

#include "selfecho/dtw.h"
#include "selfecho/wav_io.h"

namespace selfecho {

struct PitchOptions {
  double f0_min = 60.0;
  double f0_max = 400.0;
  double frame_step_s = 0.01;
  // Normalized autocorrelation peak needed to call a frame voiced.
  double voicing_threshold = 0.45;
  // Frames whose local peak is below this fraction of the global peak are
  // treated as silence.
  double silence_threshold = 0.03;

  int step_samples(int sample_rate_hz) const;
  int window_samples(int sample_rate_hz) const;
  void Validate(int sample_rate_hz) const;
};

// Per-frame F0 (Hz, 0 = unvoiced) on a frame_step_s grid; frame i is centred
// at sample i * step + step / 2. TooShort if shorter than one analysis window.
std::vector<double> EstimateF0(const Waveform &wave, const PitchOptions &options = {});

struct PitchMarks {
  std::vector<int> positions;  // strictly increasing sample indices
};

// Marks on waveform peaks, one per period in voiced frames and every
// frame_step_s through unvoiced stretches.
PitchMarks PlacePitchMarks(const Waveform &wave, const std::vector<double> &f0,
                           const PitchOptions &options = {});

constexpr double kMinFactor = 0.25;
constexpr double kMaxFactor = 4.0;

// TD-PSOLA: two-period Hann grains centred on the marks are re-spaced by
// period / pitch_factor and re-timed so local duration scales by
// time_factor, then overlap-added; wherever the windows sum above one the
// output is divided by that sum.
// Factors are per mark and must lie in [0.25, 4] (FactorOutOfRange).
Waveform PsolaResynthesize(const Waveform &wave, const PitchMarks &marks,
                           const std::vector<double> &pitch_factor,
                           const std::vector<double> &time_factor);

struct ProsodyProfile {
  std::vector<double> f0_hz;
  std::vector<double> intensity_db;
  double total_duration_s = 0.0;
  double frame_step_s = 0.01;
  std::vector<double> segment_boundaries_s;
};

constexpr double kIntensityFloorDb = -100.0;

// Hann-weighted RMS in dB per pitch frame, floored at -100 dB.
std::vector<double> IntensityContour(const Waveform &wave, const PitchOptions &options = {});
ProsodyProfile ExtractProsody(const Waveform &wave, const PitchOptions &options = {});

// One line of a segmentation file: start_s <TAB> end_s <TAB> label.
// Labels "native:<name>" and "learner:<name>" pair segments across the
// two recordings by name.
struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string label;
};
std::vector<Segment> ReadSegments(const std::string &path);

struct TransplantOptions {
  PitchOptions pitch;
  // When non-empty, replaces DTW alignment.
  std::vector<Segment> segments;
  // Half-width (frames) of the moving average applied to the local rate.
  int rate_smoothing = 5;
};

struct TransplantReport {
  AlignmentPath path;
  std::vector<std::string> warnings;
};

// Imposes the native recording's pitch, intensity and duration on the
// learner's recording. Out-of-range factors are clamped and reported.
Waveform TransplantProsody(const Waveform &native, const Waveform &learner,
                           const TransplantOptions &options = {},
                           TransplantReport *report = nullptr);

}  // namespace selfecho

#endif  // SELFECHO_PSOLA_H_
