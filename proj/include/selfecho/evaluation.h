// include/selfecho/evaluation.h

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

#ifndef SELFECHO_EVALUATION_H_
#define SELFECHO_EVALUATION_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selfecho/corpus.h"
#include "selfecho/gan.h"
#include "selfecho/spectrogram.h"
#include "selfecho/wav_io.h"

namespace selfecho {

// RMS difference of the de-normalized dB values over all bands and the
// first min(n_valid) frames.
double LogSpectralDistance(const SpectrogramImage &a, const SpectrogramImage &b);
// Same on training grids, over min(valid_columns) columns.
double LogSpectralDistance(const Grid &a, const Grid &b, double db_floor = -80.0,
                           double db_ceiling = 0.0);

constexpr double kSnrCapDb = 120.0;

// 10 log10(|ref|^2 / |ref - est|^2) after shifting `est` by the integer lag
// in [-max_lag, max_lag] that maximizes the SNR, over the overlapping part.
// LengthMismatch when the lengths differ by more than max_lag.
double ReconstructionSnr(const Waveform &reference, const Waveform &estimate, int max_lag = 512);

// Mean sigmoid over the logit map. `condition` is required for a
// two-channel (conditional) discriminator and ignored otherwise.
double NativelikenessScore(Discriminator &d, const Grid &image, const Grid *condition = nullptr);

struct EvalItem {
  std::string utterance_id;
  std::string speaker_id;
  double lsd_to_reference_db = 0.0;
  double lsd_identity_baseline_db = 0.0;
  std::optional<double> cycle_error;
  double nativelikeness_score = 0.0;
  std::optional<double> psola_lsd_db;
};

struct Aggregate {
  double mean = 0.0, stddev = 0.0;
  size_t count = 0;
};
Aggregate Summarize(const std::vector<double> &values);

struct ManualMos {
  std::string utterance_id, system;
  double holistic = 0, segmental = 0, suprasegmental = 0, imitability = 0, sound_quality = 0;
};
// CSV "utterance_id,system,holistic,segmental,suprasegmental,imitability,
// sound_quality" with a header row; every rating must lie in [1, 5].
std::vector<ManualMos> LoadManualMos(const std::string &path);

struct EvalReport {
  std::string system;
  std::vector<EvalItem> items;
  std::vector<ManualMos> manual_mos;

  Aggregate lsd() const;
  Aggregate identity_lsd() const;
  Aggregate cycle() const;
  Aggregate nativelikeness() const;
  Aggregate psola_lsd() const;
};

void WriteEvalCsv(const EvalReport &report, const std::string &path);
std::string SummaryText(const EvalReport &report);

struct EvalModels {
  TrainMode mode = TrainMode::kPaired;
  Generator *g = nullptr;      // non-native -> native
  Generator *f = nullptr;      // native -> non-native, unpaired only
  Discriminator *d = nullptr;  // conditional D (paired) or native-domain D
  bool deterministic = false;
  uint64_t seed = 0;
};

struct EvalInput {
  Recording recording;  // non-native, held out
  Grid image;
};

// `natives` maps native recording keys to their grids; `psola` maps
// non-native keys to grids of PSOLA outputs (optional per item).
// MissingGroundTruth when an item has no counterpart.
EvalReport EvaluateSystem(const EvalModels &models, const std::vector<EvalInput> &test,
                          const GroundTruthMap &ground_truth,
                          const std::map<std::string, Grid> &natives,
                          const std::map<std::string, Grid> &psola = {});

// Translate one grid with a generator.
Grid Translate(Generator &g, const Grid &x, bool deterministic, uint64_t seed);

}  // namespace selfecho

#endif  // SELFECHO_EVALUATION_H_
