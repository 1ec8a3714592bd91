// include/selfecho/synth.h

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

#ifndef SELFECHO_SYNTH_H_
#define SELFECHO_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "selfecho/corpus.h"
#include "selfecho/psola.h"
#include "selfecho/wav_io.h"

namespace selfecho {

// Two-domain corpus of source-filter "syllable sequences". Natives differ
// only in voice (f0 base, formant scale); non-native renditions apply the
// enabled distortions to the same utterance template.
struct SynthSpec {
  int n_utterances = 10;
  int n_native_speakers = 3;
  int n_nonnative_speakers = 5;
  int sample_rate_hz = 16000;

  bool monophthongization = true;
  double monophthong_strength = 1.0;  // 1 freezes formants at the onset vowel
  bool final_deletion = true;
  double truncation_fraction = 0.15;  // of the rendered length, in [0, 0.5]
  bool duration_stretch = true;
  double stretch_factor = 1.3;  // in [1, 2]
  bool pitch_contour_flatten = true;
  double flatten_strength = 1.0;  // 1 removes all pitch movement

  uint64_t seed = 0;

  void Validate() const;  // BadSpec
};

struct SynthItem {
  Recording recording;
  Waveform wave;
  // Syllable, closure and burst intervals, labelled "syl<k>", "closure",
  // "burst".
  std::vector<Segment> segments;
};

struct SynthCorpus {
  std::vector<SynthItem> items;  // natives first, then non-natives
  GroundTruthMap ground_truth;   // non-native key -> native key

  std::vector<Recording> recordings() const;
};

// Pure function of the spec: same spec, bit-identical audio.
SynthCorpus GenerateSyntheticCorpus(const SynthSpec &spec);

// Writes native/*.wav, nonnative/*.wav, manifest.tsv and
// ground_truth_pairs.tsv below `dir` (created if missing).
void WriteSyntheticCorpus(const SynthCorpus &corpus, const std::string &dir);

std::string NativeSpeakerId(int k);
std::string NonnativeSpeakerId(int k);
std::string UtteranceId(int u);

}  // namespace selfecho

#endif  // SELFECHO_SYNTH_H_
