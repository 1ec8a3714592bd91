// include/selfecho/dataset.h

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

#ifndef SELFECHO_DATASET_H_
#define SELFECHO_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "selfecho/corpus.h"
#include "selfecho/spectrogram.h"
#include "selfecho/synth.h"
#include "selfecho/trainer.h"

namespace selfecho {

// Recordings with their spectrogram images and training grids, index-aligned.
struct CorpusImages {
  std::vector<Recording> recordings;
  std::vector<SpectrogramImage> images;
  std::vector<Grid> grids;

  // Index of a recording key; -1 when absent.
  long Find(const std::string &key) const;
};

// Padding noise seed of one recording, stable across runs and orderings.
uint64_t PadSeedFor(uint64_t seed, const Recording &recording);

CorpusImages ImagesFromSynth(const SynthCorpus &corpus, const DspConfig &dsp, int side, uint64_t seed);
// Reads every manifest entry (WAV, or SPEC1 by extension) relative to the
// manifest's directory.
CorpusImages LoadCorpusImages(const std::string &manifest_path, const DspConfig &dsp, int side,
                              uint64_t seed);

std::vector<PairedGrid> MakePairedGrids(const CorpusImages &data, const std::vector<RecordingPair> &pairs);
std::vector<NamedGrid> DomainGrids(const CorpusImages &data, Domain domain,
                                   const std::vector<size_t> &exclude = {});

}  // namespace selfecho

#endif  // SELFECHO_DATASET_H_
