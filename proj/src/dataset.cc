// src/dataset.cc

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

#include "selfecho/dataset.h"

#include <filesystem>
#include <set>

#include "selfecho/error.h"

namespace selfecho {

namespace fs = std::filesystem;

long CorpusImages::Find(const std::string &key) const {
  for (size_t i = 0; i < recordings.size(); ++i)
    if (recordings[i].key() == key) return static_cast<long>(i);
  return -1;
}

uint64_t PadSeedFor(uint64_t seed, const Recording &recording) {
  return MixSeed(seed, HashString(recording.key()));
}

CorpusImages ImagesFromSynth(const SynthCorpus &corpus, const DspConfig &dsp, int side, uint64_t seed) {
  CorpusImages out;
  for (const SynthItem &it : corpus.items) {
    out.recordings.push_back(it.recording);
    out.images.push_back(WaveToImage(it.wave, dsp, PadSeedFor(seed, it.recording)));
    out.grids.push_back(DownsampleImage(out.images.back(), side));
  }
  return out;
}

CorpusImages LoadCorpusImages(const std::string &manifest_path, const DspConfig &dsp, int side,
                              uint64_t seed) {
  CorpusImages out;
  const fs::path base = fs::path(manifest_path).parent_path();
  for (const Recording &r : LoadManifest(manifest_path)) {
    const fs::path p = fs::path(r.path).is_absolute() ? fs::path(r.path) : base / r.path;
    if (!fs::exists(p)) throw Error(ErrorKind::kIoFailure, "missing file " + p.string());
    SpectrogramImage image = p.extension() == ".spec1"
                                 ? ReadSpec1(p.string())
                                 : WaveToImage(LoadWav(p.string()), dsp, PadSeedFor(seed, r));
    out.recordings.push_back(r);
    out.grids.push_back(DownsampleImage(image, side));
    out.images.push_back(std::move(image));
  }
  return out;
}

std::vector<PairedGrid> MakePairedGrids(const CorpusImages &data, const std::vector<RecordingPair> &pairs) {
  std::vector<PairedGrid> out;
  out.reserve(pairs.size());
  for (const RecordingPair &p : pairs)
    out.push_back({data.recordings[p.nonnative].key(), data.recordings[p.native].key(),
                   data.grids[p.nonnative], data.grids[p.native]});
  return out;
}

std::vector<NamedGrid> DomainGrids(const CorpusImages &data, Domain domain,
                                   const std::vector<size_t> &exclude) {
  const std::set<size_t> skip(exclude.begin(), exclude.end());
  std::vector<NamedGrid> out;
  for (size_t i = 0; i < data.recordings.size(); ++i)
    if (data.recordings[i].domain == domain && !skip.count(i))
      out.push_back({data.recordings[i].key(), data.grids[i]});
  return out;
}

}  // namespace selfecho
