// include/selfecho/corpus.h

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

#ifndef SELFECHO_CORPUS_H_
#define SELFECHO_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace selfecho {

enum class Domain { kNative, kNonnative };

const char *DomainName(Domain d);
Domain ParseDomain(const std::string &s);

struct Recording {
  std::string utterance_id;
  std::string speaker_id;
  Domain domain = Domain::kNative;
  std::string path;  // WAV or SPEC1, relative to the manifest directory

  // "utterance|speaker|domain", unique within a manifest.
  std::string key() const;
};

// Manifest lines: utterance_id <TAB> speaker_id <TAB> domain <TAB> path.
// '#' starts a comment line. ParseError names the offending line;
// repeated (utterance, speaker, domain) triples raise DuplicateEntry.
std::vector<Recording> ParseManifest(std::istream &is, const std::string &source = "manifest");
std::vector<Recording> LoadManifest(const std::string &path);
void WriteManifest(const std::vector<Recording> &recordings, const std::string &path);

struct DomainCounts {
  size_t native = 0, nonnative = 0;
  size_t total() const { return native + nonnative; }
};
DomainCounts CountDomains(const std::vector<Recording> &recordings);

// Indices into a recording list: every non-native recording paired with
// every native recording of the same utterance.
struct RecordingPair {
  size_t nonnative = 0;
  size_t native = 0;
};
std::vector<RecordingPair> BuildPairs(const std::vector<Recording> &recordings);
// Sum over utterances of n_native * n_nonnative.
size_t ExpectedPairCount(const std::vector<Recording> &recordings);

struct Split {
  std::vector<size_t> train;  // indices, ascending
  std::vector<size_t> test;
};
// Exactly n_test indices chosen by a seeded shuffle. NotEnoughData unless
// n_test < total.
Split HoldoutSplit(size_t total, size_t n_test, uint64_t seed);
// Pairs whose two recordings are both outside the test set.
std::vector<RecordingPair> TrainingPairs(const std::vector<RecordingPair> &pairs,
                                         const std::vector<size_t> &test);

// Evaluation-only map from a non-native recording key to the key of its
// designated native counterpart.
using GroundTruthMap = std::map<std::string, std::string>;
// Lines: utterance_id <TAB> nonnative_speaker <TAB> native_speaker.
GroundTruthMap LoadGroundTruth(const std::string &path);
void WriteGroundTruth(const GroundTruthMap &map, const std::string &path);

}  // namespace selfecho

#endif  // SELFECHO_CORPUS_H_
