// src/corpus.cc

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

#include "selfecho/corpus.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "selfecho/error.h"
#include "selfecho/rng.h"

namespace selfecho {

namespace {

std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, '\t')) fields.push_back(field);
  if (!line.empty() && line.back() == '\t') fields.emplace_back();
  return fields;
}

std::string Key(const std::string &utt, const std::string &spk, Domain d) {
  return utt + "|" + spk + "|" + DomainName(d);
}

}  // namespace

const char *DomainName(Domain d) { return d == Domain::kNative ? "native" : "nonnative"; }

Domain ParseDomain(const std::string &s) {
  if (s == "native") return Domain::kNative;
  if (s == "nonnative") return Domain::kNonnative;
  throw Error(ErrorKind::kParseError, "domain must be native or nonnative, got '" + s + "'");
}

std::string Recording::key() const { return Key(utterance_id, speaker_id, domain); }

std::vector<Recording> ParseManifest(std::istream &is, const std::string &source) {
  std::vector<Recording> out;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::vector<std::string> f = SplitTabs(line);
    if (f.size() != 4)
      throw Error(ErrorKind::kParseError, where + ": expected 4 tab-separated fields, got " +
                                              std::to_string(f.size()));
    for (const std::string &s : f)
      if (s.empty()) throw Error(ErrorKind::kParseError, where + ": empty field");
    Recording r;
    r.utterance_id = f[0];
    r.speaker_id = f[1];
    try {
      r.domain = ParseDomain(f[2]);
    } catch (const Error &e) {
      throw Error(ErrorKind::kParseError, where + ": " + e.what());
    }
    r.path = f[3];
    if (!seen.insert(r.key()).second)
      throw Error(ErrorKind::kDuplicateEntry, where + ": duplicate entry " + r.key());
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Recording> LoadManifest(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIoFailure, "cannot open manifest " + path);
  return ParseManifest(is, path);
}

void WriteManifest(const std::vector<Recording> &recordings, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIoFailure, "cannot write " + path);
  for (const Recording &r : recordings)
    os << r.utterance_id << '\t' << r.speaker_id << '\t' << DomainName(r.domain) << '\t' << r.path
       << '\n';
  if (!os) throw Error(ErrorKind::kIoFailure, "write failed: " + path);
}

DomainCounts CountDomains(const std::vector<Recording> &recordings) {
  DomainCounts c;
  for (const Recording &r : recordings) (r.domain == Domain::kNative ? c.native : c.nonnative)++;
  return c;
}

std::vector<RecordingPair> BuildPairs(const std::vector<Recording> &recordings) {
  std::map<std::string, std::vector<size_t>> native, nonnative;
  for (size_t i = 0; i < recordings.size(); ++i)
    (recordings[i].domain == Domain::kNative ? native : nonnative)[recordings[i].utterance_id]
        .push_back(i);
  // Ordered by first appearance of the non-native recording.
  std::vector<RecordingPair> out;
  for (size_t i = 0; i < recordings.size(); ++i) {
    if (recordings[i].domain != Domain::kNonnative) continue;
    auto it = native.find(recordings[i].utterance_id);
    if (it == native.end()) continue;
    for (size_t j : it->second) out.push_back({i, j});
  }
  return out;
}

size_t ExpectedPairCount(const std::vector<Recording> &recordings) {
  std::map<std::string, std::pair<size_t, size_t>> counts;
  for (const Recording &r : recordings)
    (r.domain == Domain::kNative ? counts[r.utterance_id].first : counts[r.utterance_id].second)++;
  size_t total = 0;
  for (const auto &[utt, c] : counts) total += c.first * c.second;
  return total;
}

Split HoldoutSplit(size_t total, size_t n_test, uint64_t seed) {
  if (n_test >= total)
    throw Error(ErrorKind::kNotEnoughData, "holdout of " + std::to_string(n_test) + " needs more than " +
                                               std::to_string(total) + " items");
  std::vector<size_t> order(total);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(MixSeed(seed, 0x73706c));
  for (size_t i = total; i > 1; --i) std::swap(order[i - 1], order[rng.Below(i)]);
  Split s;
  s.test.assign(order.begin(), order.begin() + n_test);
  s.train.assign(order.begin() + n_test, order.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

std::vector<RecordingPair> TrainingPairs(const std::vector<RecordingPair> &pairs,
                                         const std::vector<size_t> &test) {
  const std::set<size_t> held(test.begin(), test.end());
  std::vector<RecordingPair> out;
  for (const RecordingPair &p : pairs)
    if (!held.count(p.nonnative) && !held.count(p.native)) out.push_back(p);
  return out;
}

GroundTruthMap LoadGroundTruth(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kMissingGroundTruth, "cannot open ground-truth map " + path);
  GroundTruthMap map;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = SplitTabs(line);
    if (f.size() != 3)
      throw Error(ErrorKind::kParseError, path + ":" + std::to_string(line_no) +
                                              ": expected utterance, nonnative speaker, native speaker");
    const std::string key = Key(f[0], f[1], Domain::kNonnative);
    if (!map.emplace(key, Key(f[0], f[2], Domain::kNative)).second)
      throw Error(ErrorKind::kDuplicateEntry, path + ":" + std::to_string(line_no) + ": " + key);
  }
  return map;
}

void WriteGroundTruth(const GroundTruthMap &map, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIoFailure, "cannot write " + path);
  os << "# utterance_id\tnonnative_speaker\tnative_speaker\n";
  for (const auto &[nn, nat] : map) {
    // Keys are utterance|speaker|domain.
    const size_t a = nn.find('|'), b = nn.find('|', a + 1);
    const size_t c = nat.find('|'), d = nat.find('|', c + 1);
    os << nn.substr(0, a) << '\t' << nn.substr(a + 1, b - a - 1) << '\t'
       << nat.substr(c + 1, d - c - 1) << '\n';
  }
  if (!os) throw Error(ErrorKind::kIoFailure, "write failed: " + path);
}

}  // namespace selfecho
