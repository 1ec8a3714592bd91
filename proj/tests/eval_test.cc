// tests/eval_test.cc

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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <vector>

#include "doctest.h"
#include "selfecho/error.h"
#include "selfecho/evaluation.h"

using namespace selfecho;
namespace fs = std::filesystem;

namespace {

ErrorKind KindOf(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::kIoFailure;
}

Grid RandomGrid(int side, uint64_t seed, int valid) {
  Rng rng(seed);
  Grid g;
  g.side = side;
  g.valid_columns = valid;
  g.pixels.resize(static_cast<size_t>(side) * side);
  for (double &v : g.pixels) v = rng.Uniform(0.1, 0.9);
  return g;
}

Waveform Noise(size_t n, uint64_t seed, double amp) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (double &v : w.samples) v = rng.Normal() * amp;
  return w;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("log-spectral distance on grids") {
  Grid a = RandomGrid(32, 1, 20), b = RandomGrid(32, 2, 24);
  CHECK(LogSpectralDistance(a, a) == 0.0);
  Grid shifted = a;
  for (double &v : shifted.pixels) v += 6.0 / 80.0;
  CHECK(LogSpectralDistance(a, shifted) == doctest::Approx(6.0).epsilon(1e-12));
  // Oracle over all rows and the first min(valid) columns.
  double s = 0.0;
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 20; ++c) {
      const double d = 80.0 * (a.at(r, c) - b.at(r, c));
      s += d * d;
    }
  CHECK(std::abs(LogSpectralDistance(a, b) - std::sqrt(s / (32 * 20))) < 1e-9);
  CHECK(LogSpectralDistance(a, b) == LogSpectralDistance(b, a));
  Grid small = RandomGrid(16, 3, 8);
  CHECK(KindOf([&] { LogSpectralDistance(a, small); }) == ErrorKind::kShapeMismatch);
}

TEST_CASE("log-spectral distance on images") {
  SpectrogramImage a, b;
  a.meta.n_valid_frames = 40;
  b.meta.n_valid_frames = 46;
  for (float &p : a.pixels) p = 0.5f;
  for (float &p : b.pixels) p = 0.5f + 0.075f;
  CHECK(LogSpectralDistance(a, b) == doctest::Approx(6.0).epsilon(1e-6));
  CHECK(LogSpectralDistance(a, a) == 0.0);
}

TEST_CASE("reconstruction SNR") {
  Waveform ref = Noise(16000, 1, 0.2);
  CHECK(ReconstructionSnr(ref, ref) == kSnrCapDb);
  Waveform zero{std::vector<double>(16000, 0.0), 16000};
  CHECK(ReconstructionSnr(ref, zero) == doctest::Approx(0.0).epsilon(1e-9));
  Waveform noisy = ref;
  Waveform n = Noise(16000, 2, 0.2 * 0.01);
  for (size_t i = 0; i < noisy.size(); ++i) noisy.samples[i] += n.samples[i];
  CHECK(std::abs(ReconstructionSnr(ref, noisy) - 40.0) <= 1.0);

  // A delayed copy is found within the lag window.
  Waveform late = ref;
  late.samples.insert(late.samples.begin(), 30, 0.0);
  late.samples.resize(ref.size());
  CHECK(ReconstructionSnr(ref, late) > 30.0);
  Waveform short_est{std::vector<double>(10000, 0.0), 16000};
  CHECK(KindOf([&] { ReconstructionSnr(ref, short_est); }) == ErrorKind::kLengthMismatch);
}

TEST_CASE("untrained discriminator does not separate the domains") {
  Discriminator d({.image_size = 32, .in_channels = 1, .base_channels = 8, .n_layers = 3,
                   .norm = LayerKind::kInstanceNorm, .seed = 4});
  double a = 0.0, b = 0.0;
  for (int i = 0; i < 50; ++i) {
    Grid x = RandomGrid(32, 100 + i, 32);
    Grid y = RandomGrid(32, 200 + i, 32);
    for (double &v : y.pixels) v = 0.3 + 0.5 * v;  // a different intensity distribution
    const double sa = NativelikenessScore(d, x), sb = NativelikenessScore(d, y);
    CHECK(sa >= 0.0);
    CHECK(sa <= 1.0);
    a += sa;
    b += sb;
  }
  CHECK(std::abs(a / 50 - b / 50) < 0.1);

  Grid flat = RandomGrid(32, 7, 32);
  for (double &v : flat.pixels) v = 0.4;
  const double s = NativelikenessScore(d, flat);
  CHECK(std::isfinite(s));
  CHECK(s >= 0.0);
  CHECK(s <= 1.0);

  Discriminator cond({.image_size = 32, .in_channels = 2, .base_channels = 4, .seed = 1});
  CHECK(KindOf([&] { NativelikenessScore(cond, flat); }) == ErrorKind::kShapeMismatch);
  CHECK(NativelikenessScore(cond, flat, &flat) <= 1.0);
}

TEST_CASE("system evaluation") {
  Generator g({.image_size = 32, .base_channels = 4, .seed = 3});
  Discriminator d({.image_size = 32, .in_channels = 2, .base_channels = 4, .seed = 5});
  std::vector<EvalInput> test;
  GroundTruthMap gt;
  std::map<std::string, Grid> natives, psola;
  for (int i = 0; i < 4; ++i) {
    EvalInput in;
    in.recording = {"u" + std::to_string(i), "l0", Domain::kNonnative, "x.wav"};
    in.image = RandomGrid(32, 10 + i, 16);
    const Recording nat{in.recording.utterance_id, "n0", Domain::kNative, "y.wav"};
    gt[in.recording.key()] = nat.key();
    // Item 0's reference is exactly the translation.
    natives[nat.key()] = i == 0 ? Translate(g, in.image, true, 0) : RandomGrid(32, 50 + i, 16);
    if (i % 2) psola[in.recording.key()] = RandomGrid(32, 90 + i, 16);
    test.push_back(in);
  }
  EvalModels m{.mode = TrainMode::kPaired, .g = &g, .d = &d, .deterministic = true, .seed = 1};
  EvalReport r = EvaluateSystem(m, test, gt, natives, psola);
  REQUIRE(r.items.size() == 4);
  CHECK(r.items[0].lsd_to_reference_db == 0.0);
  CHECK(r.items[0].lsd_identity_baseline_db > 0.0);
  CHECK(r.items[1].psola_lsd_db.has_value());
  CHECK_FALSE(r.items[2].psola_lsd_db.has_value());
  double mean = 0.0;
  for (const EvalItem &it : r.items) {
    mean += it.lsd_to_reference_db;
    CHECK(it.nativelikeness_score >= 0.0);
    CHECK(it.nativelikeness_score <= 1.0);
  }
  CHECK(std::abs(r.lsd().mean - mean / 4) < 1e-9);
  CHECK(r.psola_lsd().count == 2);

  EvalReport again = EvaluateSystem(m, test, gt, natives, psola);
  for (size_t i = 0; i < 4; ++i) CHECK(again.items[i].lsd_to_reference_db == r.items[i].lsd_to_reference_db);

  GroundTruthMap partial = gt;
  partial.erase(test[2].recording.key());
  CHECK(KindOf([&] { EvaluateSystem(m, test, partial, natives); }) == ErrorKind::kMissingGroundTruth);

  const fs::path csv = fs::temp_directory_path() / "selfecho_eval.csv";
  WriteEvalCsv(r, csv.string());
  std::ifstream is(csv);
  int lines = 0;
  for (std::string l; std::getline(is, l);) ++lines;
  CHECK(lines >= 5);
  CHECK(SummaryText(r).find("lsd") != std::string::npos);
}

TEST_CASE("summaries") {
  Aggregate a = Summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(a.mean == 2.5);
  CHECK(a.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(a.count == 4);
  CHECK(Summarize({}).count == 0);
}

TEST_CASE("manual ratings file") {
  const fs::path p = fs::temp_directory_path() / "selfecho_mos.csv";
  {
    std::ofstream os(p);
    os << "utterance_id,system,holistic,segmental,suprasegmental,imitability,sound_quality\n"
       << "u1,psola,3,3.5,4,2,3\n";
  }
  std::vector<ManualMos> m = LoadManualMos(p.string());
  REQUIRE(m.size() == 1);
  CHECK(m[0].segmental == 3.5);
  {
    std::ofstream os(p);
    os << "utterance_id,system,holistic,segmental,suprasegmental,imitability,sound_quality\n"
       << "u1,psola,3,3.5,6,2,3\n";
  }
  CHECK_THROWS_AS(LoadManualMos(p.string()), Error);
}

}
