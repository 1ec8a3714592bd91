// tests/psola_test.cc

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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "selfecho/dtw.h"
#include "selfecho/error.h"
#include "selfecho/psola.h"
#include "selfecho/rng.h"

using namespace selfecho;
namespace fs = std::filesystem;

namespace {

// Harmonic tone whose f0 follows f0_at(t) (Hz), amplitude 0.5 overall.
Waveform Tone(double seconds, const std::function<double(double)> &f0_at, int harmonics = 5) {
  Waveform w;
  const size_t n = static_cast<size_t>(seconds * w.sample_rate_hz);
  w.samples.resize(n);
  double phase = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / w.sample_rate_hz;
    phase += 2 * std::numbers::pi * f0_at(t) / w.sample_rate_hz;
    double s = 0.0;
    for (int k = 1; k <= harmonics; ++k) s += std::sin(k * phase) / k;
    w.samples[i] = 0.3 * s;
  }
  return w;
}

Waveform Flat(double seconds, double f0, int harmonics = 5) {
  return Tone(seconds, [f0](double) { return f0; }, harmonics);
}

// Speech-like source: each period is a decaying 700 Hz resonance.
Waveform Pulses(double seconds, const std::function<double(double)> &f0_at) {
  Waveform w;
  const size_t n = static_cast<size_t>(seconds * w.sample_rate_hz);
  w.samples.resize(n);
  double phase = 0.0, since = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / w.sample_rate_hz;
    phase += f0_at(t) / w.sample_rate_hz;
    since += 1.0 / w.sample_rate_hz;
    if (phase >= 1.0) phase -= 1.0, since = 0.0;
    w.samples[i] = 0.5 * std::exp(-since / 0.002) * std::sin(2 * std::numbers::pi * 700.0 * since);
  }
  return w;
}

Waveform FlatPulses(double seconds, double f0) {
  return Pulses(seconds, [f0](double) { return f0; });
}

double MedianVoiced(const std::vector<double> &f0) {
  std::vector<double> v;
  for (double f : f0)
    if (f > 0.0) v.push_back(f);
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

double SnrInterior(const std::vector<double> &ref, const std::vector<double> &est, size_t edge) {
  double s = 0.0, e = 0.0;
  for (size_t i = edge; i + edge < std::min(ref.size(), est.size()); ++i) {
    s += ref[i] * ref[i];
    e += (ref[i] - est[i]) * (ref[i] - est[i]);
  }
  return 10 * std::log10(s / e);
}

ErrorKind KindOf(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::kIoFailure;
}

double Pearson(const std::vector<double> &a, const std::vector<double> &b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= n, mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_SUITE("psola") {

TEST_CASE("pitch estimates on synthetic tones") {
  std::vector<double> saw = EstimateF0(Flat(1.0, 220.0, 20));
  for (double f : saw)
    if (f > 0.0) CHECK(std::abs(f - 220.0) <= 0.05 * 220.0);
  CHECK(MedianVoiced(saw) > 0.0);

  std::vector<double> sine = EstimateF0(Flat(1.0, 100.0, 1));
  int voiced = 0;
  for (double f : sine)
    if (f > 0.0) {
      ++voiced;
      CHECK(std::abs(f - 100.0) <= 2.0);
    }
  CHECK(voiced > static_cast<int>(sine.size()) / 2);

  Waveform silence{std::vector<double>(16000, 0.0), 16000};
  for (double f : EstimateF0(silence)) CHECK(f == 0.0);
  CHECK(KindOf([] { EstimateF0(Waveform{std::vector<double>(100, 0.1), 16000}); }) ==
        ErrorKind::kTooShort);
}

TEST_CASE("pitch marks at 100 Hz are about 160 samples apart") {
  Waveform w = Flat(1.0, 100.0);
  PitchMarks m = PlacePitchMarks(w, EstimateF0(w));
  REQUIRE(m.positions.size() > 10);
  std::vector<int> gaps;
  for (size_t i = 1; i < m.positions.size(); ++i) {
    CHECK(m.positions[i] > m.positions[i - 1]);
    gaps.push_back(m.positions[i] - m.positions[i - 1]);
  }
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  CHECK(std::abs(gaps[gaps.size() / 2] - 160) <= 8);
  CHECK(m.positions.front() >= 0);
  CHECK(m.positions.back() < static_cast<int>(w.size()));
}

TEST_CASE("unvoiced input gets 10 ms marks") {
  Waveform silence{std::vector<double>(16000, 0.0), 16000};
  PitchMarks m = PlacePitchMarks(silence, EstimateF0(silence));
  REQUIRE(m.positions.size() > 2);
  for (size_t i = 1; i < m.positions.size(); ++i)
    CHECK(m.positions[i] - m.positions[i - 1] == 160);
  CHECK(m.positions.back() < 16000);
}

TEST_CASE("resynthesis factor laws") {
  Waveform w = FlatPulses(1.0, 110.0);
  PitchMarks m = PlacePitchMarks(w, EstimateF0(w));
  const size_t k = m.positions.size();

  Waveform same = PsolaResynthesize(w, m, std::vector<double>(k, 1.0), std::vector<double>(k, 1.0));
  CHECK(SnrInterior(w.samples, same.samples, 800) >= 30.0);

  for (double p : {0.5, 2.0}) {
    Waveform shifted =
        PsolaResynthesize(w, m, std::vector<double>(k, p), std::vector<double>(k, 1.0));
    // 55 Hz is below the default search range.
    const PitchOptions wide{.f0_min = 40.0};
    CHECK(std::abs(MedianVoiced(EstimateF0(shifted, wide)) - 110.0 * p) <= 0.05 * 110.0 * p);
  }

  Waveform longer = PsolaResynthesize(w, m, std::vector<double>(k, 1.0), std::vector<double>(k, 2.0));
  const double period = 16000.0 / 110.0;
  CHECK(std::abs(static_cast<double>(longer.size()) - 2.0 * w.size()) <= period);

  for (double v : longer.samples) CHECK(std::abs(v) <= 1.0);
  CHECK(KindOf([&] {
          PsolaResynthesize(w, m, std::vector<double>(k, 5.0), std::vector<double>(k, 1.0));
        }) == ErrorKind::kFactorOutOfRange);
}

TEST_CASE("prosody profile") {
  Waveform w = Flat(1.0, 150.0, 1);
  ProsodyProfile p = ExtractProsody(w);
  CHECK(p.total_duration_s == 1.0);
  CHECK(p.f0_hz.size() == p.intensity_db.size());
  double lo = 1e9, hi = -1e9;
  for (size_t i = 5; i + 5 < p.intensity_db.size(); ++i) {
    lo = std::min(lo, p.intensity_db[i]);
    hi = std::max(hi, p.intensity_db[i]);
  }
  CHECK(hi - lo < 1.0);
  ProsodyProfile s = ExtractProsody(Waveform{std::vector<double>(8000, 0.0), 16000});
  for (double v : s.intensity_db) CHECK(v == kIntensityFloorDb);
  for (double f : s.f0_hz) CHECK(f == 0.0);
}

TEST_CASE("dtw on identical and duplicated sequences") {
  RealMatrix a = RealMatrix::Random(4, 6);
  AlignmentPath same = DtwAlign(a, a);
  CHECK(same.cost == 0.0);
  REQUIRE(same.pairs.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(same.pairs[i] == std::pair{i, i});

  RealMatrix b(4, 7);
  b << a.leftCols(3), a.col(2), a.rightCols(3);
  AlignmentPath dup = DtwAlign(a, b);
  ValidatePath(dup, 6, 7);
  CHECK(dup.cost == doctest::Approx(0.0));
  int horizontal = 0;
  for (size_t i = 1; i < dup.pairs.size(); ++i)
    if (dup.pairs[i].first == dup.pairs[i - 1].first) ++horizontal;
  CHECK(horizontal == 1);
}

TEST_CASE("dtw cost matches brute force and is symmetric") {
  // Enumerate every monotone path on small inputs.
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int ta = 1 + static_cast<int>(rng.Below(5)), tb = 1 + static_cast<int>(rng.Below(5));
    RealMatrix a(3, ta), b(3, tb);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.Normal();
    for (int i = 0; i < b.size(); ++i) b.data()[i] = rng.Normal();
    std::function<double(int, int)> best = [&](int i, int j) -> double {
      const double d = (a.col(i) - b.col(j)).norm();
      if (i == 0 && j == 0) return d;
      double m = 1e300;
      if (i > 0) m = std::min(m, best(i - 1, j));
      if (j > 0) m = std::min(m, best(i, j - 1));
      if (i > 0 && j > 0) m = std::min(m, best(i - 1, j - 1));
      return d + m;
    };
    AlignmentPath p = DtwAlign(a, b);
    ValidatePath(p, ta, tb);
    CHECK(p.cost == doctest::Approx(best(ta - 1, tb - 1)).epsilon(1e-12));
    CHECK(DtwAlign(b, a).cost == doctest::Approx(p.cost).epsilon(1e-12));
  }
  AlignmentPath bad{{{0, 0}, {2, 1}}, 0.0};
  CHECK(KindOf([&] { ValidatePath(bad, 3, 2); }) == ErrorKind::kBadConfig);
}

TEST_CASE("identity transplant") {
  Waveform w = Pulses(1.0, [](double t) { return 120.0 + 60.0 * t; });
  Waveform out = TransplantProsody(w, w);
  CHECK(std::abs(static_cast<double>(out.size()) - w.size()) <= 160);
  CHECK(SnrInterior(w.samples, out.samples, 800) >= 25.0);
  std::vector<double> f_in = EstimateF0(w), f_out = EstimateF0(out);
  const size_t n = std::min(f_in.size(), f_out.size());
  for (size_t i = 0; i < n; ++i)
    if (f_in[i] > 0.0 && f_out[i] > 0.0) CHECK(std::abs(f_out[i] - f_in[i]) <= 0.05 * f_in[i]);
}

TEST_CASE("transplant follows the native contour and duration") {
  Waveform native = Pulses(1.0, [](double t) { return 110.0 + 90.0 * t; });
  Waveform learner = FlatPulses(1.0, 150.0);
  Waveform out = TransplantProsody(native, learner);
  std::vector<double> fn = EstimateF0(native), fo = EstimateF0(out);
  std::vector<double> a, b;
  for (size_t i = 0; i < std::min(fn.size(), fo.size()); ++i)
    if (fn[i] > 0.0 && fo[i] > 0.0) a.push_back(fn[i]), b.push_back(fo[i]);
  REQUIRE(a.size() > 20);
  CHECK(Pearson(a, b) >= 0.8);

  Waveform long_native = Flat(2.0, 130.0);
  Waveform stretched = TransplantProsody(long_native, Flat(1.0, 150.0));
  CHECK(std::abs(stretched.duration_s() - 2.0) <= 0.01);
  for (double v : stretched.samples) CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("extreme ratios are clamped with a warning") {
  Waveform native = Flat(1.0, 380.0);
  Waveform learner = Flat(1.0, 65.0);
  TransplantReport report;
  Waveform out = TransplantProsody(native, learner, {}, &report);
  CHECK(out.size() > 0);
  CHECK_FALSE(report.warnings.empty());
  CHECK(KindOf([&] { TransplantProsody(Waveform{{0.1, 0.2}, 16000}, learner); }) ==
        ErrorKind::kTooShort);
}

TEST_CASE("segment files") {
  const fs::path p = fs::temp_directory_path() / "selfecho_segments.txt";
  {
    std::ofstream os(p);
    os << "0.0\t0.5\tnative:a\n0.5\t1.0\tnative:b\n0.0\t0.3\tlearner:a\n0.3\t1.0\tlearner:b\n";
  }
  std::vector<Segment> s = ReadSegments(p.string());
  REQUIRE(s.size() == 4);
  CHECK(s[1].start_s == 0.5);
  CHECK(s[2].label == "learner:a");

  TransplantOptions opt;
  opt.segments = s;
  Waveform out = TransplantProsody(Flat(1.0, 140.0), Flat(1.0, 140.0), opt);
  CHECK(std::abs(out.duration_s() - 1.0) <= 0.01);
  {
    std::ofstream os(p);
    os << "0.0 0.5\n";
  }
  CHECK(KindOf([&] { ReadSegments(p.string()); }) == ErrorKind::kParseError);
}

}
