// src/synth.cc

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

#include "selfecho/synth.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "selfecho/error.h"
#include "selfecho/rng.h"

namespace selfecho {

namespace {

using Formants = std::array<double, 3>;

// Rough adult formant targets for a handful of vowels.
constexpr std::array<Formants, 6> kVowels = {{{730, 1090, 2440},
                                              {270, 2290, 3010},
                                              {300, 870, 2240},
                                              {530, 1840, 2480},
                                              {570, 840, 2410},
                                              {660, 1720, 2410}}};
constexpr std::array<double, 3> kBandwidths = {80.0, 100.0, 140.0};
constexpr double kGapS = 0.04;
constexpr double kClosureS = 0.04;
constexpr double kBurstS = 0.03;
constexpr double kRampS = 0.015;
constexpr double kPeak = 0.5;

enum class Contour { kHat, kRise, kFall };

struct Syllable {
  int onset = 0, offset = 1;  // vowel table indices
  double duration_s = 0.2;
};

struct Template {
  std::vector<Syllable> syllables;
  Contour contour = Contour::kHat;
};

struct Voice {
  double f0_base = 120.0;
  double formant_scale = 1.0;
  uint64_t noise_seed = 0;
};

struct Rendition {
  bool monophthong = false;
  double mono_strength = 0.0;
  double stretch = 1.0;
  bool flatten = false;
  double flatten_strength = 0.0;
  double truncate = 0.0;
};

Template MakeTemplate(uint64_t seed, int u) {
  Rng rng(MixSeed(seed, 0x75747400 + static_cast<uint64_t>(u)));
  Template t;
  const int n = 2 + static_cast<int>(rng.Below(2));
  for (int k = 0; k < n; ++k) {
    Syllable s;
    s.onset = static_cast<int>(rng.Below(kVowels.size()));
    s.offset = static_cast<int>(rng.Below(kVowels.size() - 1));
    if (s.offset >= s.onset) ++s.offset;
    s.duration_s = rng.Uniform(0.26, 0.36);
    t.syllables.push_back(s);
  }
  t.contour = static_cast<Contour>(rng.Below(3));
  return t;
}

Voice MakeVoice(uint64_t seed, uint64_t tag) {
  Rng rng(MixSeed(seed, tag));
  Voice v;
  v.f0_base = rng.Uniform(95.0, 170.0);
  v.formant_scale = rng.Uniform(0.97, 1.03);
  v.noise_seed = rng.NextU64();
  return v;
}

double PitchShape(Contour c, double tau) {
  switch (c) {
    case Contour::kHat: return 1.0 + 0.25 * std::sin(std::numbers::pi * tau);
    case Contour::kRise: return 0.85 + 0.35 * tau;
    case Contour::kFall: return 1.15 - 0.3 * tau;
  }
  return 1.0;
}

double Smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

double Ramp(double t, double start, double end) {
  const double a = std::min(1.0, (t - start) / kRampS);
  const double b = std::min(1.0, (end - t) / kRampS);
  const double x = std::clamp(std::min(a, b), 0.0, 1.0);
  return 0.5 - 0.5 * std::cos(std::numbers::pi * x);
}

// Two-pole resonator with unit gain at DC.
struct Resonator {
  double y1 = 0.0, y2 = 0.0;
  double Step(double x, double freq, double bw, double sr) {
    const double c = -std::exp(-2.0 * std::numbers::pi * bw / sr);
    const double b = 2.0 * std::exp(-std::numbers::pi * bw / sr) * std::cos(2.0 * std::numbers::pi * freq / sr);
    const double a = 1.0 - b - c;
    const double y = a * x + b * y1 + c * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

SynthItem Render(const Template &tpl, const Voice &voice, const Rendition &r, int sr) {
  SynthItem item;
  // Timeline.
  struct Span {
    double start, end;
    int syllable;  // -1 closure, -2 burst
  };
  std::vector<Span> spans;
  double t = 0.0;
  for (size_t k = 0; k < tpl.syllables.size(); ++k) {
    const double d = tpl.syllables[k].duration_s * r.stretch;
    spans.push_back({t, t + d, static_cast<int>(k)});
    t += d;
    if (k + 1 < tpl.syllables.size()) t += kGapS * r.stretch;
  }
  const double voiced_end = t;
  spans.push_back({t, t + kClosureS * r.stretch, -1});
  t += kClosureS * r.stretch;
  spans.push_back({t, t + kBurstS * r.stretch, -2});
  t += kBurstS * r.stretch;
  const size_t n_samples = static_cast<size_t>(std::lround(t * sr));

  std::vector<double> out(n_samples, 0.0);
  std::array<Resonator, 3> filters{};
  Rng noise(voice.noise_seed);
  double phase = 0.0;
  for (size_t n = 0; n < n_samples; ++n) {
    const double time = static_cast<double>(n) / sr;
    const Span *span = nullptr;
    for (const Span &s : spans)
      if (time >= s.start && time < s.end) span = &s;
    double source = 0.0;
    Formants f = kVowels[0];
    double amp = 0.0;
    if (span != nullptr && span->syllable >= 0) {
      const Syllable &syl = tpl.syllables[span->syllable];
      const double tau = (time - span->start) / (span->end - span->start);
      const double glide = Smoothstep((tau - 0.2) / 0.6);
      for (int i = 0; i < 3; ++i) {
        const double a = kVowels[syl.onset][i], b = kVowels[syl.offset][i];
        double v = a + (b - a) * glide;
        if (r.monophthong) v = a + (1.0 - r.mono_strength) * (v - a);
        f[i] = v * voice.formant_scale;
      }
      double shape = PitchShape(tpl.contour, time / voiced_end);
      if (r.flatten) shape = 1.0 + (1.0 - r.flatten_strength) * (shape - 1.0);
      const double f0 = voice.f0_base * shape;
      phase += f0 / sr;
      if (phase >= 1.0) {
        phase -= 1.0;
        source = 1.0;
      }
      source += 0.01 * noise.Normal();
      amp = Ramp(time, span->start, span->end);
    } else {
      noise.Normal();  // keep the noise stream aligned across renditions
    }
    double y = source;
    for (int i = 0; i < 3; ++i) y = filters[i].Step(y, f[i], kBandwidths[i], sr);
    out[n] = amp * y;
    if (span != nullptr && span->syllable == -2) {
      const double u = time - span->start;
      out[n] += 0.3 * noise.Normal() * std::exp(-u / 0.008);
    }
  }
  // Burst: high-passed by a first difference.
  for (size_t n = n_samples; n-- > 1;) {
    const double time = static_cast<double>(n) / sr;
    if (time >= spans.back().start) out[n] -= 0.9 * out[n - 1];
  }
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::fabs(v));
  if (peak > 0.0)
    for (double &v : out) v *= kPeak / peak;

  const size_t keep = static_cast<size_t>(std::lround(n_samples * (1.0 - r.truncate)));
  out.resize(std::max<size_t>(keep, 1));
  const double length_s = static_cast<double>(out.size()) / sr;
  for (const Span &s : spans) {
    if (s.start >= length_s) continue;
    const std::string label = s.syllable >= 0 ? "syl" + std::to_string(s.syllable)
                              : s.syllable == -1 ? "closure"
                                                 : "burst";
    item.segments.push_back({s.start, std::min(s.end, length_s), label});
  }
  item.wave.samples = std::move(out);
  item.wave.sample_rate_hz = sr;
  return item;
}

}  // namespace

void SynthSpec::Validate() const {
  auto bad = [](const std::string &m) { throw Error(ErrorKind::kBadSpec, m); };
  if (n_utterances < 1 || n_native_speakers < 1 || n_nonnative_speakers < 1)
    bad("utterance and speaker counts must be >= 1");
  if (sample_rate_hz < 8000) bad("sample_rate_hz must be >= 8000");
  if (!(stretch_factor >= 1.0 && stretch_factor <= 2.0)) bad("stretch_factor must be in [1, 2]");
  if (!(truncation_fraction >= 0.0 && truncation_fraction <= 0.5))
    bad("truncation_fraction must be in [0, 0.5]");
  if (!(monophthong_strength >= 0.0 && monophthong_strength <= 1.0))
    bad("monophthong_strength must be in [0, 1]");
  if (!(flatten_strength >= 0.0 && flatten_strength <= 1.0))
    bad("flatten_strength must be in [0, 1]");
}

std::string NativeSpeakerId(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "nat%02d", k);
  return buf;
}

std::string NonnativeSpeakerId(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "nn%02d", k);
  return buf;
}

std::string UtteranceId(int u) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "utt%03d", u);
  return buf;
}

std::vector<Recording> SynthCorpus::recordings() const {
  std::vector<Recording> out;
  for (const SynthItem &it : items) out.push_back(it.recording);
  return out;
}

SynthCorpus GenerateSyntheticCorpus(const SynthSpec &spec) {
  spec.Validate();
  SynthCorpus corpus;
  std::vector<Template> templates;
  for (int u = 0; u < spec.n_utterances; ++u) templates.push_back(MakeTemplate(spec.seed, u));

  const Rendition native_style{};
  Rendition learner_style;
  learner_style.monophthong = spec.monophthongization;
  learner_style.mono_strength = spec.monophthong_strength;
  learner_style.stretch = spec.duration_stretch ? spec.stretch_factor : 1.0;
  learner_style.flatten = spec.pitch_contour_flatten;
  learner_style.flatten_strength = spec.flatten_strength;
  learner_style.truncate = spec.final_deletion ? spec.truncation_fraction : 0.0;

  for (int k = 0; k < spec.n_native_speakers; ++k) {
    const Voice voice = MakeVoice(spec.seed, 0x6e617400 + static_cast<uint64_t>(k));
    for (int u = 0; u < spec.n_utterances; ++u) {
      SynthItem item = Render(templates[u], voice, native_style, spec.sample_rate_hz);
      item.recording = {UtteranceId(u), NativeSpeakerId(k), Domain::kNative,
                        "native/" + UtteranceId(u) + "__" + NativeSpeakerId(k) + ".wav"};
      corpus.items.push_back(std::move(item));
    }
  }
  for (int s = 0; s < spec.n_nonnative_speakers; ++s) {
    const Voice voice = MakeVoice(spec.seed, 0x6e6e00 + static_cast<uint64_t>(s));
    for (int u = 0; u < spec.n_utterances; ++u) {
      SynthItem item = Render(templates[u], voice, learner_style, spec.sample_rate_hz);
      item.recording = {UtteranceId(u), NonnativeSpeakerId(s), Domain::kNonnative,
                        "nonnative/" + UtteranceId(u) + "__" + NonnativeSpeakerId(s) + ".wav"};
      const Recording counterpart{UtteranceId(u), NativeSpeakerId(s % spec.n_native_speakers),
                                  Domain::kNative, ""};
      corpus.ground_truth[item.recording.key()] = counterpart.key();
      corpus.items.push_back(std::move(item));
    }
  }
  return corpus;
}

void WriteSyntheticCorpus(const SynthCorpus &corpus, const std::string &dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "native", ec);
  fs::create_directories(fs::path(dir) / "nonnative", ec);
  if (ec) throw Error(ErrorKind::kIoFailure, "cannot create " + dir + ": " + ec.message());
  for (const SynthItem &it : corpus.items) SaveWav(it.wave, (fs::path(dir) / it.recording.path).string());
  WriteManifest(corpus.recordings(), (fs::path(dir) / "manifest.tsv").string());
  WriteGroundTruth(corpus.ground_truth, (fs::path(dir) / "ground_truth_pairs.tsv").string());
}

}  // namespace selfecho
