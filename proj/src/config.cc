// src/config.cc

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

#include "selfecho/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <type_traits>

#include "selfecho/error.h"

namespace selfecho {

namespace {

std::string Trim(const std::string &s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long long ToInt(const std::string &key, const std::string &v) {
  size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw Error(ErrorKind::kBadConfig, key + ": '" + v + "' is not an integer");
  return out;
}

int ToInt32(const std::string &key, const std::string &v) {
  const long long x = ToInt(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw Error(ErrorKind::kBadConfig, key + ": value out of range");
  return static_cast<int>(x);
}

uint64_t ToU64(const std::string &key, const std::string &v) {
  size_t used = 0;
  unsigned long long out = 0;
  try {
    if (!v.empty() && v[0] != '-') out = std::stoull(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw Error(ErrorKind::kBadConfig, key + ": '" + v + "' is not a non-negative integer");
  return out;
}

double ToDouble(const std::string &key, const std::string &v) {
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(out))
    throw Error(ErrorKind::kBadConfig, key + ": '" + v + "' is not a finite number");
  return out;
}

bool ToBool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw Error(ErrorKind::kBadConfig, key + ": '" + v + "' is not a boolean");
}

// Shortest text that reads back to the same double.
std::string Str(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
std::string Str(int v) { return std::to_string(v); }
std::string Str(uint64_t v) { return std::to_string(v); }
std::string Str(bool v) { return v ? "true" : "false"; }

struct Field {
  std::string name;
  std::string help;
  std::function<void(const std::string &)> set;
  std::function<std::string()> get;
};

template <typename T>
Field Num(const std::string &name, T *target, const std::string &help) {
  Field f{name, help, nullptr, [target] { return Str(*target); }};
  f.set = [name, target](const std::string &v) {
    if constexpr (std::is_same_v<T, int>) *target = ToInt32(name, v);
    else if constexpr (std::is_same_v<T, uint64_t>) *target = ToU64(name, v);
    else if constexpr (std::is_same_v<T, bool>) *target = ToBool(name, v);
    else *target = ToDouble(name, v);
  };
  return f;
}

std::vector<Field> TrainFields(TrainConfig &t, bool *generator_explicit) {
  std::vector<Field> f;
  f.push_back({"mode", "paired | unpaired",
               [&t](const std::string &v) { t.mode = ParseTrainMode(v); },
               [&t] { return std::string(TrainModeName(t.mode)); }});
  f.push_back(Num("batch_size", &t.batch_size, "images per step (4, up from the usual 1)"));
  f.push_back(Num("epochs", &t.epochs, "passes over the training data"));
  f.push_back(Num("max_steps", &t.max_steps, "stop after this many steps; 0 = no limit"));
  f.push_back(Num("learning_rate", &t.learning_rate, "Adam step size"));
  f.push_back(Num("beta1", &t.beta1, "Adam first-moment decay"));
  f.push_back(Num("beta2", &t.beta2, "Adam second-moment decay"));
  f.push_back(Num("lambda_l1", &t.lambda_l1, "L1 weight, paired mode"));
  f.push_back(Num("lambda_cyc", &t.lambda_cyc, "cycle-consistency weight, unpaired mode"));
  f.push_back(Num("lambda_identity", &t.lambda_identity, "identity-mapping weight, unpaired mode"));
  f.push_back({"adv_loss", "log | least_squares",
               [&t](const std::string &v) { t.adv_loss = ParseAdvLossKind(v); },
               [&t] { return std::string(AdvLossKindName(t.adv_loss)); }});
  f.push_back(Num("image_size", &t.image_size, "training grid side: 32, 64 or 128"));
  f.push_back({"generator", "unet | resnet (default follows mode)",
               [&t, generator_explicit](const std::string &v) {
                 t.generator = ParseGeneratorKind(v);
                 if (generator_explicit) *generator_explicit = true;
               },
               [&t] { return std::string(GeneratorKindName(t.generator)); }});
  f.push_back(Num("base_channels", &t.base_channels, "generator width"));
  f.push_back(Num("unet_depth", &t.unet_depth, "U-Net levels; 0 = log2(image_size)"));
  f.push_back(Num("n_residual_blocks", &t.n_residual_blocks, "ResNet generator blocks"));
  f.push_back(Num("dropout", &t.dropout, "generator dropout (the noise source)"));
  f.push_back(Num("dropout_levels", &t.dropout_levels, "generator stages carrying dropout"));
  f.push_back(Num("disc_channels", &t.disc_channels, "discriminator width"));
  f.push_back(Num("disc_layers", &t.disc_layers, "discriminator stride-2 layers"));
  f.push_back(Num("flip_augmentation", &t.flip_augmentation, "mirror images in time (off)"));
  f.push_back(Num("replay_buffer", &t.replay_buffer, "fake-image pool for unpaired D updates"));
  f.push_back(Num("replay_size", &t.replay_size, "fake-image pool capacity"));
  f.push_back(Num("snapshot_every", &t.snapshot_every, "snapshot interval in epochs; 0 = off"));
  f.push_back(Num("snapshot_gl_iterations", &t.snapshot_gl_iterations,
                  "Griffin-Lim iterations for snapshot audio"));
  return f;
}

std::vector<Field> AllFields(AppConfig &c, bool *generator_explicit) {
  std::vector<Field> f = TrainFields(c.train, generator_explicit);
  f.push_back({"seed", "global seed (SELFECHO_SEED sets the default)",
               [&c](const std::string &v) {
                 c.train.seed = ToU64("seed", v);
                 c.synth.seed = c.train.seed;
                 c.griffin_lim.seed = c.train.seed;
               },
               [&c] { return Str(c.train.seed); }});
  f.push_back({"sample_rate_hz", "audio sample rate",
               [&c](const std::string &v) {
                 c.dsp.sample_rate_hz = ToInt32("sample_rate_hz", v);
                 c.synth.sample_rate_hz = c.dsp.sample_rate_hz;
               },
               [&c] { return Str(c.dsp.sample_rate_hz); }});
  f.push_back(Num("n_fft", &c.dsp.n_fft, "STFT window length"));
  f.push_back(Num("hop", &c.dsp.hop, "STFT hop (one-third overlap of 512)"));
  f.push_back(Num("mel_low_hz", &c.dsp.mel_low_hz, "lowest mel edge"));
  f.push_back(Num("mel_high_hz", &c.dsp.mel_high_hz, "highest mel edge; 0 = Nyquist"));
  f.push_back(Num("db_floor", &c.dsp.db_floor, "dB mapped to pixel 0"));
  f.push_back(Num("db_ceiling", &c.dsp.db_ceiling, "dB mapped to pixel 1"));
  f.push_back(Num("mel_before_db", &c.dsp.mel_before_db, "true: linear->mel->dB, false: dB->mel"));
  f.push_back(Num("noise_band", &c.dsp.noise_band, "padding noise amplitude"));
  f.push_back(Num("cutoff_fraction", &c.dsp.cutoff_fraction, "low-pass cutoff / Nyquist"));
  f.push_back(Num("gl_iterations", &c.griffin_lim.iterations, "Griffin-Lim iterations (1000)"));
  f.push_back(Num("nnls_iterations", &c.griffin_lim.nnls_iterations, "mel inversion iterations"));
  f.push_back(Num("f0_min", &c.pitch.f0_min, "pitch floor, Hz"));
  f.push_back(Num("f0_max", &c.pitch.f0_max, "pitch ceiling, Hz"));
  f.push_back(Num("n_utterances", &c.synth.n_utterances, "synthetic utterances"));
  f.push_back(Num("n_native_speakers", &c.synth.n_native_speakers, "synthetic native voices"));
  f.push_back(Num("n_nonnative_speakers", &c.synth.n_nonnative_speakers, "synthetic learner voices"));
  f.push_back(Num("monophthongization", &c.synth.monophthongization, "freeze diphthong glides"));
  f.push_back(Num("monophthong_strength", &c.synth.monophthong_strength, "0..1"));
  f.push_back(Num("final_deletion", &c.synth.final_deletion, "truncate the utterance tail"));
  f.push_back(Num("truncation_fraction", &c.synth.truncation_fraction, "0..0.5"));
  f.push_back(Num("duration_stretch", &c.synth.duration_stretch, "slower learner timing"));
  f.push_back(Num("stretch_factor", &c.synth.stretch_factor, "1..2"));
  f.push_back(Num("pitch_contour_flatten", &c.synth.pitch_contour_flatten, "flatten learner f0"));
  f.push_back(Num("flatten_strength", &c.synth.flatten_strength, "0..1"));
  f.push_back(Num("n_test", &c.n_test, "held-out non-native recordings"));
  f.push_back(Num("deterministic", &c.deterministic, "disable dropout at inference"));
  return f;
}

}  // namespace

KeyValues ParseKeyValues(std::istream &is, const std::string &source) {
  KeyValues out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::kParseError, source + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = Trim(t.substr(0, eq)), value = Trim(t.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorKind::kParseError, source + ":" + std::to_string(line_no) + ": empty key");
    out.emplace_back(key, value);
  }
  return out;
}

KeyValues ReadConfigFile(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIoFailure, "cannot open config " + path);
  return ParseKeyValues(is, path);
}

void AppConfig::Apply(const KeyValues &kv) {
  std::vector<Field> fields = AllFields(*this, &generator_explicit_);
  for (const auto &[key, value] : kv) {
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field &f) { return f.name == key; });
    if (it == fields.end()) throw Error(ErrorKind::kBadConfig, "unknown config key '" + key + "'");
    try {
      it->set(value);
    } catch (const Error &e) {
      throw Error(ErrorKind::kBadConfig, key + ": " + e.what());
    }
  }
  Validate();
}

void AppConfig::Validate() const {
  try {
    train.Validate();
    synth.Validate();
    dsp.Validate();
    pitch.Validate(dsp.sample_rate_hz);
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::kBadConfig) throw;
    throw Error(ErrorKind::kBadConfig, e.what());
  }
  if (dsp.n_mels != kImageSide) throw Error(ErrorKind::kBadConfig, "n_mels must be 128");
  if (griffin_lim.iterations < 0 || griffin_lim.nnls_iterations < 0)
    throw Error(ErrorKind::kBadConfig, "iteration counts must be >= 0");
  if (n_test < 0) throw Error(ErrorKind::kBadConfig, "n_test must be >= 0");
}

void AppConfig::SetMode(TrainMode mode) {
  train.mode = mode;
  if (!generator_explicit_)
    train.generator = mode == TrainMode::kPaired ? GeneratorKind::kUnet : GeneratorKind::kResnet;
}

std::string AppConfig::ToText() const {
  AppConfig copy = *this;
  std::ostringstream os;
  for (const Field &f : AllFields(copy, nullptr)) os << f.name << " = " << f.get() << "\n";
  return os.str();
}

std::string AppConfig::Help() const {
  AppConfig copy = *this;
  std::ostringstream os;
  for (const Field &f : AllFields(copy, nullptr))
    os << "  " << std::left << std::setw(24) << f.name << std::setw(14) << f.get() << f.help << "\n";
  return os.str();
}

std::string TrainConfigText(const TrainConfig &config) {
  TrainConfig copy = config;
  std::ostringstream os;
  for (const Field &f : TrainFields(copy, nullptr)) os << f.name << " = " << f.get() << "\n";
  os << "seed = " << config.seed << "\n";
  return os.str();
}

TrainConfig ParseTrainConfigText(const std::string &text) {
  std::istringstream is(text);
  TrainConfig t;
  std::vector<Field> fields = TrainFields(t, nullptr);
  for (const auto &[key, value] : ParseKeyValues(is, "train config")) {
    if (key == "seed") {
      t.seed = ToU64(key, value);
      continue;
    }
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field &f) { return f.name == key; });
    if (it == fields.end()) throw Error(ErrorKind::kBadConfig, "unknown train key '" + key + "'");
    it->set(value);
  }
  t.Validate();
  return t;
}

}  // namespace selfecho
