// tools/selfecho.cc

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

// Command-line front end: audio <-> spectrogram conversion, the PSOLA
// baseline, synthetic corpora, training, translation and evaluation.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "selfecho/config.h"
#include "selfecho/corpus.h"
#include "selfecho/dataset.h"
#include "selfecho/error.h"
#include "selfecho/evaluation.h"
#include "selfecho/griffin_lim.h"
#include "selfecho/psola.h"
#include "selfecho/spectrogram.h"
#include "selfecho/synth.h"
#include "selfecho/trainer.h"
#include "selfecho/wav_io.h"

namespace fs = std::filesystem;
using namespace selfecho;

namespace {

constexpr int kExitUsage = 64;

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIoFailure: return 1;
    case ErrorKind::kUnsupportedFormat:
    case ErrorKind::kCorruptHeader:
    case ErrorKind::kCorruptFile:
    case ErrorKind::kCorruptCheckpoint:
    case ErrorKind::kParseError: return 2;
    case ErrorKind::kInputTooLong: return 3;
    case ErrorKind::kTooShort: return 4;
    case ErrorKind::kMissingGroundTruth: return 5;
    case ErrorKind::kBadConfig:
    case ErrorKind::kBadSpec:
    case ErrorKind::kBadCutoff: return 6;
    case ErrorKind::kFactorOutOfRange: return 7;
    case ErrorKind::kNonFinite: return 8;
    case ErrorKind::kEmptyCorpus:
    case ErrorKind::kNotEnoughData: return 9;
    case ErrorKind::kLeakage: return 10;
    case ErrorKind::kDuplicateEntry: return 11;
    case ErrorKind::kLengthMismatch: return 12;
    case ErrorKind::kShapeMismatch:
    case ErrorKind::kNoGraph:
    case ErrorKind::kMissingPart: return 13;
  }
  return 13;
}

const char *kExitTable =
    "Exit codes:\n"
    "  0 success\n"
    "  1 file missing or not writable\n"
    "  2 unsupported format, corrupt file, parse error\n"
    "  3 input longer than 128 frames\n"
    "  4 input too short\n"
    "  5 missing ground-truth map\n"
    "  6 bad configuration\n"
    "  7 PSOLA factor out of range\n"
    "  8 non-finite values during training\n"
    "  9 empty corpus or not enough data\n"
    " 10 held-out data leaked into training\n"
    " 11 duplicate manifest entry\n"
    " 12 length mismatch\n"
    " 13 internal shape error\n"
    " 64 command-line usage error\n";

// Options every subcommand shares.
struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<uint64_t> seed;
};

void AddCommon(CLI::App *app, Common &c) {
  app->add_option("--config", c.config_path, "key = value file applied over the defaults");
  app->add_option("--set", c.sets, "key=value override, repeatable (applied after --config)");
  app->add_option("--seed", c.seed, "global seed (default: $SELFECHO_SEED, else 0)");
}

AppConfig BuildConfig(const Common &c, std::optional<TrainMode> mode = std::nullopt) {
  AppConfig cfg;
  KeyValues kv;
  if (const char *env = std::getenv("SELFECHO_SEED")) kv.push_back({"seed", env});
  if (!c.config_path.empty())
    for (auto &p : ReadConfigFile(c.config_path)) kv.push_back(p);
  for (const std::string &s : c.sets) {
    const size_t eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::kBadConfig, "--set expects key=value, got " + s);
    kv.push_back({s.substr(0, eq), s.substr(eq + 1)});
  }
  if (c.seed) kv.push_back({"seed", std::to_string(*c.seed)});
  cfg.Apply(kv);
  // The generator follows the mode unless a config set it explicitly.
  if (mode) cfg.SetMode(*mode);
  cfg.Validate();
  return cfg;
}

bool HasExtension(const std::string &path, const char *ext) {
  std::string e = fs::path(path).extension().string();
  for (char &ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return e == ext;
}

void EnsureParent(const std::string &path) {
  const fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw Error(ErrorKind::kIoFailure, "cannot create " + parent.string() + ": " + ec.message());
}

std::string StripExtension(const std::string &path) {
  fs::path p(path);
  if (p.has_extension()) p.replace_extension();
  return p.string();
}

SpectrogramImage LoadImage(const std::string &path, const AppConfig &cfg) {
  if (HasExtension(path, ".wav")) return WaveToImage(LoadWav(path), cfg.dsp, cfg.train.seed);
  return ReadSpec1(path);
}

// ---------------------------------------------------------------------------

int RunWav2Spec(const Common &c, const std::string &in, const std::string &out,
                const std::string &png) {
  const AppConfig cfg = BuildConfig(c);
  const Waveform wave = LoadWav(in);
  DspConfig dsp = cfg.dsp;
  dsp.sample_rate_hz = wave.sample_rate_hz;
  const SpectrogramImage image = WaveToImage(wave, dsp, cfg.train.seed);
  EnsureParent(out);
  WriteSpec1(image, out);
  if (!png.empty()) {
    EnsureParent(png);
    WritePng(image, png);
  }
  std::cout << out << ": n_valid_frames " << image.meta.n_valid_frames << "\n";
  return 0;
}

int RunSpec2Wav(const Common &c, const std::string &in, const std::string &out,
                std::optional<int> iters, std::optional<double> cutoff) {
  const AppConfig cfg = BuildConfig(c);
  const SpectrogramImage image = ReadSpec1(in);
  GriffinLimOptions gl = cfg.griffin_lim;
  if (iters) gl.iterations = *iters;
  if (cutoff) gl.cutoff_hz = *cutoff;
  if (gl.iterations < 0) throw Error(ErrorKind::kBadConfig, "--iters must be >= 0");
  const Waveform wave = GriffinLim(image, gl);
  EnsureParent(out);
  SaveWav(wave, out);
  std::cout << out << ": " << wave.size() << " samples\n";
  return 0;
}

int RunPsola(const Common &c, const std::string &native_path, const std::string &learner_path,
             const std::string &out, const std::string &segments) {
  const AppConfig cfg = BuildConfig(c);
  const Waveform native = LoadWav(native_path);
  const Waveform learner = LoadWav(learner_path);
  TransplantOptions opt;
  opt.pitch = cfg.pitch;
  if (!segments.empty()) opt.segments = ReadSegments(segments);
  TransplantReport report;
  const Waveform result = TransplantProsody(native, learner, opt, &report);
  for (const std::string &w : report.warnings) std::cerr << "warning: " << w << "\n";
  EnsureParent(out);
  SaveWav(result, out);
  std::cout << out << ": " << result.duration_s() << " s\n";
  return 0;
}

int RunSynth(const Common &c, const std::string &spec_path, const std::string &out) {
  Common cc = c;
  if (!spec_path.empty()) cc.config_path = spec_path;
  const AppConfig cfg = BuildConfig(cc);
  const SynthCorpus corpus = GenerateSyntheticCorpus(cfg.synth);
  WriteSyntheticCorpus(corpus, out);
  const DomainCounts counts = CountDomains(corpus.recordings());
  std::cout << out << ": " << counts.native << " native, " << counts.nonnative
            << " non-native recordings\n";
  return 0;
}

std::string ManifestPath(const std::string &data_dir) {
  return (fs::path(data_dir) / "manifest.tsv").string();
}

int RunTrain(const Common &c, const std::string &mode_name, const std::string &data_dir,
             const std::string &out, std::optional<int> n_test_flag, std::optional<int> max_steps,
             bool resume) {
  const TrainMode mode = ParseTrainMode(mode_name);
  AppConfig cfg = BuildConfig(c, mode);
  if (n_test_flag) cfg.n_test = *n_test_flag;
  if (max_steps) cfg.train.max_steps = *max_steps;
  cfg.train.output_dir = out;
  cfg.train.Validate();

  const CorpusImages data =
      LoadCorpusImages(ManifestPath(data_dir), cfg.dsp, cfg.train.image_size, cfg.train.seed);
  const Split split = HoldoutSplit(data.recordings.size(), static_cast<size_t>(cfg.n_test),
                                   cfg.train.seed);
  std::vector<Recording> heldout;
  std::vector<std::string> heldout_ids;
  for (size_t i : split.test) {
    heldout.push_back(data.recordings[i]);
    heldout_ids.push_back(data.recordings[i].key());
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::kIoFailure, "cannot create " + out + ": " + ec.message());
  WriteManifest(heldout, (fs::path(out) / "heldout.tsv").string());

  TrainState state;
  const std::string state_path = (fs::path(out) / "state.bin").string();
  if (resume && fs::exists(state_path)) {
    state = LoadState(state_path);
    state.config.output_dir = out;
    if (max_steps) state.config.max_steps = *max_steps;
    std::cout << "resuming at step " << state.global_step << "\n";
  } else {
    state = InitTrainState(cfg.train);
  }
  Trainer trainer(std::move(state));

  if (mode == TrainMode::kPaired) {
    trainer.SetPairedData(MakePairedGrids(data, TrainingPairs(BuildPairs(data.recordings), split.test)),
                          heldout_ids);
  } else {
    // Pairing columns are ignored: each domain is just a bag of images.
    trainer.SetUnpairedData(DomainGrids(data, Domain::kNonnative, split.test),
                            DomainGrids(data, Domain::kNative, split.test), heldout_ids);
  }

  // A few held-out learner items, with references when the map has them.
  std::optional<GroundTruthMap> truth;
  const std::string gt_path = (fs::path(data_dir) / "ground_truth_pairs.tsv").string();
  if (fs::exists(gt_path)) truth = LoadGroundTruth(gt_path);
  std::vector<Probe> probes;
  for (size_t i : split.test) {
    if (probes.size() >= 3) break;
    const Recording &r = data.recordings[i];
    if (r.domain != Domain::kNonnative) continue;
    Probe p{r.key(), data.grids[i], std::nullopt, data.images[i].meta};
    if (truth) {
      auto it = truth->find(r.key());
      if (it != truth->end()) {
        const long j = data.Find(it->second);
        if (j >= 0) p.reference = data.grids[static_cast<size_t>(j)];
      }
    }
    probes.push_back(std::move(p));
  }
  trainer.SetProbes(std::move(probes));

  std::cout << "training " << TrainModeName(mode) << " on " << data.recordings.size()
            << " recordings (" << split.test.size() << " held out), "
            << trainer.batches_per_epoch() << " batches per epoch\n";
  trainer.Run();
  const auto &h = trainer.state().history;
  if (!h.empty())
    std::cout << "step " << h.back().step << " total loss " << h.back().total << "\n";
  std::cout << "model written to " << out << "\n";
  return 0;
}

int RunTranslate(const Common &c, const std::string &model_dir, const std::string &in,
                 const std::string &out, const std::string &reference, bool deterministic) {
  const AppConfig cfg = BuildConfig(c);
  LoadedModel model = LoadModel(model_dir);
  const int side = model.config.image_size;
  const SpectrogramImage source = LoadImage(in, cfg);
  const Grid x = DownsampleImage(source, side);
  Grid y = Translate(model.g, x, deterministic || cfg.deterministic, cfg.train.seed);
  SpectrogramImage translated = UpsampleGrid(y, source.meta);

  const std::string base = StripExtension(out);
  EnsureParent(base + ".spec1");
  WriteSpec1(translated, base + ".spec1");
  GriffinLimOptions gl = cfg.griffin_lim;
  SaveWav(GriffinLim(translated, gl), base + ".wav");

  // Panels at full 128x128 resolution: input | translated | reference.
  std::vector<GrayPanel> panels{PanelFromImage(source), PanelFromImage(translated)};
  if (!reference.empty()) panels.push_back(PanelFromImage(LoadImage(reference, cfg)));
  WritePng(panels, base + ".png");
  std::cout << base << ".spec1, " << base << ".wav, " << base << ".png written\n";
  return 0;
}

int RunEval(const Common &c, const std::string &model_dir, const std::string &data_dir,
            const std::string &psola_dir, const std::string &out, const std::string &heldout_path,
            const std::string &mos_path, bool deterministic) {
  const AppConfig cfg = BuildConfig(c);
  LoadedModel model = LoadModel(model_dir);
  const int side = model.config.image_size;
  const GroundTruthMap truth = LoadGroundTruth((fs::path(data_dir) / "ground_truth_pairs.tsv").string());
  const std::string held = heldout_path.empty() ? (fs::path(model_dir) / "heldout.tsv").string() : heldout_path;
  const std::vector<Recording> heldout = LoadManifest(held);

  const CorpusImages data = LoadCorpusImages(ManifestPath(data_dir), cfg.dsp, side, model.config.seed);
  std::map<std::string, Grid> natives;
  for (size_t i = 0; i < data.recordings.size(); ++i)
    if (data.recordings[i].domain == Domain::kNative) natives[data.recordings[i].key()] = data.grids[i];

  std::vector<EvalInput> test;
  std::map<std::string, Grid> psola;
  for (const Recording &r : heldout) {
    if (r.domain != Domain::kNonnative) continue;
    const long j = data.Find(r.key());
    if (j < 0) throw Error(ErrorKind::kIoFailure, "held-out recording " + r.key() + " not in " + data_dir);
    test.push_back({r, data.grids[static_cast<size_t>(j)]});
    if (!psola_dir.empty()) {
      const fs::path p = fs::path(psola_dir) / (r.utterance_id + "__" + r.speaker_id + ".wav");
      if (fs::exists(p)) {
        const SpectrogramImage img = WaveToImage(LoadWav(p.string()), cfg.dsp, PadSeedFor(model.config.seed, r));
        psola[r.key()] = DownsampleImage(img, side);
      }
    }
  }
  if (test.empty()) throw Error(ErrorKind::kEmptyCorpus, "no held-out non-native recordings in " + held);

  EvalModels models;
  models.mode = model.config.mode;
  models.g = &model.g;
  models.f = model.config.mode == TrainMode::kUnpaired ? &model.f : nullptr;
  models.d = &model.d;
  models.deterministic = deterministic || cfg.deterministic;
  models.seed = cfg.train.seed;
  EvalReport report = EvaluateSystem(models, test, truth, natives, psola);
  if (!mos_path.empty()) report.manual_mos = LoadManualMos(mos_path);
  EnsureParent(out);
  WriteEvalCsv(report, out);
  std::cout << SummaryText(report);
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"selfecho: self-imitation pronunciation feedback from spectrogram translation"};
  app.require_subcommand(1);
  app.footer(kExitTable);

  bool show_config = false;
  app.add_flag("--show-config", show_config, "print every configuration key with its default");

  Common common;

  std::string in, out, png, native, learner, segments, spec, data, mode = "paired", model, psola_dir,
      reference, heldout, mos;
  std::optional<int> iters, n_test, max_steps;
  std::optional<double> cutoff;
  bool resume = false, deterministic = false;

  AppConfig defaults;
  const std::string config_help = "\nConfiguration keys (name, default, meaning):\n" + defaults.Help();

  auto *w2s = app.add_subcommand("wav2spec", "WAV to 128x128 mel-dB SPEC1 image");
  w2s->add_option("--in", in, "input WAV")->required();
  w2s->add_option("--out", out, "output SPEC1")->required();
  w2s->add_option("--png", png, "also write a PNG");
  AddCommon(w2s, common);
  w2s->footer(config_help);

  auto *s2w = app.add_subcommand("spec2wav", "SPEC1 image to WAV by Griffin-Lim");
  s2w->add_option("--in", in, "input SPEC1")->required();
  s2w->add_option("--out", out, "output WAV")->required();
  s2w->add_option("--iters", iters, "Griffin-Lim iterations (default 1000)");
  s2w->add_option("--cutoff", cutoff, "low-pass cutoff in Hz (default 0.95 x Nyquist)");
  AddCommon(s2w, common);
  s2w->footer(config_help);

  auto *ps = app.add_subcommand("psola", "transplant native pitch, intensity and duration onto a learner");
  ps->add_option("--native", native, "native WAV")->required();
  ps->add_option("--learner", learner, "learner WAV")->required();
  ps->add_option("--out", out, "output WAV")->required();
  ps->add_option("--segments", segments, "segment file (start<TAB>end<TAB>native:|learner:label)");
  AddCommon(ps, common);
  ps->footer(config_help);

  auto *sy = app.add_subcommand("synth-data", "generate a synthetic native/non-native corpus");
  sy->add_option("--spec", spec, "config file with synth keys");
  sy->add_option("--out", out, "output directory")->required();
  AddCommon(sy, common);
  sy->footer(config_help);

  auto *tr = app.add_subcommand("train", "train a paired or unpaired translator");
  tr->add_option("--mode", mode, "paired or unpaired")->check(CLI::IsMember({"paired", "unpaired"}));
  tr->add_option("--data", data, "corpus directory with manifest.tsv")->required();
  tr->add_option("--out", out, "model directory")->required();
  tr->add_option("--n-test", n_test, "held-out recordings (default 162)");
  tr->add_option("--max-steps", max_steps, "stop after this many steps");
  tr->add_flag("--resume", resume, "continue from <out>/state.bin when present");
  AddCommon(tr, common);
  tr->footer(config_help);

  auto *tl = app.add_subcommand("translate", "translate a learner WAV or SPEC1 toward native speech");
  tl->add_option("--model", model, "model directory")->required();
  tl->add_option("--in", in, "input WAV or SPEC1")->required();
  tl->add_option("--out", out, "output path prefix (.spec1, .wav and .png are written)")->required();
  tl->add_option("--reference", reference, "native WAV or SPEC1 shown as a third PNG panel");
  tl->add_flag("--deterministic", deterministic, "disable dropout at inference");
  AddCommon(tl, common);
  tl->footer(config_help);

  auto *ev = app.add_subcommand("eval", "objective evaluation on held-out recordings");
  ev->add_option("--model", model, "model directory")->required();
  ev->add_option("--data", data, "corpus directory with manifest.tsv and ground_truth_pairs.tsv")->required();
  ev->add_option("--psola-dir", psola_dir, "PSOLA outputs named <utterance>__<speaker>.wav");
  ev->add_option("--out", out, "report CSV")->required();
  ev->add_option("--heldout", heldout, "held-out manifest (default <model>/heldout.tsv)");
  ev->add_option("--mos", mos, "manual MOS ratings CSV to attach");
  ev->add_flag("--deterministic", deterministic, "disable dropout at inference");
  AddCommon(ev, common);
  ev->footer(config_help);

  app.add_subcommand("config", "print every configuration key with its default")->footer(config_help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (show_config || app.got_subcommand("config")) {
      std::cout << defaults.Help();
      return 0;
    }
    if (*w2s) return RunWav2Spec(common, in, out, png);
    if (*s2w) return RunSpec2Wav(common, in, out, iters, cutoff);
    if (*ps) return RunPsola(common, native, learner, out, segments);
    if (*sy) return RunSynth(common, spec, out);
    if (*tr) return RunTrain(common, mode, data, out, n_test, max_steps, resume);
    if (*tl) return RunTranslate(common, model, in, out, reference, deterministic);
    if (*ev) return RunEval(common, model, data, psola_dir, out, heldout, mos, deterministic);
  } catch (const Error &e) {
    std::cerr << "error (" << ErrorKindName(e.kind()) << "): " << e.what() << "\n";
    return ExitCode(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 13;
  }
  return 0;
}
