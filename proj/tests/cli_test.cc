// tests/cli_test.cc

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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "doctest.h"
#include "selfecho/griffin_lim.h"
#include "selfecho/spectrogram.h"
#include "selfecho/stft.h"
#include "selfecho/wav_io.h"

using namespace selfecho;
namespace fs = std::filesystem;

namespace {

const fs::path &Work() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "selfecho_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string P(const std::string &name) { return (Work() / name).string(); }

// Runs the CLI with `args`; stdout goes to `log` when given.
int Run(const std::string &args, const std::string &log = "") {
  const std::string out = log.empty() ? "/dev/null" : P(log);
  const std::string cmd = std::string(SELFECHO_BIN) + " " + args + " >" + out + " 2>" + out + ".err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

int CountLines(const std::string &path) {
  std::ifstream is(path);
  int n = 0;
  for (std::string l; std::getline(is, l);) ++n;
  return n;
}

Waveform Harmonic(double seconds, double f0) {
  Waveform w;
  w.samples.resize(static_cast<size_t>(seconds * w.sample_rate_hz));
  for (size_t i = 0; i < w.samples.size(); ++i) {
    double s = 0.0;
    for (int k = 1; k <= 5; ++k) s += std::sin(2 * std::numbers::pi * k * f0 * i / w.sample_rate_hz) / k;
    w.samples[i] = 0.3 * s;
  }
  return w;
}

Waveform Pulses(double seconds, double f0) {
  Waveform w;
  w.samples.resize(static_cast<size_t>(seconds * w.sample_rate_hz));
  const double period = w.sample_rate_hz / f0;
  for (size_t i = 0; i < w.samples.size(); ++i) {
    const double t = std::fmod(static_cast<double>(i), period) / w.sample_rate_hz;
    w.samples[i] = 0.5 * std::exp(-t / 0.002) * std::sin(2 * std::numbers::pi * 700.0 * t);
  }
  return w;
}

// A small corpus shared by the training and evaluation cases.
const std::string &Corpus() {
  static const std::string dir = [] {
    const std::string d = P("corpus");
    REQUIRE(Run("synth-data --out " + d + " --set n_utterances=6 --set n_native_speakers=2 "
                "--set n_nonnative_speakers=2 --seed 3") == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("help lists the defaults") {
  REQUIRE(Run("--help", "help.txt") == 0);
  REQUIRE(Run("train --help", "train_help.txt") == 0);
  const std::string h = Slurp(P("train_help.txt"));
  CHECK(h.find("batch_size              4 ") != std::string::npos);
  CHECK(h.find("gl_iterations           1000 ") != std::string::npos);
  CHECK(Slurp(P("help.txt")).find("Exit codes") != std::string::npos);
  REQUIRE(Run("spec2wav --help", "s2w_help.txt") == 0);
  CHECK(Slurp(P("s2w_help.txt")).find("default 1000") != std::string::npos);
  CHECK(Run("--no-such-flag") == 64);
  CHECK(Run("train --set nonsense=1 --data x --out y") == 6);
}

TEST_CASE("wav2spec frame counts and errors") {
  SaveWav(Harmonic(1.0, 150.0), P("one.wav"));
  REQUIRE(Run("wav2spec --in " + P("one.wav") + " --out " + P("one.spec1") + " --png " + P("one.png")) == 0);
  CHECK(ReadSpec1(P("one.spec1")).meta.n_valid_frames == 46);
  CHECK(fs::exists(P("one.png")));

  SaveWav(Harmonic(3.0, 150.0), P("three.wav"));
  CHECK(Run("wav2spec --in " + P("three.wav") + " --out " + P("three.spec1")) == 3);
  SaveWav(Harmonic(0.01, 150.0), P("tiny.wav"));
  CHECK(Run("wav2spec --in " + P("tiny.wav") + " --out " + P("tiny.spec1")) == 4);
  CHECK(Run("wav2spec --in " + P("absent.wav") + " --out " + P("x.spec1")) == 1);
  {
    std::ofstream os(P("junk.wav"));
    os << "RIFX not really";
  }
  CHECK(Run("wav2spec --in " + P("junk.wav") + " --out " + P("x.spec1")) == 2);
}

TEST_CASE("spec2wav reconstructs a consistent signal") {
  SaveWav(Harmonic(1.0, 150.0), P("h.wav"));
  REQUIRE(Run("wav2spec --in " + P("h.wav") + " --out " + P("h.spec1")) == 0);
  REQUIRE(Run("spec2wav --in " + P("h.spec1") + " --out " + P("h_out.wav")) == 0);
  const SpectrogramImage img = ReadSpec1(P("h.spec1"));
  const DspConfig dsp = img.meta.ToDspConfig();
  const RealMatrix target = LowpassZero(ImageToLinearMagnitude(img), dsp.cutoff_fraction * dsp.nyquist(),
                                        dsp.sample_rate_hz, dsp.n_fft);
  const Waveform out = LoadWav(P("h_out.wav"));
  CHECK(out.samples.size() == static_cast<size_t>(45 * 342 + 512));
  CHECK(ConsistencySnrDb(out.samples, target, dsp.n_fft, dsp.hop) >= 20.0);
  CHECK(Run("spec2wav --in " + P("h.spec1") + " --out " + P("c.wav") + " --cutoff 9000") == 6);
  CHECK(Run("spec2wav --in " + P("h.wav") + " --out " + P("c.wav")) == 2);
}

TEST_CASE("psola stretches the learner to the native duration") {
  SaveWav(Pulses(2.0, 120.0), P("native.wav"));
  SaveWav(Pulses(1.0, 150.0), P("learner.wav"));
  REQUIRE(Run("psola --native " + P("native.wav") + " --learner " + P("learner.wav") + " --out " +
              P("fb.wav")) == 0);
  const Waveform out = LoadWav(P("fb.wav"));
  CHECK(std::abs(out.duration_s() - 2.0) <= 342.0 / 16000);
  SaveWav(Harmonic(0.02, 150.0), P("short.wav"));
  CHECK(Run("psola --native " + P("short.wav") + " --learner " + P("learner.wav") + " --out " +
            P("x.wav")) == 4);
}

TEST_CASE("synthetic corpus from the command line") {
  const std::string d = P("synth");
  REQUIRE(Run("synth-data --out " + d) == 0);
  CHECK(CountLines(d + "/manifest.tsv") == 80);
  int wavs = 0;
  for (const auto &e : fs::recursive_directory_iterator(d)) wavs += e.path().extension() == ".wav";
  CHECK(wavs == 80);
  {
    std::ofstream os(P("bad_spec.cfg"));
    os << "stretch_factor = 7\n";
  }
  CHECK(Run("synth-data --spec " + P("bad_spec.cfg") + " --out " + P("bad")) == 6);
}

TEST_CASE("train, translate and evaluate") {
  const std::string data = Corpus();
  const std::string model = P("paired_model");
  REQUIRE(Run("train --mode paired --data " + data + " --out " + model +
              " --n-test 4 --max-steps 6 --seed 1") == 0);
  CHECK(fs::exists(model + "/model.meta"));
  CHECK(CountLines(model + "/heldout.tsv") == 4);

  const std::string src = data + "/" + [&] {
    std::ifstream is(data + "/manifest.tsv");
    std::string line, last;
    while (std::getline(is, line)) last = line;
    return last.substr(last.rfind('\t') + 1);
  }();
  REQUIRE(Run("translate --model " + model + " --in " + src + " --out " + P("tr") + " --deterministic") == 0);
  for (const char *ext : {".spec1", ".wav", ".png"}) CHECK(fs::exists(P(std::string("tr") + ext)));

  REQUIRE(Run("eval --model " + model + " --data " + data + " --out " + P("eval.csv") + " --deterministic",
              "eval.txt") == 0);
  CHECK(CountLines(P("eval.csv")) >= 2);

  // Without the ground-truth map evaluation cannot run.
  const std::string nogt = P("corpus_nogt");
  fs::remove_all(nogt);
  fs::copy(data, nogt, fs::copy_options::recursive);
  fs::remove(nogt + "/ground_truth_pairs.tsv");
  CHECK(Run("eval --model " + model + " --data " + nogt + " --out " + P("e2.csv")) == 5);
  CHECK(Run("train --data " + data + " --out " + P("m2") + " --n-test 100") == 9);
}

TEST_CASE("unpaired training on a paired corpus") {
  const std::string model = P("unpaired_model");
  REQUIRE(Run("train --mode unpaired --data " + Corpus() + " --out " + model +
              " --n-test 4 --max-steps 3 --seed 1") == 0);
  const std::string meta = Slurp(model + "/model.meta");
  CHECK(meta.find("mode = unpaired") != std::string::npos);
  CHECK(meta.find("generator = resnet") != std::string::npos);
}

TEST_CASE("reruns are byte-identical") {
  const std::string a = P("rerun_a"), b = P("rerun_b");
  for (const std::string &d : {a, b}) {
    REQUIRE(Run("synth-data --out " + d + " --set n_utterances=3 --seed 9") == 0);
    REQUIRE(Run("train --data " + d + " --out " + d + "/model --n-test 3 --max-steps 4 --seed 2") == 0);
    REQUIRE(Run("wav2spec --in " + d + "/native/utt000__nat00.wav --out " + d + "/x.spec1") == 0);
    REQUIRE(Run("spec2wav --in " + d + "/x.spec1 --out " + d + "/x.wav --iters 30") == 0);
  }
  for (const auto &e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    CAPTURE(rel.string());
    CHECK(Slurp(e.path().string()) == Slurp((fs::path(b) / rel).string()));
  }
}
