// src/evaluation.cc

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

#include "selfecho/evaluation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "selfecho/error.h"
#include "selfecho/losses.h"

namespace selfecho {

namespace {

double PixelDbSpan(double floor, double ceiling) { return ceiling - floor; }

std::vector<std::string> SplitCsv(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ',')) out.push_back(field);
  return out;
}

std::string Fmt(const std::optional<double> &v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(10) << *v;
  return os.str();
}

Tensor GridTensor(const Grid &g) { return StackImages({&g.pixels}, g.side); }

}  // namespace

double LogSpectralDistance(const SpectrogramImage &a, const SpectrogramImage &b) {
  if (a.meta.db_floor != b.meta.db_floor || a.meta.db_ceiling != b.meta.db_ceiling)
    throw Error(ErrorKind::kShapeMismatch, "images use different dB ranges");
  const int cols = std::min(a.meta.n_valid_frames, b.meta.n_valid_frames);
  if (cols <= 0) return 0.0;
  const double span = PixelDbSpan(a.meta.db_floor, a.meta.db_ceiling);
  double s = 0.0;
  for (int r = 0; r < kImageSide; ++r)
    for (int c = 0; c < cols; ++c) {
      const double d = (static_cast<double>(a.at(r, c)) - b.at(r, c)) * span;
      s += d * d;
    }
  return std::sqrt(s / (static_cast<double>(kImageSide) * cols));
}

double LogSpectralDistance(const Grid &a, const Grid &b, double db_floor, double db_ceiling) {
  if (a.side != b.side)
    throw Error(ErrorKind::kShapeMismatch, "grid sides " + std::to_string(a.side) + " and " +
                                               std::to_string(b.side));
  const int cols = std::min(a.valid_columns, b.valid_columns);
  if (cols <= 0) return 0.0;
  const double span = PixelDbSpan(db_floor, db_ceiling);
  double s = 0.0;
  for (int r = 0; r < a.side; ++r)
    for (int c = 0; c < cols; ++c) {
      const double d = (a.at(r, c) - b.at(r, c)) * span;
      s += d * d;
    }
  return std::sqrt(s / (static_cast<double>(a.side) * cols));
}

double ReconstructionSnr(const Waveform &reference, const Waveform &estimate, int max_lag) {
  if (reference.sample_rate_hz != estimate.sample_rate_hz)
    throw Error(ErrorKind::kLengthMismatch, "sample rates differ");
  const long n_ref = static_cast<long>(reference.size());
  const long n_est = static_cast<long>(estimate.size());
  if (std::labs(n_ref - n_est) > max_lag)
    throw Error(ErrorKind::kLengthMismatch, "lengths " + std::to_string(n_ref) + " and " +
                                                std::to_string(n_est) + " differ by more than " +
                                                std::to_string(max_lag));
  double best = -1e300;
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    // Compare reference[i] with estimate[i + lag].
    const long lo = std::max(0L, -lag), hi = std::min(n_ref, n_est - lag);
    if (hi - lo <= 0) continue;
    double sig = 0.0, err = 0.0;
    for (long i = lo; i < hi; ++i) {
      const double r = reference.samples[i];
      const double e = r - estimate.samples[i + lag];
      sig += r * r;
      err += e * e;
    }
    double snr;
    if (err <= 0.0) snr = kSnrCapDb;
    else if (sig <= 0.0) snr = -kSnrCapDb;
    else snr = std::min(kSnrCapDb, 10.0 * std::log10(sig / err));
    best = std::max(best, snr);
  }
  return best;
}

double NativelikenessScore(Discriminator &d, const Grid &image, const Grid *condition) {
  if (image.side != d.config().image_size)
    throw Error(ErrorKind::kShapeMismatch, "image side " + std::to_string(image.side) +
                                               " vs discriminator " +
                                               std::to_string(d.config().image_size));
  NoGradGuard no_grad;
  ForwardContext ctx;
  Tensor input = GridTensor(image);
  if (d.config().in_channels == 2) {
    if (condition == nullptr || condition->side != image.side)
      throw Error(ErrorKind::kShapeMismatch, "conditional discriminator needs a matching input");
    input = ConcatChannels(GridTensor(*condition), input);
  }
  const Tensor p = Sigmoid(d.Forward(input, ctx));
  double s = 0.0;
  for (double v : p.data()) s += v;
  return s / static_cast<double>(p.numel());
}

Aggregate Summarize(const std::vector<double> &values) {
  Aggregate a;
  a.count = values.size();
  if (values.empty()) return a;
  for (double v : values) a.mean += v;
  a.mean /= values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / (values.size() - 1));
  }
  return a;
}

std::vector<ManualMos> LoadManualMos(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIoFailure, "cannot open " + path);
  std::vector<ManualMos> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = SplitCsv(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 7) throw Error(ErrorKind::kParseError, where + ": expected 7 columns");
    if (f[0] == "utterance_id") continue;
    ManualMos m{f[0], f[1]};
    double *fields[] = {&m.holistic, &m.segmental, &m.suprasegmental, &m.imitability,
                        &m.sound_quality};
    for (int i = 0; i < 5; ++i) {
      try {
        *fields[i] = std::stod(f[2 + i]);
      } catch (const std::exception &) {
        throw Error(ErrorKind::kParseError, where + ": rating is not a number");
      }
      if (!(*fields[i] >= 1.0 && *fields[i] <= 5.0))
        throw Error(ErrorKind::kParseError, where + ": rating outside [1, 5]");
    }
    out.push_back(m);
  }
  return out;
}

namespace {

template <typename Getter>
Aggregate Collect(const std::vector<EvalItem> &items, Getter get) {
  std::vector<double> v;
  for (const EvalItem &it : items)
    if (auto x = get(it)) v.push_back(*x);
  return Summarize(v);
}

}  // namespace

Aggregate EvalReport::lsd() const {
  return Collect(items, [](const EvalItem &i) { return std::optional<double>(i.lsd_to_reference_db); });
}
Aggregate EvalReport::identity_lsd() const {
  return Collect(items, [](const EvalItem &i) { return std::optional<double>(i.lsd_identity_baseline_db); });
}
Aggregate EvalReport::cycle() const {
  return Collect(items, [](const EvalItem &i) { return i.cycle_error; });
}
Aggregate EvalReport::nativelikeness() const {
  return Collect(items, [](const EvalItem &i) { return std::optional<double>(i.nativelikeness_score); });
}
Aggregate EvalReport::psola_lsd() const {
  return Collect(items, [](const EvalItem &i) { return i.psola_lsd_db; });
}

void WriteEvalCsv(const EvalReport &report, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIoFailure, "cannot write " + path);
  os << "utterance_id,speaker_id,lsd_to_reference_db,lsd_identity_baseline_db,cycle_error,"
        "nativelikeness_score,psola_lsd_db\n";
  for (const EvalItem &it : report.items)
    os << it.utterance_id << ',' << it.speaker_id << ',' << Fmt(it.lsd_to_reference_db) << ','
       << Fmt(it.lsd_identity_baseline_db) << ',' << Fmt(it.cycle_error) << ','
       << Fmt(it.nativelikeness_score) << ',' << Fmt(it.psola_lsd_db) << '\n';
  if (!os) throw Error(ErrorKind::kIoFailure, "write failed: " + path);
}

std::string SummaryText(const EvalReport &report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  auto line = [&os](const char *name, const Aggregate &a, const char *unit) {
    if (a.count == 0) {
      os << name << ": n/a\n";
      return;
    }
    os << name << ": " << a.mean << " +- " << a.stddev << unit << " (n=" << a.count << ")\n";
  };
  os << "system: " << report.system << "\n";
  os << "items: " << report.items.size() << "\n";
  line("lsd_to_reference", report.lsd(), " dB");
  line("lsd_identity_baseline", report.identity_lsd(), " dB");
  line("cycle_error", report.cycle(), "");
  line("nativelikeness", report.nativelikeness(), "");
  line("psola_lsd", report.psola_lsd(), " dB");
  if (!report.manual_mos.empty()) {
    std::map<std::string, std::vector<std::vector<double>>> by_system;
    for (const ManualMos &m : report.manual_mos) {
      auto &cols = by_system[m.system];
      cols.resize(5);
      const double v[] = {m.holistic, m.segmental, m.suprasegmental, m.imitability, m.sound_quality};
      for (int i = 0; i < 5; ++i) cols[i].push_back(v[i]);
    }
    const char *names[] = {"holistic", "segmental", "suprasegmental", "imitability", "sound_quality"};
    os << "manual MOS:\n";
    for (const auto &[system, cols] : by_system) {
      os << "  " << system << ":";
      double avg = 0.0;
      for (int i = 0; i < 5; ++i) {
        const double m = Summarize(cols[i]).mean;
        avg += m / 5.0;
        os << ' ' << names[i] << '=' << m;
      }
      os << " average=" << avg << "\n";
    }
  }
  return os.str();
}

Grid Translate(Generator &g, const Grid &x, bool deterministic, uint64_t seed) {
  NoGradGuard no_grad;
  Rng rng(seed);
  ForwardContext ctx{.training = false, .dropout_active = !deterministic, .rng = &rng};
  const Tensor y = g.Forward(GridTensor(x), ctx);
  Grid out = x;
  out.pixels.assign(y.data().begin(), y.data().end());
  return out;
}

EvalReport EvaluateSystem(const EvalModels &models, const std::vector<EvalInput> &test,
                          const GroundTruthMap &ground_truth,
                          const std::map<std::string, Grid> &natives,
                          const std::map<std::string, Grid> &psola) {
  if (models.g == nullptr) throw Error(ErrorKind::kBadConfig, "evaluation needs a generator");
  EvalReport report;
  report.system = TrainModeName(models.mode);
  for (size_t i = 0; i < test.size(); ++i) {
    const EvalInput &in = test[i];
    const std::string key = in.recording.key();
    auto gt = ground_truth.find(key);
    if (gt == ground_truth.end())
      throw Error(ErrorKind::kMissingGroundTruth, "no ground-truth counterpart for " + key);
    auto ref = natives.find(gt->second);
    if (ref == natives.end())
      throw Error(ErrorKind::kMissingGroundTruth, "counterpart " + gt->second + " not loaded");
    const uint64_t item_seed = MixSeed(models.seed, i);
    Grid out = Translate(*models.g, in.image, models.deterministic, item_seed);
    out.valid_columns = in.image.valid_columns;

    EvalItem item;
    item.utterance_id = in.recording.utterance_id;
    item.speaker_id = in.recording.speaker_id;
    item.lsd_to_reference_db = LogSpectralDistance(out, ref->second);
    item.lsd_identity_baseline_db = LogSpectralDistance(in.image, ref->second);
    if (models.mode == TrainMode::kUnpaired && models.f != nullptr) {
      const Grid back = Translate(*models.f, out, models.deterministic, MixSeed(item_seed, 1));
      double s = 0.0;
      for (size_t p = 0; p < back.pixels.size(); ++p) s += std::fabs(back.pixels[p] - in.image.pixels[p]);
      item.cycle_error = s / back.pixels.size();
    }
    if (models.d != nullptr)
      item.nativelikeness_score =
          NativelikenessScore(*models.d, out, models.d->config().in_channels == 2 ? &in.image : nullptr);
    auto ps = psola.find(key);
    if (ps != psola.end()) item.psola_lsd_db = LogSpectralDistance(ps->second, ref->second);
    report.items.push_back(item);
  }
  return report;
}

}  // namespace selfecho
