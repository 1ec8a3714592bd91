// src/psola.cc

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

#include "selfecho/psola.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "selfecho/error.h"
#include "selfecho/spectrogram.h"

namespace selfecho {

namespace {

std::vector<double> HannSymmetric(int length) {
  std::vector<double> w(length);
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int n = 0; n < length; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
  return w;
}

// Window autocorrelation r_w(lag) / r_w(0).
std::vector<double> NormalizedAutocorr(const std::vector<double> &x, int max_lag) {
  std::vector<double> r(max_lag + 1, 0.0);
  const int n = static_cast<int>(x.size());
  for (int lag = 0; lag <= max_lag && lag < n; ++lag) {
    double s = 0.0;
    for (int i = 0; i + lag < n; ++i) s += x[i] * x[i + lag];
    r[lag] = s;
  }
  if (r[0] > 0.0) {
    const double r0 = r[0];
    for (double &v : r) v /= r0;
  }
  return r;
}

double GlobalPeak(const std::vector<double> &x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  return peak;
}

double Interpolate(const std::vector<double> &values, double index) {
  if (values.empty()) return 0.0;
  if (index <= 0.0) return values.front();
  const double last = static_cast<double>(values.size() - 1);
  if (index >= last) return values.back();
  const size_t i = static_cast<size_t>(index);
  const double frac = index - i;
  return values[i] * (1.0 - frac) + values[i + 1] * frac;
}

std::vector<double> MovingAverage(const std::vector<double> &v, int half_width) {
  std::vector<double> out(v.size());
  const int n = static_cast<int>(v.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half_width), hi = std::min(n - 1, i + half_width);
    double s = 0.0;
    for (int j = lo; j <= hi; ++j) s += v[j];
    out[i] = s / (hi - lo + 1);
  }
  return out;
}

double ClampFactor(double f, const char *what, std::vector<std::string> *warnings) {
  if (f >= kMinFactor && f <= kMaxFactor) return f;
  const double c = std::clamp(f, kMinFactor, kMaxFactor);
  if (warnings != nullptr) {
    std::ostringstream os;
    os << what << " factor " << f << " clamped to " << c;
    warnings->push_back(os.str());
  }
  return c;
}

}  // namespace

int PitchOptions::step_samples(int sample_rate_hz) const {
  return std::max(1, static_cast<int>(std::lround(frame_step_s * sample_rate_hz)));
}

int PitchOptions::window_samples(int sample_rate_hz) const {
  return static_cast<int>(std::ceil(3.0 * sample_rate_hz / f0_min));
}

void PitchOptions::Validate(int sample_rate_hz) const {
  if (!(f0_min > 0.0 && f0_min < f0_max && f0_max < sample_rate_hz / 2.0))
    throw Error(ErrorKind::kBadConfig, "need 0 < f0_min < f0_max < sample_rate / 2");
  if (frame_step_s <= 0.0) throw Error(ErrorKind::kBadConfig, "frame step must be positive");
}

std::vector<double> EstimateF0(const Waveform &wave, const PitchOptions &options) {
  const int sr = wave.sample_rate_hz;
  options.Validate(sr);
  const int step = options.step_samples(sr);
  const int window = options.window_samples(sr);
  const int len = static_cast<int>(wave.size());
  if (len < window)
    throw Error(ErrorKind::kTooShort, "signal of " + std::to_string(len) +
                                          " samples is shorter than the " + std::to_string(window) +
                                          "-sample pitch window");
  const int n_frames = len / step;
  const int min_lag = std::max(2, static_cast<int>(std::floor(sr / options.f0_max)));
  const int max_lag = static_cast<int>(std::ceil(sr / options.f0_min));
  const std::vector<double> hann = HannSymmetric(window);
  const std::vector<double> window_ac = NormalizedAutocorr(hann, max_lag + 1);
  const double global_peak = GlobalPeak(wave.samples);

  std::vector<double> f0(n_frames, 0.0);
  if (global_peak <= 0.0) return f0;
  std::vector<double> frame(window);
  for (int i = 0; i < n_frames; ++i) {
    const int start = i * step + step / 2 - window / 2;
    double mean = 0.0, local_peak = 0.0;
    for (int n = 0; n < window; ++n) {
      const int idx = start + n;
      frame[n] = (idx >= 0 && idx < len) ? wave.samples[idx] : 0.0;
      mean += frame[n];
      local_peak = std::max(local_peak, std::fabs(frame[n]));
    }
    if (local_peak < options.silence_threshold * global_peak) continue;
    mean /= window;
    for (int n = 0; n < window; ++n) frame[n] = (frame[n] - mean) * hann[n];
    std::vector<double> r = NormalizedAutocorr(frame, max_lag + 1);
    if (r[0] <= 0.0) continue;
    for (int lag = 0; lag <= max_lag + 1; ++lag)
      r[lag] = window_ac[lag] > 1e-6 ? r[lag] / window_ac[lag] : 0.0;

    // Shortest-lag local maximum that is close to the best one; this avoids
    // picking sub-octave lags whose peaks are nearly as tall.
    double best = 0.0;
    for (int lag = min_lag; lag <= max_lag; ++lag)
      if (r[lag] > r[lag - 1] && r[lag] >= r[lag + 1]) best = std::max(best, r[lag]);
    if (best < options.voicing_threshold) continue;
    int chosen = -1;
    for (int lag = min_lag; lag <= max_lag; ++lag)
      if (r[lag] > r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] >= 0.9 * best) {
        chosen = lag;
        break;
      }
    if (chosen < 0) continue;
    const double ym = r[chosen - 1], y0 = r[chosen], yp = r[chosen + 1];
    const double denom = ym - 2.0 * y0 + yp;
    const double offset = std::fabs(denom) > 1e-12 ? 0.5 * (ym - yp) / denom : 0.0;
    const double hz = sr / (chosen + std::clamp(offset, -0.5, 0.5));
    if (hz >= options.f0_min && hz <= options.f0_max) f0[i] = hz;
  }
  return f0;
}

PitchMarks PlacePitchMarks(const Waveform &wave, const std::vector<double> &f0,
                           const PitchOptions &options) {
  const int sr = wave.sample_rate_hz;
  const int step = options.step_samples(sr);
  const int len = static_cast<int>(wave.size());
  const int min_spacing = static_cast<int>(std::ceil(0.5 * sr / options.f0_max));
  PitchMarks marks;
  if (len == 0) return marks;

  // Search peaks on the dominant polarity of the signal.
  double polarity = 1.0, peak = 0.0;
  for (double v : wave.samples)
    if (std::fabs(v) > peak) {
      peak = std::fabs(v);
      polarity = v >= 0 ? 1.0 : -1.0;
    }
  auto argmax = [&](int lo, int hi) {
    lo = std::clamp(lo, 0, len - 1);
    hi = std::clamp(hi, 0, len - 1);
    int best = lo;
    for (int n = lo; n <= hi; ++n)
      if (polarity * wave.samples[n] > polarity * wave.samples[best]) best = n;
    return best;
  };
  auto f0_at = [&](int pos) {
    if (f0.empty()) return 0.0;
    const int frame = std::clamp(pos / step, 0, static_cast<int>(f0.size()) - 1);
    return f0[frame];
  };

  bool previous_voiced = false;
  int t = 0;
  while (t < len) {
    const double hz = f0_at(t);
    int mark;
    if (hz > 0.0) {
      const double period = sr / hz;
      if (previous_voiced && !marks.positions.empty()) {
        const double expected = marks.positions.back() + period;
        mark = argmax(static_cast<int>(std::lround(expected - 0.2 * period)),
                      static_cast<int>(std::lround(expected + 0.2 * period)));
      } else {
        mark = argmax(t, t + static_cast<int>(period) - 1);
      }
      previous_voiced = true;
    } else {
      mark = t;
      previous_voiced = false;
    }
    if (!marks.positions.empty() && mark < marks.positions.back() + min_spacing)
      mark = marks.positions.back() + min_spacing;
    if (mark >= len) break;
    marks.positions.push_back(mark);
    t = previous_voiced ? mark + 1 : mark + step;
    if (previous_voiced) {
      // Re-enter the loop at the expected next period; an unvoiced frame
      // there switches to uniform spacing.
      const double period = sr / f0_at(mark);
      const int next = mark + static_cast<int>(std::lround(period));
      if (f0_at(std::min(next, len - 1)) <= 0.0) {
        previous_voiced = false;
        t = mark + step;
      }
    }
  }
  return marks;
}

Waveform PsolaResynthesize(const Waveform &wave, const PitchMarks &marks,
                           const std::vector<double> &pitch_factor,
                           const std::vector<double> &time_factor) {
  const auto &a = marks.positions;
  const size_t m = a.size();
  if (pitch_factor.size() != m || time_factor.size() != m)
    throw Error(ErrorKind::kShapeMismatch, "one pitch and one time factor per mark required");
  for (size_t j = 0; j < m; ++j)
    for (double f : {pitch_factor[j], time_factor[j]})
      if (!(f >= kMinFactor && f <= kMaxFactor))
        throw Error(ErrorKind::kFactorOutOfRange,
                    "factor " + std::to_string(f) + " at mark " + std::to_string(j) +
                        " outside [0.25, 4]");
  const int len = static_cast<int>(wave.size());
  Waveform out;
  out.sample_rate_hz = wave.sample_rate_hz;
  if (m == 0 || len == 0) {
    out.samples = wave.samples;
    return out;
  }
  for (size_t j = 1; j < m; ++j)
    if (a[j] <= a[j - 1]) throw Error(ErrorKind::kBadConfig, "pitch marks must increase");

  auto left_width = [&](size_t j) { return j > 0 ? a[j] - a[j - 1] : (m > 1 ? a[1] - a[0] : a[0] + 1); };
  auto right_width = [&](size_t j) {
    return j + 1 < m ? a[j + 1] - a[j] : (m > 1 ? a[j] - a[j - 1] : len - a[j]);
  };

  // Piecewise-linear analysis -> synthesis time map anchored at the marks.
  std::vector<double> synth_at(m);
  synth_at[0] = a[0] * time_factor[0];
  for (size_t j = 1; j < m; ++j) synth_at[j] = synth_at[j - 1] + (a[j] - a[j - 1]) * time_factor[j - 1];
  const double out_len_d = synth_at[m - 1] + (len - a[m - 1]) * time_factor[m - 1];
  const int out_len = std::max(1, static_cast<int>(std::lround(out_len_d)));
  auto analysis_time = [&](double s) {
    if (s <= synth_at[0]) return s / time_factor[0];
    auto it = std::upper_bound(synth_at.begin(), synth_at.end(), s);
    if (it == synth_at.end()) return a[m - 1] + (s - synth_at[m - 1]) / time_factor[m - 1];
    const size_t j = static_cast<size_t>(it - synth_at.begin()) - 1;
    return a[j] + (s - synth_at[j]) / time_factor[j];
  };

  std::vector<double> acc(out_len, 0.0), norm(out_len, 0.0);
  double s = synth_at[0];
  while (s < out_len + 0.5) {
    const double ta = analysis_time(s);
    auto it = std::lower_bound(a.begin(), a.end(), static_cast<int>(std::lround(ta)));
    size_t j = static_cast<size_t>(it - a.begin());
    if (j == m) j = m - 1;
    if (j > 0 && std::fabs(a[j - 1] - ta) <= std::fabs(a[j] - ta)) j = j - 1;

    const int lw = left_width(j), rw = right_width(j);
    const int centre = static_cast<int>(std::lround(s));
    for (int n = -lw + 1; n < rw; ++n) {
      const int src = a[j] + n, dst = centre + n;
      if (src < 0 || src >= len || dst < 0 || dst >= out_len) continue;
      const double w = n < 0 ? 0.5 + 0.5 * std::cos(std::numbers::pi * n / lw)
                             : 0.5 + 0.5 * std::cos(std::numbers::pi * n / rw);
      acc[dst] += w * wave.samples[src];
      norm[dst] += w;
    }
    const double period = right_width(j);
    s += std::max(1.0, period / pitch_factor[j]);
  }
  out.samples.resize(out_len);
  // Dividing where the windows sum below one would re-amplify the tapered
  // edges of each grain, i.e. the neighbouring periods, when lowering pitch.
  for (int n = 0; n < out_len; ++n) out.samples[n] = acc[n] / std::max(norm[n], 1.0);
  const double peak = GlobalPeak(out.samples);
  if (peak > 1.0)
    for (double &v : out.samples) v /= peak;
  return out;
}

std::vector<double> IntensityContour(const Waveform &wave, const PitchOptions &options) {
  const int sr = wave.sample_rate_hz;
  const int step = options.step_samples(sr);
  const int window = options.window_samples(sr);
  const int len = static_cast<int>(wave.size());
  const int n_frames = len / step;
  const std::vector<double> hann = HannSymmetric(window);
  std::vector<double> out(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    const int start = i * step + step / 2 - window / 2;
    double energy = 0.0, weight = 0.0;
    for (int n = 0; n < window; ++n) {
      const int idx = start + n;
      if (idx < 0 || idx >= len) continue;
      energy += hann[n] * wave.samples[idx] * wave.samples[idx];
      weight += hann[n];
    }
    const double rms = weight > 0.0 ? std::sqrt(energy / weight) : 0.0;
    out[i] = rms > 0.0 ? std::max(kIntensityFloorDb, 20.0 * std::log10(rms)) : kIntensityFloorDb;
  }
  return out;
}

ProsodyProfile ExtractProsody(const Waveform &wave, const PitchOptions &options) {
  ProsodyProfile p;
  p.f0_hz = EstimateF0(wave, options);
  p.intensity_db = IntensityContour(wave, options);
  p.total_duration_s = wave.duration_s();
  p.frame_step_s = options.frame_step_s;
  return p;
}

std::vector<Segment> ReadSegments(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIoFailure, "cannot open " + path);
  std::vector<Segment> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string start, end, label;
    if (!std::getline(ls, start, '\t') || !std::getline(ls, end, '\t') || !std::getline(ls, label))
      throw Error(ErrorKind::kParseError, path + ":" + std::to_string(line_no) +
                                              ": expected start<TAB>end<TAB>label");
    Segment s;
    try {
      s.start_s = std::stod(start);
      s.end_s = std::stod(end);
    } catch (const std::exception &) {
      throw Error(ErrorKind::kParseError, path + ":" + std::to_string(line_no) + ": bad time value");
    }
    if (!(s.end_s > s.start_s) || s.start_s < 0.0)
      throw Error(ErrorKind::kParseError, path + ":" + std::to_string(line_no) +
                                              ": segment must satisfy 0 <= start < end");
    s.label = label;
    out.push_back(s);
  }
  return out;
}

namespace {

// Learner-time -> native-time anchors (seconds) from paired segments.
std::vector<std::pair<double, double>> SegmentAnchors(const std::vector<Segment> &segments,
                                                      double learner_dur, double native_dur) {
  std::map<std::string, Segment> native, learner;
  for (const Segment &s : segments) {
    if (s.label.rfind("native:", 0) == 0) native[s.label.substr(7)] = s;
    else if (s.label.rfind("learner:", 0) == 0) learner[s.label.substr(8)] = s;
    else throw Error(ErrorKind::kParseError, "segment label must start with native: or learner:");
  }
  std::vector<std::pair<double, double>> anchors{{0.0, 0.0}};
  for (const auto &[name, ls] : learner) {
    auto it = native.find(name);
    if (it == native.end()) continue;
    anchors.emplace_back(ls.start_s, it->second.start_s);
    anchors.emplace_back(ls.end_s, it->second.end_s);
  }
  anchors.emplace_back(learner_dur, native_dur);
  std::sort(anchors.begin(), anchors.end());
  std::vector<std::pair<double, double>> monotone;
  for (const auto &p : anchors)
    if (monotone.empty() || (p.first > monotone.back().first && p.second >= monotone.back().second))
      monotone.push_back(p);
  if (monotone.size() < 2) throw Error(ErrorKind::kParseError, "segments give no usable anchors");
  return monotone;
}

double MapAnchors(const std::vector<std::pair<double, double>> &anchors, double t) {
  for (size_t k = 1; k < anchors.size(); ++k)
    if (t <= anchors[k].first || k + 1 == anchors.size()) {
      const auto &[x0, y0] = anchors[k - 1];
      const auto &[x1, y1] = anchors[k];
      return y0 + (t - x0) * (y1 - y0) / (x1 - x0);
    }
  return anchors.back().second;
}

}  // namespace

Waveform TransplantProsody(const Waveform &native, const Waveform &learner,
                           const TransplantOptions &options, TransplantReport *report) {
  ValidateWaveform(native);
  ValidateWaveform(learner);
  if (native.sample_rate_hz != learner.sample_rate_hz)
    throw Error(ErrorKind::kBadConfig, "native and learner sample rates differ");
  const int sr = learner.sample_rate_hz;
  const PitchOptions &po = options.pitch;
  const int step = po.step_samples(sr);
  std::vector<std::string> local_warnings;
  std::vector<std::string> *warnings = report ? &report->warnings : &local_warnings;

  // Alignment features: mel-dB frames on the pitch-frame hop.
  DspConfig dsp;
  dsp.sample_rate_hz = sr;
  dsp.hop = step;
  dsp.mel_high_hz = sr / 2.0;
  if (native.size() < static_cast<size_t>(dsp.n_fft + 2 * step) ||
      learner.size() < static_cast<size_t>(dsp.n_fft + 2 * step))
    throw Error(ErrorKind::kTooShort, "both recordings need at least 3 analysis frames");
  const double centre = dsp.n_fft / 2.0;  // sample offset of a mel frame centre

  const int learner_frames = static_cast<int>(learner.size()) / step;
  // native_pos[i]: native sample position aligned with learner pitch frame i.
  std::vector<double> native_pos(learner_frames);
  if (options.segments.empty()) {
    const RealMatrix mel_l = WaveToMelDb(learner, dsp);
    const RealMatrix mel_n = WaveToMelDb(native, dsp);
    AlignmentPath path = DtwAlign(mel_l, mel_n);
    ValidatePath(path, static_cast<int>(mel_l.cols()), static_cast<int>(mel_n.cols()));
    std::vector<double> sum(mel_l.cols(), 0.0), count(mel_l.cols(), 0.0);
    for (const auto &[i, j] : path.pairs) {
      sum[i] += j;
      count[i] += 1.0;
    }
    std::vector<double> warp(mel_l.cols());
    for (size_t i = 0; i < warp.size(); ++i) warp[i] = sum[i] / count[i];
    for (int i = 0; i < learner_frames; ++i) {
      const double t = i * step + step / 2.0;
      const double mel_index = (t - centre) / step;
      native_pos[i] = Interpolate(warp, mel_index) * step + centre +
                      (mel_index < 0 ? mel_index * step : 0.0) +
                      (mel_index > warp.size() - 1 ? (mel_index - (warp.size() - 1)) * step : 0.0);
    }
    if (report != nullptr) report->path = std::move(path);
  } else {
    const auto anchors = SegmentAnchors(options.segments, learner.duration_s(), native.duration_s());
    for (int i = 0; i < learner_frames; ++i)
      native_pos[i] = MapAnchors(anchors, (i * step + step / 2.0) / sr) * sr;
  }

  // Local rate (native samples per learner sample), smoothed, then scaled so
  // the total duration matches the native recording.
  std::vector<double> rate(learner_frames, 1.0);
  for (int i = 0; i + 1 < learner_frames; ++i) rate[i] = (native_pos[i + 1] - native_pos[i]) / step;
  if (learner_frames > 1) rate[learner_frames - 1] = rate[learner_frames - 2];
  rate = MovingAverage(rate, options.rate_smoothing);
  double mean_rate = 0.0;
  for (double &r : rate) {
    r = std::max(r, 0.05);
    mean_rate += r;
  }
  mean_rate /= std::max(1, learner_frames);
  const double target_rate = static_cast<double>(native.size()) / learner.size();
  for (double &r : rate) r *= target_rate / mean_rate;

  const std::vector<double> f0_l = EstimateF0(learner, po);
  const std::vector<double> f0_n = EstimateF0(native, po);
  const PitchMarks marks = PlacePitchMarks(learner, f0_l, po);
  std::vector<double> pitch_factor, time_factor;
  bool clamped_time = false, clamped_pitch = false;
  for (int pos : marks.positions) {
    const int frame = std::clamp(pos / step, 0, learner_frames - 1);
    const double tf = rate[frame];
    double pf = 1.0;
    const double fl = f0_l.empty() ? 0.0 : f0_l[std::min<size_t>(frame, f0_l.size() - 1)];
    const int native_frame = static_cast<int>(std::lround((native_pos[frame] - step / 2.0) / step));
    const double fn = f0_n.empty() ? 0.0
                                   : f0_n[std::clamp<int>(native_frame, 0, static_cast<int>(f0_n.size()) - 1)];
    if (fl > 0.0 && fn > 0.0) pf = fn / fl;
    const size_t before = warnings->size();
    time_factor.push_back(ClampFactor(tf, "time", clamped_time ? nullptr : warnings));
    clamped_time = clamped_time || warnings->size() > before;
    const size_t before_p = warnings->size();
    pitch_factor.push_back(ClampFactor(pf, "pitch", clamped_pitch ? nullptr : warnings));
    clamped_pitch = clamped_pitch || warnings->size() > before_p;
  }
  Waveform out = PsolaResynthesize(learner, marks, pitch_factor, time_factor);

  // Frame-wise intensity matching against the native contour, applied last.
  const std::vector<double> target_db = IntensityContour(native, po);
  const std::vector<double> current_db = IntensityContour(out, po);
  const size_t frames = std::min(target_db.size(), current_db.size());
  std::vector<double> gain_db(frames, 0.0);
  for (size_t k = 0; k < frames; ++k) {
    if (current_db[k] <= kIntensityFloorDb + 1.0) continue;
    gain_db[k] = std::clamp(target_db[k] - current_db[k], -40.0, 20.0);
  }
  gain_db = MovingAverage(gain_db, 1);
  for (size_t n = 0; n < out.size() && frames > 0; ++n) {
    const double frame_index = (static_cast<double>(n) - step / 2.0) / step;
    out.samples[n] *= std::pow(10.0, Interpolate(gain_db, frame_index) / 20.0);
  }
  const double peak = GlobalPeak(out.samples);
  if (peak > 1.0)
    for (double &v : out.samples) v /= peak;
  return out;
}

}  // namespace selfecho
