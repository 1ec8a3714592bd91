// include/selfecho/wav_io.h

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

#ifndef SELFECHO_WAV_IO_H_
#define SELFECHO_WAV_IO_H_

#include <string>
#include <vector>

namespace selfecho {

// Mono audio. Samples are finite and lie in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  size_t size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

// Throws BadConfig unless the waveform is non-empty, finite and in range.
void ValidateWaveform(const Waveform &wave);

// RIFF/WAVE, PCM 16-bit mono only. Samples are scaled by 1/32768.
Waveform LoadWav(const std::string &path);
// Exact inverse of LoadWav for values k/32768; out-of-range values saturate.
void SaveWav(const Waveform &wave, const std::string &path);

}  // namespace selfecho

#endif  // SELFECHO_WAV_IO_H_
