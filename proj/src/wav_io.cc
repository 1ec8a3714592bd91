// src/wav_io.cc

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

#include "selfecho/wav_io.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "selfecho/error.h"

namespace selfecho {

namespace {

uint32_t ReadU32(const unsigned char *p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t ReadU16(const unsigned char *p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

void AppendU32(std::string &s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void AppendU16(std::string &s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

void ValidateWaveform(const Waveform &wave) {
  if (wave.samples.empty()) throw Error(ErrorKind::kBadConfig, "empty waveform");
  if (wave.sample_rate_hz <= 0) throw Error(ErrorKind::kBadConfig, "sample rate must be positive");
  for (double s : wave.samples)
    if (!std::isfinite(s) || std::fabs(s) > 1.0)
      throw Error(ErrorKind::kBadConfig, "waveform sample out of [-1, 1] or non-finite");
}

Waveform LoadWav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIoFailure, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorKind::kCorruptHeader, path + " is not a RIFF/WAVE file");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *chunk = bytes.data() + pos;
    const uint32_t size = ReadU32(chunk + 4);
    const size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size())
        throw Error(ErrorKind::kCorruptHeader, path + ": truncated fmt chunk");
      format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      rate = ReadU32(bytes.data() + body + 4);
      bits = ReadU16(bytes.data() + body + 14);
      if (format == 0xFFFE && size >= 40 && body + 26 <= bytes.size())
        format = ReadU16(bytes.data() + body + 24);  // extensible sub-format
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw Error(ErrorKind::kCorruptHeader, path + ": data before fmt chunk");
      if (format != 1) throw Error(ErrorKind::kUnsupportedFormat, path + ": not PCM");
      if (channels != 1)
        throw Error(ErrorKind::kUnsupportedFormat,
                    path + ": " + std::to_string(channels) + " channels, need mono");
      if (bits != 16)
        throw Error(ErrorKind::kUnsupportedFormat,
                    path + ": " + std::to_string(bits) + "-bit samples, need 16");
      if (rate == 0) throw Error(ErrorKind::kCorruptHeader, path + ": zero sample rate");
      const size_t available = bytes.size() - body;
      const size_t n_bytes = std::min<size_t>(size, available);
      Waveform wave;
      wave.sample_rate_hz = static_cast<int>(rate);
      wave.samples.resize(n_bytes / 2);
      for (size_t i = 0; i < wave.samples.size(); ++i) {
        const int16_t v = static_cast<int16_t>(ReadU16(bytes.data() + body + 2 * i));
        wave.samples[i] = v / 32768.0;
      }
      if (wave.samples.empty()) throw Error(ErrorKind::kCorruptHeader, path + ": no samples");
      return wave;
    }
    pos = body + size + (size & 1);
  }
  throw Error(ErrorKind::kCorruptHeader, path + ": no data chunk");
}

void SaveWav(const Waveform &wave, const std::string &path) {
  const uint32_t data_bytes = static_cast<uint32_t>(wave.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  AppendU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  AppendU32(out, 16);
  AppendU16(out, 1);
  AppendU16(out, 1);
  AppendU32(out, static_cast<uint32_t>(wave.sample_rate_hz));
  AppendU32(out, static_cast<uint32_t>(wave.sample_rate_hz) * 2);
  AppendU16(out, 2);
  AppendU16(out, 16);
  out += "data";
  AppendU32(out, data_bytes);
  for (double s : wave.samples) {
    double scaled = std::round(s * 32768.0);
    if (!std::isfinite(scaled)) scaled = 0.0;
    const auto v = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    AppendU16(out, static_cast<uint16_t>(v));
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::kIoFailure, "cannot open " + path + " for writing");
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw Error(ErrorKind::kIoFailure, "write failed for " + path);
}

}  // namespace selfecho
