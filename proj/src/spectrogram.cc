// src/spectrogram.cc

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

#include "selfecho/spectrogram.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <png.h>

#include "selfecho/checkpoint.h"
#include "selfecho/error.h"
#include "selfecho/rng.h"

namespace selfecho {

namespace {

constexpr char kSpecMagic[] = "SPEC1";
constexpr uint8_t kSpecVersion = 1;

RealMatrix MelDbFromMagnitude(const RealMatrix &magnitude, const DspConfig &config) {
  MelFilterbank fb(config);
  if (config.mel_before_db) return AmplitudeToDb(fb.Project(magnitude), config);
  // Literal order: dB first, then a weighted average over each band.
  RealMatrix db = AmplitudeToDb(magnitude, config);
  return fb.RowNormalized().Project(db);
}

}  // namespace

DspConfig SpecMeta::ToDspConfig() const {
  DspConfig c;
  c.sample_rate_hz = sample_rate_hz;
  c.hop = hop;
  c.n_fft = n_fft;
  c.mel_low_hz = mel_low_hz;
  c.mel_high_hz = mel_high_hz;
  c.db_floor = db_floor;
  c.db_ceiling = db_ceiling;
  c.mel_before_db = mel_before_db;
  return c;
}

double DbToPixel(double db, double db_floor, double db_ceiling) {
  return (db - db_floor) / (db_ceiling - db_floor);
}

double PixelToDb(double pixel, double db_floor, double db_ceiling) {
  return db_floor + pixel * (db_ceiling - db_floor);
}

SpectrogramImage PadToImage(const RealMatrix &mel_db, uint64_t seed, const DspConfig &config) {
  if (mel_db.rows() != kImageSide)
    throw Error(ErrorKind::kShapeMismatch, "expected 128 mel bands, got " +
                                               std::to_string(mel_db.rows()));
  const int frames = static_cast<int>(mel_db.cols());
  if (frames < 1) throw Error(ErrorKind::kTooShort, "no frames to pad");
  if (frames > kImageSide)
    throw Error(ErrorKind::kInputTooLong, std::to_string(frames) + " frames exceed the 128-frame image");
  SpectrogramImage image;
  image.meta.sample_rate_hz = config.sample_rate_hz;
  image.meta.hop = config.hop;
  image.meta.n_fft = config.n_fft;
  image.meta.mel_low_hz = config.mel_low_hz;
  image.meta.mel_high_hz = config.mel_high();
  image.meta.db_floor = config.db_floor;
  image.meta.db_ceiling = config.db_ceiling;
  image.meta.n_valid_frames = frames;
  image.meta.pad_seed = seed;
  image.meta.mel_before_db = config.mel_before_db;
  for (int b = 0; b < kImageSide; ++b)
    for (int t = 0; t < frames; ++t)
      image.at(b, t) = static_cast<float>(
          std::clamp(DbToPixel(mel_db(b, t), config.db_floor, config.db_ceiling), 0.0, 1.0));
  Rng rng(seed);
  for (int b = 0; b < kImageSide; ++b)
    for (int t = frames; t < kImageSide; ++t)
      image.at(b, t) = static_cast<float>(rng.Uniform(0.0, config.noise_band));
  return image;
}

RealMatrix WaveToMelDb(const Waveform &wave, const DspConfig &config) {
  return MelDbFromMagnitude(Stft(wave, config).Magnitude(), config);
}

SpectrogramImage WaveToImage(const Waveform &wave, const DspConfig &config, uint64_t pad_seed) {
  config.Validate();
  if (config.n_mels != kImageSide)
    throw Error(ErrorKind::kBadConfig, "images need 128 mel bands");
  DspConfig c = config;
  c.sample_rate_hz = wave.sample_rate_hz;
  if (c.mel_high_hz > c.nyquist() || c.mel_high_hz <= 0.0) c.mel_high_hz = c.nyquist();
  return PadToImage(WaveToMelDb(wave, c), pad_seed, c);
}

RealMatrix ImageToLinearMagnitude(const SpectrogramImage &image, int nnls_iterations) {
  const SpecMeta &m = image.meta;
  const DspConfig config = m.ToDspConfig();
  const int frames = m.n_valid_frames;
  if (frames < 1 || frames > kImageSide)
    throw Error(ErrorKind::kCorruptFile, "n_valid_frames out of range");
  RealMatrix db(kImageSide, frames);
  for (int b = 0; b < kImageSide; ++b)
    for (int t = 0; t < frames; ++t) db(b, t) = PixelToDb(image.at(b, t), m.db_floor, m.db_ceiling);
  MelFilterbank fb(config);
  if (m.mel_before_db) return fb.PseudoInverse(DbToAmplitude(db, config), nnls_iterations);
  RealMatrix shifted = db.array() - m.db_floor;
  RealMatrix lin_db = fb.RowNormalized().PseudoInverse(shifted, nnls_iterations).array() + m.db_floor;
  return DbToAmplitude(lin_db, config);
}

void WriteSpec1(const SpectrogramImage &image, const std::string &path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::kIoFailure, "cannot open " + path + " for writing");
  const SpecMeta &m = image.meta;
  os.write(kSpecMagic, 5);
  binio::PutU8(os, kSpecVersion);
  binio::PutU32(os, static_cast<uint32_t>(m.sample_rate_hz));
  binio::PutU32(os, static_cast<uint32_t>(m.hop));
  binio::PutU32(os, static_cast<uint32_t>(m.n_fft));
  binio::PutF64(os, m.mel_low_hz);
  binio::PutF64(os, m.mel_high_hz);
  binio::PutF64(os, m.db_floor);
  binio::PutF64(os, m.db_ceiling);
  binio::PutU32(os, static_cast<uint32_t>(m.n_valid_frames));
  binio::PutU64(os, m.pad_seed);
  binio::PutU8(os, m.mel_before_db ? 1 : 0);
  for (float v : image.pixels) binio::PutF32(os, v);
  if (!os) throw Error(ErrorKind::kIoFailure, "write failed for " + path);
}

SpectrogramImage ReadSpec1(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIoFailure, "cannot open " + path);
  char magic[5];
  if (!is.read(magic, 5) || std::memcmp(magic, kSpecMagic, 5) != 0)
    throw Error(ErrorKind::kCorruptFile, path + " is not a SPEC1 file");
  SpectrogramImage image;
  SpecMeta &m = image.meta;
  const uint8_t version = binio::GetU8(is);
  if (version != kSpecVersion)
    throw Error(ErrorKind::kCorruptFile, path + ": unsupported SPEC1 version " + std::to_string(version));
  m.sample_rate_hz = static_cast<int>(binio::GetU32(is));
  m.hop = static_cast<int>(binio::GetU32(is));
  m.n_fft = static_cast<int>(binio::GetU32(is));
  m.mel_low_hz = binio::GetF64(is);
  m.mel_high_hz = binio::GetF64(is);
  m.db_floor = binio::GetF64(is);
  m.db_ceiling = binio::GetF64(is);
  m.n_valid_frames = static_cast<int>(binio::GetU32(is));
  m.pad_seed = binio::GetU64(is);
  m.mel_before_db = binio::GetU8(is) != 0;
  for (float &v : image.pixels) v = binio::GetF32(is);
  if (m.n_valid_frames < 1 || m.n_valid_frames > kImageSide || m.sample_rate_hz <= 0 ||
      m.hop <= 0 || m.n_fft <= 0 || !(m.db_floor < m.db_ceiling))
    throw Error(ErrorKind::kCorruptFile, path + ": metadata out of range");
  return image;
}

GrayPanel PanelFromImage(const SpectrogramImage &image) {
  GrayPanel p{kImageSide, kImageSide, std::vector<double>(image.pixels.begin(), image.pixels.end())};
  return p;
}

GrayPanel PanelFromGrid(const Grid &grid) {
  return GrayPanel{grid.side, grid.side, grid.pixels};
}

void WritePng(const std::vector<GrayPanel> &panels, const std::string &path) {
  if (panels.empty()) throw Error(ErrorKind::kIoFailure, "no panels to write");
  const int height = panels.front().height;
  int width = 0;
  for (const GrayPanel &p : panels) {
    if (p.height != height) throw Error(ErrorKind::kShapeMismatch, "panel heights differ");
    width += p.width;
  }
  std::unique_ptr<FILE, int (*)(FILE *)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw Error(ErrorKind::kIoFailure, "cannot open " + path + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kIoFailure, "libpng initialisation failed");
  }
  std::vector<png_byte> row(width);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kIoFailure, "PNG encoding failed for " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    const int band = height - 1 - y;
    int x = 0;
    for (const GrayPanel &p : panels)
      for (int c = 0; c < p.width; ++c)
        row[x++] = static_cast<png_byte>(
            std::lround(std::clamp(p.values[band * p.width + c], 0.0, 1.0) * 255.0));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void WritePng(const SpectrogramImage &image, const std::string &path) {
  WritePng(std::vector<GrayPanel>{PanelFromImage(image)}, path);
}

Grid DownsampleImage(const SpectrogramImage &image, int side) {
  if (side < 1 || kImageSide % side != 0)
    throw Error(ErrorKind::kBadConfig, "grid side must divide 128");
  const int f = kImageSide / side;
  Grid g;
  g.side = side;
  g.pixels.assign(static_cast<size_t>(side) * side, 0.0);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      double s = 0.0;
      for (int i = 0; i < f; ++i)
        for (int j = 0; j < f; ++j) s += image.at(r * f + i, c * f + j);
      g.pixels[r * side + c] = s / (f * f);
    }
  g.valid_columns = (image.meta.n_valid_frames + f - 1) / f;
  return g;
}

SpectrogramImage UpsampleGrid(const Grid &grid, const SpecMeta &meta) {
  if (grid.side < 1 || kImageSide % grid.side != 0)
    throw Error(ErrorKind::kBadConfig, "grid side must divide 128");
  const int f = kImageSide / grid.side;
  SpectrogramImage image;
  image.meta = meta;
  for (int b = 0; b < kImageSide; ++b)
    for (int t = 0; t < kImageSide; ++t)
      image.at(b, t) = static_cast<float>(std::clamp(grid.at(b / f, t / f), 0.0, 1.0));
  return image;
}

}  // namespace selfecho
