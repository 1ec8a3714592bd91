// include/selfecho/spectrogram.h

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

#ifndef SELFECHO_SPECTROGRAM_H_
#define SELFECHO_SPECTROGRAM_H_

#include <cstdint>
#include <string>
#include <vector>

#include "selfecho/mel.h"
#include "selfecho/stft.h"
#include "selfecho/wav_io.h"

namespace selfecho {

constexpr int kImageSide = 128;

// Everything needed to turn an image back into audio.
struct SpecMeta {
  int sample_rate_hz = 16000;
  int hop = 342;
  int n_fft = 512;
  double mel_low_hz = 0.0;
  double mel_high_hz = 8000.0;
  double db_floor = -80.0;
  double db_ceiling = 0.0;
  int n_valid_frames = 0;
  uint64_t pad_seed = 0;
  bool mel_before_db = true;

  // Reconstructs the DSP settings this image was produced with.
  DspConfig ToDspConfig() const;
  bool operator==(const SpecMeta &) const = default;
};

// 128 mel bands (row 0 = lowest band) x 128 frames of normalized mel-dB in
// [0, 1]. Columns at or beyond n_valid_frames hold padding noise.
struct SpectrogramImage {
  std::vector<float> pixels = std::vector<float>(kImageSide * kImageSide, 0.0f);
  SpecMeta meta;

  float at(int band, int frame) const { return pixels[band * kImageSide + frame]; }
  float &at(int band, int frame) { return pixels[band * kImageSide + frame]; }
};

double DbToPixel(double db, double db_floor, double db_ceiling);
double PixelToDb(double pixel, double db_floor, double db_ceiling);

// Normalizes mel-dB columns into the image and fills the remaining columns
// with seeded uniform noise in [0, noise_band]. InputTooLong beyond 128.
SpectrogramImage PadToImage(const RealMatrix &mel_db, uint64_t seed, const DspConfig &config);

// Full analysis chain: STFT, magnitude, mel, dB (order per config), pad.
SpectrogramImage WaveToImage(const Waveform &wave, const DspConfig &config, uint64_t pad_seed);
// Mel-dB frames without padding (any length), used by alignment.
RealMatrix WaveToMelDb(const Waveform &wave, const DspConfig &config);

// Valid columns of the image back to a linear-magnitude 257 x T matrix.
RealMatrix ImageToLinearMagnitude(const SpectrogramImage &image, int nnls_iterations = 300);

// "SPEC1" files: magic, version byte, little-endian metadata, then
// 128 x 128 f32 pixels row-major. Round trip is lossless.
void WriteSpec1(const SpectrogramImage &image, const std::string &path);
SpectrogramImage ReadSpec1(const std::string &path);

// 8-bit grayscale PNG, value = round(pixel * 255), highest band on top.
// Panels are placed side by side (equal heights required).
struct GrayPanel {
  int width = 0, height = 0;
  std::vector<double> values;  // row-major, row 0 = lowest band
};
GrayPanel PanelFromImage(const SpectrogramImage &image);
void WritePng(const std::vector<GrayPanel> &panels, const std::string &path);
void WritePng(const SpectrogramImage &image, const std::string &path);

// Square training image of side `side` obtained by block-averaging the
// 128 x 128 image. `valid_columns` tracks the valid region at this scale.
struct Grid {
  int side = 0;
  std::vector<double> pixels;  // row-major
  int valid_columns = 0;

  double at(int r, int c) const { return pixels[r * side + c]; }
};
Grid DownsampleImage(const SpectrogramImage &image, int side);
// Nearest-neighbour upsampling back to 128 x 128 with the given metadata.
SpectrogramImage UpsampleGrid(const Grid &grid, const SpecMeta &meta);
GrayPanel PanelFromGrid(const Grid &grid);

}  // namespace selfecho

#endif  // SELFECHO_SPECTROGRAM_H_
