// include/selfecho/trainer.h

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

#ifndef SELFECHO_TRAINER_H_
#define SELFECHO_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "selfecho/adam.h"
#include "selfecho/gan.h"
#include "selfecho/losses.h"
#include "selfecho/spectrogram.h"

namespace selfecho {

struct TrainConfig {
  TrainMode mode = TrainMode::kPaired;
  int batch_size = 4;
  int epochs = 1;
  int max_steps = 0;  // stop after this many steps when > 0
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double lambda_l1 = 100.0;
  double lambda_cyc = 10.0;
  double lambda_identity = 0.0;  // unpaired only
  AdvLossKind adv_loss = AdvLossKind::kLog;
  int image_size = 32;

  GeneratorKind generator = GeneratorKind::kUnet;
  int base_channels = 16;
  int unet_depth = 0;
  int n_residual_blocks = 3;
  double dropout = 0.5;
  int dropout_levels = 1;
  int disc_channels = 16;
  int disc_layers = 3;

  uint64_t seed = 0;
  bool flip_augmentation = false;
  bool replay_buffer = true;
  int replay_size = 50;
  int snapshot_every = 0;  // epochs; 0 disables
  int snapshot_gl_iterations = 1000;
  std::string output_dir;

  GeneratorConfig generator_config(uint64_t seed_tag) const;
  DiscriminatorConfig discriminator_config(uint64_t seed_tag) const;
  LossWeights weights() const { return {lambda_l1, lambda_cyc}; }
  void Validate() const;
};

struct NamedGrid {
  std::string id;
  Grid grid;
};

struct PairedGrid {
  std::string x_id, y_id;  // non-native input, native target
  Grid x, y;
};

// Absent terms are NaN.
struct LossRow {
  uint64_t step = 0;
  int epoch = 0;
  double d_loss = 0.0;
  double g_adv = 0.0;
  double l1 = 0.0;
  double cycle = 0.0;
  double total = 0.0;
};

// Pool of recent generated images fed to the discriminator: once full,
// each new image is returned directly or swapped for a stored one with
// equal probability.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity = 50) : capacity_(capacity) {}
  Tensor Query(const Tensor &images, Rng &rng);
  size_t size() const { return images_.size(); }
  size_t capacity() const { return capacity_; }
  std::vector<std::vector<double>> &images() { return images_; }
  const std::vector<std::vector<double>> &images() const { return images_; }

 private:
  size_t capacity_;
  std::vector<std::vector<double>> images_;
};

struct Batch {
  Tensor x, y;
  std::vector<std::string> x_ids, y_ids;
};

// Everything a resumed run needs besides the data.
struct TrainState {
  TrainConfig config;
  int epoch = 0;             // current epoch (0-based)
  uint64_t global_step = 0;  // optimizer steps taken
  uint64_t batch_cursor = 0; // next batch within the current epoch
  Generator g;               // paired G, or G: non-native -> native
  Generator f;               // F: native -> non-native (unpaired)
  Discriminator d;           // conditional D, or D_Y on native images
  Discriminator d_x;         // D_X on non-native images (unpaired)
  AdamState opt_g, opt_d, opt_dx;
  Rng rng;
  std::vector<LossRow> history;
  ReplayBuffer pool_y, pool_x;
};

TrainState InitTrainState(const TrainConfig &config);

// "SESTATE" + version byte, then every field above in 64-bit precision.
constexpr uint8_t kStateVersion = 1;
void SaveState(const TrainState &state, const std::string &path);
// CorruptCheckpoint on bad magic, version or truncation.
TrainState LoadState(const std::string &path);

struct Probe {
  std::string id;
  Grid x;
  std::optional<Grid> reference;
  SpecMeta meta;  // of the source image, for inversion
};

// Writes, per probe, epoch<EEE>_<id>.png (input | generated [| reference]),
// epoch<EEE>_<id>.spec1 and epoch<EEE>_<id>.wav, below dir.
std::vector<std::string> SnapshotEpoch(TrainState &state, const std::vector<Probe> &probes,
                                       const std::string &dir, int epoch);

// Steps through one training run. Data is held by reference-free copies so
// the trainer can be resumed with freshly loaded data.
class Trainer {
 public:
  explicit Trainer(TrainState state);

  // Leakage (id shared with held-out) and EmptyCorpus are checked here.
  void SetPairedData(std::vector<PairedGrid> pairs, const std::vector<std::string> &heldout_ids);
  void SetUnpairedData(std::vector<NamedGrid> x, std::vector<NamedGrid> y,
                       const std::vector<std::string> &heldout_ids);
  void SetProbes(std::vector<Probe> probes) { probes_ = std::move(probes); }

  size_t batches_per_epoch() const;
  Batch AssembleBatch(int epoch, uint64_t index);

  LossRow Step();
  // Runs until `epochs` or `max_steps` is reached. With an output
  // directory, writes state.bin after every epoch (and before the first
  // step), losses.csv, and snapshots. NonFinite propagates after the last
  // good state is on disk.
  void Run();
  // Runs at most n more steps (no file output).
  void RunSteps(uint64_t n);
  bool Finished() const;

  TrainState &state() { return state_; }
  const TrainState &state() const { return state_; }

 private:
  LossRow PairedStep(const Batch &b);
  LossRow UnpairedStep(const Batch &b);
  void Advance();

  TrainState state_;
  std::vector<PairedGrid> pairs_;
  std::vector<NamedGrid> x_, y_;
  std::vector<Probe> probes_;
  std::vector<Tensor> params_g_, params_d_, params_dx_;
};

TrainState TrainPaired(std::vector<PairedGrid> pairs, const TrainConfig &config,
                       const std::vector<std::string> &heldout_ids = {});
TrainState TrainUnpaired(std::vector<NamedGrid> x, std::vector<NamedGrid> y,
                         const TrainConfig &config, const std::vector<std::string> &heldout_ids = {});

void WriteLossCsv(const std::vector<LossRow> &rows, const std::string &path);

// Model directory: model.meta plus one TNSR1 file per network.
void SaveModel(const TrainState &state, const std::string &dir);
struct LoadedModel {
  TrainConfig config;
  Generator g, f;
  Discriminator d, d_x;
};
LoadedModel LoadModel(const std::string &dir);

}  // namespace selfecho

#endif  // SELFECHO_TRAINER_H_
