// src/trainer.cc

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

#include "selfecho/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <numeric>
#include <set>
#include <sstream>

#include "selfecho/checkpoint.h"
#include "selfecho/config.h"
#include "selfecho/error.h"
#include "selfecho/evaluation.h"
#include "selfecho/griffin_lim.h"

namespace selfecho {

namespace fs = std::filesystem;

namespace {

constexpr char kStateMagic[] = "SESTATE";
constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

enum SeedTag : uint64_t {
  kTagG = 1,
  kTagD = 2,
  kTagF = 3,
  kTagDx = 4,
  kTagRng = 5,
  kTagEpoch = 0x65706f6368000000ull,
  kTagEpochY = 0x65706f6359000000ull,
  kTagFlip = 0x666c697000000000ull,
};

std::vector<size_t> Permutation(size_t n, uint64_t seed) {
  std::vector<size_t> p(n);
  std::iota(p.begin(), p.end(), size_t{0});
  Rng rng(seed);
  for (size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.Below(i)]);
  return p;
}

void MirrorColumns(std::vector<double> &pixels, int side) {
  for (int r = 0; r < side; ++r) std::reverse(pixels.begin() + r * side, pixels.begin() + (r + 1) * side);
}

void ZeroGrads(std::vector<Tensor> &params) {
  for (Tensor &p : params) p.ZeroGrad();
}

void ConfigureAdam(AdamState &s, const TrainConfig &c) {
  s.learning_rate = c.learning_rate;
  s.beta1 = c.beta1;
  s.beta2 = c.beta2;
}

std::vector<NamedTensor> AllStateTensors(const TrainState &s) {
  std::vector<NamedTensor> out;
  auto add = [&out](const std::string &prefix, const std::vector<NamedTensor> &src) {
    for (const auto &[name, t] : src) out.emplace_back(prefix + name, t);
  };
  add("G.", StateTensors(s.g.NamedParameters(), s.g.NamedBuffers()));
  add("D.", StateTensors(s.d.NamedParameters(), s.d.NamedBuffers()));
  if (s.config.mode == TrainMode::kUnpaired) {
    add("F.", StateTensors(s.f.NamedParameters(), s.f.NamedBuffers()));
    add("DX.", StateTensors(s.d_x.NamedParameters(), s.d_x.NamedBuffers()));
  }
  return out;
}

void PutDoubles(std::ostream &os, const std::vector<double> &v) {
  binio::PutU64(os, v.size());
  for (double x : v) binio::PutF64(os, x);
}

std::vector<double> GetDoubles(std::istream &is) {
  const uint64_t n = binio::GetU64(is);
  if (n > (1ull << 32)) throw Error(ErrorKind::kCorruptFile, "implausible vector length");
  std::vector<double> v(n);
  for (double &x : v) x = binio::GetF64(is);
  return v;
}

void PutAdam(std::ostream &os, const AdamState &a) {
  binio::PutU64(os, a.step_count);
  for (double x : {a.learning_rate, a.beta1, a.beta2, a.epsilon}) binio::PutF64(os, x);
  binio::PutU64(os, a.first_moment.size());
  for (size_t i = 0; i < a.first_moment.size(); ++i) {
    PutDoubles(os, a.first_moment[i]);
    PutDoubles(os, a.second_moment[i]);
  }
}

void GetAdam(std::istream &is, AdamState &a) {
  a.step_count = binio::GetU64(is);
  a.learning_rate = binio::GetF64(is);
  a.beta1 = binio::GetF64(is);
  a.beta2 = binio::GetF64(is);
  a.epsilon = binio::GetF64(is);
  const uint64_t n = binio::GetU64(is);
  if (n > (1u << 20)) throw Error(ErrorKind::kCorruptFile, "implausible moment count");
  a.first_moment.resize(n);
  a.second_moment.resize(n);
  for (size_t i = 0; i < n; ++i) {
    a.first_moment[i] = GetDoubles(is);
    a.second_moment[i] = GetDoubles(is);
  }
}

void PutPool(std::ostream &os, const ReplayBuffer &b) {
  binio::PutU64(os, b.capacity());
  binio::PutU64(os, b.size());
  for (const auto &img : b.images()) PutDoubles(os, img);
}

ReplayBuffer GetPool(std::istream &is) {
  const uint64_t cap = binio::GetU64(is);
  const uint64_t n = binio::GetU64(is);
  if (n > cap || cap > (1u << 20)) throw Error(ErrorKind::kCorruptFile, "implausible pool size");
  ReplayBuffer b(cap);
  for (uint64_t i = 0; i < n; ++i) b.images().push_back(GetDoubles(is));
  return b;
}

std::string FormatLoss(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

GeneratorConfig TrainConfig::generator_config(uint64_t seed_tag) const {
  GeneratorConfig g;
  g.kind = generator;
  g.image_size = image_size;
  g.base_channels = base_channels;
  g.depth = unet_depth;
  g.dropout_levels = dropout_levels;
  g.dropout = dropout;
  g.n_residual_blocks = n_residual_blocks;
  g.seed = MixSeed(seed, seed_tag);
  return g;
}

DiscriminatorConfig TrainConfig::discriminator_config(uint64_t seed_tag) const {
  DiscriminatorConfig d;
  d.image_size = image_size;
  d.in_channels = mode == TrainMode::kPaired ? 2 : 1;
  d.base_channels = disc_channels;
  d.n_layers = disc_layers;
  d.norm = mode == TrainMode::kPaired ? LayerKind::kBatchNorm : LayerKind::kInstanceNorm;
  d.seed = MixSeed(seed, seed_tag);
  return d;
}

void TrainConfig::Validate() const {
  auto bad = [](const std::string &m) { throw Error(ErrorKind::kBadConfig, m); };
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (epochs < 0 || max_steps < 0) bad("epochs and max_steps must be >= 0");
  if (!(learning_rate > 0.0)) bad("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) bad("betas must be in [0, 1)");
  if (lambda_l1 < 0.0 || lambda_cyc < 0.0 || lambda_identity < 0.0) bad("loss weights must be >= 0");
  if (replay_size < 0) bad("replay_size must be >= 0");
  if (snapshot_every < 0 || snapshot_gl_iterations < 0) bad("snapshot settings must be >= 0");
  generator_config(0).Validate();
  discriminator_config(0).Validate();
}

Tensor ReplayBuffer::Query(const Tensor &images, Rng &rng) {
  const Tensor detached = images.Detach();
  if (capacity_ == 0) return detached;
  const size_t n = detached.dim(0);
  const size_t plane = detached.numel() / n;
  std::vector<double> out;
  out.reserve(detached.numel());
  auto src = detached.data();
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> img(src.begin() + i * plane, src.begin() + (i + 1) * plane);
    if (images_.size() < capacity_) {
      images_.push_back(img);
      out.insert(out.end(), img.begin(), img.end());
    } else if (rng.Uniform() < 0.5) {
      const size_t j = rng.Below(capacity_);
      out.insert(out.end(), images_[j].begin(), images_[j].end());
      images_[j] = std::move(img);
    } else {
      out.insert(out.end(), img.begin(), img.end());
    }
  }
  return Tensor(detached.shape(), std::move(out));
}

TrainState InitTrainState(const TrainConfig &config) {
  config.Validate();
  TrainState s;
  s.config = config;
  s.g = Generator(config.generator_config(kTagG));
  s.d = Discriminator(config.discriminator_config(kTagD));
  if (config.mode == TrainMode::kUnpaired) {
    GeneratorConfig fc = config.generator_config(kTagF);
    s.f = Generator(fc);
    s.d_x = Discriminator(config.discriminator_config(kTagDx));
  }
  ConfigureAdam(s.opt_g, config);
  ConfigureAdam(s.opt_d, config);
  ConfigureAdam(s.opt_dx, config);
  s.rng = Rng(MixSeed(config.seed, kTagRng));
  const size_t pool = config.replay_buffer ? static_cast<size_t>(config.replay_size) : 0;
  s.pool_y = ReplayBuffer(pool);
  s.pool_x = ReplayBuffer(pool);
  return s;
}

void SaveState(const TrainState &s, const std::string &path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error(ErrorKind::kIoFailure, "cannot write " + tmp);
    os.write(kStateMagic, 7);
    binio::PutU8(os, kStateVersion);
    binio::PutString(os, TrainConfigText(s.config));
    binio::PutU64(os, static_cast<uint64_t>(s.epoch));
    binio::PutU64(os, s.global_step);
    binio::PutU64(os, s.batch_cursor);
    binio::PutString(os, s.rng.SaveState());
    const std::vector<NamedTensor> tensors = AllStateTensors(s);
    binio::PutU64(os, tensors.size());
    for (const auto &[name, t] : tensors) {
      binio::PutString(os, name);
      binio::PutU32(os, static_cast<uint32_t>(t.rank()));
      for (int d : t.shape()) binio::PutU32(os, static_cast<uint32_t>(d));
      for (double v : t.data()) binio::PutF64(os, v);
    }
    PutAdam(os, s.opt_g);
    PutAdam(os, s.opt_d);
    PutAdam(os, s.opt_dx);
    binio::PutU64(os, s.history.size());
    for (const LossRow &r : s.history) {
      binio::PutU64(os, r.step);
      binio::PutU64(os, static_cast<uint64_t>(r.epoch));
      for (double v : {r.d_loss, r.g_adv, r.l1, r.cycle, r.total}) binio::PutF64(os, v);
    }
    PutPool(os, s.pool_y);
    PutPool(os, s.pool_x);
    if (!os) throw Error(ErrorKind::kIoFailure, "write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIoFailure, "cannot move " + tmp + " to " + path + ": " + ec.message());
}

TrainState LoadState(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIoFailure, "cannot open " + path);
  char magic[7] = {};
  is.read(magic, 7);
  if (!is || std::string(magic, 7) != kStateMagic)
    throw Error(ErrorKind::kCorruptCheckpoint, path + ": not a training state file");
  try {
    const uint8_t version = binio::GetU8(is);
    if (version != kStateVersion)
      throw Error(ErrorKind::kCorruptCheckpoint,
                  path + ": state version " + std::to_string(version) + ", this build reads version " +
                      std::to_string(kStateVersion));
    TrainState s = InitTrainState(ParseTrainConfigText(binio::GetString(is)));
    s.epoch = static_cast<int>(binio::GetU64(is));
    s.global_step = binio::GetU64(is);
    s.batch_cursor = binio::GetU64(is);
    s.rng.LoadState(binio::GetString(is));
    const uint64_t n = binio::GetU64(is);
    std::vector<NamedTensor> loaded;
    for (uint64_t i = 0; i < n; ++i) {
      std::string name = binio::GetString(is);
      const uint32_t rank = binio::GetU32(is);
      if (rank > 8) throw Error(ErrorKind::kCorruptFile, "implausible rank");
      Shape shape(rank);
      for (int &d : shape) d = static_cast<int>(binio::GetU32(is));
      std::vector<double> values(NumElements(shape));
      for (double &v : values) v = binio::GetF64(is);
      loaded.emplace_back(std::move(name), Tensor(shape, std::move(values)));
    }
    std::vector<NamedTensor> targets = AllStateTensors(s);
    if (loaded.size() != targets.size())
      throw Error(ErrorKind::kCorruptFile, "tensor count does not match the configuration");
    AssignByName(loaded, targets);
    GetAdam(is, s.opt_g);
    GetAdam(is, s.opt_d);
    GetAdam(is, s.opt_dx);
    const uint64_t rows = binio::GetU64(is);
    for (uint64_t i = 0; i < rows; ++i) {
      LossRow r;
      r.step = binio::GetU64(is);
      r.epoch = static_cast<int>(binio::GetU64(is));
      r.d_loss = binio::GetF64(is);
      r.g_adv = binio::GetF64(is);
      r.l1 = binio::GetF64(is);
      r.cycle = binio::GetF64(is);
      r.total = binio::GetF64(is);
      s.history.push_back(r);
    }
    s.pool_y = GetPool(is);
    s.pool_x = GetPool(is);
    if (is.peek() != std::char_traits<char>::eof())
      throw Error(ErrorKind::kCorruptFile, "trailing bytes");
    return s;
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::kCorruptCheckpoint) throw;
    throw Error(ErrorKind::kCorruptCheckpoint, path + ": " + e.what());
  }
}

std::vector<std::string> SnapshotEpoch(TrainState &state, const std::vector<Probe> &probes,
                                       const std::string &dir, int epoch) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIoFailure, "cannot create " + dir + ": " + ec.message());
  std::vector<std::string> written;
  char tag[32];
  std::snprintf(tag, sizeof tag, "epoch%03d_", epoch);
  for (const Probe &p : probes) {
    Grid gen = Translate(state.g, p.x, true, MixSeed(state.config.seed, HashString(p.id)));
    gen.valid_columns = p.x.valid_columns;
    const std::string base = (fs::path(dir) / (tag + p.id)).string();
    std::vector<GrayPanel> panels{PanelFromGrid(p.x), PanelFromGrid(gen)};
    if (state.config.mode == TrainMode::kPaired && p.reference) panels.push_back(PanelFromGrid(*p.reference));
    WritePng(panels, base + ".png");
    const SpectrogramImage image = UpsampleGrid(gen, p.meta);
    WriteSpec1(image, base + ".spec1");
    GriffinLimOptions opts;
    opts.iterations = state.config.snapshot_gl_iterations;
    opts.seed = state.config.seed;
    SaveWav(GriffinLim(image, opts), base + ".wav");
    for (const char *ext : {".png", ".spec1", ".wav"}) written.push_back(base + ext);
  }
  return written;
}

Trainer::Trainer(TrainState state) : state_(std::move(state)) {
#if defined(__GLIBC__)
  // Activation buffers are allocated and freed every step; keep them on the
  // heap instead of round-tripping through mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  params_g_ = state_.g.Parameters();
  if (state_.config.mode == TrainMode::kUnpaired)
    for (const Tensor &t : state_.f.Parameters()) params_g_.push_back(t);
  params_d_ = state_.d.Parameters();
  params_dx_ = state_.d_x.Parameters();
}

namespace {

void CheckLeakage(const std::set<std::string> &train_ids, const std::vector<std::string> &heldout) {
  for (const std::string &id : heldout)
    if (train_ids.count(id))
      throw Error(ErrorKind::kLeakage, "held-out item " + id + " appears in the training data");
}

void CheckSide(const Grid &g, int side, const std::string &id) {
  if (g.side != side || g.pixels.size() != static_cast<size_t>(side) * side)
    throw Error(ErrorKind::kShapeMismatch, "training image " + id + " has side " +
                                               std::to_string(g.side) + ", expected " + std::to_string(side));
}

}  // namespace

void Trainer::SetPairedData(std::vector<PairedGrid> pairs, const std::vector<std::string> &heldout_ids) {
  if (state_.config.mode != TrainMode::kPaired)
    throw Error(ErrorKind::kBadConfig, "paired data given to an unpaired trainer");
  if (pairs.empty()) throw Error(ErrorKind::kEmptyCorpus, "no training pairs");
  std::set<std::string> ids;
  for (const PairedGrid &p : pairs) {
    CheckSide(p.x, state_.config.image_size, p.x_id);
    CheckSide(p.y, state_.config.image_size, p.y_id);
    ids.insert(p.x_id);
    ids.insert(p.y_id);
  }
  CheckLeakage(ids, heldout_ids);
  pairs_ = std::move(pairs);
  if (batches_per_epoch() == 0)
    throw Error(ErrorKind::kEmptyCorpus, "fewer training pairs than batch_size");
}

void Trainer::SetUnpairedData(std::vector<NamedGrid> x, std::vector<NamedGrid> y,
                              const std::vector<std::string> &heldout_ids) {
  if (state_.config.mode != TrainMode::kUnpaired)
    throw Error(ErrorKind::kBadConfig, "unpaired data given to a paired trainer");
  if (x.empty() || y.empty()) throw Error(ErrorKind::kEmptyCorpus, "both domains need images");
  std::set<std::string> ids;
  for (const auto *set : {&x, &y})
    for (const NamedGrid &g : *set) {
      CheckSide(g.grid, state_.config.image_size, g.id);
      ids.insert(g.id);
    }
  CheckLeakage(ids, heldout_ids);
  x_ = std::move(x);
  y_ = std::move(y);
  if (batches_per_epoch() == 0)
    throw Error(ErrorKind::kEmptyCorpus, "fewer images than batch_size");
}

size_t Trainer::batches_per_epoch() const {
  const size_t n = state_.config.mode == TrainMode::kPaired ? pairs_.size() : std::min(x_.size(), y_.size());
  return n / static_cast<size_t>(state_.config.batch_size);
}

Batch Trainer::AssembleBatch(int epoch, uint64_t index) {
  const TrainConfig &c = state_.config;
  const size_t bs = c.batch_size;
  const int side = c.image_size;
  Batch b;
  std::vector<std::vector<double>> xs, ys;
  const uint64_t epoch_seed = MixSeed(c.seed, kTagEpoch + static_cast<uint64_t>(epoch));
  if (c.mode == TrainMode::kPaired) {
    const std::vector<size_t> perm = Permutation(pairs_.size(), epoch_seed);
    for (size_t k = 0; k < bs; ++k) {
      const PairedGrid &p = pairs_[perm[index * bs + k]];
      xs.push_back(p.x.pixels);
      ys.push_back(p.y.pixels);
      b.x_ids.push_back(p.x_id);
      b.y_ids.push_back(p.y_id);
    }
  } else {
    const std::vector<size_t> px = Permutation(x_.size(), epoch_seed);
    const std::vector<size_t> py =
        Permutation(y_.size(), MixSeed(c.seed, kTagEpochY + static_cast<uint64_t>(epoch)));
    for (size_t k = 0; k < bs; ++k) {
      const NamedGrid &gx = x_[px[index * bs + k]];
      const NamedGrid &gy = y_[py[index * bs + k]];
      xs.push_back(gx.grid.pixels);
      ys.push_back(gy.grid.pixels);
      b.x_ids.push_back(gx.id);
      b.y_ids.push_back(gy.id);
    }
  }
  if (c.flip_augmentation) {
    Rng flip(MixSeed(MixSeed(c.seed, kTagFlip + static_cast<uint64_t>(epoch)), index));
    for (size_t k = 0; k < bs; ++k) {
      if (flip.Uniform() < 0.5) {
        MirrorColumns(xs[k], side);
        if (c.mode == TrainMode::kPaired) MirrorColumns(ys[k], side);
      }
      if (c.mode == TrainMode::kUnpaired && flip.Uniform() < 0.5) MirrorColumns(ys[k], side);
    }
  }
  std::vector<const std::vector<double> *> px, py;
  for (size_t k = 0; k < bs; ++k) {
    px.push_back(&xs[k]);
    py.push_back(&ys[k]);
  }
  b.x = StackImages(px, side);
  b.y = StackImages(py, side);
  return b;
}

LossRow Trainer::PairedStep(const Batch &b) {
  TrainState &s = state_;
  const AdvLossKind adv = s.config.adv_loss;
  ForwardContext ctx{.training = true, .dropout_active = true, .rng = &s.rng};
  const Tensor fake = s.g.Forward(b.x, ctx);

  ZeroGrads(params_d_);
  const Tensor d_loss = CganDiscriminatorLoss(s.d, b.x, b.y, fake.Detach(), ctx, adv);
  d_loss.Backward();
  AdamStep(params_d_, s.opt_d);

  ZeroGrads(params_g_);
  ZeroGrads(params_d_);
  const Tensor g_adv = GeneratorAdvLoss(s.d, b.x, fake, ctx, adv);
  const Tensor l1 = L1Loss(fake, b.y);
  const Tensor total = Add(g_adv, Scale(l1, s.config.lambda_l1));
  total.Backward();
  AdamStep(params_g_, s.opt_g);
  ZeroGrads(params_d_);

  LossRow row;
  row.d_loss = d_loss.item();
  row.g_adv = g_adv.item();
  row.l1 = l1.item();
  row.cycle = kAbsent;
  row.total = total.item();
  return row;
}

LossRow Trainer::UnpairedStep(const Batch &b) {
  TrainState &s = state_;
  const TrainConfig &c = s.config;
  ForwardContext ctx{.training = true, .dropout_active = true, .rng = &s.rng};
  const Tensor &x = b.x;  // non-native
  const Tensor &y = b.y;  // native
  const Tensor fake_y = s.g.Forward(x, ctx);
  const Tensor fake_x = s.f.Forward(y, ctx);

  ZeroGrads(params_d_);
  const Tensor pooled_y = s.pool_y.Query(fake_y, s.rng);
  const Tensor dy_loss = DiscriminatorLoss(s.d.Forward(y, ctx), s.d.Forward(pooled_y, ctx), c.adv_loss);
  dy_loss.Backward();
  AdamStep(params_d_, s.opt_d);

  ZeroGrads(params_dx_);
  const Tensor pooled_x = s.pool_x.Query(fake_x, s.rng);
  const Tensor dx_loss = DiscriminatorLoss(s.d_x.Forward(x, ctx), s.d_x.Forward(pooled_x, ctx), c.adv_loss);
  dx_loss.Backward();
  AdamStep(params_dx_, s.opt_dx);

  ZeroGrads(params_g_);
  ZeroGrads(params_d_);
  ZeroGrads(params_dx_);
  const Tensor adv_g = GeneratorLoss(s.d.Forward(fake_y, ctx), c.adv_loss);
  const Tensor adv_f = GeneratorLoss(s.d_x.Forward(fake_x, ctx), c.adv_loss);
  Tensor total = Add(adv_g, adv_f);
  double cycle_value;
  if (c.lambda_cyc > 0.0) {
    const Tensor cyc = Add(L1Loss(s.f.Forward(fake_y, ctx), x), L1Loss(s.g.Forward(fake_x, ctx), y));
    cycle_value = cyc.item();
    total = Add(total, Scale(cyc, c.lambda_cyc));
  } else {
    // Logged only; kept out of the graph.
    NoGradGuard no_grad;
    const Tensor cyc = Add(L1Loss(s.f.Forward(fake_y.Detach(), ctx), x),
                           L1Loss(s.g.Forward(fake_x.Detach(), ctx), y));
    cycle_value = cyc.item();
  }
  if (c.lambda_identity > 0.0) {
    const Tensor idt = Add(L1Loss(s.g.Forward(y, ctx), y), L1Loss(s.f.Forward(x, ctx), x));
    total = Add(total, Scale(idt, c.lambda_identity));
  }
  total.Backward();
  AdamStep(params_g_, s.opt_g);
  ZeroGrads(params_d_);
  ZeroGrads(params_dx_);

  LossRow row;
  row.d_loss = dy_loss.item() + dx_loss.item();
  row.g_adv = adv_g.item() + adv_f.item();
  row.l1 = kAbsent;
  row.cycle = cycle_value;
  row.total = total.item();
  return row;
}

void Trainer::Advance() {
  ++state_.global_step;
  if (++state_.batch_cursor >= batches_per_epoch()) {
    state_.batch_cursor = 0;
    ++state_.epoch;
  }
}

LossRow Trainer::Step() {
  if (batches_per_epoch() == 0) throw Error(ErrorKind::kEmptyCorpus, "no training data set");
  const Batch b = AssembleBatch(state_.epoch, state_.batch_cursor);
  LossRow row = state_.config.mode == TrainMode::kPaired ? PairedStep(b) : UnpairedStep(b);
  row.step = state_.global_step + 1;
  row.epoch = state_.epoch + 1;
  for (double v : {row.d_loss, row.g_adv, row.total})
    if (!std::isfinite(v)) throw Error(ErrorKind::kNonFinite, "loss became non-finite at step " + std::to_string(row.step));
  state_.history.push_back(row);
  Advance();
  return row;
}

bool Trainer::Finished() const {
  const TrainConfig &c = state_.config;
  if (c.max_steps > 0) return state_.global_step >= static_cast<uint64_t>(c.max_steps);
  return state_.epoch >= c.epochs;
}

void Trainer::RunSteps(uint64_t n) {
  for (uint64_t i = 0; i < n && !Finished(); ++i) Step();
}

void Trainer::Run() {
  const std::string out = state_.config.output_dir;
  std::string state_path;
  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error(ErrorKind::kIoFailure, "cannot create " + out + ": " + ec.message());
    state_path = (fs::path(out) / "state.bin").string();
    SaveState(state_, state_path);
  }
  int epoch = state_.epoch;
  while (!Finished()) {
    try {
      Step();
    } catch (const Error &e) {
      if (!out.empty() && e.kind() == ErrorKind::kNonFinite)
        WriteLossCsv(state_.history, (fs::path(out) / "losses.csv").string());
      throw;
    }
    if (state_.epoch != epoch) {
      epoch = state_.epoch;
      if (out.empty()) continue;
      const int every = state_.config.snapshot_every;
      if (every > 0 && epoch % every == 0 && !probes_.empty())
        SnapshotEpoch(state_, probes_, (fs::path(out) / "snapshots").string(), epoch);
      SaveState(state_, state_path);
      WriteLossCsv(state_.history, (fs::path(out) / "losses.csv").string());
    }
  }
  if (!out.empty()) {
    SaveState(state_, state_path);
    WriteLossCsv(state_.history, (fs::path(out) / "losses.csv").string());
    SaveModel(state_, out);
  }
}

TrainState TrainPaired(std::vector<PairedGrid> pairs, const TrainConfig &config,
                       const std::vector<std::string> &heldout_ids) {
  if (config.mode != TrainMode::kPaired) throw Error(ErrorKind::kBadConfig, "config mode is not paired");
  Trainer t(InitTrainState(config));
  t.SetPairedData(std::move(pairs), heldout_ids);
  t.Run();
  return t.state();
}

TrainState TrainUnpaired(std::vector<NamedGrid> x, std::vector<NamedGrid> y,
                         const TrainConfig &config, const std::vector<std::string> &heldout_ids) {
  if (config.mode != TrainMode::kUnpaired) throw Error(ErrorKind::kBadConfig, "config mode is not unpaired");
  Trainer t(InitTrainState(config));
  t.SetUnpairedData(std::move(x), std::move(y), heldout_ids);
  t.Run();
  return t.state();
}

void WriteLossCsv(const std::vector<LossRow> &rows, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIoFailure, "cannot write " + path);
  os << "step,epoch,d_loss,g_adv,l1,cycle,total\n";
  for (const LossRow &r : rows)
    os << r.step << ',' << r.epoch << ',' << FormatLoss(r.d_loss) << ',' << FormatLoss(r.g_adv) << ','
       << FormatLoss(r.l1) << ',' << FormatLoss(r.cycle) << ',' << FormatLoss(r.total) << '\n';
  if (!os) throw Error(ErrorKind::kIoFailure, "write failed: " + path);
}

void SaveModel(const TrainState &state, const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIoFailure, "cannot create " + dir + ": " + ec.message());
  {
    std::ofstream os(fs::path(dir) / "model.meta");
    if (!os) throw Error(ErrorKind::kIoFailure, "cannot write model.meta in " + dir);
    os << TrainConfigText(state.config);
  }
  SaveGenerator(state.g, (fs::path(dir) / "G.tnsr").string());
  if (state.config.mode == TrainMode::kPaired) {
    SaveDiscriminator(state.d, (fs::path(dir) / "D.tnsr").string());
  } else {
    SaveGenerator(state.f, (fs::path(dir) / "F.tnsr").string());
    SaveDiscriminator(state.d, (fs::path(dir) / "D_Y.tnsr").string());
    SaveDiscriminator(state.d_x, (fs::path(dir) / "D_X.tnsr").string());
  }
}

LoadedModel LoadModel(const std::string &dir) {
  std::ifstream is(fs::path(dir) / "model.meta");
  if (!is) throw Error(ErrorKind::kIoFailure, "no model.meta in " + dir);
  std::stringstream text;
  text << is.rdbuf();
  LoadedModel m;
  m.config = ParseTrainConfigText(text.str());
  const TrainState fresh = InitTrainState(m.config);
  m.g = fresh.g;
  m.d = fresh.d;
  LoadGenerator(m.g, (fs::path(dir) / "G.tnsr").string());
  if (m.config.mode == TrainMode::kPaired) {
    LoadDiscriminator(m.d, (fs::path(dir) / "D.tnsr").string());
  } else {
    m.f = fresh.f;
    m.d_x = fresh.d_x;
    LoadGenerator(m.f, (fs::path(dir) / "F.tnsr").string());
    LoadDiscriminator(m.d, (fs::path(dir) / "D_Y.tnsr").string());
    LoadDiscriminator(m.d_x, (fs::path(dir) / "D_X.tnsr").string());
  }
  return m;
}

}  // namespace selfecho
