// src/gan.cc

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

#include "selfecho/gan.h"

#include <algorithm>
#include <bit>

#include "selfecho/checkpoint.h"
#include "selfecho/error.h"

namespace selfecho {

namespace {

LayerSpec Conv(int in, int out, int k, int s, int p) {
  return {.kind = LayerKind::kConv2d, .in_channels = in, .out_channels = out, .kernel = k,
          .stride = s, .padding = p};
}
LayerSpec ConvT(int in, int out, int k, int s, int p) {
  return {.kind = LayerKind::kTransposeConv2d, .in_channels = in, .out_channels = out,
          .kernel = k, .stride = s, .padding = p};
}
LayerSpec Norm(LayerKind kind, int channels) { return {.kind = kind, .in_channels = channels}; }
LayerSpec Act(LayerKind kind) { return {.kind = kind}; }
LayerSpec Drop(double p) { return {.kind = LayerKind::kDropout, .drop_probability = p}; }

void Append(const std::string &prefix, const std::vector<NamedTensor> &src,
            std::vector<NamedTensor> *out) {
  for (const auto &[name, t] : src) out->emplace_back(prefix + name, t);
}

std::vector<Tensor> Values(const std::vector<NamedTensor> &named) {
  std::vector<Tensor> out;
  for (const auto &nt : named) out.push_back(nt.second);
  return out;
}

void LoadInto(const std::string &path, std::vector<NamedTensor> targets) {
  AssignByName(ReadTensorFile(path), targets);
}

}  // namespace

const char *GeneratorKindName(GeneratorKind kind) {
  return kind == GeneratorKind::kUnet ? "unet" : "resnet";
}

GeneratorKind ParseGeneratorKind(const std::string &s) {
  if (s == "unet") return GeneratorKind::kUnet;
  if (s == "resnet") return GeneratorKind::kResnet;
  throw Error(ErrorKind::kBadConfig, "generator kind must be unet or resnet, got '" + s + "'");
}

const char *AdvLossKindName(AdvLossKind kind) {
  return kind == AdvLossKind::kLog ? "log" : "least_squares";
}

AdvLossKind ParseAdvLossKind(const std::string &s) {
  if (s == "log") return AdvLossKind::kLog;
  if (s == "least_squares") return AdvLossKind::kLeastSquares;
  throw Error(ErrorKind::kBadConfig, "adv_loss must be log or least_squares, got '" + s + "'");
}

const char *TrainModeName(TrainMode mode) {
  return mode == TrainMode::kPaired ? "paired" : "unpaired";
}

TrainMode ParseTrainMode(const std::string &s) {
  if (s == "paired") return TrainMode::kPaired;
  if (s == "unpaired") return TrainMode::kUnpaired;
  throw Error(ErrorKind::kBadConfig, "mode must be paired or unpaired, got '" + s + "'");
}

int GeneratorConfig::effective_depth() const {
  return depth > 0 ? depth : std::countr_zero(static_cast<unsigned>(image_size));
}

void GeneratorConfig::Validate() const {
  if (image_size != 32 && image_size != 64 && image_size != 128)
    throw Error(ErrorKind::kBadConfig, "image_size must be 32, 64 or 128");
  if (base_channels < 1) throw Error(ErrorKind::kBadConfig, "base_channels must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw Error(ErrorKind::kBadConfig, "dropout in [0, 1)");
  if (dropout_levels < 0) throw Error(ErrorKind::kBadConfig, "dropout_levels must be >= 0");
  if (kind == GeneratorKind::kUnet) {
    const int max_depth = std::countr_zero(static_cast<unsigned>(image_size));
    if (depth < 0 || effective_depth() > max_depth)
      throw Error(ErrorKind::kBadConfig,
                  "unet depth must be in [1, " + std::to_string(max_depth) + "]");
  } else if (n_residual_blocks < 0) {
    throw Error(ErrorKind::kBadConfig, "n_residual_blocks must be >= 0");
  }
}

int DiscriminatorConfig::output_side() const {
  int side = image_size;
  for (int i = 0; i < n_layers; ++i) side = ConvOutputSide(side, 4, 2, 1);
  side = ConvOutputSide(side, 4, 1, 1);
  return ConvOutputSide(side, 4, 1, 1);
}

void DiscriminatorConfig::Validate() const {
  if (image_size < 4) throw Error(ErrorKind::kBadConfig, "discriminator image_size too small");
  if (in_channels != 1 && in_channels != 2)
    throw Error(ErrorKind::kBadConfig, "discriminator in_channels must be 1 or 2");
  if (base_channels < 1 || n_layers < 1)
    throw Error(ErrorKind::kBadConfig, "discriminator needs base_channels, n_layers >= 1");
  if (norm != LayerKind::kBatchNorm && norm != LayerKind::kInstanceNorm)
    throw Error(ErrorKind::kBadConfig, "discriminator norm must be batch or instance");
  int side = image_size;
  for (int i = 0; i < n_layers; ++i) side = ConvOutputSide(side, 4, 2, 1);
  if (side < 3 || output_side() < 1)
    throw Error(ErrorKind::kBadConfig, "too many discriminator layers for image_size " +
                                           std::to_string(image_size));
}

Generator::Generator(const GeneratorConfig &config) : config_(config) {
  config_.Validate();
  Rng rng(MixSeed(config_.seed, 0x67656e));
  const int ngf = config_.base_channels;
  if (config_.kind == GeneratorKind::kUnet) {
    const int d = config_.effective_depth();
    auto ch_out = [&](int level) { return ngf * std::min(1 << level, 8); };
    auto ch_in = [&](int level) { return level == 0 ? 1 : ch_out(level - 1); };
    for (int i = 0; i < d; ++i) {
      std::vector<LayerSpec> specs;
      if (i > 0) specs.push_back(Act(LayerKind::kLeakyRelu));
      specs.push_back(Conv(ch_in(i), ch_out(i), 4, 2, 1));
      if (i > 0 && i < d - 1) specs.push_back(Norm(LayerKind::kBatchNorm, ch_out(i)));
      down_.emplace_back(specs, rng);
    }
    for (int i = 0; i < d; ++i) {
      std::vector<LayerSpec> specs{Act(LayerKind::kRelu)};
      const int in = i == d - 1 ? ch_out(i) : 2 * ch_out(i);
      specs.push_back(ConvT(in, ch_in(i), 4, 2, 1));
      if (i == 0) {
        specs.push_back(Act(LayerKind::kTanh));
      } else {
        specs.push_back(Norm(LayerKind::kBatchNorm, ch_in(i)));
        if (i < d - 1 && i >= d - 1 - config_.dropout_levels && config_.dropout > 0.0)
          specs.push_back(Drop(config_.dropout));
      }
      up_.emplace_back(specs, rng);
    }
  } else {
    const LayerKind in = LayerKind::kInstanceNorm;
    std::vector<LayerSpec> specs{Conv(1, ngf, 7, 1, 3), Norm(in, ngf), Act(LayerKind::kRelu),
                                 Conv(ngf, 2 * ngf, 3, 2, 1), Norm(in, 2 * ngf),
                                 Act(LayerKind::kRelu), Conv(2 * ngf, 4 * ngf, 3, 2, 1),
                                 Norm(in, 4 * ngf), Act(LayerKind::kRelu)};
    for (int b = 0; b < config_.n_residual_blocks; ++b) {
      specs.push_back({.kind = LayerKind::kResidualBlock, .in_channels = 4 * ngf, .inner_norm = in});
      if (config_.dropout > 0.0 && b < config_.dropout_levels) specs.push_back(Drop(config_.dropout));
    }
    for (const LayerSpec &s :
         {ConvT(4 * ngf, 2 * ngf, 4, 2, 1), Norm(in, 2 * ngf), Act(LayerKind::kRelu),
          ConvT(2 * ngf, ngf, 4, 2, 1), Norm(in, ngf), Act(LayerKind::kRelu), Conv(ngf, 1, 7, 1, 3),
          Act(LayerKind::kTanh)})
      specs.push_back(s);
    body_ = Sequential(specs, rng);
  }
}

Tensor Generator::Forward(const Tensor &x, ForwardContext &ctx) {
  const int s = config_.image_size;
  if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != s || x.dim(3) != s)
    throw Error(ErrorKind::kShapeMismatch, "generator expects N x 1 x " + std::to_string(s) +
                                               " x " + std::to_string(s) + ", got " +
                                               ShapeString(x.shape()));
  Tensor h = AddScalar(Scale(x, 2.0), -1.0);
  if (config_.kind == GeneratorKind::kUnet) {
    const int d = static_cast<int>(down_.size());
    std::vector<Tensor> skips;
    for (int i = 0; i < d; ++i) {
      h = down_[i].Forward(h, ctx);
      skips.push_back(h);
    }
    for (int i = d - 1; i >= 0; --i) {
      const Tensor in = i == d - 1 ? h : ConcatChannels(h, skips[i]);
      h = up_[i].Forward(in, ctx);
    }
  } else {
    h = body_.Forward(h, ctx);
  }
  return Scale(AddScalar(h, 1.0), 0.5);
}

std::vector<NamedTensor> Generator::NamedParameters() const {
  std::vector<NamedTensor> out;
  for (size_t i = 0; i < down_.size(); ++i) down_[i].CollectParameters("down" + std::to_string(i) + ".", &out);
  for (size_t i = 0; i < up_.size(); ++i) up_[i].CollectParameters("up" + std::to_string(i) + ".", &out);
  body_.CollectParameters("body.", &out);
  return out;
}

std::vector<NamedTensor> Generator::NamedBuffers() const {
  std::vector<NamedTensor> out;
  for (size_t i = 0; i < down_.size(); ++i) down_[i].CollectBuffers("down" + std::to_string(i) + ".", &out);
  for (size_t i = 0; i < up_.size(); ++i) up_[i].CollectBuffers("up" + std::to_string(i) + ".", &out);
  body_.CollectBuffers("body.", &out);
  return out;
}

std::vector<Tensor> Generator::Parameters() const { return Values(NamedParameters()); }

Discriminator::Discriminator(const DiscriminatorConfig &config) : config_(config) {
  config_.Validate();
  Rng rng(MixSeed(config_.seed, 0x646973));
  const int ndf = config_.base_channels;
  auto ch = [&](int i) { return ndf * std::min(1 << i, 8); };
  std::vector<LayerSpec> specs{Conv(config_.in_channels, ndf, 4, 2, 1), Act(LayerKind::kLeakyRelu)};
  for (int i = 1; i < config_.n_layers; ++i) {
    specs.push_back(Conv(ch(i - 1), ch(i), 4, 2, 1));
    specs.push_back(Norm(config_.norm, ch(i)));
    specs.push_back(Act(LayerKind::kLeakyRelu));
  }
  const int last = config_.n_layers;
  specs.push_back(Conv(ch(last - 1), ch(last), 4, 1, 1));
  specs.push_back(Norm(config_.norm, ch(last)));
  specs.push_back(Act(LayerKind::kLeakyRelu));
  specs.push_back(Conv(ch(last), 1, 4, 1, 1));
  net_ = Sequential(specs, rng);
}

Tensor Discriminator::Forward(const Tensor &x, ForwardContext &ctx) {
  const int s = config_.image_size;
  if (x.rank() != 4 || x.dim(2) != s || x.dim(3) != s)
    throw Error(ErrorKind::kShapeMismatch, "discriminator expects side " + std::to_string(s) +
                                               ", got " + ShapeString(x.shape()));
  // Same [-1, 1] input range as the generator sees.
  return net_.Forward(AddScalar(Scale(x, 2.0), -1.0), ctx);
}

std::vector<NamedTensor> Discriminator::NamedParameters() const {
  std::vector<NamedTensor> out;
  net_.CollectParameters("net.", &out);
  return out;
}

std::vector<NamedTensor> Discriminator::NamedBuffers() const {
  std::vector<NamedTensor> out;
  net_.CollectBuffers("net.", &out);
  return out;
}

std::vector<Tensor> Discriminator::Parameters() const { return Values(NamedParameters()); }

Generator BuildGenerator(const GeneratorConfig &config) { return Generator(config); }
Discriminator BuildDiscriminator(const DiscriminatorConfig &config) { return Discriminator(config); }

std::vector<NamedTensor> StateTensors(const std::vector<NamedTensor> &params,
                                      const std::vector<NamedTensor> &buffers) {
  std::vector<NamedTensor> out = params;
  Append("buffer:", buffers, &out);
  return out;
}

void SaveGenerator(const Generator &g, const std::string &path) {
  WriteTensorFile(path, StateTensors(g.NamedParameters(), g.NamedBuffers()));
}

void LoadGenerator(Generator &g, const std::string &path) {
  LoadInto(path, StateTensors(g.NamedParameters(), g.NamedBuffers()));
}

void SaveDiscriminator(const Discriminator &d, const std::string &path) {
  WriteTensorFile(path, StateTensors(d.NamedParameters(), d.NamedBuffers()));
}

void LoadDiscriminator(Discriminator &d, const std::string &path) {
  LoadInto(path, StateTensors(d.NamedParameters(), d.NamedBuffers()));
}

Tensor StackImages(const std::vector<const std::vector<double> *> &images, int side) {
  const size_t plane = static_cast<size_t>(side) * side;
  std::vector<double> values;
  values.reserve(images.size() * plane);
  for (const auto *img : images) {
    if (img->size() != plane)
      throw Error(ErrorKind::kShapeMismatch, "image of " + std::to_string(img->size()) +
                                                 " pixels, expected " + std::to_string(plane));
    values.insert(values.end(), img->begin(), img->end());
  }
  return Tensor({static_cast<int>(images.size()), 1, side, side}, std::move(values));
}

}  // namespace selfecho
