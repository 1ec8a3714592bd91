// src/layers.cc

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

#include "selfecho/layers.h"

#include "selfecho/error.h"

namespace selfecho {

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kNormMomentum = 0.1;

bool HasWeights(LayerKind kind) {
  return kind == LayerKind::kConv2d || kind == LayerKind::kTransposeConv2d ||
         kind == LayerKind::kBatchNorm;
}

}  // namespace

const char *LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kTransposeConv2d: return "transpose_conv2d";
    case LayerKind::kBatchNorm: return "batch_norm";
    case LayerKind::kInstanceNorm: return "instance_norm";
    case LayerKind::kLeakyRelu: return "leaky_relu";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kTanh: return "tanh";
    case LayerKind::kSigmoid: return "sigmoid";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kResidualBlock: return "residual_block";
    case LayerKind::kConcatSkip: return "concat_skip";
  }
  return "unknown";
}

void LayerSpec::Validate() const {
  auto fail = [this](const std::string &what) {
    throw Error(ErrorKind::kBadConfig, std::string(LayerKindName(kind)) + ": " + what);
  };
  if (kernel < 1) fail("kernel must be >= 1");
  if (stride < 1) fail("stride must be >= 1");
  if (padding < 0) fail("padding must be >= 0");
  switch (kind) {
    case LayerKind::kConv2d:
    case LayerKind::kTransposeConv2d:
      if (in_channels < 1 || out_channels < 1) fail("channels must be >= 1");
      if (padding >= kernel) fail("padding must be smaller than kernel");
      break;
    case LayerKind::kBatchNorm:
    case LayerKind::kResidualBlock:
      if (in_channels < 1) fail("channels must be >= 1");
      if (kind == LayerKind::kResidualBlock && inner_norm != LayerKind::kInstanceNorm &&
          inner_norm != LayerKind::kBatchNorm)
        fail("inner_norm must be a normalization kind");
      break;
    case LayerKind::kLeakyRelu:
      if (negative_slope < 0.0) fail("negative slope must be >= 0");
      break;
    case LayerKind::kDropout:
      if (drop_probability < 0.0 || drop_probability >= 1.0) fail("drop probability in [0, 1)");
      break;
    default:
      break;
  }
}

Layer::Layer(const LayerSpec &spec, Rng &init_rng, double init_std) : spec_(spec) {
  spec_.Validate();
  const int k = spec.kernel;
  switch (spec.kind) {
    case LayerKind::kConv2d:
      weight_ = Tensor::RandomNormal({spec.out_channels, spec.in_channels, k, k}, init_rng, 0.0,
                                     init_std);
      break;
    case LayerKind::kTransposeConv2d:
      weight_ = Tensor::RandomNormal({spec.in_channels, spec.out_channels, k, k}, init_rng, 0.0,
                                     init_std);
      break;
    case LayerKind::kBatchNorm:
      weight_ = Tensor::RandomNormal({spec.in_channels}, init_rng, 1.0, init_std);
      bias_ = Tensor({spec.in_channels}, 0.0);
      running_mean_ = Tensor({spec.in_channels}, 0.0);
      running_var_ = Tensor({spec.in_channels}, 1.0);
      break;
    case LayerKind::kResidualBlock: {
      LayerSpec conv{.kind = LayerKind::kConv2d, .in_channels = spec.in_channels,
                     .out_channels = spec.in_channels, .kernel = 3, .stride = 1, .padding = 1};
      LayerSpec norm{.kind = spec.inner_norm, .in_channels = spec.in_channels};
      LayerSpec relu{.kind = LayerKind::kRelu};
      for (const LayerSpec &s : {conv, norm, relu, conv, norm})
        inner_.emplace_back(s, init_rng, init_std);
      break;
    }
    default:
      break;
  }
  if ((spec.kind == LayerKind::kConv2d || spec.kind == LayerKind::kTransposeConv2d) && spec.bias)
    bias_ = Tensor({spec.out_channels}, 0.0);
  if (HasWeights(spec.kind)) {
    weight_.set_requires_grad(true);
    if (bias_.numel() > 0) bias_.set_requires_grad(true);
  }
}

Tensor Layer::Forward(const Tensor &x, ForwardContext &ctx, const Tensor *skip) {
  const bool channel_checked = spec_.kind == LayerKind::kConv2d ||
                               spec_.kind == LayerKind::kTransposeConv2d ||
                               spec_.kind == LayerKind::kBatchNorm ||
                               spec_.kind == LayerKind::kResidualBlock;
  if (channel_checked && (x.rank() != 4 || x.dim(1) != spec_.in_channels))
    throw Error(ErrorKind::kShapeMismatch,
                std::string(LayerKindName(spec_.kind)) + " expects " +
                    std::to_string(spec_.in_channels) + " channels, got " +
                    ShapeString(x.shape()));
  switch (spec_.kind) {
    case LayerKind::kConv2d:
      return Conv2d(x, weight_, bias_, spec_.stride, spec_.padding);
    case LayerKind::kTransposeConv2d:
      return ConvTranspose2d(x, weight_, bias_, spec_.stride, spec_.padding);
    case LayerKind::kBatchNorm: {
      RunningStats stats{running_mean_.mutable_data(), running_var_.mutable_data()};
      return BatchNorm2d(x, weight_, bias_, &stats, ctx.training, kNormMomentum, kNormEps);
    }
    case LayerKind::kInstanceNorm:
      return InstanceNorm2d(x, kNormEps);
    case LayerKind::kLeakyRelu:
      return LeakyRelu(x, spec_.negative_slope);
    case LayerKind::kRelu:
      return Relu(x);
    case LayerKind::kTanh:
      return Tanh(x);
    case LayerKind::kSigmoid:
      return Sigmoid(x);
    case LayerKind::kDropout: {
      if (ctx.dropout_active && ctx.rng == nullptr)
        throw Error(ErrorKind::kBadConfig, "dropout needs an rng in the forward context");
      Rng unused(0);
      return Dropout(x, spec_.drop_probability, ctx.dropout_active,
                     ctx.rng != nullptr ? *ctx.rng : unused);
    }
    case LayerKind::kResidualBlock: {
      Tensor h = x;
      for (Layer &l : inner_) h = l.Forward(h, ctx);
      return Add(x, h);
    }
    case LayerKind::kConcatSkip:
      if (skip == nullptr) throw Error(ErrorKind::kShapeMismatch, "concat_skip without skip input");
      return ConcatChannels(x, *skip);
  }
  return x;
}

void Layer::CollectParameters(const std::string &prefix, std::vector<NamedTensor> *out) const {
  if (weight_.numel() > 0) out->emplace_back(prefix + "weight", weight_);
  if (bias_.numel() > 0) out->emplace_back(prefix + "bias", bias_);
  for (size_t i = 0; i < inner_.size(); ++i)
    inner_[i].CollectParameters(prefix + std::to_string(i) + ".", out);
}

void Layer::CollectBuffers(const std::string &prefix, std::vector<NamedTensor> *out) const {
  if (running_mean_.numel() > 0) {
    out->emplace_back(prefix + "running_mean", running_mean_);
    out->emplace_back(prefix + "running_var", running_var_);
  }
  for (size_t i = 0; i < inner_.size(); ++i)
    inner_[i].CollectBuffers(prefix + std::to_string(i) + ".", out);
}

Sequential::Sequential(const std::vector<LayerSpec> &specs, Rng &init_rng, double init_std) {
  for (const LayerSpec &s : specs) {
    if (input_channels_ == 0 && s.in_channels > 0) input_channels_ = s.in_channels;
    layers_.emplace_back(s, init_rng, init_std);
  }
}

Tensor Sequential::Forward(const Tensor &x, ForwardContext &ctx) {
  if (input_channels_ > 0 && (x.rank() != 4 || x.dim(1) != input_channels_))
    throw Error(ErrorKind::kShapeMismatch, "sequential expects " + std::to_string(input_channels_) +
                                               " input channels, got " + ShapeString(x.shape()));
  Tensor h = x;
  for (Layer &l : layers_) h = l.Forward(h, ctx);
  return h;
}

void Sequential::CollectParameters(const std::string &prefix, std::vector<NamedTensor> *out) const {
  for (size_t i = 0; i < layers_.size(); ++i)
    layers_[i].CollectParameters(prefix + std::to_string(i) + ".", out);
}

void Sequential::CollectBuffers(const std::string &prefix, std::vector<NamedTensor> *out) const {
  for (size_t i = 0; i < layers_.size(); ++i)
    layers_[i].CollectBuffers(prefix + std::to_string(i) + ".", out);
}

}  // namespace selfecho
