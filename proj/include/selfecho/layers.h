// include/selfecho/layers.h

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

#ifndef SELFECHO_LAYERS_H_
#define SELFECHO_LAYERS_H_

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "selfecho/rng.h"
#include "selfecho/tensor.h"

namespace selfecho {

enum class LayerKind {
  kConv2d,
  kTransposeConv2d,
  kBatchNorm,
  kInstanceNorm,
  kLeakyRelu,
  kRelu,
  kTanh,
  kSigmoid,
  kDropout,
  kResidualBlock,
  kConcatSkip,
};

const char *LayerKindName(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  bool bias = true;
  double negative_slope = 0.2;
  double drop_probability = 0.5;
  // Residual blocks: normalization used inside the block.
  LayerKind inner_norm = LayerKind::kInstanceNorm;

  // Throws BadConfig when hyperparameters are out of range for the kind.
  void Validate() const;
};

// Flags threaded through a forward pass.
struct ForwardContext {
  bool training = false;
  bool dropout_active = false;
  Rng *rng = nullptr;
};

using NamedTensor = std::pair<std::string, Tensor>;

// One layer with its own parameters. Parameters are leaves with
// requires_grad set; buffers (batch-norm running statistics) are not.
class Layer {
 public:
  Layer(const LayerSpec &spec, Rng &init_rng, double init_std = 0.02);

  const LayerSpec &spec() const { return spec_; }
  // `skip` is the second operand for concat_skip and ignored otherwise.
  Tensor Forward(const Tensor &x, ForwardContext &ctx, const Tensor *skip = nullptr);

  void CollectParameters(const std::string &prefix, std::vector<NamedTensor> *out) const;
  void CollectBuffers(const std::string &prefix, std::vector<NamedTensor> *out) const;

 private:
  LayerSpec spec_;
  Tensor weight_, bias_;
  Tensor running_mean_, running_var_;
  std::vector<Layer> inner_;  // residual block body
};

// A linear stack of layers with a declared input channel count.
class Sequential {
 public:
  Sequential() = default;
  Sequential(const std::vector<LayerSpec> &specs, Rng &init_rng, double init_std = 0.02);

  Tensor Forward(const Tensor &x, ForwardContext &ctx);
  int input_channels() const { return input_channels_; }
  size_t size() const { return layers_.size(); }
  Layer &layer(size_t i) { return layers_[i]; }

  void CollectParameters(const std::string &prefix, std::vector<NamedTensor> *out) const;
  void CollectBuffers(const std::string &prefix, std::vector<NamedTensor> *out) const;

 private:
  std::vector<Layer> layers_;
  int input_channels_ = 0;
};

}  // namespace selfecho

#endif  // SELFECHO_LAYERS_H_
