// include/selfecho/gan.h

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

#ifndef SELFECHO_GAN_H_
#define SELFECHO_GAN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "selfecho/layers.h"

namespace selfecho {

enum class GeneratorKind { kUnet, kResnet };
enum class AdvLossKind { kLog, kLeastSquares };
enum class TrainMode { kPaired, kUnpaired };

const char *GeneratorKindName(GeneratorKind kind);
GeneratorKind ParseGeneratorKind(const std::string &s);
const char *AdvLossKindName(AdvLossKind kind);
AdvLossKind ParseAdvLossKind(const std::string &s);
const char *TrainModeName(TrainMode mode);
TrainMode ParseTrainMode(const std::string &s);

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::kUnet;
  int image_size = 32;  // 32, 64 or 128
  int base_channels = 16;
  // U-Net levels; each halves the side. 0 means log2(image_size).
  int depth = 0;
  // Decoder levels (next to the innermost one) that carry dropout.
  int dropout_levels = 1;
  double dropout = 0.5;
  int n_residual_blocks = 3;
  uint64_t seed = 0;

  int effective_depth() const;
  void Validate() const;
};

struct DiscriminatorConfig {
  int image_size = 32;
  int in_channels = 2;
  int base_channels = 16;
  int n_layers = 3;  // stride-2 convolutions
  LayerKind norm = LayerKind::kBatchNorm;
  uint64_t seed = 0;

  // Side of the logit map from the convolution shape formula.
  int output_side() const;
  void Validate() const;
};

// Image-to-image generator on N x 1 x S x S inputs in [0, 1]. Inputs are
// mapped to [-1, 1] internally and the tanh output is mapped back, so the
// result is in [0, 1] with the input's shape.
class Generator {
 public:
  Generator() = default;
  explicit Generator(const GeneratorConfig &config);

  const GeneratorConfig &config() const { return config_; }
  Tensor Forward(const Tensor &x, ForwardContext &ctx);

  std::vector<NamedTensor> NamedParameters() const;
  std::vector<NamedTensor> NamedBuffers() const;
  std::vector<Tensor> Parameters() const;

 private:
  GeneratorConfig config_;
  // U-Net: one encoder and one decoder stage per level.
  std::vector<Sequential> down_, up_;
  // ResNet: a single stack.
  Sequential body_;
};

// PatchGAN: an N x N map of real/fake logits over overlapping patches.
class Discriminator {
 public:
  Discriminator() = default;
  explicit Discriminator(const DiscriminatorConfig &config);

  const DiscriminatorConfig &config() const { return config_; }
  // Returns logits of shape batch x 1 x output_side x output_side.
  Tensor Forward(const Tensor &x, ForwardContext &ctx);

  std::vector<NamedTensor> NamedParameters() const;
  std::vector<NamedTensor> NamedBuffers() const;
  std::vector<Tensor> Parameters() const;

 private:
  DiscriminatorConfig config_;
  Sequential net_;
};

Generator BuildGenerator(const GeneratorConfig &config);
Discriminator BuildDiscriminator(const DiscriminatorConfig &config);

// Parameters followed by buffers, buffers prefixed "buffer:".
std::vector<NamedTensor> StateTensors(const std::vector<NamedTensor> &params,
                                      const std::vector<NamedTensor> &buffers);
void SaveGenerator(const Generator &g, const std::string &path);
void LoadGenerator(Generator &g, const std::string &path);
void SaveDiscriminator(const Discriminator &d, const std::string &path);
void LoadDiscriminator(Discriminator &d, const std::string &path);

// Batch of images as an N x 1 x S x S tensor.
Tensor StackImages(const std::vector<const std::vector<double> *> &images, int side);

}  // namespace selfecho

#endif  // SELFECHO_GAN_H_
