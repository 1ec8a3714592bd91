// include/selfecho/tensor.h

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

#ifndef SELFECHO_TENSOR_H_
#define SELFECHO_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "selfecho/rng.h"

namespace selfecho {

using Shape = std::vector<int>;

size_t NumElements(const Shape &shape);
std::string ShapeString(const Shape &shape);

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// Storage plus the recorded computation that produced it. Parents are held
// by shared pointer so a loss keeps its whole graph alive until released.
struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first touched by backward
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(TensorNode &)> backward_fn;

  bool is_leaf() const { return !backward_fn; }
  std::vector<double> &EnsureGrad();
};

// Dense row-major real array with reverse-mode gradient tracking. Copies
// share storage (handle semantics); Detach() makes an independent copy.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor Scalar(double v) { return Tensor(Shape{1}, v); }
  static Tensor RandomNormal(Shape shape, Rng &rng, double mean, double stddev);
  static Tensor RandomUniform(Shape shape, Rng &rng, double lo, double hi);

  const Shape &shape() const { return node_->shape; }
  int dim(size_t i) const { return node_->shape.at(i); }
  size_t rank() const { return node_->shape.size(); }
  size_t numel() const { return node_->data.size(); }

  std::span<const double> data() const { return node_->data; }
  // Direct write access; only meant for parameter updates and loaders.
  std::span<double> mutable_data() { return node_->data; }
  double operator[](size_t i) const { return node_->data[i]; }
  double item() const;

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void ZeroGrad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor &set_requires_grad(bool flag);

  Tensor Detach() const;
  Tensor Reshape(Shape shape) const;

  // Reverse-mode accumulation from this scalar. Leaf gradients accumulate
  // across calls; intermediate gradients are recomputed on every call.
  void Backward() const;

  bool AllFinite() const;
  const NodePtr &node() const { return node_; }

 private:
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}
  friend Tensor MakeResult(Shape, std::vector<double>, std::vector<Tensor>,
                           std::function<void(TensorNode &)>);
  NodePtr node_;
};

// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool previous_;
};

bool GradEnabled();

// Builds an op result; records the backward closure only when grad mode is
// on and some input requires grad. Throws NonFinite on NaN/Inf output.
Tensor MakeResult(Shape shape, std::vector<double> values,
                  std::vector<Tensor> inputs,
                  std::function<void(TensorNode &)> backward_fn);

// Elementwise (identical shapes).
Tensor Add(const Tensor &a, const Tensor &b);
Tensor Sub(const Tensor &a, const Tensor &b);
Tensor Mul(const Tensor &a, const Tensor &b);
Tensor Scale(const Tensor &a, double s);
Tensor AddScalar(const Tensor &a, double s);
Tensor Abs(const Tensor &a);
Tensor Log(const Tensor &a);
Tensor Square(const Tensor &a);
Tensor Sigmoid(const Tensor &a);
Tensor Tanh(const Tensor &a);
Tensor Relu(const Tensor &a);
Tensor LeakyRelu(const Tensor &a, double negative_slope);
Tensor Clamp(const Tensor &a, double lo, double hi);

// Reductions to a scalar of shape {1}.
Tensor Sum(const Tensor &a);
Tensor Mean(const Tensor &a);

// Concatenate two NCHW tensors along the channel axis.
Tensor ConcatChannels(const Tensor &a, const Tensor &b);

// x: N x C x H x W, weight: O x C x k x k, bias: O (may be empty Tensor()).
Tensor Conv2d(const Tensor &x, const Tensor &weight, const Tensor &bias,
              int stride, int padding);
// x: N x C x H x W, weight: C x O x k x k, bias: O.
Tensor ConvTranspose2d(const Tensor &x, const Tensor &weight,
                       const Tensor &bias, int stride, int padding);

int ConvOutputSide(int in, int kernel, int stride, int padding);
int ConvTransposeOutputSide(int in, int kernel, int stride, int padding);

// Views into the running-statistics buffers of a batch-norm layer.
struct RunningStats {
  std::span<double> mean;
  std::span<double> var;
};

// Per-channel normalization over (N, H, W). In training mode batch
// statistics are used and `running` is updated with `momentum`; otherwise
// `running` supplies the statistics.
Tensor BatchNorm2d(const Tensor &x, const Tensor &gamma, const Tensor &beta,
                   RunningStats *running, bool training, double momentum,
                   double eps);
// Per-sample, per-channel normalization over (H, W), no affine part.
Tensor InstanceNorm2d(const Tensor &x, double eps);
// Inverted dropout; identity when `active` is false.
Tensor Dropout(const Tensor &x, double p, bool active, Rng &rng);

}  // namespace selfecho

#endif  // SELFECHO_TENSOR_H_
