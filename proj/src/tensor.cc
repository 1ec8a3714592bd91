// src/tensor.cc

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

#include "selfecho/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include <Eigen/Core>

#include "selfecho/error.h"

namespace selfecho {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

thread_local bool g_grad_enabled = true;

void RequireSameShape(const Tensor &a, const Tensor &b, const char *op) {
  if (a.shape() != b.shape())
    throw Error(ErrorKind::kShapeMismatch, std::string(op) + ": " +
                                               ShapeString(a.shape()) + " vs " +
                                               ShapeString(b.shape()));
}

void RequireRank4(const Tensor &t, const char *op) {
  if (t.rank() != 4)
    throw Error(ErrorKind::kShapeMismatch,
                std::string(op) + " expects NCHW input, got " + ShapeString(t.shape()));
}

void AccumulateInto(const NodePtr &target, const std::vector<double> &delta) {
  if (!target->requires_grad) return;
  auto &g = target->EnsureGrad();
  for (size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

template <typename Fwd, typename Deriv>
Tensor UnaryOp(const Tensor &a, Fwd fwd, Deriv deriv) {
  std::vector<double> out(a.numel());
  auto in = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return MakeResult(a.shape(), std::move(out), {a}, [deriv](TensorNode &self) {
    const NodePtr &p = self.parents[0];
    if (!p->requires_grad) return;
    auto &g = p->EnsureGrad();
    for (size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * deriv(p->data[i], self.data[i]);
  });
}

// Output positions o in [lo, hi) read input index o * stride - padding + k
// inside [0, extent).
inline void ValidRange(int k, int stride, int padding, int extent, int out, int *lo, int *hi) {
  const int a = padding - k;
  *lo = a <= 0 ? 0 : (a + stride - 1) / stride;
  const int b = extent - 1 + padding - k;
  *hi = b < 0 ? 0 : std::min(out, b / stride + 1);
  if (*lo > *hi) *lo = *hi;
}

// Unfolds one C x H x W image into a (C*k*k) x (out_h*out_w) patch matrix.
// Rows of the patch matrix are `ld` apart so several images can sit side by
// side. Only in-bounds taps are written; `col` must arrive zeroed.
void Im2Col(const double *img, int channels, int height, int width, int kernel,
            int stride, int padding, int out_h, int out_w, double *col, size_t ld) {
  for (int c = 0; c < channels; ++c) {
    const double *plane = img + static_cast<size_t>(c) * height * width;
    for (int ki = 0; ki < kernel; ++ki) {
      int h0, h1;
      ValidRange(ki, stride, padding, height, out_h, &h0, &h1);
      for (int kj = 0; kj < kernel; ++kj) {
        int w0, w1;
        ValidRange(kj, stride, padding, width, out_w, &w0, &w1);
        double *row = col + static_cast<size_t>((c * kernel + ki) * kernel + kj) * ld;
        for (int oh = h0; oh < h1; ++oh) {
          double *dst = row + static_cast<size_t>(oh) * out_w;
          const double *src = plane + static_cast<size_t>(oh * stride - padding + ki) * width - padding + kj;
          if (stride == 1) {
            std::copy(src + w0, src + w1, dst + w0);
          } else {
            for (int ow = w0; ow < w1; ++ow) dst[ow] = src[ow * stride];
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatters (accumulates) patches back into the image.
void Col2Im(const double *col, int channels, int height, int width, int kernel,
            int stride, int padding, int out_h, int out_w, double *img, size_t ld) {
  for (int c = 0; c < channels; ++c) {
    double *plane = img + static_cast<size_t>(c) * height * width;
    for (int ki = 0; ki < kernel; ++ki) {
      int h0, h1;
      ValidRange(ki, stride, padding, height, out_h, &h0, &h1);
      for (int kj = 0; kj < kernel; ++kj) {
        int w0, w1;
        ValidRange(kj, stride, padding, width, out_w, &w0, &w1);
        const double *row = col + static_cast<size_t>((c * kernel + ki) * kernel + kj) * ld;
        for (int oh = h0; oh < h1; ++oh) {
          const double *src = row + static_cast<size_t>(oh) * out_w;
          double *dst = plane + static_cast<size_t>(oh * stride - padding + ki) * width - padding + kj;
          if (stride == 1) {
            for (int ow = w0; ow < w1; ++ow) dst[ow] += src[ow];
          } else {
            for (int ow = w0; ow < w1; ++ow) dst[ow * stride] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

size_t NumElements(const Shape &shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  return n;
}

std::string ShapeString(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

std::vector<double> &TensorNode::EnsureGrad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor::Tensor() : node_(std::make_shared<TensorNode>()) {}

Tensor::Tensor(Shape shape, double fill) : node_(std::make_shared<TensorNode>()) {
  for (int d : shape)
    if (d <= 0) throw Error(ErrorKind::kShapeMismatch, "non-positive dim in " + ShapeString(shape));
  node_->data.assign(NumElements(shape), fill);
  node_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : node_(std::make_shared<TensorNode>()) {
  for (int d : shape)
    if (d <= 0) throw Error(ErrorKind::kShapeMismatch, "non-positive dim in " + ShapeString(shape));
  if (NumElements(shape) != values.size())
    throw Error(ErrorKind::kShapeMismatch,
                "shape " + ShapeString(shape) + " does not match " +
                    std::to_string(values.size()) + " values");
  node_->shape = std::move(shape);
  node_->data = std::move(values);
}

Tensor Tensor::RandomNormal(Shape shape, Rng &rng, double mean, double stddev) {
  Tensor t(std::move(shape));
  for (double &v : t.node_->data) v = rng.Normal(mean, stddev);
  return t;
}

Tensor Tensor::RandomUniform(Shape shape, Rng &rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double &v : t.node_->data) v = rng.Uniform(lo, hi);
  return t;
}

double Tensor::item() const {
  if (numel() != 1)
    throw Error(ErrorKind::kShapeMismatch, "item() on " + ShapeString(shape()));
  return node_->data[0];
}

Tensor &Tensor::set_requires_grad(bool flag) {
  node_->requires_grad = flag;
  return *this;
}

Tensor Tensor::Detach() const {
  return Tensor(node_->shape, node_->data);
}

Tensor Tensor::Reshape(Shape shape) const {
  if (NumElements(shape) != numel())
    throw Error(ErrorKind::kShapeMismatch,
                "cannot reshape " + ShapeString(this->shape()) + " to " + ShapeString(shape));
  return MakeResult(std::move(shape), node_->data, {*this}, [](TensorNode &self) {
    AccumulateInto(self.parents[0], self.grad);
  });
}

bool Tensor::AllFinite() const {
  return std::all_of(node_->data.begin(), node_->data.end(),
                     [](double v) { return std::isfinite(v); });
}

void Tensor::Backward() const {
  if (numel() != 1)
    throw Error(ErrorKind::kShapeMismatch, "backward needs a scalar, got " + ShapeString(shape()));
  if (!node_->requires_grad)
    throw Error(ErrorKind::kNoGraph, "loss is not attached to a recorded computation");

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<TensorNode *> order;
  std::unordered_set<TensorNode *> visited;
  std::vector<std::pair<TensorNode *, size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode *parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second)
        stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (TensorNode *n : order)
    if (!n->is_leaf()) n->grad.assign(n->data.size(), 0.0);
  node_->EnsureGrad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (!(*it)->is_leaf()) (*it)->backward_fn(**it);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool GradEnabled() { return g_grad_enabled; }

Tensor MakeResult(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                  std::function<void(TensorNode &)> backward_fn) {
  for (double v : values)
    if (!std::isfinite(v))
      throw Error(ErrorKind::kNonFinite, "non-finite value produced in " + ShapeString(shape));
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  bool any_grad = false;
  for (const Tensor &t : inputs) any_grad = any_grad || t.requires_grad();
  if (g_grad_enabled && any_grad) {
    node->requires_grad = true;
    node->backward_fn = std::move(backward_fn);
    for (Tensor &t : inputs) node->parents.push_back(t.node());
  }
  return Tensor(std::move(node));
}

Tensor Add(const Tensor &a, const Tensor &b) {
  RequireSameShape(a, b, "add");
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return MakeResult(a.shape(), std::move(out), {a, b}, [](TensorNode &self) {
    AccumulateInto(self.parents[0], self.grad);
    AccumulateInto(self.parents[1], self.grad);
  });
}

Tensor Sub(const Tensor &a, const Tensor &b) {
  RequireSameShape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return MakeResult(a.shape(), std::move(out), {a, b}, [](TensorNode &self) {
    AccumulateInto(self.parents[0], self.grad);
    const NodePtr &q = self.parents[1];
    if (q->requires_grad) {
      auto &g = q->EnsureGrad();
      for (size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor Mul(const Tensor &a, const Tensor &b) {
  RequireSameShape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return MakeResult(a.shape(), std::move(out), {a, b}, [](TensorNode &self) {
    const NodePtr &p = self.parents[0];
    const NodePtr &q = self.parents[1];
    if (p->requires_grad) {
      auto &g = p->EnsureGrad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * q->data[i];
    }
    if (q->requires_grad) {
      auto &g = q->EnsureGrad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * p->data[i];
    }
  });
}

Tensor Scale(const Tensor &a, double s) {
  return UnaryOp(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor AddScalar(const Tensor &a, double s) {
  return UnaryOp(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor Abs(const Tensor &a) {
  return UnaryOp(
      a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor Log(const Tensor &a) {
  return UnaryOp(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor Square(const Tensor &a) {
  return UnaryOp(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor Sigmoid(const Tensor &a) {
  return UnaryOp(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor Tanh(const Tensor &a) {
  return UnaryOp(a, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
}

Tensor Relu(const Tensor &a) {
  return UnaryOp(a, [](double x) { return x > 0 ? x : 0.0; },
                 [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor LeakyRelu(const Tensor &a, double negative_slope) {
  return UnaryOp(
      a, [negative_slope](double x) { return x > 0 ? x : negative_slope * x; },
      [negative_slope](double x, double) { return x > 0 ? 1.0 : negative_slope; });
}

Tensor Clamp(const Tensor &a, double lo, double hi) {
  return UnaryOp(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
                 [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor Sum(const Tensor &a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return MakeResult({1}, {s}, {a}, [](TensorNode &self) {
    const NodePtr &p = self.parents[0];
    if (!p->requires_grad) return;
    auto &g = p->EnsureGrad();
    for (double &v : g) v += self.grad[0];
  });
}

Tensor Mean(const Tensor &a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  const double n = static_cast<double>(a.numel());
  return MakeResult({1}, {s / n}, {a}, [n](TensorNode &self) {
    const NodePtr &p = self.parents[0];
    if (!p->requires_grad) return;
    auto &g = p->EnsureGrad();
    for (double &v : g) v += self.grad[0] / n;
  });
}

Tensor ConcatChannels(const Tensor &a, const Tensor &b) {
  RequireRank4(a, "concat");
  RequireRank4(b, "concat");
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2), w = a.dim(3);
  if (b.dim(0) != n || b.dim(2) != h || b.dim(3) != w)
    throw Error(ErrorKind::kShapeMismatch,
                "concat: " + ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  const size_t plane = static_cast<size_t>(h) * w;
  const size_t block_a = ca * plane, block_b = cb * plane;
  std::vector<double> out(n * (block_a + block_b));
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.data().data() + i * block_a, block_a, out.data() + i * (block_a + block_b));
    std::copy_n(b.data().data() + i * block_b, block_b,
                out.data() + i * (block_a + block_b) + block_a);
  }
  return MakeResult({n, ca + cb, h, w}, std::move(out), {a, b},
                    [n, block_a, block_b](TensorNode &self) {
                      for (int k = 0; k < 2; ++k) {
                        const NodePtr &p = self.parents[k];
                        if (!p->requires_grad) continue;
                        auto &g = p->EnsureGrad();
                        const size_t block = k == 0 ? block_a : block_b;
                        const size_t offset = k == 0 ? 0 : block_a;
                        for (int i = 0; i < n; ++i)
                          for (size_t j = 0; j < block; ++j)
                            g[i * block + j] += self.grad[i * (block_a + block_b) + offset + j];
                      }
                    });
}

int ConvOutputSide(int in, int kernel, int stride, int padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

int ConvTransposeOutputSide(int in, int kernel, int stride, int padding) {
  return (in - 1) * stride - 2 * padding + kernel;
}

namespace {

// Direct convolution for layers with very few output channels, where the
// patch matrix would dwarf the work.
Tensor DirectConv2d(const Tensor &x, const Tensor &weight, const Tensor &bias, int stride,
                    int padding, int oh, int ow) {
  const bool has_bias = bias.numel() > 0;
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int o = weight.dim(0), k = weight.dim(2);
  // Calls fn(out_index, in_index, weight_index) for every in-bounds tap.
  auto visit = [=](auto &&fn) {
    for (int i = 0; i < n; ++i)
      for (int oc = 0; oc < o; ++oc)
        for (int ic = 0; ic < c; ++ic)
          for (int ki = 0; ki < k; ++ki) {
            int h0, h1;
            ValidRange(ki, stride, padding, h, oh, &h0, &h1);
            for (int kj = 0; kj < k; ++kj) {
              int w0, w1;
              ValidRange(kj, stride, padding, w, ow, &w0, &w1);
              const size_t widx = ((static_cast<size_t>(oc) * c + ic) * k + ki) * k + kj;
              for (int y = h0; y < h1; ++y) {
                const size_t obase = ((static_cast<size_t>(i) * o + oc) * oh + y) * ow;
                const size_t ibase = ((static_cast<size_t>(i) * c + ic) * h + y * stride - padding + ki) * w -
                                     padding + kj;
                fn(obase, ibase, widx, w0, w1);
              }
            }
          }
  };
  std::vector<double> out(static_cast<size_t>(n) * o * oh * ow, 0.0);
  const double *xd = x.data().data(), *wd = weight.data().data();
  visit([&](size_t ob, size_t ib, size_t wi, int w0, int w1) {
    const double wv = wd[wi];
    for (int q = w0; q < w1; ++q) out[ob + q] += wv * xd[ib + static_cast<size_t>(q) * stride];
  });
  if (has_bias)
    for (int i = 0; i < n; ++i)
      for (int oc = 0; oc < o; ++oc)
        for (int p = 0; p < oh * ow; ++p) out[(static_cast<size_t>(i) * o + oc) * oh * ow + p] += bias[oc];
  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return MakeResult({n, o, oh, ow}, std::move(out), std::move(inputs), [=](TensorNode &self) {
    const NodePtr &xn = self.parents[0];
    const NodePtr &wn = self.parents[1];
    const double *g = self.grad.data();
    double *gx = xn->requires_grad ? xn->EnsureGrad().data() : nullptr;
    double *gw = wn->requires_grad ? wn->EnsureGrad().data() : nullptr;
    const double *xv = xn->data.data(), *wv = wn->data.data();
    visit([&](size_t ob, size_t ib, size_t wi, int w0, int w1) {
      if (gx != nullptr) {
        const double wt = wv[wi];
        for (int q = w0; q < w1; ++q) gx[ib + static_cast<size_t>(q) * stride] += wt * g[ob + q];
      }
      if (gw != nullptr) {
        double acc = 0.0;
        for (int q = w0; q < w1; ++q) acc += g[ob + q] * xv[ib + static_cast<size_t>(q) * stride];
        gw[wi] += acc;
      }
    });
    if (has_bias && self.parents[2]->requires_grad) {
      auto &db = self.parents[2]->EnsureGrad();
      for (int i = 0; i < n; ++i)
        for (int oc = 0; oc < o; ++oc)
          for (int p = 0; p < oh * ow; ++p) db[oc] += g[(static_cast<size_t>(i) * o + oc) * oh * ow + p];
    }
  });
}

}  // namespace

Tensor Conv2d(const Tensor &x, const Tensor &weight, const Tensor &bias, int stride,
              int padding) {
  RequireRank4(x, "conv2d");
  if (weight.rank() != 4 || weight.dim(1) != x.dim(1) || weight.dim(2) != weight.dim(3))
    throw Error(ErrorKind::kShapeMismatch, "conv2d: input " + ShapeString(x.shape()) +
                                               " vs weight " + ShapeString(weight.shape()));
  const bool has_bias = bias.numel() > 0;
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int o = weight.dim(0), k = weight.dim(2);
  if (has_bias && static_cast<int>(bias.numel()) != o)
    throw Error(ErrorKind::kShapeMismatch, "conv2d: bias size");
  if (h + 2 * padding < k || w + 2 * padding < k || stride < 1)
    throw Error(ErrorKind::kShapeMismatch, "conv2d: kernel larger than padded input");
  const int oh = ConvOutputSide(h, k, stride, padding), ow = ConvOutputSide(w, k, stride, padding);
  if (o <= 2) return DirectConv2d(x, weight, bias, stride, padding, oh, ow);
  const int rows = c * k * k, cols = oh * ow;
  const size_t ld = static_cast<size_t>(n) * cols;

  // One GEMM for the whole batch: image i owns patch columns [i*cols, (i+1)*cols).
  auto cols_buf = std::make_shared<std::vector<double>>(static_cast<size_t>(rows) * ld);
  for (int i = 0; i < n; ++i)
    Im2Col(x.data().data() + static_cast<size_t>(i) * c * h * w, c, h, w, k, stride, padding, oh,
           ow, cols_buf->data() + static_cast<size_t>(i) * cols, ld);
  ConstMatMap wmat(weight.data().data(), o, rows);
  RowMat prod = wmat * ConstMatMap(cols_buf->data(), rows, ld);
  std::vector<double> out(static_cast<size_t>(n) * o * cols);
  for (int i = 0; i < n; ++i) {
    MatMap omat(out.data() + static_cast<size_t>(i) * o * cols, o, cols);
    omat = prod.middleCols(static_cast<Eigen::Index>(i) * cols, cols);
    if (has_bias)
      for (int j = 0; j < o; ++j) omat.row(j).array() += bias[j];
  }
  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return MakeResult(
      {n, o, oh, ow}, std::move(out), std::move(inputs),
      [=](TensorNode &self) {
        const NodePtr &xn = self.parents[0];
        const NodePtr &wn = self.parents[1];
        RowMat dout(o, ld);
        for (int i = 0; i < n; ++i)
          dout.middleCols(static_cast<Eigen::Index>(i) * cols, cols) =
              ConstMatMap(self.grad.data() + static_cast<size_t>(i) * o * cols, o, cols);
        if (wn->requires_grad) {
          MatMap dw(wn->EnsureGrad().data(), o, rows);
          dw.noalias() += dout * ConstMatMap(cols_buf->data(), rows, ld).transpose();
        }
        if (has_bias && self.parents[2]->requires_grad) {
          auto &db = self.parents[2]->EnsureGrad();
          for (int j = 0; j < o; ++j) db[j] += dout.row(j).sum();
        }
        if (xn->requires_grad) {
          const RowMat dcol = ConstMatMap(wn->data.data(), o, rows).transpose() * dout;
          double *gx = xn->EnsureGrad().data();
          for (int i = 0; i < n; ++i)
            Col2Im(dcol.data() + static_cast<size_t>(i) * cols, c, h, w, k, stride, padding, oh,
                   ow, gx + static_cast<size_t>(i) * c * h * w, ld);
        }
      });
}

Tensor ConvTranspose2d(const Tensor &x, const Tensor &weight, const Tensor &bias, int stride,
                       int padding) {
  RequireRank4(x, "transpose_conv2d");
  if (weight.rank() != 4 || weight.dim(0) != x.dim(1) || weight.dim(2) != weight.dim(3))
    throw Error(ErrorKind::kShapeMismatch, "transpose_conv2d: input " + ShapeString(x.shape()) +
                                               " vs weight " + ShapeString(weight.shape()));
  const bool has_bias = bias.numel() > 0;
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int o = weight.dim(1), k = weight.dim(2);
  if (has_bias && static_cast<int>(bias.numel()) != o)
    throw Error(ErrorKind::kShapeMismatch, "transpose_conv2d: bias size");
  const int oh = ConvTransposeOutputSide(h, k, stride, padding);
  const int ow = ConvTransposeOutputSide(w, k, stride, padding);
  if (oh < 1 || ow < 1 || ConvOutputSide(oh, k, stride, padding) != h)
    throw Error(ErrorKind::kShapeMismatch, "transpose_conv2d: inconsistent geometry");
  const int rows = o * k * k, cols = h * w;
  const size_t ld = static_cast<size_t>(n) * cols;
  const size_t out_plane = static_cast<size_t>(oh) * ow;

  // Inputs gathered as C x (N*H*W) so the batch shares one GEMM.
  auto xs = std::make_shared<RowMat>(c, ld);
  for (int i = 0; i < n; ++i)
    xs->middleCols(static_cast<Eigen::Index>(i) * cols, cols) =
        ConstMatMap(x.data().data() + static_cast<size_t>(i) * c * cols, c, cols);
  const RowMat col = ConstMatMap(weight.data().data(), c, rows).transpose() * *xs;
  std::vector<double> out(static_cast<size_t>(n) * o * out_plane, 0.0);
  for (int i = 0; i < n; ++i) {
    double *img = out.data() + static_cast<size_t>(i) * o * out_plane;
    Col2Im(col.data() + static_cast<size_t>(i) * cols, o, oh, ow, k, stride, padding, h, w, img,
           ld);
    if (has_bias)
      for (int j = 0; j < o; ++j)
        for (size_t p = 0; p < out_plane; ++p) img[j * out_plane + p] += bias[j];
  }
  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return MakeResult(
      {n, o, oh, ow}, std::move(out), std::move(inputs),
      [=](TensorNode &self) {
        const NodePtr &xn = self.parents[0];
        const NodePtr &wn = self.parents[1];
        RowMat dcol = RowMat::Zero(rows, ld);
        for (int i = 0; i < n; ++i)
          Im2Col(self.grad.data() + static_cast<size_t>(i) * o * out_plane, o, oh, ow, k, stride,
                 padding, h, w, dcol.data() + static_cast<size_t>(i) * cols, ld);
        if (wn->requires_grad) {
          MatMap dw(wn->EnsureGrad().data(), c, rows);
          dw.noalias() += *xs * dcol.transpose();
        }
        if (xn->requires_grad) {
          const RowMat dx = ConstMatMap(wn->data.data(), c, rows) * dcol;
          double *gx = xn->EnsureGrad().data();
          for (int i = 0; i < n; ++i)
            MatMap(gx + static_cast<size_t>(i) * c * cols, c, cols) +=
                dx.middleCols(static_cast<Eigen::Index>(i) * cols, cols);
        }
        if (has_bias && self.parents[2]->requires_grad) {
          auto &db = self.parents[2]->EnsureGrad();
          for (int i = 0; i < n; ++i) {
            const double *dout = self.grad.data() + static_cast<size_t>(i) * o * out_plane;
            for (int j = 0; j < o; ++j)
              for (size_t p = 0; p < out_plane; ++p) db[j] += dout[j * out_plane + p];
          }
        }
      });
}

Tensor BatchNorm2d(const Tensor &x, const Tensor &gamma, const Tensor &beta,
                   RunningStats *running, bool training, double momentum, double eps) {
  RequireRank4(x, "batch_norm");
  const int n = x.dim(0), c = x.dim(1);
  const size_t plane = static_cast<size_t>(x.dim(2)) * x.dim(3);
  if (static_cast<int>(gamma.numel()) != c || static_cast<int>(beta.numel()) != c)
    throw Error(ErrorKind::kShapeMismatch, "batch_norm: affine size");
  const double m = static_cast<double>(n) * plane;
  std::vector<double> mean(c, 0.0), inv_std(c, 0.0);
  auto in = x.data();
  for (int ch = 0; ch < c; ++ch) {
    if (training || running == nullptr) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (size_t p = 0; p < plane; ++p) s += in[(static_cast<size_t>(i) * c + ch) * plane + p];
      const double mu = s / m;
      double v = 0.0;
      for (int i = 0; i < n; ++i)
        for (size_t p = 0; p < plane; ++p) {
          const double d = in[(static_cast<size_t>(i) * c + ch) * plane + p] - mu;
          v += d * d;
        }
      v /= m;
      mean[ch] = mu;
      inv_std[ch] = 1.0 / std::sqrt(v + eps);
      if (running != nullptr && training) {
        const double unbiased = m > 1 ? v * m / (m - 1) : v;
        running->mean[ch] = (1 - momentum) * running->mean[ch] + momentum * mu;
        running->var[ch] = (1 - momentum) * running->var[ch] + momentum * unbiased;
      }
    } else {
      mean[ch] = running->mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(running->var[ch] + eps);
    }
  }
  std::vector<double> out(x.numel());
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch)
      for (size_t p = 0; p < plane; ++p) {
        const size_t idx = (static_cast<size_t>(i) * c + ch) * plane + p;
        out[idx] = gamma[ch] * (in[idx] - mean[ch]) * inv_std[ch] + beta[ch];
      }
  const bool batch_stats = training || running == nullptr;
  return MakeResult(
      x.shape(), std::move(out), {x, gamma, beta},
      [=](TensorNode &self) {
        const NodePtr &xn = self.parents[0];
        const NodePtr &gn = self.parents[1];
        const NodePtr &bn = self.parents[2];
        for (int ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int i = 0; i < n; ++i)
            for (size_t p = 0; p < plane; ++p) {
              const size_t idx = (static_cast<size_t>(i) * c + ch) * plane + p;
              const double xhat = (xn->data[idx] - mean[ch]) * inv_std[ch];
              sum_dy += self.grad[idx];
              sum_dy_xhat += self.grad[idx] * xhat;
            }
          if (gn->requires_grad) gn->EnsureGrad()[ch] += sum_dy_xhat;
          if (bn->requires_grad) bn->EnsureGrad()[ch] += sum_dy;
          if (!xn->requires_grad) continue;
          auto &gx = xn->EnsureGrad();
          const double g = gn->data[ch];
          for (int i = 0; i < n; ++i)
            for (size_t p = 0; p < plane; ++p) {
              const size_t idx = (static_cast<size_t>(i) * c + ch) * plane + p;
              if (batch_stats) {
                const double xhat = (xn->data[idx] - mean[ch]) * inv_std[ch];
                gx[idx] += g * inv_std[ch] *
                           (self.grad[idx] - sum_dy / m - xhat * sum_dy_xhat / m);
              } else {
                gx[idx] += g * inv_std[ch] * self.grad[idx];
              }
            }
        }
      });
}

Tensor InstanceNorm2d(const Tensor &x, double eps) {
  RequireRank4(x, "instance_norm");
  const int n = x.dim(0), c = x.dim(1);
  const size_t plane = static_cast<size_t>(x.dim(2)) * x.dim(3);
  const size_t groups = static_cast<size_t>(n) * c;
  std::vector<double> mean(groups), inv_std(groups), out(x.numel());
  auto in = x.data();
  for (size_t gi = 0; gi < groups; ++gi) {
    const double *src = in.data() + gi * plane;
    double s = 0.0;
    for (size_t p = 0; p < plane; ++p) s += src[p];
    const double mu = s / plane;
    double v = 0.0;
    for (size_t p = 0; p < plane; ++p) v += (src[p] - mu) * (src[p] - mu);
    v /= plane;
    mean[gi] = mu;
    inv_std[gi] = 1.0 / std::sqrt(v + eps);
    for (size_t p = 0; p < plane; ++p) out[gi * plane + p] = (src[p] - mu) * inv_std[gi];
  }
  return MakeResult(x.shape(), std::move(out), {x}, [=](TensorNode &self) {
    const NodePtr &xn = self.parents[0];
    if (!xn->requires_grad) return;
    auto &gx = xn->EnsureGrad();
    const double m = static_cast<double>(plane);
    for (size_t gi = 0; gi < groups; ++gi) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (size_t p = 0; p < plane; ++p) {
        sum_dy += self.grad[gi * plane + p];
        sum_dy_xhat += self.grad[gi * plane + p] * self.data[gi * plane + p];
      }
      for (size_t p = 0; p < plane; ++p) {
        const size_t idx = gi * plane + p;
        gx[idx] += inv_std[gi] * (self.grad[idx] - sum_dy / m - self.data[idx] * sum_dy_xhat / m);
      }
    }
  });
}

Tensor Dropout(const Tensor &x, double p, bool active, Rng &rng) {
  if (!active || p <= 0.0) return x;
  const double keep = 1.0 - p;
  std::vector<double> mask(x.numel());
  for (double &v : mask) v = rng.Uniform() < keep ? 1.0 / keep : 0.0;
  std::vector<double> out(x.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x[i] * mask[i];
  return MakeResult(x.shape(), std::move(out), {x}, [mask](TensorNode &self) {
    const NodePtr &xn = self.parents[0];
    if (!xn->requires_grad) return;
    auto &g = xn->EnsureGrad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

}  // namespace selfecho
