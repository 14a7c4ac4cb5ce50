// Copyright 2026 The Negolab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "negolab/nn.h"

#include <cmath>

#include "negolab/error.h"

namespace negolab::nn {

MlpLayout::MlpLayout(std::vector<int> sizes, Activation hidden, bool bias)
    : sizes_(std::move(sizes)), hidden_(hidden), bias_(bias) {
  Require(sizes_.size() >= 2, ErrorCode::kContract, "mlp needs at least one layer");
  for (int s : sizes_) Require(s > 0, ErrorCode::kContract, "mlp layer sizes must be positive");
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(num_params_);
    num_params_ += sizes_[l] * sizes_[l + 1] + (bias_ ? sizes_[l + 1] : 0);
  }
}

template <typename T>
Mat<T> MlpLayout::Forward(const T* params, const Mat<T>& x, Cache<T>* cache, int begin,
                          int end) const {
  if (end < 0) end = num_layers();
  Require(x.rows() == sizes_[begin], ErrorCode::kContract, "mlp input size mismatch");
  if (cache != nullptr) {
    cache->inputs.resize(end - begin);
    cache->outputs.resize(end - begin);
  }
  Mat<T> h = x;
  for (int l = begin; l < end; ++l) {
    Eigen::Map<const Mat<T>> w(params + weight_offset(l), layer_out(l), layer_in(l));
    Mat<T> y = w * h;
    if (bias_) {
      Eigen::Map<const Vec<T>> b(params + bias_offset(l), layer_out(l));
      y.colwise() += b;
    }
    if (l + 1 < num_layers()) {
      if (hidden_ == Activation::kRelu) {
        y = y.cwiseMax(T(0));
      } else {
        y = y.array().tanh().matrix();
      }
    }
    if (cache != nullptr) {
      cache->inputs[l - begin] = std::move(h);
      cache->outputs[l - begin] = y;
    }
    h = std::move(y);
  }
  return h;
}

template <typename T>
void MlpLayout::Backward(const T* params, const Cache<T>& cache, const Mat<T>& dout, T* grad,
                         Mat<T>* dx, int begin, int end) const {
  if (end < 0) end = num_layers();
  Mat<T> d = dout;
  for (int l = end - 1; l >= begin; --l) {
    const Mat<T>& y = cache.outputs[l - begin];
    if (l + 1 < num_layers()) {
      if (hidden_ == Activation::kRelu) {
        d = (y.array() > T(0)).select(d, T(0));
      } else {
        d = (d.array() * (T(1) - y.array().square())).matrix();
      }
    }
    Eigen::Map<Mat<T>> gw(grad + weight_offset(l), layer_out(l), layer_in(l));
    gw.noalias() += d * cache.inputs[l - begin].transpose();
    if (bias_) {
      Eigen::Map<Vec<T>> gb(grad + bias_offset(l), layer_out(l));
      gb += d.rowwise().sum();
    }
    if (l > begin || dx != nullptr) {
      Eigen::Map<const Mat<T>> w(params + weight_offset(l), layer_out(l), layer_in(l));
      Mat<T> next = w.transpose() * d;
      d = std::move(next);
    }
  }
  if (dx != nullptr) *dx = std::move(d);
}

template <typename T>
void MlpLayout::Initialize(T* params, Rng& rng, double output_scale) const {
  for (int l = 0; l < num_layers(); ++l) {
    const int fan_in = layer_in(l), fan_out = layer_out(l);
    double sd = hidden_ == Activation::kRelu ? std::sqrt(2.0 / fan_in)
                                             : std::sqrt(2.0 / (fan_in + fan_out));
    if (l + 1 == num_layers()) sd = std::sqrt(1.0 / fan_in) * output_scale;
    T* w = params + weight_offset(l);
    for (int k = 0; k < fan_in * fan_out; ++k) w[k] = static_cast<T>(rng.Normal(0.0, sd));
    if (bias_) {
      T* b = params + bias_offset(l);
      for (int k = 0; k < fan_out; ++k) b[k] = T(0);
    }
  }
}

ConvLayout::ConvLayout(int in_channels, int height, int width, int out_channels, int kernel,
                       int stride)
    : in_channels_(in_channels),
      height_(height),
      width_(width),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride) {
  Require(in_channels > 0 && out_channels > 0 && kernel > 0 && stride > 0,
          ErrorCode::kContract, "conv sizes must be positive");
  Require(height >= kernel && width >= kernel, ErrorCode::kContract,
          "conv kernel larger than input");
  out_h_ = (height - kernel) / stride + 1;
  out_w_ = (width - kernel) / stride + 1;
}

template <typename T>
void ConvLayout::Im2Col(const T* sample, Mat<T>& cols) const {
  cols.resize(out_h_ * out_w_, patch_size());
  for (int c = 0; c < in_channels_; ++c) {
    const T* plane = sample + c * height_ * width_;
    for (int ki = 0; ki < kernel_; ++ki) {
      for (int kj = 0; kj < kernel_; ++kj) {
        T* dst = cols.col((c * kernel_ + ki) * kernel_ + kj).data();
        for (int oy = 0; oy < out_h_; ++oy) {
          const T* src = plane + (oy * stride_ + ki) * width_ + kj;
          for (int ox = 0; ox < out_w_; ++ox) dst[oy * out_w_ + ox] = src[ox * stride_];
        }
      }
    }
  }
}

template <typename T>
Mat<T> ConvLayout::Forward(const T* params, const Mat<T>& x, Cache<T>* cache) const {
  Require(x.rows() == input_size(), ErrorCode::kContract, "conv input size mismatch");
  const int batch = static_cast<int>(x.cols());
  Eigen::Map<const Mat<T>> w(params, out_channels_, patch_size());
  Eigen::Map<const Vec<T>> b(params + out_channels_ * patch_size(), out_channels_);
  Mat<T> scratch;
  if (cache != nullptr) cache->columns.resize(batch);
  Mat<T> out(output_size(), batch);
  for (int s = 0; s < batch; ++s) {
    Mat<T>& cols = cache != nullptr ? cache->columns[s] : scratch;
    Im2Col(x.col(s).data(), cols);
    // positions x channels, column-major, is the channel-major flattening.
    Eigen::Map<Mat<T>> y(out.col(s).data(), out_h_ * out_w_, out_channels_);
    y.noalias() = cols * w.transpose();
    y.rowwise() += b.transpose();
    y = y.cwiseMax(T(0));
  }
  if (cache != nullptr) cache->output = out;
  return out;
}

template <typename T>
void ConvLayout::Backward(const T* params, const Cache<T>& cache, const Mat<T>& dout, T* grad,
                          Mat<T>* dx) const {
  const int batch = static_cast<int>(dout.cols());
  const int positions = out_h_ * out_w_;
  Eigen::Map<const Mat<T>> w(params, out_channels_, patch_size());
  Eigen::Map<Mat<T>> gw(grad, out_channels_, patch_size());
  Eigen::Map<Vec<T>> gb(grad + out_channels_ * patch_size(), out_channels_);
  if (dx != nullptr) dx->setZero(input_size(), batch);
  for (int s = 0; s < batch; ++s) {
    Vec<T> masked = (cache.output.col(s).array() > T(0)).select(dout.col(s), T(0));
    Eigen::Map<const Mat<T>> dy(masked.data(), positions, out_channels_);
    gw.noalias() += dy.transpose() * cache.columns[s];
    gb += dy.colwise().sum().transpose();
    if (dx != nullptr) {
      const Mat<T> dcols = dy * w;
      T* plane0 = dx->col(s).data();
      for (int c = 0; c < in_channels_; ++c) {
        T* plane = plane0 + c * height_ * width_;
        for (int ki = 0; ki < kernel_; ++ki) {
          for (int kj = 0; kj < kernel_; ++kj) {
            const T* src = dcols.col((c * kernel_ + ki) * kernel_ + kj).data();
            for (int oy = 0; oy < out_h_; ++oy) {
              for (int ox = 0; ox < out_w_; ++ox) {
                plane[(oy * stride_ + ki) * width_ + ox * stride_ + kj] += src[oy * out_w_ + ox];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void ConvLayout::Initialize(T* params, Rng& rng) const {
  const double sd = std::sqrt(2.0 / patch_size());
  for (int k = 0; k < out_channels_ * patch_size(); ++k) {
    params[k] = static_cast<T>(rng.Normal(0.0, sd));
  }
  for (int k = 0; k < out_channels_; ++k) params[out_channels_ * patch_size() + k] = T(0);
}

template <typename T>
void Softmax(std::span<const T> logits, std::span<const std::uint8_t> mask, std::span<T> probs) {
  const std::size_t n = logits.size();
  Require(probs.size() == n && (mask.empty() || mask.size() == n), ErrorCode::kContract,
          "softmax size mismatch");
  auto legal = [&](std::size_t k) { return mask.empty() || mask[k] != 0; };
  T max_logit = -std::numeric_limits<T>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (legal(k)) max_logit = std::max(max_logit, logits[k]);
  }
  Require(std::isfinite(static_cast<double>(max_logit)), ErrorCode::kContract,
          "softmax needs a finite legal logit");
  T total = 0;
  for (std::size_t k = 0; k < n; ++k) {
    probs[k] = legal(k) ? std::exp(logits[k] - max_logit) : T(0);
    total += probs[k];
  }
  for (std::size_t k = 0; k < n; ++k) probs[k] /= total;
}

template <typename T>
int SampleCategorical(std::span<const T> probs, Rng& rng) {
  const double u = rng.Uniform();
  double acc = 0;
  int last = -1;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= T(0)) continue;
    acc += probs[k];
    last = static_cast<int>(k);
    if (u < acc) return last;
  }
  Require(last >= 0, ErrorCode::kContract, "no action has positive probability");
  return last;
}

template <typename T>
Optimizer<T>::Optimizer(OptimizerKind kind, int num_params, double learning_rate, double beta1,
                        double beta2, double epsilon)
    : kind_(kind), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  Require(learning_rate >= 0, ErrorCode::kConfig, "learning rate must be nonnegative");
  if (kind_ == OptimizerKind::kAdam) {
    m_ = Vec<T>::Zero(num_params);
    v_ = Vec<T>::Zero(num_params);
  }
}

template <typename T>
void Optimizer<T>::Step(Vec<T>& params, const Vec<T>& grad, T scale) {
  ++t_;
  if (kind_ == OptimizerKind::kSgd) {
    params.noalias() -= (static_cast<T>(lr_) * scale) * grad;
    return;
  }
  const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
  m_ = b1 * m_ + ((T(1) - b1) * scale) * grad;
  v_ = b2 * v_ + ((T(1) - b2) * scale * scale) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const T step = static_cast<T>(lr_ / c1);
  const T correction = static_cast<T>(1.0 / std::sqrt(c2));
  const T eps = static_cast<T>(eps_);
  params.array() -= step * m_.array() / (v_.array().sqrt() * correction + eps);
}

#define NEGOLAB_NN_INSTANTIATE(T)                                                         \
  template Mat<T> MlpLayout::Forward<T>(const T*, const Mat<T>&, Cache<T>*, int, int)     \
      const;                                                                              \
  template void MlpLayout::Backward<T>(const T*, const Cache<T>&, const Mat<T>&, T*,      \
                                       Mat<T>*, int, int) const;                          \
  template void MlpLayout::Initialize<T>(T*, Rng&, double) const;                         \
  template Mat<T> ConvLayout::Forward<T>(const T*, const Mat<T>&, Cache<T>*) const;       \
  template void ConvLayout::Backward<T>(const T*, const Cache<T>&, const Mat<T>&, T*,     \
                                        Mat<T>*) const;                                   \
  template void ConvLayout::Initialize<T>(T*, Rng&) const;                                \
  template void Softmax<T>(std::span<const T>, std::span<const std::uint8_t>,             \
                           std::span<T>);                                                 \
  template int SampleCategorical<T>(std::span<const T>, Rng&);                            \
  template class Optimizer<T>;

NEGOLAB_NN_INSTANTIATE(float)
NEGOLAB_NN_INSTANTIATE(double)

#undef NEGOLAB_NN_INSTANTIATE

}  // namespace negolab::nn
