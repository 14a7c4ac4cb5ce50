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


#ifndef NEGOLAB_NN_H_
#define NEGOLAB_NN_H_

// Small dense and convolutional layers over flat parameter buffers. A network
// is a layout (shapes and offsets) plus a caller-owned parameter vector, which
// keeps optimizers, eligibility traces and checkpoints uniform. Batches are
// column-major: one sample per column. Instantiated for float and double.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "negolab/rng.h"

namespace negolab::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class Activation { kRelu, kTanh };

// Fully connected stack. Hidden layers use `hidden`; the last layer is linear.
// Per layer the buffer holds W (out x in, column-major) then b (out).
class MlpLayout {
 public:
  MlpLayout() = default;
  MlpLayout(std::vector<int> sizes, Activation hidden, bool bias = true);

  int num_params() const { return num_params_; }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int layer_in(int l) const { return sizes_[l]; }
  int layer_out(int l) const { return sizes_[l + 1]; }
  int weight_offset(int l) const { return offsets_[l]; }
  int bias_offset(int l) const { return offsets_[l] + sizes_[l] * sizes_[l + 1]; }
  bool bias() const { return bias_; }
  Activation hidden() const { return hidden_; }
  const std::vector<int>& sizes() const { return sizes_; }

  template <typename T>
  struct Cache {
    std::vector<Mat<T>> inputs;  // input of each evaluated layer
    std::vector<Mat<T>> outputs;
  };

  // Evaluates layers [begin, end). The activation follows every layer except
  // the network's last one.
  template <typename T>
  Mat<T> Forward(const T* params, const Mat<T>& x, Cache<T>* cache, int begin = 0,
                 int end = -1) const;

  // Accumulates dLoss/dparams into `grad` for layers [begin, end) evaluated
  // with `cache`; writes dLoss/dx when `dx` is given.
  template <typename T>
  void Backward(const T* params, const Cache<T>& cache, const Mat<T>& dout, T* grad,
                Mat<T>* dx, int begin = 0, int end = -1) const;

  // He-normal hidden weights (Glorot for tanh), output weights scaled by
  // `output_scale`, zero biases.
  template <typename T>
  void Initialize(T* params, Rng& rng, double output_scale = 1.0) const;

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  Activation hidden_ = Activation::kRelu;
  bool bias_ = true;
  int num_params_ = 0;
};

// Valid 2-d convolution with ReLU. Input per sample is channels x height x
// width flattened channel-major; output is out_channels x out_h x out_w.
class ConvLayout {
 public:
  ConvLayout() = default;
  ConvLayout(int in_channels, int height, int width, int out_channels, int kernel,
             int stride);

  int num_params() const { return out_channels_ * (patch_size() + 1); }
  int input_size() const { return in_channels_ * height_ * width_; }
  int output_size() const { return out_channels_ * out_h_ * out_w_; }
  int patch_size() const { return in_channels_ * kernel_ * kernel_; }
  int out_h() const { return out_h_; }
  int out_w() const { return out_w_; }
  int out_channels() const { return out_channels_; }

  template <typename T>
  struct Cache {
    std::vector<Mat<T>> columns;  // per sample, (out_h * out_w) x patch_size
    Mat<T> output;
  };

  template <typename T>
  Mat<T> Forward(const T* params, const Mat<T>& x, Cache<T>* cache) const;
  template <typename T>
  void Backward(const T* params, const Cache<T>& cache, const Mat<T>& dout, T* grad,
                Mat<T>* dx) const;
  template <typename T>
  void Initialize(T* params, Rng& rng) const;

 private:
  template <typename T>
  void Im2Col(const T* sample, Mat<T>& cols) const;

  int in_channels_ = 0, height_ = 0, width_ = 0;
  int out_channels_ = 0, kernel_ = 0, stride_ = 1;
  int out_h_ = 0, out_w_ = 0;
};

// Masked softmax over logits. Masked entries get probability exactly 0; an
// empty mask means every action is legal.
template <typename T>
void Softmax(std::span<const T> logits, std::span<const std::uint8_t> mask, std::span<T> probs);

// Samples an index from a probability vector.
template <typename T>
int SampleCategorical(std::span<const T> probs, Rng& rng);

enum class OptimizerKind { kAdam, kSgd };

// Adam with bias correction, or plain gradient descent. Step() descends.
template <typename T>
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, int num_params, double learning_rate, double beta1 = 0.9,
            double beta2 = 0.999, double epsilon = 1e-8);

  // Descends along scale * grad.
  void Step(Vec<T>& params, const Vec<T>& grad, T scale = T(1));

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  long steps() const { return t_; }
  Vec<T>& first_moment() { return m_; }
  Vec<T>& second_moment() { return v_; }
  const Vec<T>& first_moment() const { return m_; }
  const Vec<T>& second_moment() const { return v_; }
  void set_steps(long t) { t_ = t; }

 private:
  OptimizerKind kind_ = OptimizerKind::kAdam;
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  Vec<T> m_, v_;
};

template <typename T>
bool AllFinite(const Vec<T>& v) {
  return v.allFinite();
}

}  // namespace negolab::nn

#endif  // NEGOLAB_NN_H_
