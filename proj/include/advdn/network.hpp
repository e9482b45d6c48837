#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "advdn/kernels.hpp"
#include "advdn/rng.hpp"

namespace advdn {

/// Plain conv+ReLU stack predicting a residual (the noise field):
/// conv(C->W)+ReLU, (depth-2) x [conv(W->W)+ReLU], conv(W->C).
/// Parameters are one flat vector: per layer, weights [out][in][3][3] then bias.
class ConvStack {
 public:
  struct Layer {
    int in_channels;
    int out_channels;
    std::size_t weight_offset;
    std::size_t bias_offset;
    bool relu;
  };

  template <typename T>
  struct Trace {
    kernels::Tensor<T> input;
    std::vector<kernels::Tensor<T>> outputs;  // per layer, after ReLU where applied
  };

  ConvStack(int channels, int depth, int width);

  std::size_t parameter_count() const { return parameter_count_; }
  const std::vector<Layer>& layers() const { return layers_; }
  int channels() const { return channels_; }

  /// He-normal weights (std sqrt(2 / fan_in)), zero biases.
  void initialize(std::span<float> params, Rng& rng) const;

  template <typename T>
  kernels::Tensor<T> forward(std::span<const T> params, kernels::Tensor<T> input,
                             Trace<T>* trace = nullptr) const;

  /// Back-propagates grad_output (gradient w.r.t. the network output) through
  /// a recorded forward pass. grad_params may be empty; grad_input may be null.
  template <typename T>
  void backward(std::span<const T> params, const Trace<T>& trace, kernels::Tensor<T> grad_output,
                std::span<T> grad_params, kernels::Tensor<T>* grad_input) const;

 private:
  int channels_;
  std::vector<Layer> layers_;
  std::size_t parameter_count_ = 0;
};

}  // namespace advdn
