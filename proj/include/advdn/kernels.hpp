#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace advdn::kernels {

/// Activation tensor in channel-major layout: index = ((c * B + b) * H + y) * W + x.
/// Every channel is one contiguous B*H*W plane, so a convolution over the whole
/// batch is a single GEMM.
template <typename T>
struct Tensor {
  int channels = 0;
  int batch = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c, int b, int h, int w)
      : channels(c), batch(b), height(h), width(w),
        data(static_cast<std::size_t>(c) * b * h * w, T(0)) {}

  /// Elements per channel plane.
  std::size_t plane() const { return static_cast<std::size_t>(batch) * height * width; }
  T* channel(int c) { return data.data() + c * plane(); }
  const T* channel(int c) const { return data.data() + c * plane(); }
  bool same_geometry(const Tensor& o) const {
    return batch == o.batch && height == o.height && width == o.width;
  }
};

/// Weights of a 3x3 convolution, layout [out][in][ky][kx].
inline constexpr std::size_t conv3x3_weight_count(int in_channels, int out_channels) {
  return static_cast<std::size_t>(in_channels) * out_channels * 9;
}

// OpenMP-parallel kernels. All are 3x3, unit stride, zero padding 1, and
// deterministic for any thread count: no floating-point reduction is split
// across threads.

template <typename T>
void conv3x3_forward(const Tensor<T>& in, std::span<const T> weights, std::span<const T> bias,
                     int out_channels, Tensor<T>& out);

/// grad_in = conv^T(grad_out). Overwrites grad_in.
template <typename T>
void conv3x3_backward_input(const Tensor<T>& grad_out, std::span<const T> weights,
                            int in_channels, Tensor<T>& grad_in);

/// Overwrites grad_weights and grad_bias with the batch-summed parameter gradient.
template <typename T>
void conv3x3_backward_params(const Tensor<T>& in, const Tensor<T>& grad_out,
                             std::span<T> grad_weights, std::span<T> grad_bias);

template <typename T>
void relu_inplace(Tensor<T>& t);

/// grad *= (activation > 0), where activation is the post-ReLU output.
template <typename T>
void relu_backward_inplace(const Tensor<T>& activation, Tensor<T>& grad);

/// Serial loop-nest implementations of the same kernels, kept as the
/// correctness oracle for the parallel versions and as the benchmark baseline.
namespace reference {

template <typename T>
void conv3x3_forward(const Tensor<T>& in, std::span<const T> weights, std::span<const T> bias,
                     int out_channels, Tensor<T>& out);

template <typename T>
void conv3x3_backward_input(const Tensor<T>& grad_out, std::span<const T> weights,
                            int in_channels, Tensor<T>& grad_in);

template <typename T>
void conv3x3_backward_params(const Tensor<T>& in, const Tensor<T>& grad_out,
                             std::span<T> grad_weights, std::span<T> grad_bias);

template <typename T>
void relu_inplace(Tensor<T>& t);

template <typename T>
void relu_backward_inplace(const Tensor<T>& activation, Tensor<T>& grad);

}  // namespace reference

}  // namespace advdn::kernels
