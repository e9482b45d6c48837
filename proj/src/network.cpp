#include "advdn/network.hpp"

#include <cmath>

#include "advdn/errors.hpp"

namespace advdn {

ConvStack::ConvStack(int channels, int depth, int width) : channels_(channels) {
  if (depth < 2 || width < 1 || channels < 1)
    throw ParameterError("conv stack needs depth >= 2 and positive widths");
  std::size_t offset = 0;
  for (int i = 0; i < depth; ++i) {
    Layer l{};
    l.in_channels = i == 0 ? channels : width;
    l.out_channels = i == depth - 1 ? channels : width;
    l.relu = i != depth - 1;
    l.weight_offset = offset;
    offset += kernels::conv3x3_weight_count(l.in_channels, l.out_channels);
    l.bias_offset = offset;
    offset += l.out_channels;
    layers_.push_back(l);
  }
  parameter_count_ = offset;
}

void ConvStack::initialize(std::span<float> params, Rng& rng) const {
  if (params.size() != parameter_count_) throw ParameterError("parameter vector has wrong length");
  for (const auto& l : layers_) {
    const double stddev = std::sqrt(2.0 / (9.0 * l.in_channels));
    const std::size_t nw = kernels::conv3x3_weight_count(l.in_channels, l.out_channels);
    for (std::size_t i = 0; i < nw; ++i)
      params[l.weight_offset + i] = static_cast<float>(stddev * rng.normal());
    for (int i = 0; i < l.out_channels; ++i) params[l.bias_offset + i] = 0.0f;
  }
}

template <typename T>
kernels::Tensor<T> ConvStack::forward(std::span<const T> params, kernels::Tensor<T> input,
                                      Trace<T>* trace) const {
  if (params.size() != parameter_count_) throw ParameterError("parameter vector has wrong length");
  if (input.channels != channels_) throw ParameterError("input channel count mismatch");
  kernels::Tensor<T> current = std::move(input);
  if (trace) {
    trace->input = current;
    trace->outputs.resize(layers_.size());
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    kernels::Tensor<T> out;
    kernels::conv3x3_forward<T>(
        current, params.subspan(l.weight_offset, kernels::conv3x3_weight_count(l.in_channels, l.out_channels)),
        params.subspan(l.bias_offset, l.out_channels), l.out_channels, out);
    if (l.relu) kernels::relu_inplace(out);
    if (trace) trace->outputs[i] = out;
    current = std::move(out);
  }
  return current;
}

template <typename T>
void ConvStack::backward(std::span<const T> params, const Trace<T>& trace,
                         kernels::Tensor<T> grad_output, std::span<T> grad_params,
                         kernels::Tensor<T>* grad_input) const {
  if (!grad_params.empty() && grad_params.size() != parameter_count_)
    throw ParameterError("gradient vector has wrong length");
  kernels::Tensor<T> g = std::move(grad_output);
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& l = layers_[k];
    if (l.relu) kernels::relu_backward_inplace(trace.outputs[k], g);
    const auto& layer_input = k == 0 ? trace.input : trace.outputs[k - 1];
    const std::size_t nw = kernels::conv3x3_weight_count(l.in_channels, l.out_channels);
    if (!grad_params.empty())
      kernels::conv3x3_backward_params<T>(layer_input, g, grad_params.subspan(l.weight_offset, nw),
                                          grad_params.subspan(l.bias_offset, l.out_channels));
    if (k == 0 && grad_input == nullptr) break;
    kernels::Tensor<T> prev;
    kernels::conv3x3_backward_input<T>(g, params.subspan(l.weight_offset, nw), l.in_channels, prev);
    g = std::move(prev);
  }
  if (grad_input) *grad_input = std::move(g);
}

template kernels::Tensor<float> ConvStack::forward<float>(std::span<const float>, kernels::Tensor<float>,
                                                          Trace<float>*) const;
template kernels::Tensor<double> ConvStack::forward<double>(std::span<const double>, kernels::Tensor<double>,
                                                            Trace<double>*) const;
template void ConvStack::backward<float>(std::span<const float>, const Trace<float>&, kernels::Tensor<float>,
                                         std::span<float>, kernels::Tensor<float>*) const;
template void ConvStack::backward<double>(std::span<const double>, const Trace<double>&,
                                          kernels::Tensor<double>, std::span<double>,
                                          kernels::Tensor<double>*) const;

}  // namespace advdn
