#include "advdn/kernels.hpp"

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

#include <algorithm>

#include "advdn/errors.hpp"

namespace advdn::kernels {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMatrix<T>>;

// GEMMs run over fixed-width column chunks, one chunk per task, so the
// summation order never depends on the thread count.
constexpr Eigen::Index kChunk = 1024;

inline Eigen::Index chunk_count(Eigen::Index cols) { return (cols + kChunk - 1) / kChunk; }

template <typename T>
std::vector<T>& scratch_cols() {
  thread_local std::vector<T> buf;
  return buf;
}

// Column matrix of shape (C*9) x (B*H*W); row (c, ky, kx) holds the input
// plane of channel c shifted by (ky - 1, kx - 1) with zero fill.
template <typename T>
void im2col(const Tensor<T>& in, std::vector<T>& cols) {
  const int h = in.height, w = in.width;
  const std::size_t plane = in.plane();
  const std::size_t image = static_cast<std::size_t>(h) * w;
  const int rows = in.channels * 9;
  cols.resize(static_cast<std::size_t>(rows) * plane);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const int c = r / 9, ky = (r % 9) / 3, kx = r % 3;
    const T* src = in.channel(c);
    T* dst = cols.data() + static_cast<std::size_t>(r) * plane;
    for (int b = 0; b < in.batch; ++b) {
      const T* s = src + b * image;
      T* d = dst + b * image;
      for (int y = 0; y < h; ++y) {
        const int sy = y + ky - 1;
        T* drow = d + static_cast<std::size_t>(y) * w;
        if (sy < 0 || sy >= h) {
          std::fill(drow, drow + w, T(0));
          continue;
        }
        const T* srow = s + static_cast<std::size_t>(sy) * w;
        const int x0 = std::max(0, 1 - kx), x1 = std::min(w, w + 1 - kx);
        for (int x = 0; x < x0; ++x) drow[x] = T(0);
        for (int x = x0; x < x1; ++x) drow[x] = srow[x + kx - 1];
        for (int x = x1; x < w; ++x) drow[x] = T(0);
      }
    }
  }
}

// Inverse scatter of im2col: grad_in(c) = sum over (ky, kx) of shifted rows.
template <typename T>
void col2im(const std::vector<T>& cols, Tensor<T>& grad_in) {
  const int h = grad_in.height, w = grad_in.width;
  const std::size_t plane = grad_in.plane();
  const std::size_t image = static_cast<std::size_t>(h) * w;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < grad_in.channels; ++c) {
    T* dst = grad_in.channel(c);
    std::fill(dst, dst + plane, T(0));
    for (int k = 0; k < 9; ++k) {
      const int ky = k / 3, kx = k % 3;
      const T* src = cols.data() + static_cast<std::size_t>(c * 9 + k) * plane;
      for (int b = 0; b < grad_in.batch; ++b) {
        const T* s = src + b * image;
        T* d = dst + b * image;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const T* srow = s + static_cast<std::size_t>(y) * w;
          T* drow = d + static_cast<std::size_t>(sy) * w;
          const int x0 = std::max(0, 1 - kx), x1 = std::min(w, w + 1 - kx);
          for (int x = x0; x < x1; ++x) drow[x + kx - 1] += srow[x];
        }
      }
    }
  }
}

template <typename T>
void check_weights(std::size_t got, int in_c, int out_c) {
  if (got != conv3x3_weight_count(in_c, out_c))
    throw ParameterError("conv3x3: weight span has wrong length");
}

}  // namespace

template <typename T>
void conv3x3_forward(const Tensor<T>& in, std::span<const T> weights, std::span<const T> bias,
                     int out_channels, Tensor<T>& out) {
  check_weights<T>(weights.size(), in.channels, out_channels);
  if (bias.size() != static_cast<std::size_t>(out_channels))
    throw ParameterError("conv3x3: bias span has wrong length");
  if (out.channels != out_channels || !out.same_geometry(in))
    out = Tensor<T>(out_channels, in.batch, in.height, in.width);
  auto& cols = scratch_cols<T>();
  im2col(in, cols);
  const auto p = static_cast<Eigen::Index>(in.plane());
  const auto k = static_cast<Eigen::Index>(in.channels) * 9;
  ConstMap<T> w(weights.data(), out_channels, k);
  ConstMap<T> c(cols.data(), k, p);
  MutMap<T> o(out.data.data(), out_channels, p);
  const Eigen::Index n = chunk_count(p);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index start = j * kChunk, width = std::min(kChunk, p - start);
    o.middleCols(start, width).noalias() = w * c.middleCols(start, width);
  }
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < out_channels; ++oc) {
    T* row = out.channel(oc);
    const T b = bias[oc];
    for (Eigen::Index i = 0; i < p; ++i) row[i] += b;
  }
}

template <typename T>
void conv3x3_backward_input(const Tensor<T>& grad_out, std::span<const T> weights,
                            int in_channels, Tensor<T>& grad_in) {
  check_weights<T>(weights.size(), in_channels, grad_out.channels);
  if (grad_in.channels != in_channels || !grad_in.same_geometry(grad_out))
    grad_in = Tensor<T>(in_channels, grad_out.batch, grad_out.height, grad_out.width);
  auto& cols = scratch_cols<T>();
  const auto p = static_cast<Eigen::Index>(grad_out.plane());
  const auto k = static_cast<Eigen::Index>(in_channels) * 9;
  cols.resize(static_cast<std::size_t>(k) * p);
  ConstMap<T> w(weights.data(), grad_out.channels, k);
  ConstMap<T> g(grad_out.data.data(), grad_out.channels, p);
  MutMap<T> c(cols.data(), k, p);
  const Eigen::Index n = chunk_count(p);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index start = j * kChunk, width = std::min(kChunk, p - start);
    c.middleCols(start, width).noalias() = w.transpose() * g.middleCols(start, width);
  }
  col2im(cols, grad_in);
}

template <typename T>
void conv3x3_backward_params(const Tensor<T>& in, const Tensor<T>& grad_out,
                             std::span<T> grad_weights, std::span<T> grad_bias) {
  check_weights<T>(grad_weights.size(), in.channels, grad_out.channels);
  if (grad_bias.size() != static_cast<std::size_t>(grad_out.channels) || !in.same_geometry(grad_out))
    throw ParameterError("conv3x3_backward_params: geometry mismatch");
  auto& cols = scratch_cols<T>();
  im2col(in, cols);
  const auto p = static_cast<Eigen::Index>(in.plane());
  const auto k = static_cast<Eigen::Index>(in.channels) * 9;
  ConstMap<T> g(grad_out.data.data(), grad_out.channels, p);
  ConstMap<T> c(cols.data(), k, p);
  MutMap<T> gw(grad_weights.data(), grad_out.channels, k);
  const Eigen::Index n = chunk_count(p);
  std::vector<RowMatrix<T>> partial(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index start = j * kChunk, width = std::min(kChunk, p - start);
    partial[j].noalias() = g.middleCols(start, width) * c.middleCols(start, width).transpose();
  }
  gw.setZero();
  for (const auto& part : partial) gw += part;
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < grad_out.channels; ++oc) {
    const T* row = grad_out.channel(oc);
    T acc = 0;
    for (Eigen::Index i = 0; i < p; ++i) acc += row[i];
    grad_bias[oc] = acc;
  }
}

template <typename T>
void relu_inplace(Tensor<T>& t) {
  const auto n = static_cast<std::ptrdiff_t>(t.data.size());
  T* d = t.data.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) d[i] = d[i] > T(0) ? d[i] : T(0);
}

template <typename T>
void relu_backward_inplace(const Tensor<T>& activation, Tensor<T>& grad) {
  if (activation.data.size() != grad.data.size())
    throw ParameterError("relu_backward: size mismatch");
  const auto n = static_cast<std::ptrdiff_t>(grad.data.size());
  const T* a = activation.data.data();
  T* g = grad.data.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    if (!(a[i] > T(0))) g[i] = T(0);
}

namespace reference {

template <typename T>
void conv3x3_forward(const Tensor<T>& in, std::span<const T> weights, std::span<const T> bias,
                     int out_channels, Tensor<T>& out) {
  check_weights<T>(weights.size(), in.channels, out_channels);
  out = Tensor<T>(out_channels, in.batch, in.height, in.width);
  const int h = in.height, w = in.width;
  for (int oc = 0; oc < out_channels; ++oc)
    for (int b = 0; b < in.batch; ++b)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          T acc = bias[oc];
          for (int ic = 0; ic < in.channels; ++ic)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = y + ky - 1, sx = x + kx - 1;
                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                acc += weights[((static_cast<std::size_t>(oc) * in.channels + ic) * 3 + ky) * 3 + kx] *
                       in.data[((static_cast<std::size_t>(ic) * in.batch + b) * h + sy) * w + sx];
              }
          out.data[((static_cast<std::size_t>(oc) * in.batch + b) * h + y) * w + x] = acc;
        }
}

template <typename T>
void conv3x3_backward_input(const Tensor<T>& grad_out, std::span<const T> weights,
                            int in_channels, Tensor<T>& grad_in) {
  check_weights<T>(weights.size(), in_channels, grad_out.channels);
  grad_in = Tensor<T>(in_channels, grad_out.batch, grad_out.height, grad_out.width);
  const int h = grad_out.height, w = grad_out.width;
  for (int oc = 0; oc < grad_out.channels; ++oc)
    for (int b = 0; b < grad_out.batch; ++b)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const T g = grad_out.data[((static_cast<std::size_t>(oc) * grad_out.batch + b) * h + y) * w + x];
          for (int ic = 0; ic < in_channels; ++ic)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = y + ky - 1, sx = x + kx - 1;
                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                grad_in.data[((static_cast<std::size_t>(ic) * grad_out.batch + b) * h + sy) * w + sx] +=
                    weights[((static_cast<std::size_t>(oc) * in_channels + ic) * 3 + ky) * 3 + kx] * g;
              }
        }
}

template <typename T>
void conv3x3_backward_params(const Tensor<T>& in, const Tensor<T>& grad_out,
                             std::span<T> grad_weights, std::span<T> grad_bias) {
  check_weights<T>(grad_weights.size(), in.channels, grad_out.channels);
  std::fill(grad_weights.begin(), grad_weights.end(), T(0));
  std::fill(grad_bias.begin(), grad_bias.end(), T(0));
  const int h = in.height, w = in.width;
  for (int oc = 0; oc < grad_out.channels; ++oc)
    for (int b = 0; b < in.batch; ++b)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const T g = grad_out.data[((static_cast<std::size_t>(oc) * in.batch + b) * h + y) * w + x];
          grad_bias[oc] += g;
          for (int ic = 0; ic < in.channels; ++ic)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = y + ky - 1, sx = x + kx - 1;
                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                grad_weights[((static_cast<std::size_t>(oc) * in.channels + ic) * 3 + ky) * 3 + kx] +=
                    g * in.data[((static_cast<std::size_t>(ic) * in.batch + b) * h + sy) * w + sx];
              }
        }
}

template <typename T>
void relu_inplace(Tensor<T>& t) {
  for (T& v : t.data) v = v > T(0) ? v : T(0);
}

template <typename T>
void relu_backward_inplace(const Tensor<T>& activation, Tensor<T>& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    if (!(activation.data[i] > T(0))) grad.data[i] = T(0);
}

}  // namespace reference

#define ADVDN_INSTANTIATE_KERNELS(NS, T)                                                        \
  template void NS::conv3x3_forward<T>(const Tensor<T>&, std::span<const T>, std::span<const T>, \
                                       int, Tensor<T>&);                                         \
  template void NS::conv3x3_backward_input<T>(const Tensor<T>&, std::span<const T>, int,         \
                                              Tensor<T>&);                                       \
  template void NS::conv3x3_backward_params<T>(const Tensor<T>&, const Tensor<T>&,               \
                                               std::span<T>, std::span<T>);                      \
  template void NS::relu_inplace<T>(Tensor<T>&);                                                 \
  template void NS::relu_backward_inplace<T>(const Tensor<T>&, Tensor<T>&);

ADVDN_INSTANTIATE_KERNELS(kernels, float)
ADVDN_INSTANTIATE_KERNELS(kernels, double)
ADVDN_INSTANTIATE_KERNELS(kernels::reference, float)
ADVDN_INSTANTIATE_KERNELS(kernels::reference, double)

#undef ADVDN_INSTANTIATE_KERNELS

}  // namespace advdn::kernels
