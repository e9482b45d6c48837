#include "advdn/tv.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "advdn/errors.hpp"

namespace advdn {
namespace {

// Backward-difference divergence, adjoint of the forward-difference gradient.
void divergence(const std::vector<double>& px, const std::vector<double>& py, int h, int w,
                std::vector<double>& div) {
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double d = 0.0;
      if (x < w - 1) d += px[i];
      if (x > 0) d -= px[i - 1];
      if (y < h - 1) d += py[i];
      if (y > 0) d -= py[i - w];
      div[i] = d;
    }
}

}  // namespace

Image tv_denoise(const Image& x, double lambda, int iterations) {
  if (!(lambda > 0.0)) throw ParameterError("tv_denoise: lambda must be positive");
  if (iterations < 1) throw ParameterError("tv_denoise: iterations must be >= 1");
  // ||u - f||^2 + lambda TV(u) == lambda * (||u - f||^2 / (2 theta) + TV(u)), theta = lambda / 2.
  const double theta = lambda / 2.0;
  constexpr double tau = 0.125;
  const int h = x.height(), w = x.width();
  const std::size_t plane = x.shape().plane();
  std::vector<double> out(x.size());

  for (int c = 0; c < x.channels(); ++c) {
    const double* f = x.pixels().data() + c * plane;
    std::vector<double> px(plane, 0.0), py(plane, 0.0), div(plane, 0.0), term(plane);
    for (int it = 0; it < iterations; ++it) {
      divergence(px, py, h, w, div);
#pragma omp parallel for schedule(static)
      for (int i = 0; i < static_cast<int>(plane); ++i) term[i] = div[i] - f[i] / theta;
#pragma omp parallel for schedule(static)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          const std::size_t i = static_cast<std::size_t>(y) * w + xx;
          const double gx = xx < w - 1 ? term[i + 1] - term[i] : 0.0;
          const double gy = y < h - 1 ? term[i + w] - term[i] : 0.0;
          const double norm = 1.0 + tau * std::sqrt(gx * gx + gy * gy);
          px[i] = (px[i] + tau * gx) / norm;
          py[i] = (py[i] + tau * gy) / norm;
        }
    }
    divergence(px, py, h, w, div);
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = std::clamp(f[i] - theta * div[i], 0.0, 1.0);
  }
  return Image(x.shape(), std::move(out), x.id());
}

}  // namespace advdn
