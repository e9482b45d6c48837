#pragma once

// Straightforward re-implementations used as independent references in tests.

#include <cmath>
#include <limits>
#include <vector>

#include "advdn/image.hpp"

namespace oracle {

inline double psnr(const advdn::Image& a, const advdn::Image& b) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) sum += static_cast<long double>(a[i] - b[i]) * (a[i] - b[i]);
  if (sum == 0.0L) return std::numeric_limits<double>::infinity();
  return static_cast<double>(10.0L * std::log10(static_cast<long double>(a.size()) / sum));
}

inline double mae(const advdn::Image& a, const advdn::Image& b) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::fabs(static_cast<long double>(a[i]) - b[i]);
  return static_cast<double>(255.0L * sum / a.size());
}

// Direct 2-D 11x11 windowed SSIM, no separable filtering.
inline double ssim(const advdn::Image& a, const advdn::Image& b) {
  const int win = 11, half = 5;
  double w[11][11];
  double total = 0.0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      const double di = i - half, dj = j - half;
      w[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * 2.25));
      total += w[i][j];
    }
  for (auto& row : w)
    for (double& v : row) v /= total;
  const double c1 = 1e-4, c2 = 9e-4;
  const int h = a.height(), wd = a.width();
  double acc_all = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    double acc = 0.0;
    int count = 0;
    for (int y = 0; y + win <= h; ++y)
      for (int x = 0; x + win <= wd; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const double p = a.at(y + i, x + j, c), q = b.at(y + i, x + j, c), k = w[i][j];
            ma += k * p;
            mb += k * q;
            saa += k * p * p;
            sbb += k * q * q;
            sab += k * p * q;
          }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    acc_all += acc / count;
  }
  return acc_all / a.channels();
}

inline double sample_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / v.size());
}

}  // namespace oracle
