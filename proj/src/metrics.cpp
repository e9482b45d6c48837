#include "advdn/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "advdn/errors.hpp"

namespace advdn {
namespace {

std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> taps{};
  double total = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    taps[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Separable 'valid' filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::array<double, kSsimWindow>& taps) {
  const int oh = h - kSsimWindow + 1, ow = w - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += taps[k] * plane[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double psnr(const Image& x, const Image& y) {
  require_same_shape(x.shape(), y.shape(), "psnr");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  if (acc == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = acc / static_cast<double>(x.size());
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& x, const Image& y) {
  require_same_shape(x.shape(), y.shape(), "ssim");
  const int h = x.height(), w = x.width();
  if (h < kSsimWindow || w < kSsimWindow)
    throw ParameterError("ssim needs images of at least 11x11, got " + to_string(x.shape()));
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const auto taps = gaussian_taps();
  const std::size_t plane = x.shape().plane();

  double total = 0.0;
  for (int c = 0; c < x.channels(); ++c) {
    std::vector<double> a(plane), b(plane), aa(plane), bb(plane), ab(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      a[i] = x[c * plane + i];
      b[i] = y[c * plane + i];
      aa[i] = a[i] * a[i];
      bb[i] = b[i] * b[i];
      ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a, h, w, taps);
    const auto mu_b = filter_valid(b, h, w, taps);
    const auto m_aa = filter_valid(aa, h, w, taps);
    const auto m_bb = filter_valid(bb, h, w, taps);
    const auto m_ab = filter_valid(ab, h, w, taps);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double var_a = m_aa[i] - mu_a[i] * mu_a[i];
      const double var_b = m_bb[i] - mu_b[i] * mu_b[i];
      const double cov = m_ab[i] - mu_a[i] * mu_b[i];
      const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
      const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2);
      acc += num / den;
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / x.channels();
}

double mae(const Image& x, const Image& y) {
  require_same_shape(x.shape(), y.shape(), "mae");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(x[i] - y[i]);
  return 255.0 * acc / static_cast<double>(x.size());
}

double wasserstein_to_gaussian(const NoiseField& n, double sigma255) {
  if (n.size() == 0) throw ParameterError("wasserstein_to_gaussian: empty field");
  if (!(sigma255 > 0.0)) throw ParameterError("wasserstein_to_gaussian: sigma must be positive");
  std::vector<double> sorted(n.values().begin(), n.values().end());
  std::sort(sorted.begin(), sorted.end());
  const boost::math::normal_distribution<double> ref(0.0, sigma255 / 255.0);
  const double count = static_cast<double>(sorted.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double q = boost::math::quantile(ref, (static_cast<double>(i) + 0.5) / count);
    acc += std::abs(sorted[i] - q);
  }
  return acc / count;
}

bool MetricRecord::psnr_infinite() const { return std::isinf(psnr); }

MetricRecord evaluate(const Image& reference, const Image& candidate) {
  return {reference.id(), candidate.id(), psnr(candidate, reference), ssim(candidate, reference),
          mae(candidate, reference)};
}

void to_json(nlohmann::json& j, const MetricRecord& r) {
  j = {{"reference_id", r.reference_id},
       {"candidate_id", r.candidate_id},
       {"psnr", r.psnr_infinite() ? nlohmann::json("inf") : nlohmann::json(r.psnr)},
       {"psnr_infinite", r.psnr_infinite()},
       {"ssim", r.ssim},
       {"mae", r.mae}};
}

void from_json(const nlohmann::json& j, MetricRecord& r) {
  r.reference_id = j.at("reference_id").get<std::string>();
  r.candidate_id = j.at("candidate_id").get<std::string>();
  r.psnr = j.value("psnr_infinite", false) ? std::numeric_limits<double>::infinity()
                                           : j.at("psnr").get<double>();
  r.ssim = j.at("ssim").get<double>();
  r.mae = j.at("mae").get<double>();
}

std::string format_fixed(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  // Avoid "-0.0000" so identical runs that differ only in the sign of a
  // vanishing value still print identically.
  if (std::string_view(buf) == "-0.0000") return "0.0000";
  return buf;
}

std::string to_csv_row(const MetricRecord& r) {
  return r.reference_id + "," + r.candidate_id + "," + format_fixed(r.psnr) + "," +
         format_fixed(r.ssim) + "," + format_fixed(r.mae);
}

}  // namespace advdn
