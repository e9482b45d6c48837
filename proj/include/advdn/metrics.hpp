#pragma once

#include <string>

#include <json.hpp>

#include "advdn/image.hpp"

namespace advdn {

/// PSNR in dB with peak 1.0: 10 log10(1 / MSE). Identical images give +inf.
double psnr(const Image& x, const Image& y);

/// Mean SSIM over all fully contained 11x11 Gaussian windows (std 1.5),
/// k1 = 0.01, k2 = 0.03, dynamic range 1. Channels are averaged.
double ssim(const Image& x, const Image& y);

/// 255 * mean |x - y|.
double mae(const Image& x, const Image& y);

/// Wasserstein-1 distance between the empirical marginal of n's values and
/// N(0, (sigma/255)^2): mean |n_(i) - q_i| with sorted samples n_(i) and
/// Gaussian quantiles q_i at probabilities (i + 0.5) / N.
double wasserstein_to_gaussian(const NoiseField& n, double sigma255);

inline constexpr int kSsimWindow = 11;

struct MetricRecord {
  std::string reference_id;
  std::string candidate_id;
  double psnr = 0.0;
  double ssim = 0.0;
  double mae = 0.0;

  bool psnr_infinite() const;
};

MetricRecord evaluate(const Image& reference, const Image& candidate);

void to_json(nlohmann::json& j, const MetricRecord& r);
void from_json(const nlohmann::json& j, MetricRecord& r);

/// Fixed four-decimal rendering used in every CSV; +inf prints as "inf".
std::string format_fixed(double v);

inline constexpr const char* kMetricCsvHeader = "reference_id,candidate_id,psnr,ssim,mae";
std::string to_csv_row(const MetricRecord& r);

}  // namespace advdn
