#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "advdn/denoiser.hpp"
#include "advdn/image.hpp"

namespace advdn {

/// Orthonormal basis of the plane spanned by n and v.
struct CircleFrame {
  NoiseField n_hat;
  NoiseField v_perp;
  double radius = 0.0;  // ||v||_2
};

/// Throws GeometryError when v is (numerically) parallel to n or either is zero.
CircleFrame circle_frame(const NoiseField& n, const NoiseField& v);

struct CircleSample {
  double theta = 0.0;
  Image s;            // clipped to [0, 1]
  NoiseField offset;  // s - (u + n) before clipping
};

/// theta_k = 2 pi k / N; s = (n_hat sin(theta) + v_perp cos(theta)) ||v|| + n + u.
std::vector<CircleSample> circle_samples(const Image& u, const NoiseField& n, const NoiseField& v, int count);
CircleSample circle_sample_at(const Image& u, const NoiseField& n, const CircleFrame& frame, double theta);

struct AngleRecord {
  double theta = 0.0;
  double psnr_drop = 0.0;
  double ssim_drop = 0.0;
  double mae_increase = 0.0;
  bool in_arc = false;
};

struct SweepResult {
  std::string model_id;
  std::string image_id;
  int count = 0;
  double threshold = 0.5;
  std::vector<AngleRecord> records;
  std::vector<int> arc;  // indices into records, ascending

  bool arc_empty() const { return arc.empty(); }
  /// One connected run of angle indices, wrapping around 2 pi.
  bool arc_contiguous() const;
};

/// Drops are relative to D(clip(u + n)).
SweepResult sweep_circle(const TrainedDenoiser& d, const Image& u, const NoiseField& n, const NoiseField& v,
                         int count, double threshold = 0.5);

/// Rebuilds arc membership from the per-angle records.
std::vector<int> arc_from_records(const std::vector<AngleRecord>& records, double threshold);
bool indices_contiguous(const std::vector<int>& idx, int count);

/// Intersection over union of two arcs on the same grid; both empty gives 1.
double arc_overlap(const SweepResult& a, const SweepResult& b);

void to_json(nlohmann::json& j, const SweepResult& r);
void from_json(const nlohmann::json& j, SweepResult& r);
inline constexpr const char* kSweepCsvHeader = "theta_degrees,psnr_drop,ssim_drop,mae_increase,in_arc";
std::string sweep_to_csv(const SweepResult& r);

struct ProbePoint {
  double lambda = 0.0;
  double psnr = 0.0;
  double psnr_drop = 0.0;
};

/// Evaluates D(clip(lambda s1 + (1 - lambda) s2)) for each lambda. Drops are
/// relative to PSNR(D(baseline), y); baseline is usually the Gaussian observation.
std::vector<ProbePoint> linear_combination_probe(const TrainedDenoiser& d, const Image& s1, const Image& s2,
                                                 const Image& y, const std::vector<double>& lambdas,
                                                 const Image& baseline);

std::vector<double> interior_lambdas();  // 0.1, 0.2, ..., 0.9

}  // namespace advdn
