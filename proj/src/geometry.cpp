#include "advdn/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "advdn/errors.hpp"
#include "advdn/metrics.hpp"

namespace advdn {

CircleFrame circle_frame(const NoiseField& n, const NoiseField& v) {
  require_same_shape(n.shape(), v.shape(), "circle_frame");
  const double n_norm = l2_norm(n);
  const double v_norm = l2_norm(v);
  if (!(n_norm > 0.0)) throw GeometryError("noise field has zero norm");
  if (!(v_norm > 0.0)) throw GeometryError("perturbation has zero norm");
  CircleFrame f;
  f.n_hat = (1.0 / n_norm) * n;
  f.v_perp = v - dot(v, f.n_hat) * f.n_hat;
  const double perp = l2_norm(f.v_perp);
  if (perp < 1e-9) throw GeometryError("perturbation is parallel to the noise direction");
  f.v_perp *= 1.0 / perp;
  f.radius = v_norm;
  return f;
}

CircleSample circle_sample_at(const Image& u, const NoiseField& n, const CircleFrame& frame, double theta) {
  const double a = std::sin(theta) * frame.radius;
  const double b = std::cos(theta) * frame.radius;
  CircleSample cs;
  cs.theta = theta;
  cs.offset = NoiseField(u.shape());
  NoiseField total(u.shape());
  for (std::size_t i = 0; i < u.size(); ++i) {
    cs.offset[i] = frame.n_hat[i] * a + frame.v_perp[i] * b;
    total[i] = cs.offset[i] + n[i];
  }
  cs.s = compose(u, total, u.id());
  return cs;
}

std::vector<CircleSample> circle_samples(const Image& u, const NoiseField& n, const NoiseField& v, int count) {
  if (count < 1) throw ParameterError("circle sample count must be >= 1");
  require_same_shape(u.shape(), n.shape(), "circle_samples");
  const CircleFrame frame = circle_frame(n, v);
  std::vector<CircleSample> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k)
    out.push_back(circle_sample_at(u, n, frame, 2.0 * std::numbers::pi * k / count));
  return out;
}

std::vector<int> arc_from_records(const std::vector<AngleRecord>& records, double threshold) {
  std::vector<int> arc;
  for (std::size_t k = 0; k < records.size(); ++k)
    if (records[k].psnr_drop > threshold) arc.push_back(static_cast<int>(k));
  return arc;
}

bool indices_contiguous(const std::vector<int>& idx, int count) {
  if (idx.empty()) return false;
  if (static_cast<int>(idx.size()) == count) return true;
  std::vector<char> member(count, 0);
  for (int i : idx) member[i] = 1;
  int starts = 0;
  for (int k = 0; k < count; ++k)
    if (member[k] && !member[(k + count - 1) % count]) ++starts;
  return starts == 1;
}

bool SweepResult::arc_contiguous() const { return indices_contiguous(arc, count); }

SweepResult sweep_circle(const TrainedDenoiser& d, const Image& u, const NoiseField& n, const NoiseField& v,
                         int count, double threshold) {
  if (count < 1) throw ParameterError("circle sample count must be >= 1");
  require_same_shape(u.shape(), n.shape(), "sweep_circle");
  const CircleFrame frame = circle_frame(n, v);
  const Image x = compose(u, n, u.id());
  const MetricRecord base = evaluate(u, d.denoise(x));

  SweepResult r;
  r.model_id = d.id();
  r.image_id = u.id();
  r.count = count;
  r.threshold = threshold;
  r.records.resize(count);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < count; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / count;
    const CircleSample cs = circle_sample_at(u, n, frame, theta);
    const MetricRecord m = evaluate(u, d.denoise(cs.s));
    r.records[k] = {theta, base.psnr - m.psnr, base.ssim - m.ssim, m.mae - base.mae, false};
  }
  r.arc = arc_from_records(r.records, threshold);
  for (int k : r.arc) r.records[k].in_arc = true;
  return r;
}

double arc_overlap(const SweepResult& a, const SweepResult& b) {
  if (a.count != b.count) throw ParameterError("arc_overlap requires sweeps with the same sample count");
  if (a.arc.empty() && b.arc.empty()) return 1.0;
  std::vector<char> ma(a.count, 0), mb(b.count, 0);
  for (int k : a.arc) ma[k] = 1;
  for (int k : b.arc) mb[k] = 1;
  int inter = 0, uni = 0;
  for (int k = 0; k < a.count; ++k) {
    inter += ma[k] && mb[k];
    uni += ma[k] || mb[k];
  }
  return static_cast<double>(inter) / uni;
}

namespace {
double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }
}  // namespace

void to_json(nlohmann::json& j, const SweepResult& r) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& a : r.records)
    recs.push_back({{"theta_degrees", degrees(a.theta)},
                    {"psnr_drop", a.psnr_drop},
                    {"ssim_drop", a.ssim_drop},
                    {"mae_increase", a.mae_increase},
                    {"in_arc", a.in_arc}});
  nlohmann::json arc = nlohmann::json::array();
  for (int k : r.arc) arc.push_back(degrees(r.records[k].theta));
  j = {{"model_id", r.model_id}, {"image_id", r.image_id}, {"count", r.count},  {"threshold", r.threshold},
       {"records", recs},        {"arc_degrees", arc},      {"contiguous", r.arc_contiguous()}};
}

void from_json(const nlohmann::json& j, SweepResult& r) {
  r = SweepResult{};
  r.model_id = j.at("model_id").get<std::string>();
  r.image_id = j.at("image_id").get<std::string>();
  r.count = j.at("count").get<int>();
  r.threshold = j.at("threshold").get<double>();
  for (const auto& a : j.at("records")) {
    AngleRecord rec;
    rec.theta = a.at("theta_degrees").get<double>() * std::numbers::pi / 180.0;
    rec.psnr_drop = a.at("psnr_drop").get<double>();
    rec.ssim_drop = a.at("ssim_drop").get<double>();
    rec.mae_increase = a.at("mae_increase").get<double>();
    rec.in_arc = a.at("in_arc").get<bool>();
    r.records.push_back(rec);
  }
  for (std::size_t k = 0; k < r.records.size(); ++k)
    if (r.records[k].in_arc) r.arc.push_back(static_cast<int>(k));
}

std::string sweep_to_csv(const SweepResult& r) {
  std::ostringstream os;
  os << kSweepCsvHeader << '\n';
  for (const auto& a : r.records)
    os << format_fixed(degrees(a.theta)) << ',' << format_fixed(a.psnr_drop) << ',' << format_fixed(a.ssim_drop)
       << ',' << format_fixed(a.mae_increase) << ',' << (a.in_arc ? 1 : 0) << '\n';
  return os.str();
}

std::vector<ProbePoint> linear_combination_probe(const TrainedDenoiser& d, const Image& s1, const Image& s2,
                                                 const Image& y, const std::vector<double>& lambdas,
                                                 const Image& baseline) {
  require_same_shape(s1.shape(), s2.shape(), "linear_combination_probe");
  require_same_shape(s1.shape(), y.shape(), "linear_combination_probe");
  require_same_shape(baseline.shape(), y.shape(), "linear_combination_probe baseline");
  const double base = psnr(y, d.denoise(baseline));
  std::vector<ProbePoint> out(lambdas.size());
  std::vector<double> mix(s1.size());
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const double l = lambdas[k];
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = l * s1[i] + (1.0 - l) * s2[i];
    const double p = psnr(y, d.denoise(Image::clipped(y.shape(), mix, y.id())));
    out[k] = {l, p, base - p};
  }
  return out;
}

std::vector<double> interior_lambdas() {
  std::vector<double> l;
  for (int k = 1; k <= 9; ++k) l.push_back(k / 10.0);
  return l;
}

}  // namespace advdn
