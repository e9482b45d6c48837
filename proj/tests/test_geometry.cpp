#include <gtest/gtest.h>

#include <algorithm>
#include <iterator>
#include <numbers>
#include <set>

#include "advdn/errors.hpp"
#include "advdn/geometry.hpp"
#include "advdn/metrics.hpp"
#include "advdn/noise.hpp"
#include "support.hpp"

using namespace advdn;
using std::numbers::pi;

namespace {

struct Plane {
  Image u;
  NoiseField n;
  NoiseField v;
};

Plane make_plane(std::uint64_t seed) {
  const Image raw = support::scene(24, 24, seed);
  std::vector<double> uv(raw.size());
  for (std::size_t i = 0; i < uv.size(); ++i) uv[i] = 0.3 + 0.4 * raw[i];
  Rng rng(seed);
  Plane p{Image(raw.shape(), uv, "p"), gaussian_field(raw.shape(), 0.05, rng), NoiseField(raw.shape())};
  for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] = rng.uniform(-0.01, 0.01);
  return p;
}

SweepResult synthetic_sweep(int count, const std::set<int>& arc) {
  SweepResult r;
  r.count = count;
  r.records.resize(count);
  for (int k = 0; k < count; ++k) {
    r.records[k].theta = 2 * pi * k / count;
    r.records[k].psnr_drop = arc.count(k) ? 1.0 : 0.0;
    r.records[k].in_arc = arc.count(k) > 0;
  }
  r.arc = arc_from_records(r.records, 0.5);
  return r;
}

std::set<int> range_set(int lo, int hi) {
  std::set<int> s;
  for (int k = lo; k <= hi; ++k) s.insert(k);
  return s;
}

}  // namespace

TEST(Frame, OrthonormalAndDegenerateCases) {
  const Plane p = make_plane(1);
  const CircleFrame f = circle_frame(p.n, p.v);
  EXPECT_NEAR(l2_norm(f.n_hat), 1.0, 1e-12);
  EXPECT_NEAR(l2_norm(f.v_perp), 1.0, 1e-12);
  EXPECT_NEAR(dot(f.n_hat, f.v_perp), 0.0, 1e-12);
  EXPECT_NEAR(f.radius, l2_norm(p.v), 1e-15);

  EXPECT_THROW(circle_frame(p.n, 3.0 * p.n), GeometryError);
  EXPECT_THROW(circle_frame(p.n, NoiseField(p.n.shape())), GeometryError);
  EXPECT_THROW(circle_frame(NoiseField(p.n.shape()), p.v), GeometryError);
}

TEST(Circle, SpecialAnglesAndNorms) {
  const Plane p = make_plane(2);
  const CircleFrame f = circle_frame(p.n, p.v);
  const double r = l2_norm(p.v);
  const auto quarter = circle_sample_at(p.u, p.n, f, pi / 2);
  for (std::size_t i = 0; i < p.n.size(); ++i) EXPECT_NEAR(quarter.offset[i], r * f.n_hat[i], 1e-15);
  const auto zero = circle_sample_at(p.u, p.n, f, 0.0);
  for (std::size_t i = 0; i < p.n.size(); ++i) EXPECT_NEAR(zero.offset[i], r * f.v_perp[i], 1e-15);

  const int count = 16;
  const auto samples = circle_samples(p.u, p.n, p.v, count);
  ASSERT_EQ(samples.size(), 16u);
  for (int k = 0; k < count; ++k) {
    EXPECT_NEAR(samples[k].theta, 2 * pi * k / count, 1e-15);
    EXPECT_NEAR(l2_norm(samples[k].offset), r, 1e-12);
    const auto& opposite = samples[(k + count / 2) % count];
    EXPECT_NEAR(l2_norm(samples[k].offset + opposite.offset), 0.0, 1e-12);
  }
  // The circle passes through n + v when v is orthogonal to n.
  NoiseField vo = p.v - (dot(p.v, p.n) / dot(p.n, p.n)) * p.n;
  const auto s0 = circle_samples(p.u, p.n, vo, 4)[0];
  const Image expect = compose(p.u, p.n + vo);
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(s0.s[i], expect[i], 1e-12);
}

TEST(Arc, ContiguityWrapsAround) {
  EXPECT_TRUE(indices_contiguous({3, 4, 5}, 10));
  EXPECT_TRUE(indices_contiguous({0, 1, 8, 9}, 10));
  EXPECT_FALSE(indices_contiguous({1, 3}, 10));
  EXPECT_FALSE(indices_contiguous({}, 10));
  EXPECT_TRUE(indices_contiguous({0, 1, 2, 3}, 4));
}

TEST(Arc, OverlapMatchesSetOracle) {
  const auto a = range_set(30, 150), b = range_set(40, 160);
  std::vector<int> inter, uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  const double expect = static_cast<double>(inter.size()) / uni.size();
  EXPECT_NEAR(arc_overlap(synthetic_sweep(360, a), synthetic_sweep(360, b)), expect, 1e-15);
  EXPECT_NEAR(expect, 111.0 / 131.0, 1e-15);
  EXPECT_EQ(arc_overlap(synthetic_sweep(12, {}), synthetic_sweep(12, {})), 1.0);
  EXPECT_EQ(arc_overlap(synthetic_sweep(12, {1}), synthetic_sweep(12, {})), 0.0);
  EXPECT_THROW(arc_overlap(synthetic_sweep(12, {}), synthetic_sweep(10, {})), ParameterError);
}

TEST(Sweep, RecordsAreDropsAgainstGaussianObservation) {
  const Plane p = make_plane(3);
  const auto d = support::small_net(3, 8, 4, 1.0f);
  const SweepResult r = sweep_circle(d, p.u, p.n, p.v, 12, 0.01);
  ASSERT_EQ(r.records.size(), 12u);
  const double base = psnr(p.u, d.denoise(compose(p.u, p.n)));
  const auto samples = circle_samples(p.u, p.n, p.v, 12);
  for (int k = 0; k < 12; ++k) {
    EXPECT_NEAR(r.records[k].psnr_drop, base - psnr(p.u, d.denoise(samples[k].s)), 1e-12);
    EXPECT_EQ(r.records[k].in_arc, r.records[k].psnr_drop > 0.01);
  }
  EXPECT_EQ(r.arc, arc_from_records(r.records, 0.01));

  const SweepResult back = nlohmann::json(r).get<SweepResult>();
  EXPECT_EQ(back.arc, r.arc);
  EXPECT_NEAR(back.records[5].theta, r.records[5].theta, 1e-12);
  const std::string csv = sweep_to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kSweepCsvHeader);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);

  const SweepResult again = sweep_circle(d, p.u, p.n, p.v, 12, 0.01);
  EXPECT_EQ(sweep_to_csv(again), csv);
}

TEST(Probe, EndpointsEqualDirectEvaluation) {
  const Plane p = make_plane(4);
  const auto d = support::small_net(3, 8, 4, 1.0f);
  const Image s1 = compose(p.u, p.n + p.v), s2 = compose(p.u, p.n - p.v), x = compose(p.u, p.n);
  const auto pts = linear_combination_probe(d, s1, s2, p.u, {0.0, 0.5, 1.0}, x);
  const double base = psnr(p.u, d.denoise(x));
  EXPECT_NEAR(pts[2].psnr, psnr(p.u, d.denoise(s1)), 1e-12);
  EXPECT_NEAR(pts[0].psnr, psnr(p.u, d.denoise(s2)), 1e-12);
  for (const auto& q : pts) EXPECT_NEAR(q.psnr_drop, base - q.psnr, 1e-12);
  // Midpoint of s1 and s2 is x wherever neither was clipped.
  EXPECT_NEAR(pts[1].psnr, base, 0.05);
  const auto l = interior_lambdas();
  ASSERT_EQ(l.size(), 9u);
  EXPECT_DOUBLE_EQ(l.front(), 0.1);
  EXPECT_DOUBLE_EQ(l.back(), 0.9);
}
