#include <gtest/gtest.h>

#include "advdn/attacks.hpp"
#include "advdn/errors.hpp"
#include "advdn/metrics.hpp"
#include "advdn/noise.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace advdn;

namespace {

struct Scene {
  Image y;
  Image x;
  NoiseField n;
};

Scene make_scene(std::uint64_t seed, int size = 24) {
  const Image raw = support::scene(size, size, seed);
  std::vector<double> v(raw.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.2 + 0.6 * raw[i];
  Image y(raw.shape(), v, raw.id());
  auto obs = add_gaussian_noise(y, 15.0, seed + 1);
  return {y, obs.x, obs.n};
}

std::vector<double> values(const Image& a) { return {a.pixels().begin(), a.pixels().end()}; }

}  // namespace

TEST(AttackConfigTest, DefaultsValidationAndJson) {
  const AttackConfig c = AttackConfig::pgd();
  EXPECT_DOUBLE_EQ(c.epsilon, 0.012);
  EXPECT_EQ(c.steps, 5);
  EXPECT_DOUBLE_EQ(c.alpha(), 0.012 / 5);
  AttackConfig bad = c;
  bad.steps = 0;
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = c;
  bad.step_size = 0.5;
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = c;
  bad.epsilon = -1;
  EXPECT_THROW(bad.validate(), ParameterError);

  for (const AttackConfig& a : {AttackConfig::pgd(0.02, 3, 9), AttackConfig::l2(0.01, 4, 2, 1.5),
                                AttackConfig::clean()}) {
    const AttackConfig back = nlohmann::json(a).get<AttackConfig>();
    EXPECT_EQ(nlohmann::json(back), nlohmann::json(a));
  }
}

TEST(Pgd, ZeroEpsilonLeavesInputUnchanged) {
  const auto s = make_scene(1);
  const auto d = support::small_net();
  const auto r = denoising_pgd(d, s.x, s.y, AttackConfig::pgd(0.0, 3, 4), &s.n);
  EXPECT_EQ(values(r.x_prime), values(s.x));
  EXPECT_EQ(linf_norm(r.v), 0.0);
  EXPECT_EQ(psnr(d.denoise(r.x_prime), s.y), psnr(d.denoise(s.x), s.y));
}

TEST(Pgd, SingleStepMatchesHandComputation) {
  const auto s = make_scene(2);
  const auto d = support::small_net(3, 8, 9, 0.5f);
  const AttackConfig cfg = AttackConfig::pgd(0.03, 1, 77);
  const auto r = denoising_pgd(d, s.x, s.y, cfg, &s.n);

  Rng rng(77);
  std::vector<double> x0(s.x.size());
  for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = std::clamp(s.x[i] + rng.uniform(-0.03, 0.03), 0.0, 1.0);
  const NoiseField g = d.input_gradient(Image(s.x.shape(), x0), s.y);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double sgn = g[i] > 0 ? 1.0 : (g[i] < 0 ? -1.0 : 0.0);
    const double expect = std::clamp(std::clamp(x0[i] + 0.03 * sgn, 0.0, 1.0), s.x[i] - 0.03, s.x[i] + 0.03);
    ASSERT_DOUBLE_EQ(r.x_prime[i], expect) << "pixel " << i;
  }
}

TEST(Pgd, IteratesStayInBallAndRange) {
  const auto s = make_scene(3);
  const auto d = support::small_net(3, 8, 4, 1.0f);
  const AttackConfig cfg = AttackConfig::pgd(0.05, 6, 5);
  int seen = 0;
  const auto r = denoising_pgd(d, s.x, s.y, cfg, &s.n, [&](int t, const Image& it) {
    ++seen;
    EXPECT_EQ(t, seen);
    for (std::size_t i = 0; i < it.size(); ++i) {
      ASSERT_LE(std::abs(it[i] - s.x[i]), 0.05 + 1e-12);
      ASSERT_GE(it[i], 0.0);
      ASSERT_LE(it[i], 1.0);
    }
  });
  EXPECT_EQ(seen, 6);
  EXPECT_EQ(r.source_model_id, "net");
  for (std::size_t i = 0; i < r.v.size(); ++i) EXPECT_DOUBLE_EQ(r.v[i], r.x_prime[i] - s.x[i]);
}

TEST(Pgd, DeterministicAndIncreasesLoss) {
  const auto s = make_scene(4);
  const auto d = support::small_net(3, 8, 4, 1.0f);
  const AttackConfig cfg = AttackConfig::pgd(0.03, 5, 8);
  const auto a = denoising_pgd(d, s.x, s.y, cfg);
  const auto b = denoising_pgd(d, s.x, s.y, cfg);
  EXPECT_EQ(values(a.x_prime), values(b.x_prime));
  EXPECT_GT(d.reconstruction_loss(a.x_prime, s.y), d.reconstruction_loss(s.x, s.y));
  EXPECT_NE(values(denoising_pgd(d, s.x, s.y, AttackConfig::pgd(0.03, 5, 9)).x_prime), values(a.x_prime));
}

TEST(Pgd, ClassicalModelCannotBeAttacked) {
  const auto s = make_scene(5);
  const auto tv = TrainedDenoiser::tv_classical("tv", 0.2, 10);
  EXPECT_THROW(denoising_pgd(tv, s.x, s.y, AttackConfig::pgd()), UnsupportedOperation);
  EXPECT_THROW(l2_denoising_pgd(tv, s.x, s.y, AttackConfig::l2()), UnsupportedOperation);
}

TEST(L2Pgd, IteratesStayInNoiseBall) {
  const auto s = make_scene(6);
  const auto d = support::small_net(3, 8, 4, 1.0f);
  const double radius = l2_norm(s.n);
  const AttackConfig cfg = AttackConfig::l2(0.05, 6, 3);
  const auto r = l2_denoising_pgd(d, s.x, s.y, cfg, &s.n, [&](int, const Image& it) {
    EXPECT_LE(l2_norm(difference(it, s.y)), radius * (1 + 1e-9));
  });
  EXPECT_LE(l2_norm(difference(r.x_prime, s.y)), radius * (1 + 1e-9));
  const auto again = l2_denoising_pgd(d, s.x, s.y, cfg, &s.n);
  EXPECT_EQ(values(again.x_prime), values(r.x_prime));

  AttackConfig tight = cfg;
  tight.l2_radius = 0.1;
  const auto t = run_attack(d, s.x, s.y, tight, &s.n);
  EXPECT_LE(l2_norm(difference(t.x_prime, s.y)), 0.1 * (1 + 1e-9));
}

TEST(L2Pgd, ProjectL2) {
  NoiseField f({8, 8, 1});
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5;
  const NoiseField inside = project_l2(f, 10.0);
  EXPECT_DOUBLE_EQ(l2_norm(inside), 4.0);
  const NoiseField outside = project_l2(f, 2.0);
  EXPECT_NEAR(l2_norm(outside), 2.0, 1e-12);
  EXPECT_NEAR(outside[3], 0.25, 1e-12);
  EXPECT_EQ(sign_of(0.0), 0.0);
  EXPECT_EQ(sign_of(-3.0), -1.0);
}

TEST(CleanAttack, StartsFromCleanImage) {
  const auto s = make_scene(7);
  const auto d = support::small_net(3, 8, 4, 1.0f);
  EXPECT_THROW(attack_on_clean(d, s.y, AttackConfig::pgd()), ParameterError);
  const AttackConfig cfg = AttackConfig::clean(0.05, 3, 2);
  const auto r = attack_on_clean(d, s.y, cfg);
  EXPECT_EQ(values(r.x), values(s.y));
  EXPECT_EQ(l2_norm(r.n), 0.0);
  EXPECT_LE(linf_norm(difference(r.x_prime, s.y)), 0.05 + 1e-12);
  EXPECT_EQ(values(run_attack(d, s.x, s.y, cfg).x_prime), values(r.x_prime));
}

TEST(Control, MatchesEmpiricalNoiseLevel) {
  const auto s = make_scene(8, 64);
  const auto d = support::small_net(3, 8, 4, 1.0f);
  const auto r = denoising_pgd(d, s.x, s.y, AttackConfig::pgd(0.03, 4, 1), &s.n);
  const Image c = matched_gaussian_control(r.x_prime, s.y, 12);
  const auto residual = [&](const Image& img) {
    std::vector<double> v(img.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = img[i] - s.y[i];
    return v;
  };
  const double target = oracle::sample_std(residual(r.x_prime));
  EXPECT_NEAR(oracle::sample_std(residual(c)), target, 0.02 * target);
  const Image same = matched_gaussian_control(s.y, s.y, 3);
  EXPECT_EQ(values(same), values(s.y));
}
