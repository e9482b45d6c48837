#include <gtest/gtest.h>

#include "advdn/advtrain.hpp"
#include "advdn/errors.hpp"
#include "advdn/metrics.hpp"
#include "advdn/noise.hpp"
#include "support.hpp"

using namespace advdn;

namespace {

bool same_weights(const TrainedDenoiser& a, const TrainedDenoiser& b) {
  return std::equal(a.weights().begin(), a.weights().end(), b.weights().begin(), b.weights().end());
}

AdvTrainConfig quick_cfg(double fraction, int epochs = 1) {
  AdvTrainConfig c;
  c.attack = AttackConfig::pgd(0.02, 2);
  c.adversarial_fraction = fraction;
  c.retrain = support::quick_train(epochs, 21);
  return c;
}

}  // namespace

TEST(Mix, PositionsSpreadEvenly) {
  for (double f : {0.0, 0.25, 0.3, 0.5, 2.0 / 3.0, 1.0}) {
    std::size_t count = 0;
    for (std::size_t p = 0; p < 500; ++p) {
      count += is_adversarial_position(p, f);
      ASSERT_LT(std::abs(static_cast<double>(count) - f * (p + 1)), 1.0) << "f=" << f << " p=" << p;
    }
  }
  EXPECT_FALSE(is_adversarial_position(0, 0.0));
  EXPECT_TRUE(is_adversarial_position(0, 1.0));
}

TEST(AdvTrainConfigTest, JsonAndValidation) {
  AdvTrainConfig c = quick_cfg(0.3);
  c.regeneration = Regeneration::PerEpoch;
  const AdvTrainConfig back = nlohmann::json(c).get<AdvTrainConfig>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(c));
  EXPECT_THROW((nlohmann::json{{"mix", {{"adversarial", 0.5}, {"gaussian", 0.6}}}}.get<AdvTrainConfig>()),
               ConfigError);
  EXPECT_THROW((nlohmann::json{{"regeneration", "sometimes"}}.get<AdvTrainConfig>()), ConfigError);
  c.adversarial_fraction = 1.5;
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(AdvTrain, ZeroFractionEqualsWarmStartedTraining) {
  const auto ps = support::patches(8, 20, 5);
  const TrainedDenoiser base = support::small_net(3, 8, 2, 1.0f, "base");
  const AdvTrainConfig cfg = quick_cfg(0.0, 2);
  AdvTrainStats stats;
  const TrainedDenoiser adv = adversarial_train("adv", base, ps, cfg, &stats);
  const std::vector<float> init(base.weights().begin(), base.weights().end());
  const TrainedDenoiser plain = train("plain", base.spec(), ps, cfg.retrain, nullptr, &init);
  EXPECT_TRUE(same_weights(adv, plain));
  EXPECT_EQ(stats.adversarial_fraction_per_epoch, std::vector<double>(2, 0.0));
  EXPECT_EQ(adv.metadata().origin, "warm-start");

  AdvTrainConfig cold = cfg;
  cold.warm_start = false;
  EXPECT_TRUE(same_weights(adversarial_train("cold", base, ps, cold), train("fresh", base.spec(), ps, cfg.retrain)));
}

TEST(AdvTrain, RealizedFractionAndDeterminism) {
  const auto ps = support::patches(40, 16, 6);
  const TrainedDenoiser base = support::small_net(3, 8, 2, 1.0f, "base");
  for (double f : {0.5, 0.3}) {
    AdvTrainStats stats;
    const TrainedDenoiser a = adversarial_train("a", base, ps, quick_cfg(f), &stats);
    ASSERT_EQ(stats.adversarial_fraction_per_epoch.size(), 1u);
    EXPECT_NEAR(stats.adversarial_fraction_per_epoch[0], f, 0.02);
    EXPECT_EQ(stats.attack_failures, 0);
    const TrainedDenoiser b = adversarial_train("b", base, ps, quick_cfg(f));
    EXPECT_TRUE(same_weights(a, b));
  }
}

TEST(AdvTrain, PerEpochRegenerationDiffersFromFrozenPool) {
  const auto ps = support::patches(8, 16, 7);
  const TrainedDenoiser base = support::small_net(3, 8, 2, 1.0f, "base");
  AdvTrainConfig frozen = quick_cfg(0.5, 2), live = frozen;
  live.regeneration = Regeneration::PerEpoch;
  AdvTrainStats st;
  const TrainedDenoiser a = adversarial_train("f", base, ps, frozen);
  const TrainedDenoiser b = adversarial_train("l", base, ps, live, &st);
  EXPECT_FALSE(same_weights(a, b));
  EXPECT_EQ(st.adversarial_fraction_per_epoch.size(), 2u);
  EXPECT_TRUE(same_weights(b, adversarial_train("l2", base, ps, live)));
}

TEST(AdvTrain, ClassicalBaseIsRejected) {
  const auto tv = TrainedDenoiser::tv_classical("tv", 0.2, 10);
  EXPECT_THROW(adversarial_train("x", tv, support::patches(2, 16, 1), quick_cfg(0.5)), UnsupportedOperation);
}

TEST(Gap, FixedGapMatchesDirectComputation) {
  const auto d = support::small_net(3, 8, 4, 1.0f);
  std::vector<Image> noisy, adv, clean;
  for (int i = 0; i < 3; ++i) {
    const Image y = support::scene(24, 24, 60 + i).with_id("g" + std::to_string(i));
    const auto obs = add_gaussian_noise(y, 20.0, i);
    clean.push_back(y);
    noisy.push_back(obs.x);
    adv.push_back(Image::clipped(y.shape(), std::vector<double>(obs.x.pixels().begin(), obs.x.pixels().end())));
  }
  const GapMeasurement same = measure_fixed_gap(d, noisy, adv, clean);
  EXPECT_EQ(same.mean_gap, 0.0);
  const GapMeasurement g = measure_adversarial_gap(d, noisy, clean, AttackConfig::pgd(0.03, 3, 8));
  double sum = 0.0, gsum = 0.0;
  for (int i = 0; i < 3; ++i) {
    sum += g.per_image_gap[i];
    gsum += psnr(clean[i], d.denoise(noisy[i]));
  }
  EXPECT_NEAR(g.mean_gap, sum / 3, 1e-12);
  EXPECT_NEAR(g.mean_gaussian_psnr, gsum / 3, 1e-12);
  EXPECT_GT(g.mean_gap, 0.0);
  EXPECT_EQ(measure_adversarial_gap(d, noisy, clean, AttackConfig::pgd(0.03, 3, 8)).per_image_gap, g.per_image_gap);
  EXPECT_THROW(measure_fixed_gap(d, noisy, {}, clean), ParameterError);

  AdvTrainReport r;
  r.image_ids = {"g0", "g1", "g2"};
  r.self_before = g;
  r.self_after = same;
  EXPECT_EQ(r.gap_ratio(), 0.0);
  const std::string csv = advtrain_to_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}
