#include <gtest/gtest.h>

#include "advdn/errors.hpp"
#include "advdn/metrics.hpp"
#include "advdn/noise.hpp"
#include "advdn/train.hpp"
#include "support.hpp"

using namespace advdn;

TEST(Schedule, StepDecay) {
  LearningRateSchedule s{1e-3, 0.1, 2};
  EXPECT_DOUBLE_EQ(s.at(0), 1e-3);
  EXPECT_DOUBLE_EQ(s.at(1), 1e-3);
  EXPECT_NEAR(s.at(2), 1e-4, 1e-18);
  EXPECT_NEAR(s.at(5), 1e-5, 1e-18);
  EXPECT_DOUBLE_EQ((LearningRateSchedule{2e-3, 0.1, 0}).at(50), 2e-3);
}

TEST(TrainConfigTest, Validation) {
  const auto plain = DenoiserSpec::residual(3, 8, false);
  const auto blind = DenoiserSpec::residual(3, 8, true);
  TrainConfig c = support::quick_train();
  EXPECT_NO_THROW(c.validate(plain));
  EXPECT_THROW(c.validate(blind), ParameterError);
  c.sigma_range = {{30.0, 10.0}};
  EXPECT_THROW(c.validate(blind), ParameterError);
  c.sigma_range = {{0.0, 55.0}};
  EXPECT_NO_THROW(c.validate(blind));
  c.epochs = 0;
  EXPECT_THROW(c.validate(plain), ParameterError);

  nlohmann::json j = support::quick_train(3, 11);
  const TrainConfig back = j.get<TrainConfig>();
  EXPECT_EQ(back.epochs, 3);
  EXPECT_EQ(back.seed, 11u);
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(Train, DeterministicAndLearns) {
  const auto ps = support::patches(12, 24, 1);
  const auto spec = DenoiserSpec::residual(3, 8, false);
  TrainConfig cfg = support::quick_train(4);
  cfg.lr.initial = 5e-3;
  TrainingLog log;
  const TrainedDenoiser a = train("a", spec, ps, cfg, &log);
  const TrainedDenoiser b = train("b", spec, ps, cfg);
  EXPECT_TRUE(std::equal(a.weights().begin(), a.weights().end(), b.weights().begin(), b.weights().end()));
  ASSERT_EQ(log.epoch_losses.size(), 4u);
  EXPECT_EQ(log.batch_losses.size(), 12u);
  EXPECT_LT(log.epoch_losses.back(), log.epoch_losses.front());
  EXPECT_EQ(a.metadata().epochs, 4);
  EXPECT_DOUBLE_EQ(a.metadata().sigma_max, 25.0);

  cfg.seed = 4;
  const TrainedDenoiser c = train("c", spec, ps, cfg);
  EXPECT_FALSE(std::equal(a.weights().begin(), a.weights().end(), c.weights().begin()));
}

TEST(Train, WarmStartUsesGivenParameters) {
  const auto ps = support::patches(4, 16, 2);
  const auto spec = DenoiserSpec::residual(3, 8, false);
  const TrainedDenoiser base = support::small_net();
  std::vector<float> init(base.weights().begin(), base.weights().end());
  TrainConfig cfg = support::quick_train(1);
  cfg.lr.initial = 1e-12;
  const TrainedDenoiser d = train("w", spec, ps, cfg, nullptr, &init);
  for (std::size_t i = 0; i < init.size(); ++i) EXPECT_NEAR(d.weights()[i], init[i], 1e-6);
}

TEST(Train, DivergenceRaisesTrainingError) {
  const auto ps = support::patches(4, 16, 3);
  TrainConfig cfg = support::quick_train(3);
  cfg.lr.initial = 1e30;
  try {
    train("boom", DenoiserSpec::residual(3, 8, false), ps, cfg);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_GE(e.epoch(), 0);
    EXPECT_LT(e.epoch(), 3);
  }
}

TEST(Train, RejectsBadInputs) {
  const auto spec = DenoiserSpec::residual(3, 8, false);
  const TrainConfig cfg = support::quick_train();
  EXPECT_THROW(train("x", spec, std::vector<Image>{}, cfg), ParameterError);
  EXPECT_THROW(train("x", DenoiserSpec::tv(0.2, 10), support::patches(2, 16, 1), cfg), UnsupportedOperation);
  EXPECT_THROW(train("x", spec, std::vector<Image>{support::scene(16, 16, 1, 3)}, cfg), ParameterError);
}

TEST(Train, SkippedBatchesAreCounted) {
  const ConvStack stack(1, 3, 8);
  const auto spec = DenoiserSpec::residual(3, 8, false);
  TrainConfig cfg = support::quick_train(2);
  const auto init = initial_parameters(spec, cfg);
  TrainingLog log;
  const auto out = fit_residual(stack, init, 8, cfg,
                                [](int, int, std::span<const std::size_t>, TrainingBatch&) { return false; }, &log);
  EXPECT_EQ(log.skipped_batches, 4);
  EXPECT_EQ(out, init);
}

TEST(Train, BlindInputsSpanTheRange) {
  TrainConfig cfg = support::quick_train();
  cfg.sigma.reset();
  cfg.sigma_range = {{0.0, 55.0}};
  const Image clean = Image::filled({32, 32, 1}, 0.5);
  double lo = 1e9, hi = -1;
  for (int k = 0; k < 200; ++k) {
    const auto [noisy, level] = gaussian_training_input(clean, cfg, derive_seed(1, k));
    lo = std::min(lo, level);
    hi = std::max(hi, level);
    ASSERT_GE(level, 0.0);
    ASSERT_LE(level, 55.0);
  }
  EXPECT_LT(lo, 5.0);
  EXPECT_GT(hi, 50.0);
}
