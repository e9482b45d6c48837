#include <gtest/gtest.h>

#include <cstring>

#include "advdn/denoiser.hpp"
#include "advdn/errors.hpp"
#include "advdn/metrics.hpp"
#include "advdn/model_io.hpp"
#include "advdn/network.hpp"
#include "advdn/rng.hpp"
#include "advdn/tv.hpp"
#include "support.hpp"

using namespace advdn;

namespace {

std::string with_checksum(std::string bytes) {
  bytes.resize(bytes.size() - 8);
  const std::uint64_t c = fnv1a64(bytes);
  for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((c >> (8 * i)) & 0xff));
  return bytes;
}

double loss_unclipped(const TrainedDenoiser& d, const Image& x, const Image& y) {
  const NoiseField r = d.predicted_noise(x, Precision::Double);
  double j = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x[i] - r[i] - y[i];
    j += e * e;
  }
  return j;
}

}  // namespace

TEST(Spec, ParameterCountAndValidation) {
  // conv(1->8) + conv(8->8) + conv(8->1), each 9 * in * out weights plus out biases.
  EXPECT_EQ(DenoiserSpec::residual(3, 8, false).parameter_count(), (72u + 8u) + (576u + 8u) + (72u + 1u));
  EXPECT_EQ(ConvStack(1, 3, 8).parameter_count(), DenoiserSpec::residual(3, 8, false).parameter_count());
  EXPECT_EQ(DenoiserSpec::tv(0.2, 10).parameter_count(), 0u);
  EXPECT_THROW(DenoiserSpec::residual(2, 8, false).validate(), ParameterError);
  EXPECT_THROW(DenoiserSpec::tv(0.0, 10).validate(), ParameterError);
  EXPECT_THROW(denoiser_kind_from_string("unet"), ConfigError);
  EXPECT_NE(DenoiserSpec::residual(3, 8, false).hash(), DenoiserSpec::residual(3, 8, true).hash());
}

TEST(Denoiser, ZeroWeightsGiveIdentity) {
  const auto spec = DenoiserSpec::residual(3, 8, false);
  const TrainedDenoiser d("zero", spec, std::vector<float>(spec.parameter_count(), 0.0f));
  const Image x = support::scene(20, 20, 1);
  const Image out = d.denoise(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(out[i], x[i], 1e-7);
}

TEST(Denoiser, OutputIsClipOfResidualSubtraction) {
  const TrainedDenoiser d = support::small_net(3, 8, 5, 1.0f);
  const Image x = support::scene(24, 24, 2);
  const NoiseField r = d.predicted_noise(x);
  const Image out = d.denoise(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(out[i], std::clamp(x[i] - r[i], 0.0, 1.0), 1e-6);
}

TEST(Denoiser, BatchMatchesSingle) {
  const TrainedDenoiser d = support::small_net();
  const std::vector<Image> xs{support::scene(16, 16, 1), support::scene(16, 16, 2), support::scene(16, 16, 3)};
  const auto batch = d.denoise_batch(xs);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Image single = d.denoise(xs[k]);
    for (std::size_t i = 0; i < single.size(); ++i) EXPECT_NEAR(batch[k][i], single[i], 1e-6);
  }
}

TEST(Denoiser, GradientMatchesFiniteDifferences) {
  const TrainedDenoiser d = support::small_net(4, 8, 17, 0.3f);
  const Image raw = support::scene(16, 16, 4), yraw = support::scene(16, 16, 5);
  std::vector<double> xv(raw.size()), yv(raw.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    xv[i] = 0.35 + 0.3 * raw[i];
    yv[i] = 0.35 + 0.3 * yraw[i];
  }
  const Image x(raw.shape(), xv), y(raw.shape(), yv);
  const NoiseField r = d.predicted_noise(x, Precision::Double);
  for (std::size_t i = 0; i < x.size(); ++i) ASSERT_TRUE(x[i] - r[i] > 0.0 && x[i] - r[i] < 1.0);

  const NoiseField g = d.input_gradient(x, y, Precision::Double);
  EXPECT_NEAR(d.reconstruction_loss(x, y), loss_unclipped(d, x, y), 1e-4);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); i += 7) {
    const double h = 1e-5;
    std::vector<double> p(xv), m(xv);
    p[i] += h;
    m[i] -= h;
    const double fd = (loss_unclipped(d, Image(x.shape(), p), y) - loss_unclipped(d, Image(x.shape(), m), y)) / (2 * h);
    num += (fd - g[i]) * (fd - g[i]);
    den += g[i] * g[i];
  }
  EXPECT_LT(std::sqrt(num / den), 1e-5);

  const NoiseField gs = d.input_gradient(x, y, Precision::Single);
  EXPECT_LT(l2_norm(gs - g) / l2_norm(g), 1e-3);
}

TEST(Denoiser, TvHasNoGradient) {
  const auto tv = TrainedDenoiser::tv_classical("tv", 0.2, 20);
  const Image x = support::scene(16, 16, 6);
  EXPECT_FALSE(tv.has_gradient());
  EXPECT_THROW(tv.input_gradient(x, x), UnsupportedOperation);
  EXPECT_THROW(tv.predicted_noise(x), UnsupportedOperation);
  const Image a = tv.denoise(x), b = tv_denoise(x, 0.2, 20);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Denoiser, ChannelMismatchIsRejected) {
  const TrainedDenoiser d = support::small_net();
  EXPECT_THROW(d.denoise(support::scene(16, 16, 1, 3)), ParameterError);
  const auto spec = DenoiserSpec::residual(3, 8, false);
  EXPECT_THROW(TrainedDenoiser("bad", spec, std::vector<float>(3)), ParameterError);
}

TEST(ModelIo, RoundTripIsExact) {
  support::TempDir dir("model");
  TrainingMetadata meta;
  meta.sigma_min = meta.sigma_max = 25.0;
  meta.seed = 99;
  meta.epochs = 3;
  const auto w = support::small_net().weights();
  const TrainedDenoiser d("m", DenoiserSpec::residual(3, 8, false), std::vector<float>(w.begin(), w.end()), meta);
  save_model(d, dir.path() / "m.bin");
  const TrainedDenoiser back = load_model(dir.path() / "m.bin");
  EXPECT_EQ(back.id(), "m");
  EXPECT_EQ(back.metadata().seed, 99u);
  EXPECT_TRUE(std::equal(d.weights().begin(), d.weights().end(), back.weights().begin(), back.weights().end()));
  const Image x = support::scene(16, 16, 1);
  EXPECT_TRUE(std::isinf(psnr(d.denoise(x), back.denoise(x))));

  const auto tv = TrainedDenoiser::tv_classical("tv", 0.15, 12);
  const auto tv_back = deserialize_model(serialize_model(tv));
  EXPECT_EQ(tv_back.spec().tv_iterations, 12);
  EXPECT_DOUBLE_EQ(tv_back.spec().tv_lambda, 0.15);
}

TEST(ModelIo, CorruptionTruncationAndVersion) {
  const std::string bytes = serialize_model(support::small_net());
  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  EXPECT_THROW(deserialize_model(flipped), ChecksumError);
  EXPECT_THROW(deserialize_model(bytes.substr(0, bytes.size() - 5)), ChecksumError);
  EXPECT_THROW(deserialize_model(bytes.substr(0, 10)), ChecksumError);

  std::string v2 = bytes;
  v2[8] = 2;
  EXPECT_THROW(deserialize_model(with_checksum(v2)), VersionError);
  EXPECT_THROW(load_model("/nonexistent/model.bin"), ResolutionError);
}
