#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "advdn/denoiser.hpp"
#include "advdn/image.hpp"
#include "advdn/noise.hpp"
#include "advdn/rng.hpp"
#include "advdn/synth.hpp"
#include "advdn/train.hpp"

namespace support {

inline advdn::Image scene(int h, int w, std::uint64_t seed, int channels = 1) {
  return advdn::synthesize_scene(h, w, channels, seed, "s" + std::to_string(seed));
}

inline advdn::Image random_image(advdn::Shape shape, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  advdn::Rng rng(seed);
  std::vector<double> v(shape.size());
  for (double& p : v) p = rng.uniform(lo, hi);
  return advdn::Image(shape, std::move(v));
}

// Random-init residual net with weights scaled down so the output stays near x.
inline advdn::TrainedDenoiser small_net(int depth = 3, int width = 8, std::uint64_t seed = 5,
                                        float scale = 0.3f, std::string id = "net") {
  const auto spec = advdn::DenoiserSpec::residual(depth, width, false);
  advdn::TrainConfig cfg;
  cfg.sigma = 25.0;
  cfg.seed = seed;
  auto w = advdn::initial_parameters(spec, cfg);
  for (float& v : w) v *= scale;
  return advdn::TrainedDenoiser(std::move(id), spec, std::move(w));
}

inline std::vector<advdn::Image> patches(int count, int size, std::uint64_t seed) {
  std::vector<advdn::Image> out;
  for (int i = 0; i < count; ++i) out.push_back(scene(size, size, advdn::derive_seed(seed, i)));
  return out;
}

inline advdn::TrainConfig quick_train(int epochs = 1, std::uint64_t seed = 3) {
  advdn::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 4;
  cfg.sigma = 25.0;
  cfg.lr.initial = 1e-3;
  cfg.seed = seed;
  return cfg;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("advdn-test-" + tag + "-" + std::to_string(advdn::fnv1a64(tag) ^ std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace support
