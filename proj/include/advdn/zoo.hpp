#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "advdn/denoiser.hpp"
#include "advdn/image.hpp"
#include "advdn/synth.hpp"
#include "advdn/train.hpp"

namespace advdn {

/// Desk-scale training recipe for one named model.
struct ZooRecipe {
  std::string name;
  DenoiserSpec spec;
  TrainConfig train;
};

struct ZooSettings {
  std::uint64_t seed = 2024;
  CorpusSpec train_corpus{24, 180, 180, 1, "train", "train", 40, 20, 11};
  CorpusSpec test_corpus{12, 128, 128, 1, "test", "test", 40, 20, 97};
  double test_sigma = 25.0;
  int lite_epochs = 8;
  int blind_epochs = 8;
  int b_arch_epochs = 6;
  double tv_lambda = 0.2;
  int tv_iterations = 100;
};

inline constexpr const char* kDncnnLite = "dncnn-lite";
inline constexpr const char* kDncnnLiteBArch = "dncnn-lite-b-arch";
inline constexpr const char* kBlindLite = "blind-lite";
inline constexpr const char* kTvClassical = "tv-classical";

/// Recipes for the three residual models; throws ResolutionError for unknown names.
ZooRecipe zoo_recipe(const ZooSettings& s, const std::string& name);
std::vector<std::string> zoo_names();

/// Gaussian test observations of a clean set at one noise level.
struct TestSet {
  std::vector<Image> clean;
  std::vector<Image> noisy;
  std::vector<NoiseField> noise;
};

TestSet make_test_set(std::vector<Image> clean, double sigma255, std::uint64_t seed);

/// Writes (once) and loads the train/test corpora, and trains or loads cached
/// models keyed by recipe and corpus hash.
class Zoo {
 public:
  Zoo(std::filesystem::path dir, ZooSettings settings);

  const ZooSettings& settings() const { return settings_; }
  const std::vector<Image>& train_images();
  const std::vector<Image>& train_patches();
  const TestSet& test_set();

  /// Cached model for a zoo name (including tv-classical).
  TrainedDenoiser model(const std::string& name);
  std::filesystem::path model_path(const std::string& name) const;

  /// Cache lookup for arbitrary artifacts built from the zoo; builds and
  /// stores on a miss.
  TrainedDenoiser cached(const std::string& key, const std::function<TrainedDenoiser()>& build);

 private:
  std::filesystem::path dir_;
  ZooSettings settings_;
  std::vector<Image> train_images_;
  std::vector<Image> train_patches_;
  TestSet test_;
  bool test_ready_ = false;
};

}  // namespace advdn
