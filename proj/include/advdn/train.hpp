#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "advdn/denoiser.hpp"
#include "advdn/image.hpp"
#include "advdn/kernels.hpp"

namespace advdn {

struct LearningRateSchedule {
  double initial = 1e-3;
  double decay_factor = 0.1;
  int decay_every = 0;  // epochs between decays; 0 disables decay

  double at(int epoch) const;
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Non-blind models take `sigma`; blind models take `sigma_range` and draw a
/// level uniformly per training sample. Levels are on the 0-255 scale.
struct TrainConfig {
  int epochs = 10;
  int batch_size = 16;
  LearningRateSchedule lr;
  AdamParams adam;
  std::optional<double> sigma;
  std::optional<std::pair<double, double>> sigma_range;
  std::uint64_t seed = 1;
  std::string provenance;

  void validate(const DenoiserSpec& spec) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TrainingLog {
  std::vector<double> batch_losses;
  std::vector<double> epoch_losses;  // mean batch loss per epoch
  int skipped_batches = 0;
};

/// Noisy inputs and residual targets for one optimizer step.
struct TrainingBatch {
  kernels::Tensor<float> noisy;
  kernels::Tensor<float> residual;  // target: noisy - clean
};

/// Fills `batch` for the given patches. Returning false skips the step.
using BatchBuilder =
    std::function<bool(int epoch, int step, std::span<const std::size_t> patch_indices, TrainingBatch& batch)>;

/// Called after every optimizer step with the current parameters.
using StepObserver = std::function<void(int epoch, int step, std::span<const float> params)>;

/// Adam over the residual MSE loss mean((R(noisy) - residual)^2). Patch order
/// is reshuffled every epoch from the config seed.
std::vector<float> fit_residual(const ConvStack& stack, std::vector<float> params, std::size_t patch_count,
                                const TrainConfig& cfg, const BatchBuilder& build, TrainingLog* log = nullptr,
                                const StepObserver& observer = {});

/// Seed of the Gaussian noise for the sample at `position` of `epoch`.
std::uint64_t training_noise_seed(const TrainConfig& cfg, int epoch, std::size_t position);

/// Draws the training noise level (fixed or uniform in the range) and the
/// observation clip(u + n) for one patch from the given seed.
std::pair<Image, double> gaussian_training_input(const Image& clean, const TrainConfig& cfg,
                                                 std::uint64_t seed);

/// Initial parameters for a spec from the config seed.
std::vector<float> initial_parameters(const DenoiserSpec& spec, const TrainConfig& cfg);

/// Trains a residual model on clean patches with Gaussian noise synthesized
/// on the fly. `init` overrides the seeded initialization (warm start).
TrainedDenoiser train(std::string id, const DenoiserSpec& spec, std::span<const Image> patches,
                      const TrainConfig& cfg, TrainingLog* log = nullptr,
                      const std::vector<float>* init = nullptr);

/// Writes one batch sample into a tensor at batch position b.
void write_sample(kernels::Tensor<float>& t, int b, const Image& image);
void write_sample(kernels::Tensor<float>& t, int b, const NoiseField& field);

}  // namespace advdn
