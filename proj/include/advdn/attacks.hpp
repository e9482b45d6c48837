#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "advdn/denoiser.hpp"
#include "advdn/image.hpp"

namespace advdn {

enum class InitMode { UniformBall, Gaussian };
enum class Projection { LinfBall, L2NoiseBall };
enum class AttackBasis { NoisyImage, CleanImage };

/// Attack hyperparameters. epsilon is on the [0, 1] intensity scale.
struct AttackConfig {
  double epsilon = 0.012;
  int steps = 5;
  std::optional<double> step_size;  // defaults to epsilon / steps
  InitMode init = InitMode::UniformBall;
  Projection projection = Projection::LinfBall;
  std::optional<double> l2_radius;  // l2-noise-ball only; defaults to ||n||_2
  AttackBasis basis = AttackBasis::NoisyImage;
  std::uint64_t seed = 0;
  /// Gaussian-init std as a multiple of the step size.
  double gaussian_init_scale = 0.5;
  /// Re-apply the Gaussian perturbation at every iteration (true) or once.
  bool gaussian_every_step = true;

  double alpha() const { return step_size.value_or(steps > 0 ? epsilon / steps : 0.0); }
  void validate() const;

  static AttackConfig pgd(double epsilon = 0.012, int steps = 5, std::uint64_t seed = 0);
  static AttackConfig l2(double epsilon = 0.012, int steps = 5, std::uint64_t seed = 0,
                         std::optional<double> radius = std::nullopt);
  static AttackConfig clean(double epsilon = 0.157, int steps = 10, std::uint64_t seed = 0);
};

std::string to_string(InitMode m);
std::string to_string(Projection p);
std::string to_string(AttackBasis b);
void to_json(nlohmann::json& j, const AttackConfig& c);
void from_json(const nlohmann::json& j, AttackConfig& c);

/// Result of an attack. v = x_prime - x; base holds the benign observation x,
/// its noise n and the clean image y.
struct AdversarialSample {
  Image x_prime;
  NoiseField v;
  std::string source_model_id;
  AttackConfig config;
  Image x;
  NoiseField n;
  Image y;
};

/// Invoked after every iterate (t = 1..T) with the current x'.
using IterateObserver = std::function<void(int step, const Image& iterate)>;

/// Signed-gradient ascent on J(D(x'), y) inside the l-inf ball around x:
///   x'_0 = clip(x + U(-eps, eps)),
///   x'_{t+1} = clip_ball(clip_[0,1](x'_t + alpha * sign(grad))).
/// `n` defaults to x - y.
AdversarialSample denoising_pgd(const TrainedDenoiser& d, const Image& x, const Image& y,
                                const AttackConfig& cfg, const NoiseField* n = nullptr,
                                const IterateObserver& observe = {});

/// L2-constrained variant: starting from x, each iteration adds a Gaussian
/// perturbation (std = gaussian_init_scale * alpha), takes a signed-gradient
/// step, projects x' - y onto the L2 ball of the configured radius, and clips
/// to the image range.
AdversarialSample l2_denoising_pgd(const TrainedDenoiser& d, const Image& x, const Image& y,
                                   const AttackConfig& cfg, const NoiseField* n = nullptr,
                                   const IterateObserver& observe = {});

/// denoising_pgd applied directly to the clean image (x = y, n = 0).
AdversarialSample attack_on_clean(const TrainedDenoiser& d, const Image& y, const AttackConfig& cfg,
                                  const IterateObserver& observe = {});

/// Dispatches on cfg.projection and cfg.basis.
AdversarialSample run_attack(const TrainedDenoiser& d, const Image& x, const Image& y,
                             const AttackConfig& cfg, const NoiseField* n = nullptr);

/// clip(y + N(0, s^2)) with s = std(x_prime - y): a purely Gaussian
/// observation at the adversarial sample's empirical noise level.
Image matched_gaussian_control(const Image& x_prime, const Image& y, std::uint64_t seed);

/// Elementwise sign with sign(0) = 0.
double sign_of(double g);

/// Scales `offset` onto the L2 ball of the given radius if it lies outside.
NoiseField project_l2(NoiseField offset, double radius);

}  // namespace advdn
