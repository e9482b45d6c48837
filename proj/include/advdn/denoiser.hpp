#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "advdn/image.hpp"
#include "advdn/network.hpp"

namespace advdn {

enum class DenoiserKind { ResidualCnn, TvClassical };

std::string to_string(DenoiserKind k);
DenoiserKind denoiser_kind_from_string(const std::string& s);

/// Architecture of a zoo member. The TV fields are used only by the
/// classical kind, which has no learned parameters.
struct DenoiserSpec {
  DenoiserKind kind = DenoiserKind::ResidualCnn;
  int depth = 7;
  int width = 32;
  bool blind = false;
  int channels = 1;
  double tv_lambda = 0.2;
  int tv_iterations = 100;

  static DenoiserSpec residual(int depth, int width, bool blind, int channels = 1);
  static DenoiserSpec tv(double lambda, int iterations, int channels = 1);

  void validate() const;
  /// Learned parameter count implied by the architecture (0 for TV).
  std::size_t parameter_count() const;
  /// Hash of the canonical JSON form.
  std::uint64_t hash() const;
};

void to_json(nlohmann::json& j, const DenoiserSpec& s);
void from_json(const nlohmann::json& j, DenoiserSpec& s);

struct TrainingMetadata {
  double sigma_min = 0.0;  // equal to sigma_max for non-blind models
  double sigma_max = 0.0;
  std::uint64_t seed = 0;
  std::string provenance;  // dataset manifest hash, hex
  int epochs = 0;
  double final_loss = 0.0;
  int skipped_batches = 0;
  std::string origin = "train";
};

void to_json(nlohmann::json& j, const TrainingMetadata& m);
void from_json(const nlohmann::json& j, TrainingMetadata& m);

enum class Precision { Single, Double };

/// Immutable trained denoiser. Residual models compute
/// D(x) = clip(x - R(x), 0, 1) where R is the conv stack's noise prediction.
class TrainedDenoiser {
 public:
  TrainedDenoiser(std::string id, DenoiserSpec spec, std::vector<float> weights,
                  TrainingMetadata meta = {});

  static TrainedDenoiser tv_classical(std::string id, double lambda, int iterations, int channels = 1);

  const std::string& id() const { return id_; }
  const DenoiserSpec& spec() const { return spec_; }
  std::span<const float> weights() const { return weights_; }
  const TrainingMetadata& metadata() const { return meta_; }
  bool has_gradient() const { return spec_.kind == DenoiserKind::ResidualCnn; }
  TrainedDenoiser renamed(std::string id) const;

  Image denoise(const Image& x) const;
  /// Batched denoise; all images must share one shape.
  std::vector<Image> denoise_batch(std::span<const Image> xs) const;

  /// R(x) for residual models.
  NoiseField predicted_noise(const Image& x, Precision p = Precision::Single) const;

  /// Gradient of J = ||D(x) - y||_2^2 with respect to x. The output clip is
  /// the identity on the backward pass. Throws UnsupportedOperation for TV.
  NoiseField input_gradient(const Image& x, const Image& y, Precision p = Precision::Single) const;

  /// J = ||D(x) - y||_2^2 with the clipped output.
  double reconstruction_loss(const Image& x, const Image& y) const;

 private:
  void check_input(const Image& x) const;

  std::string id_;
  DenoiserSpec spec_;
  std::vector<float> weights_;
  TrainingMetadata meta_;
  std::vector<ConvStack> stack_;  // empty for the TV kind
};

/// Converts images (same shape) into a channel-major batch tensor and back.
template <typename T>
kernels::Tensor<T> to_tensor(std::span<const Image> images);
template <typename T>
kernels::Tensor<T> to_tensor(const Image& image) {
  return to_tensor<T>(std::span<const Image>(&image, 1));
}
template <typename T>
NoiseField field_from_tensor(const kernels::Tensor<T>& t, int index, const Shape& shape);

}  // namespace advdn
