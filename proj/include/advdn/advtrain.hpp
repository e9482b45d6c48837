#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "advdn/attacks.hpp"
#include "advdn/denoiser.hpp"
#include "advdn/train.hpp"

namespace advdn {

enum class Regeneration { FrozenBase, PerEpoch };

std::string to_string(Regeneration r);

struct AdvTrainConfig {
  AttackConfig attack = AttackConfig::pgd();
  double adversarial_fraction = 0.5;  // gaussian fraction is 1 - this
  TrainConfig retrain;
  Regeneration regeneration = Regeneration::FrozenBase;
  /// Start from the base weights (true) or from a fresh seeded init.
  bool warm_start = true;

  void validate() const;
};

void to_json(nlohmann::json& j, const AdvTrainConfig& c);
void from_json(const nlohmann::json& j, AdvTrainConfig& c);

struct AdvTrainStats {
  std::vector<double> adversarial_fraction_per_epoch;
  int attack_failures = 0;
  int skipped_batches = 0;
  TrainingLog log;
};

/// True when global sample position p of an epoch is adversarial. Spreads the
/// adversarial items evenly so every prefix stays within one item of the ratio.
bool is_adversarial_position(std::size_t position, double fraction);

/// Retrains on a mix of adversarial and Gaussian observations of the clean
/// patches. Gaussian items reuse the plain training noise stream, so a zero
/// adversarial fraction reproduces train() warm-started from the base.
TrainedDenoiser adversarial_train(std::string id, const TrainedDenoiser& base, std::span<const Image> patches,
                                  const AdvTrainConfig& cfg, AdvTrainStats* stats = nullptr);

/// Mean PSNR(D(x)) - PSNR(D(x')) under fresh attacks generated against d.
struct GapMeasurement {
  double mean_gap = 0.0;
  double mean_gaussian_psnr = 0.0;
  std::vector<double> per_image_gap;
  std::vector<double> per_image_gaussian_psnr;
};

GapMeasurement measure_adversarial_gap(const TrainedDenoiser& d, const std::vector<Image>& noisy,
                                       const std::vector<Image>& clean, const AttackConfig& cfg);

/// Mean drop of d on fixed adversarial inputs (e.g. generated against another model).
GapMeasurement measure_fixed_gap(const TrainedDenoiser& d, const std::vector<Image>& noisy,
                                 const std::vector<Image>& adversarial, const std::vector<Image>& clean);

struct AdvTrainReport {
  std::string base_id;
  std::string model_id;
  std::vector<std::string> image_ids;
  GapMeasurement self_before;
  GapMeasurement self_after;
  std::string cross_source_id;  // empty when no cross-model attacks were measured
  GapMeasurement cross_before;
  GapMeasurement cross_after;

  double gap_ratio() const { return self_before.mean_gap != 0.0 ? self_after.mean_gap / self_before.mean_gap : 0.0; }
  double gaussian_delta() const { return self_after.mean_gaussian_psnr - self_before.mean_gaussian_psnr; }
};

void to_json(nlohmann::json& j, const AdvTrainReport& r);
inline constexpr const char* kAdvTrainCsvHeader =
    "image_id,gap_before,gap_after,gaussian_psnr_before,gaussian_psnr_after";
std::string advtrain_to_csv(const AdvTrainReport& r);

}  // namespace advdn
