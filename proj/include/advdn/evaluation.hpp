#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "advdn/attacks.hpp"
#include "advdn/denoiser.hpp"
#include "advdn/image.hpp"

namespace advdn {

/// (x, x', y) triple produced by attacking some source model.
struct AttackTriple {
  Image x;
  Image x_prime;
  Image y;
};

struct FilterOutcome {
  bool d1_improves = false;  // E(D1(x)) > E(x)
  bool d2_improves = false;  // E(D2(x)) > E(x)
  bool source_drop = false;  // E(D1(x)) - E(D1(x')) > M
  bool admitted() const { return d1_improves && d2_improves && source_drop; }
};

/// Evaluates the three admission predicates (E = PSNR).
FilterOutcome transfer_filter(const TrainedDenoiser& d1, const TrainedDenoiser& d2, const AttackTriple& t,
                              double threshold);

/// Indices of admitted samples.
std::vector<std::size_t> filter_transfer_set(const TrainedDenoiser& d1, const TrainedDenoiser& d2,
                                             const std::vector<AttackTriple>& samples, double threshold);

struct TransferRecord {
  std::string source_id;
  std::string target_id;
  std::string image_id;
  double source_drop = 0.0;
  double target_drop = 0.0;
  double target_ssim_drop = 0.0;
  double target_mae_increase = 0.0;
  bool transferable = false;
  double threshold = 0.0;
};

void to_json(nlohmann::json& j, const TransferRecord& r);
void from_json(const nlohmann::json& j, TransferRecord& r);

struct TransferCell {
  std::string source_id;
  std::string target_id;
  double mean_psnr_drop = 0.0;
  double mean_ssim_drop = 0.0;
  double mean_mae_increase = 0.0;
  double transfer_rate = 0.0;  // over admitted images
  int n_admitted = 0;
  int n_total = 0;
};

struct TransferMatrix {
  std::vector<std::string> models;
  std::vector<TransferCell> cells;  // row-major: source * M + target
  std::vector<TransferRecord> records;
  double threshold = 0.0;

  const TransferCell& cell(std::size_t source, std::size_t target) const {
    return cells[source * models.size() + target];
  }
  const TransferCell& cell(const std::string& source, const std::string& target) const;
};

/// Aggregates admitted per-image records into matrix cells.
TransferMatrix aggregate_transfer(const std::vector<std::string>& models, const std::vector<TransferRecord>& records,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& census_totals,
                                  double threshold);

/// Attacks every (x, y) pair with every gradient-capable source using cfg
/// (seed derived per source and image) and evaluates all targets on the
/// admitted samples. Sources without a gradient get empty rows.
TransferMatrix transfer_matrix(const std::vector<const TrainedDenoiser*>& zoo, const std::vector<Image>& noisy,
                               const std::vector<Image>& clean, const AttackConfig& cfg, double threshold);

/// Same, with attacks already generated per source (samples[s][i]).
TransferMatrix transfer_matrix(const std::vector<const TrainedDenoiser*>& zoo,
                               const std::vector<std::vector<AttackTriple>>& samples, double threshold);

void to_json(nlohmann::json& j, const TransferMatrix& m);
inline constexpr const char* kTransferCsvHeader =
    "source,target,mean_psnr_drop,mean_ssim_drop,mean_mae_increase,transfer_rate,n_admitted";
std::string transfer_to_csv(const TransferMatrix& m);

struct ResistanceRecord {
  std::string image_id;
  double psnr_benign = 0.0;
  double psnr_adversarial = 0.0;
  double drop = 0.0;
};

struct ResistanceSummary {
  std::string model_id;
  double mean_drop = 0.0;
  std::vector<ResistanceRecord> records;
};

/// Mean PSNR drop of d between D(x) and D(x') over the samples.
ResistanceSummary resistance_test(const TrainedDenoiser& d, const std::vector<AttackTriple>& samples);

void to_json(nlohmann::json& j, const ResistanceSummary& s);

/// Mean of PSNR(D(x)) - PSNR(D(x')).
double mean_psnr_drop(const TrainedDenoiser& d, const std::vector<AttackTriple>& samples);

}  // namespace advdn
