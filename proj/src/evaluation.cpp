#include "advdn/evaluation.hpp"

#include <sstream>

#include "advdn/errors.hpp"
#include "advdn/metrics.hpp"
#include "advdn/rng.hpp"

namespace advdn {

FilterOutcome transfer_filter(const TrainedDenoiser& d1, const TrainedDenoiser& d2, const AttackTriple& t,
                              double threshold) {
  const double e_x = psnr(t.y, t.x);
  const double e1 = psnr(t.y, d1.denoise(t.x));
  const double e2 = psnr(t.y, d2.denoise(t.x));
  FilterOutcome f;
  f.d1_improves = e1 > e_x;
  f.d2_improves = e2 > e_x;
  if (f.d1_improves && f.d2_improves) f.source_drop = e1 - psnr(t.y, d1.denoise(t.x_prime)) > threshold;
  return f;
}

std::vector<std::size_t> filter_transfer_set(const TrainedDenoiser& d1, const TrainedDenoiser& d2,
                                             const std::vector<AttackTriple>& samples, double threshold) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (transfer_filter(d1, d2, samples[i], threshold).admitted()) keep.push_back(i);
  return keep;
}

void to_json(nlohmann::json& j, const TransferRecord& r) {
  j = {{"source", r.source_id},
       {"target", r.target_id},
       {"image_id", r.image_id},
       {"source_drop", r.source_drop},
       {"target_drop", r.target_drop},
       {"target_ssim_drop", r.target_ssim_drop},
       {"target_mae_increase", r.target_mae_increase},
       {"transferable", r.transferable},
       {"threshold", r.threshold}};
}

void from_json(const nlohmann::json& j, TransferRecord& r) {
  r.source_id = j.at("source").get<std::string>();
  r.target_id = j.at("target").get<std::string>();
  r.image_id = j.at("image_id").get<std::string>();
  r.source_drop = j.at("source_drop").get<double>();
  r.target_drop = j.at("target_drop").get<double>();
  r.target_ssim_drop = j.at("target_ssim_drop").get<double>();
  r.target_mae_increase = j.at("target_mae_increase").get<double>();
  r.transferable = j.at("transferable").get<bool>();
  r.threshold = j.at("threshold").get<double>();
}

const TransferCell& TransferMatrix::cell(const std::string& source, const std::string& target) const {
  for (const auto& c : cells)
    if (c.source_id == source && c.target_id == target) return c;
  throw ResolutionError("no transfer cell " + source + " -> " + target);
}

TransferMatrix aggregate_transfer(const std::vector<std::string>& models, const std::vector<TransferRecord>& records,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& census_totals,
                                  double threshold) {
  const std::size_t m = models.size();
  TransferMatrix out;
  out.models = models;
  out.records = records;
  out.threshold = threshold;
  out.cells.resize(m * m);
  auto index_of = [&](const std::string& id) {
    for (std::size_t k = 0; k < m; ++k)
      if (models[k] == id) return k;
    throw ResolutionError("transfer record references unknown model " + id);
  };
  for (std::size_t s = 0; s < m; ++s)
    for (std::size_t t = 0; t < m; ++t) {
      out.cells[s * m + t].source_id = models[s];
      out.cells[s * m + t].target_id = models[t];
    }
  std::vector<int> transferable(m * m, 0);
  for (const auto& r : records) {
    const std::size_t k = index_of(r.source_id) * m + index_of(r.target_id);
    TransferCell& c = out.cells[k];
    c.mean_psnr_drop += r.target_drop;
    c.mean_ssim_drop += r.target_ssim_drop;
    c.mean_mae_increase += r.target_mae_increase;
    c.n_admitted += 1;
    transferable[k] += r.transferable;
  }
  for (std::size_t k = 0; k < m * m; ++k) {
    TransferCell& c = out.cells[k];
    if (c.n_admitted > 0) {
      c.mean_psnr_drop /= c.n_admitted;
      c.mean_ssim_drop /= c.n_admitted;
      c.mean_mae_increase /= c.n_admitted;
      c.transfer_rate = static_cast<double>(transferable[k]) / c.n_admitted;
    }
  }
  for (const auto& [k, total] : census_totals)
    if (k < out.cells.size()) out.cells[k].n_total = static_cast<int>(total);
  return out;
}

TransferMatrix transfer_matrix(const std::vector<const TrainedDenoiser*>& zoo,
                               const std::vector<std::vector<AttackTriple>>& samples, double threshold) {
  if (zoo.size() < 2) throw ParameterError("transfer_matrix needs at least two models");
  if (samples.size() != zoo.size()) throw ParameterError("transfer_matrix needs one sample list per model");
  const std::size_t m = zoo.size();
  std::vector<std::string> ids;
  for (const auto* d : zoo) ids.push_back(d->id());

  std::vector<TransferRecord> records;
  std::vector<std::pair<std::size_t, std::size_t>> totals;
  for (std::size_t s = 0; s < m; ++s) {
    const TrainedDenoiser& src = *zoo[s];
    const auto& list = samples[s];
    // Per-image quantities shared across targets.
    std::vector<double> e_x(list.size()), e_src(list.size()), e_src_adv(list.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < list.size(); ++i) {
      e_x[i] = psnr(list[i].y, list[i].x);
      e_src[i] = psnr(list[i].y, src.denoise(list[i].x));
      e_src_adv[i] = psnr(list[i].y, src.denoise(list[i].x_prime));
    }
    for (std::size_t t = 0; t < m; ++t) {
      const TrainedDenoiser& tgt = *zoo[t];
      totals.emplace_back(s * m + t, list.size());
      std::vector<char> admitted(list.size(), 0);
      std::vector<TransferRecord> row(list.size());
#pragma omp parallel for schedule(dynamic)
      for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& tr = list[i];
        const MetricRecord benign = evaluate(tr.y, tgt.denoise(tr.x));
        const double source_drop = e_src[i] - e_src_adv[i];
        if (!(e_src[i] > e_x[i] && benign.psnr > e_x[i] && source_drop > threshold)) continue;
        const MetricRecord adv = evaluate(tr.y, tgt.denoise(tr.x_prime));
        TransferRecord r;
        r.source_id = src.id();
        r.target_id = tgt.id();
        r.image_id = tr.y.id();
        r.source_drop = source_drop;
        r.target_drop = benign.psnr - adv.psnr;
        r.target_ssim_drop = benign.ssim - adv.ssim;
        r.target_mae_increase = adv.mae - benign.mae;
        r.transferable = r.target_drop > threshold;
        r.threshold = threshold;
        row[i] = r;
        admitted[i] = 1;
      }
      for (std::size_t i = 0; i < list.size(); ++i)
        if (admitted[i]) records.push_back(row[i]);
    }
  }
  return aggregate_transfer(ids, records, totals, threshold);
}

TransferMatrix transfer_matrix(const std::vector<const TrainedDenoiser*>& zoo, const std::vector<Image>& noisy,
                               const std::vector<Image>& clean, const AttackConfig& cfg, double threshold) {
  if (noisy.size() != clean.size()) throw ParameterError("transfer_matrix needs matching noisy/clean lists");
  std::vector<std::vector<AttackTriple>> samples(zoo.size());
  for (std::size_t s = 0; s < zoo.size(); ++s) {
    if (!zoo[s]->has_gradient()) continue;
    samples[s].resize(noisy.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      AttackConfig c = cfg;
      c.seed = derive_seed(derive_seed(cfg.seed, zoo[s]->id()), clean[i].id());
      const AdversarialSample a = run_attack(*zoo[s], noisy[i], clean[i], c);
      samples[s][i] = {noisy[i], a.x_prime, clean[i]};
    }
  }
  return transfer_matrix(zoo, samples, threshold);
}

void to_json(nlohmann::json& j, const TransferMatrix& m) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : m.cells)
    cells.push_back({{"source", c.source_id},
                     {"target", c.target_id},
                     {"mean_psnr_drop", c.mean_psnr_drop},
                     {"mean_ssim_drop", c.mean_ssim_drop},
                     {"mean_mae_increase", c.mean_mae_increase},
                     {"transfer_rate", c.transfer_rate},
                     {"n_admitted", c.n_admitted},
                     {"n_total", c.n_total}});
  j = {{"models", m.models}, {"threshold", m.threshold}, {"cells", cells}, {"records", m.records}};
}

std::string transfer_to_csv(const TransferMatrix& m) {
  std::ostringstream os;
  os << kTransferCsvHeader << '\n';
  for (const auto& c : m.cells)
    os << c.source_id << ',' << c.target_id << ',' << format_fixed(c.mean_psnr_drop) << ','
       << format_fixed(c.mean_ssim_drop) << ',' << format_fixed(c.mean_mae_increase) << ','
       << format_fixed(c.transfer_rate) << ',' << c.n_admitted << '\n';
  return os.str();
}

ResistanceSummary resistance_test(const TrainedDenoiser& d, const std::vector<AttackTriple>& samples) {
  ResistanceSummary out;
  out.model_id = d.id();
  out.records.resize(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    ResistanceRecord r;
    r.image_id = s.y.id();
    r.psnr_benign = psnr(s.y, d.denoise(s.x));
    r.psnr_adversarial = psnr(s.y, d.denoise(s.x_prime));
    r.drop = r.psnr_benign - r.psnr_adversarial;
    out.records[i] = r;
  }
  for (const auto& r : out.records) out.mean_drop += r.drop;
  if (!samples.empty()) out.mean_drop /= static_cast<double>(samples.size());
  return out;
}

void to_json(nlohmann::json& j, const ResistanceSummary& s) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : s.records)
    recs.push_back({{"image_id", r.image_id},
                    {"psnr_benign", r.psnr_benign},
                    {"psnr_adversarial", r.psnr_adversarial},
                    {"drop", r.drop}});
  j = {{"model_id", s.model_id}, {"mean_drop", s.mean_drop}, {"records", recs}};
}

double mean_psnr_drop(const TrainedDenoiser& d, const std::vector<AttackTriple>& samples) {
  return resistance_test(d, samples).mean_drop;
}

}  // namespace advdn
