#include "advdn/advtrain.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "advdn/errors.hpp"
#include "advdn/metrics.hpp"
#include "advdn/noise.hpp"
#include "advdn/rng.hpp"

namespace advdn {

std::string to_string(Regeneration r) { return r == Regeneration::FrozenBase ? "frozen-base" : "per-epoch"; }

void AdvTrainConfig::validate() const {
  if (!(adversarial_fraction >= 0.0 && adversarial_fraction <= 1.0))
    throw ParameterError("adversarial fraction must lie in [0, 1]");
  attack.validate();
}

void to_json(nlohmann::json& j, const AdvTrainConfig& c) {
  j = {{"attack", c.attack},
       {"mix", {{"adversarial", c.adversarial_fraction}, {"gaussian", 1.0 - c.adversarial_fraction}}},
       {"retrain", c.retrain},
       {"regeneration", to_string(c.regeneration)},
       {"warm_start", c.warm_start}};
}

void from_json(const nlohmann::json& j, AdvTrainConfig& c) {
  c = AdvTrainConfig{};
  if (j.contains("attack")) c.attack = j.at("attack").get<AttackConfig>();
  if (j.contains("mix")) {
    const auto& m = j.at("mix");
    const double a = m.value("adversarial", 0.5), g = m.value("gaussian", 1.0 - a);
    if (std::abs(a + g - 1.0) > 1e-9) throw ConfigError("mix fractions must sum to 1");
    c.adversarial_fraction = a;
  }
  if (j.contains("retrain")) c.retrain = j.at("retrain").get<TrainConfig>();
  const std::string regen = j.value("regeneration", to_string(c.regeneration));
  if (regen == "frozen-base") c.regeneration = Regeneration::FrozenBase;
  else if (regen == "per-epoch") c.regeneration = Regeneration::PerEpoch;
  else throw ConfigError("unknown regeneration policy '" + regen + "'");
  c.warm_start = j.value("warm_start", c.warm_start);
}

bool is_adversarial_position(std::size_t position, double fraction) {
  const auto before = static_cast<long long>(std::floor(static_cast<double>(position) * fraction));
  const auto after = static_cast<long long>(std::floor(static_cast<double>(position + 1) * fraction));
  return after > before;
}

namespace {

std::uint64_t pool_seed(const AdvTrainConfig& cfg, std::size_t patch, const char* label) {
  return derive_seed(derive_seed(cfg.retrain.seed, label), static_cast<std::uint64_t>(patch));
}

AdversarialSample attack_patch(const TrainedDenoiser& model, const Image& clean, const AdvTrainConfig& cfg,
                               const TrainConfig& noise_cfg, std::uint64_t noise_seed, std::uint64_t attack_seed) {
  auto [noisy, level] = gaussian_training_input(clean, noise_cfg, noise_seed);
  AttackConfig ac = cfg.attack;
  ac.seed = attack_seed;
  ac.basis = AttackBasis::NoisyImage;
  return run_attack(model, noisy, clean, ac);
}

}  // namespace

TrainedDenoiser adversarial_train(std::string id, const TrainedDenoiser& base, std::span<const Image> patches,
                                  const AdvTrainConfig& cfg, AdvTrainStats* stats) {
  cfg.validate();
  if (!base.has_gradient()) throw UnsupportedOperation("adversarial training needs a residual-cnn base");
  const DenoiserSpec& spec = base.spec();
  const TrainConfig& tc = cfg.retrain;
  tc.validate(spec);
  if (patches.empty()) throw ParameterError("training needs at least one patch");
  const Shape patch_shape = patches.front().shape();
  const ConvStack stack(spec.channels, spec.depth, spec.width);

  AdvTrainStats local;
  AdvTrainStats& st = stats ? *stats : local;

  // Frozen pool: one adversarial observation per patch, generated against the base.
  std::vector<Image> pool;
  std::vector<char> pool_ok;
  if (cfg.regeneration == Regeneration::FrozenBase && cfg.adversarial_fraction > 0.0) {
    pool.resize(patches.size());
    pool_ok.assign(patches.size(), 1);
    int failures = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : failures)
    for (std::size_t i = 0; i < patches.size(); ++i) {
      try {
        pool[i] = attack_patch(base, patches[i], cfg, tc, pool_seed(cfg, i, "adv-noise"),
                               pool_seed(cfg, i, "adv-attack"))
                      .x_prime;
      } catch (const AttackError&) {
        pool_ok[i] = 0;
        ++failures;
      }
    }
    st.attack_failures += failures;
  }

  std::vector<float> params(base.weights().begin(), base.weights().end());
  if (!cfg.warm_start) params = initial_parameters(spec, tc);
  std::vector<float> current = params;

  std::vector<std::size_t> adv_count(tc.epochs, 0), seen(tc.epochs, 0);
  auto build = [&](int epoch, int step, std::span<const std::size_t> idx, TrainingBatch& batch) {
    const int n = static_cast<int>(idx.size());
    batch.noisy = kernels::Tensor<float>(spec.channels, n, patch_shape.height, patch_shape.width);
    batch.residual = batch.noisy;
    std::unique_ptr<TrainedDenoiser> live;
    if (cfg.regeneration == Regeneration::PerEpoch)
      live = std::make_unique<TrainedDenoiser>(base.id() + "~live", spec, current, base.metadata());
    std::size_t adv = 0;
    for (int b = 0; b < n; ++b) {
      const Image& clean = patches[idx[b]];
      const std::size_t position = static_cast<std::size_t>(step) * tc.batch_size + b;
      Image input;
      if (is_adversarial_position(position, cfg.adversarial_fraction)) {
        if (cfg.regeneration == Regeneration::FrozenBase) {
          if (!pool_ok[idx[b]]) {
            ++st.attack_failures;
            return false;
          }
          input = pool[idx[b]];
        } else {
          const std::uint64_t s = training_noise_seed(tc, epoch, position);
          try {
            input = attack_patch(*live, clean, cfg, tc, derive_seed(s, "adv-noise"), derive_seed(s, "adv-attack"))
                        .x_prime;
          } catch (const AttackError&) {
            ++st.attack_failures;
            return false;
          }
        }
        ++adv;
      } else {
        input = gaussian_training_input(clean, tc, training_noise_seed(tc, epoch, position)).first;
      }
      write_sample(batch.noisy, b, input);
      write_sample(batch.residual, b, difference(input, clean));
    }
    adv_count[epoch] += adv;
    seen[epoch] += n;
    return true;
  };
  auto observe = [&](int, int, std::span<const float> p) {
    if (cfg.regeneration == Regeneration::PerEpoch) current.assign(p.begin(), p.end());
  };

  params = fit_residual(stack, std::move(params), patches.size(), tc, build, &st.log, observe);
  st.skipped_batches = st.log.skipped_batches;
  st.adversarial_fraction_per_epoch.clear();
  for (int e = 0; e < tc.epochs; ++e)
    st.adversarial_fraction_per_epoch.push_back(seen[e] ? static_cast<double>(adv_count[e]) / seen[e] : 0.0);

  TrainingMetadata meta = base.metadata();
  meta.seed = tc.seed;
  meta.provenance = tc.provenance.empty() ? "advtrain:" + base.id() : tc.provenance;
  meta.epochs = tc.epochs;
  meta.final_loss = st.log.epoch_losses.empty() ? 0.0 : st.log.epoch_losses.back();
  meta.skipped_batches = st.log.skipped_batches;
  meta.origin = cfg.warm_start ? "warm-start" : "train";
  return TrainedDenoiser(std::move(id), spec, std::move(params), meta);
}

GapMeasurement measure_adversarial_gap(const TrainedDenoiser& d, const std::vector<Image>& noisy,
                                       const std::vector<Image>& clean, const AttackConfig& cfg) {
  if (noisy.size() != clean.size()) throw ParameterError("measure_adversarial_gap needs matching lists");
  std::vector<Image> adv(noisy.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    AttackConfig c = cfg;
    c.seed = derive_seed(cfg.seed, clean[i].id());
    adv[i] = run_attack(d, noisy[i], clean[i], c).x_prime;
  }
  return measure_fixed_gap(d, noisy, adv, clean);
}

GapMeasurement measure_fixed_gap(const TrainedDenoiser& d, const std::vector<Image>& noisy,
                                 const std::vector<Image>& adversarial, const std::vector<Image>& clean) {
  if (noisy.size() != clean.size() || adversarial.size() != clean.size())
    throw ParameterError("measure_fixed_gap needs matching lists");
  GapMeasurement g;
  g.per_image_gap.resize(clean.size());
  g.per_image_gaussian_psnr.resize(clean.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double benign = psnr(clean[i], d.denoise(noisy[i]));
    g.per_image_gaussian_psnr[i] = benign;
    g.per_image_gap[i] = benign - psnr(clean[i], d.denoise(adversarial[i]));
  }
  for (std::size_t i = 0; i < clean.size(); ++i) {
    g.mean_gap += g.per_image_gap[i];
    g.mean_gaussian_psnr += g.per_image_gaussian_psnr[i];
  }
  if (!clean.empty()) {
    g.mean_gap /= static_cast<double>(clean.size());
    g.mean_gaussian_psnr /= static_cast<double>(clean.size());
  }
  return g;
}

namespace {
nlohmann::json gap_json(const GapMeasurement& g) {
  return {{"mean_gap", g.mean_gap},
          {"mean_gaussian_psnr", g.mean_gaussian_psnr},
          {"per_image_gap", g.per_image_gap},
          {"per_image_gaussian_psnr", g.per_image_gaussian_psnr}};
}
}  // namespace

void to_json(nlohmann::json& j, const AdvTrainReport& r) {
  j = {{"base_id", r.base_id},
       {"model_id", r.model_id},
       {"image_ids", r.image_ids},
       {"self", {{"before", gap_json(r.self_before)}, {"after", gap_json(r.self_after)}}},
       {"gap_ratio", r.gap_ratio()},
       {"gaussian_psnr_delta", r.gaussian_delta()}};
  if (!r.cross_source_id.empty())
    j["cross"] = {{"source", r.cross_source_id},
                  {"before", gap_json(r.cross_before)},
                  {"after", gap_json(r.cross_after)}};
}

std::string advtrain_to_csv(const AdvTrainReport& r) {
  std::ostringstream os;
  os << kAdvTrainCsvHeader << '\n';
  for (std::size_t i = 0; i < r.image_ids.size(); ++i)
    os << r.image_ids[i] << ',' << format_fixed(r.self_before.per_image_gap.at(i)) << ','
       << format_fixed(r.self_after.per_image_gap.at(i)) << ','
       << format_fixed(r.self_before.per_image_gaussian_psnr.at(i)) << ','
       << format_fixed(r.self_after.per_image_gaussian_psnr.at(i)) << '\n';
  return os.str();
}

}  // namespace advdn
