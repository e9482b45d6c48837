#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include "advdn/dataset.hpp"
#include "advdn/errors.hpp"
#include "advdn/evaluation.hpp"
#include "advdn/experiment.hpp"
#include "advdn/geometry.hpp"
#include "advdn/io.hpp"
#include "advdn/metrics.hpp"
#include "advdn/model_io.hpp"
#include "advdn/noise.hpp"
#include "advdn/rng.hpp"
#include "advdn/zoo.hpp"

#ifndef ADVDN_VERSION
#define ADVDN_VERSION "0.0.0"
#endif

namespace advdn {

std::string code_version() { return ADVDN_VERSION; }

ArtifactStore::ArtifactStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

bool ArtifactStore::exists(const std::string& rel) const { return std::filesystem::exists(root_ / rel); }

std::string ArtifactStore::read(const std::string& rel) const {
  if (!exists(rel)) throw ResolutionError("missing artifact " + (root_ / rel).string());
  return read_text_file(root_ / rel);
}

void ArtifactStore::write(const std::string& rel, std::string_view bytes) {
  const auto p = root_ / rel;
  if (rel != "manifest.json" && std::filesystem::exists(p)) {
    if (read_text_file(p) == bytes) return;
    throw ArtifactConflict("artifact " + p.string() + " already exists with different contents");
  }
  std::filesystem::create_directories(p.parent_path());
  const auto tmp = p.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, p);
}

std::map<std::string, std::string> ArtifactStore::checksums() const {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root_)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = std::filesystem::relative(e.path(), root_).generic_string();
    if (rel == "manifest.json" || rel.ends_with(".partial")) continue;
    out[rel] = hex64(fnv1a64(read_text_file(e.path())));
  }
  return out;
}

void ArtifactStore::write_manifest(const ExperimentConfig& cfg, const std::string& command) const {
  nlohmann::json m;
  if (std::filesystem::exists(root_ / "manifest.json")) {
    try {
      m = nlohmann::json::parse(read_text_file(root_ / "manifest.json"));
    } catch (const nlohmann::json::exception&) {
      m = nlohmann::json::object();
    }
  }
  m["config_hash"] = hex64(cfg.hash());
  m["config"] = cfg;
  m["code_version"] = code_version();
  auto& done = m["commands"];
  if (!done.is_array()) done = nlohmann::json::array();
  if (std::find(done.begin(), done.end(), command) == done.end()) done.push_back(command);
  m["artifacts"] = checksums();
  std::ofstream out(root_ / "manifest.json", std::ios::binary);
  out << m.dump(2) << '\n';
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const std::optional<std::string>& out) {
  if (out) return *out;
  if (!cfg.output.empty()) return cfg.resolve(cfg.output);
  const std::string run = cfg.run_id.empty() ? "run-" + hex64(cfg.hash()) : cfg.run_id;
  if (const char* root = std::getenv("ADVDN_OUTPUT_ROOT"); root && *root) return std::filesystem::path(root) / run;
  return std::filesystem::path("runs") / run;
}

namespace {

using Log = std::ostream*;

void say(Log log, const std::string& s) {
  if (log) *log << s << '\n' << std::flush;
}

std::string f4(double v) { return format_fixed(v); }

std::string field_bytes(const NoiseField& f) {
  std::string out(f.size() * 4, '\0');
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(f[i]));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    std::memcpy(out.data() + 4 * i, &bits, 4);
  }
  return out;
}

void store_image(ArtifactStore& store, const std::string& rel, const Image& img, int depth) {
  const auto tmp = store.root() / (".scratch-" + hex64(fnv1a64(rel)) + std::filesystem::path(rel).extension().string());
  save_image(img, tmp, depth);
  const std::string bytes = read_text_file(tmp);
  std::filesystem::remove(tmp);
  store.write(rel, bytes);
}

std::vector<Image> load_split(const ExperimentConfig& cfg, const std::string& manifest) {
  const auto path = cfg.resolve(manifest);
  if (!std::filesystem::exists(path))
    throw ResolutionError("dataset manifest " + path.string() + " not found (run `corpus` to synthesize one)");
  return load_images(load_manifest(path));
}

TestSet load_test_set(const ExperimentConfig& cfg) {
  return make_test_set(load_split(cfg, cfg.test_manifest), cfg.test_sigma, derive_seed(cfg.seed, "test-noise"));
}

std::string model_rel(const std::string& id) { return "models/" + id + ".advdn"; }

TrainedDenoiser resolve_model(const ExperimentConfig& cfg, const ArtifactStore& store, const std::string& id) {
  if (store.exists(model_rel(id))) return load_model(store.path(model_rel(id)));
  if (const ModelEntry* m = cfg.find_model(id); m && m->spec.kind == DenoiserKind::TvClassical)
    return TrainedDenoiser::tv_classical(id, m->spec.tv_lambda, m->spec.tv_iterations, m->spec.channels);
  throw ResolutionError("model '" + id + "' not found under " + store.path("models").string() +
                        " (run `train` first)");
}

std::uint64_t image_seed(const ExperimentConfig& cfg, const std::string& label, const std::string& image_id) {
  return derive_seed(derive_seed(cfg.seed, label), image_id);
}

AttackConfig attack_for(const ExperimentConfig& cfg, const std::string& mode) {
  if (cfg.attack) {
    auto it = cfg.attack->modes.find(mode);
    if (it != cfg.attack->modes.end()) return it->second;
  }
  if (mode == "l2pgd") return AttackConfig::l2();
  if (mode == "clean") return AttackConfig::clean();
  if (mode == "pgd") return AttackConfig::pgd();
  throw ConfigError("unknown attack mode '" + mode + "' (expected pgd, l2pgd or clean)");
}

AdversarialSample attack_image(const TrainedDenoiser& d, const TestSet& t, std::size_t i, AttackConfig c,
                               const std::string& mode) {
  if (mode == "clean") {
    c.basis = AttackBasis::CleanImage;
    return attack_on_clean(d, t.clean[i], c);
  }
  if (mode == "l2pgd") return l2_denoising_pgd(d, t.noisy[i], t.clean[i], c, &t.noise[i]);
  return denoising_pgd(d, t.noisy[i], t.clean[i], c, &t.noise[i]);
}

// ---------------------------------------------------------------------------

void cmd_corpus(const ExperimentConfig& cfg, Log log) {
  if (!cfg.corpus_train && !cfg.corpus_test) throw ConfigError("`corpus` needs a corpus block");
  auto make = [&](const std::optional<CorpusSpec>& spec, const std::string& manifest, const char* label) {
    if (!spec) return;
    const auto path = cfg.resolve(manifest);
    if (std::filesystem::exists(path)) {
      say(log, std::string(label) + ": " + path.string() + " already present");
      return;
    }
    CorpusSpec s = *spec;
    s.seed = derive_seed(cfg.seed, std::string("corpus/") + label);
    const DatasetManifest m = write_corpus(path.parent_path(), s);
    save_manifest(m, path);
    say(log, std::string(label) + ": wrote " + std::to_string(m.entries.size()) + " images to " +
                 path.parent_path().string());
  };
  make(cfg.corpus_train, cfg.train_manifest, "train");
  make(cfg.corpus_test, cfg.test_manifest, "test");
}

void cmd_train(const ExperimentConfig& cfg, ArtifactStore& store, Log log) {
  if (cfg.models.empty()) throw ConfigError("`train` needs a models list");
  std::vector<Image> patches;
  for (const auto& m : cfg.models) {
    nlohmann::json sidecar = {{"id", m.id}, {"spec", m.spec}};
    if (m.spec.kind == DenoiserKind::ResidualCnn) {
      TrainConfig tc = m.train;
      tc.seed = derive_seed(cfg.seed, "train/" + m.id);
      tc.provenance = "train:" + m.id;
      sidecar["train"] = tc;
      sidecar["dataset"] = hex64(fnv1a64(read_text_file(cfg.resolve(cfg.train_manifest))));
      const std::string side = sidecar.dump(2) + "\n";
      if (store.exists(model_rel(m.id))) {
        store.write("models/" + m.id + ".json", side);  // conflicts if the recipe changed
        say(log, m.id + ": already trained");
        continue;
      }
      if (patches.empty()) patches = extract_patches(load_manifest(cfg.resolve(cfg.train_manifest)));
      TrainingLog tl;
      say(log, m.id + ": training on " + std::to_string(patches.size()) + " patches for " +
                   std::to_string(tc.epochs) + " epochs");
      const TrainedDenoiser d = train(m.id, m.spec, patches, tc, &tl);
      for (std::size_t e = 0; e < tl.epoch_losses.size(); ++e)
        say(log, "  epoch " + std::to_string(e + 1) + " loss " + std::to_string(tl.epoch_losses[e]));
      store.write("models/" + m.id + ".json", side);
      store.write(model_rel(m.id), serialize_model(d));
    } else {
      const TrainedDenoiser d = TrainedDenoiser::tv_classical(m.id, m.spec.tv_lambda, m.spec.tv_iterations,
                                                              m.spec.channels);
      store.write("models/" + m.id + ".json", sidecar.dump(2) + "\n");
      store.write(model_rel(m.id), serialize_model(d));
      say(log, m.id + ": classical model recorded");
    }
  }
}

inline constexpr const char* kAttackCsvHeader =
    "image_id,psnr_benign,psnr_adversarial,psnr_drop,ssim_drop,mae_increase,perturbation_std,"
    "control_drop,adversarial_vs_control,w1_composed";

void cmd_attack(const ExperimentConfig& cfg, ArtifactStore& store, const std::string& mode, Log log) {
  if (!cfg.attack) throw ConfigError("`attack` needs an attack block");
  const AttackConfig base = attack_for(cfg, mode);
  base.validate();
  const TrainedDenoiser d = resolve_model(cfg, store, cfg.attack->model);
  const TestSet t = load_test_set(cfg);
  const std::string dir = "attacks/" + d.id() + "/" + mode + "/";
  const std::size_t n = t.clean.size();
  std::vector<AdversarialSample> samples(n);
  std::vector<nlohmann::json> sidecars(n);
  std::vector<std::string> rows(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& id = t.clean[i].id();
    AttackConfig c = base;
    c.seed = image_seed(cfg, "attack/" + mode + "/" + d.id(), id);
    AdversarialSample s = attack_image(d, t, i, c, mode);
    const MetricRecord benign = evaluate(s.y, d.denoise(s.x));
    const MetricRecord adv = evaluate(s.y, d.denoise(s.x_prime));
    const Image control = matched_gaussian_control(s.x_prime, s.y, derive_seed(c.seed, "control"));
    const double control_psnr = psnr(s.y, d.denoise(control));
    const double w1 = cfg.test_sigma > 0 ? wasserstein_to_gaussian(difference(s.x_prime, s.y), cfg.test_sigma) : 0.0;
    std::ostringstream row;
    row << id << ',' << f4(benign.psnr) << ',' << f4(adv.psnr) << ',' << f4(benign.psnr - adv.psnr) << ','
        << f4(benign.ssim - adv.ssim) << ',' << f4(adv.mae - benign.mae) << ',' << f4(stddev(s.v)) << ','
        << f4(benign.psnr - control_psnr) << ',' << f4(control_psnr - adv.psnr) << ',' << f4(w1);
    rows[i] = row.str();
    sidecars[i] = {{"image_id", id},
                   {"mode", mode},
                   {"source_model", d.id()},
                   {"config", c},
                   {"shape", {s.x.height(), s.x.width(), s.x.channels()}},
                   {"base_hashes",
                    {{"x", hex64(fnv1a64(field_bytes(difference(s.x, Image::filled(s.x.shape(), 0.0)))))},
                     {"n", hex64(fnv1a64(field_bytes(s.n)))},
                     {"y", hex64(fnv1a64(field_bytes(difference(s.y, Image::filled(s.y.shape(), 0.0)))))}}},
                   {"metrics", {{"benign", benign}, {"adversarial", adv}, {"control_psnr", control_psnr}}},
                   {"perturbation", {{"linf", linf_norm(s.v)}, {"l2", l2_norm(s.v)}, {"std", stddev(s.v)}}},
                   {"w1_composed", w1}};
    samples[i] = std::move(s);
  }
  std::string csv = std::string(kAttackCsvHeader) + "\n";
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& id = t.clean[i].id();
    store_image(store, dir + id + ".png", samples[i].x_prime, 16);
    store.write(dir + id + ".v.f32", field_bytes(samples[i].v));
    store.write(dir + id + ".n.f32", field_bytes(samples[i].n));
    store.write(dir + id + ".json", sidecars[i].dump(2) + "\n");
    csv += rows[i] + "\n";
  }
  store.write(dir + "records.csv", csv);
  say(log, "attack " + mode + " on " + d.id() + ": " + std::to_string(n) + " images -> " + store.path(dir).string());
}

void cmd_sweep(const ExperimentConfig& cfg, ArtifactStore& store, Log log) {
  if (!cfg.sweep) throw ConfigError("`sweep` needs a sweep block");
  const SweepBlock& b = *cfg.sweep;
  const TrainedDenoiser d = resolve_model(cfg, store, b.model);
  const TestSet t = load_test_set(cfg);
  const std::string src = "attacks/" + d.id() + "/" + b.attack + "/";
  const std::string dir = "sweeps/" + d.id() + "/" + b.attack + (b.perturbation == "gaussian" ? "-gaussian" : "") + "/";
  std::vector<SweepResult> results(t.clean.size());
  for (std::size_t i = 0; i < t.clean.size(); ++i) {
    const Image& u = t.clean[i];
    const std::string id = u.id();
    if (!store.exists(src + id + ".v.f32"))
      throw ResolutionError("missing attack artifacts " + store.path(src).string() + " (run `attack " + b.attack +
                            "` first)");
    const NoiseField n = load_field(store.path(src + id + ".n.f32"), u.shape());
    NoiseField v = load_field(store.path(src + id + ".v.f32"), u.shape());
    if (b.perturbation == "gaussian") {
      Rng rng(image_seed(cfg, "sweep/gaussian-direction", id));
      NoiseField g = gaussian_field(u.shape(), 1.0, rng);
      v = (l2_norm(v) / l2_norm(g)) * g;
    }
    results[i] = sweep_circle(d, u, n, v, b.count, b.threshold);
  }
  std::string summary = "image_id,arc_size,contiguous,arc_start_degrees,arc_end_degrees\n";
  int contiguous = 0;
  for (const auto& r : results) {
    store.write(dir + r.image_id + ".json", nlohmann::json(r).dump(2) + "\n");
    store.write(dir + r.image_id + ".csv", sweep_to_csv(r));
    std::string start, end;
    if (r.arc_contiguous()) {
      ++contiguous;
      std::vector<char> in(r.count, 0);
      for (int k : r.arc) in[k] = 1;
      for (int k = 0; k < r.count; ++k) {
        if (in[k] && !in[(k + r.count - 1) % r.count]) start = f4(360.0 * k / r.count);
        if (in[k] && !in[(k + 1) % r.count]) end = f4(360.0 * k / r.count);
      }
    }
    summary += r.image_id + "," + std::to_string(r.arc.size()) + "," + (r.arc_contiguous() ? "1" : "0") + "," +
               start + "," + end + "\n";
  }
  double iou = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < results.size(); ++i)
    for (std::size_t j = i + 1; j < results.size(); ++j, ++pairs) iou += arc_overlap(results[i], results[j]);
  store.write(dir + "summary.csv", summary);
  const nlohmann::json js = {{"model", d.id()},
                             {"attack", b.attack},
                             {"perturbation", b.perturbation},
                             {"count", b.count},
                             {"threshold", b.threshold},
                             {"images", results.size()},
                             {"nonempty_contiguous", contiguous},
                             {"mean_pairwise_iou", pairs ? iou / pairs : 1.0}};
  store.write(dir + "summary.json", js.dump(2) + "\n");
  say(log, "sweep " + d.id() + ": " + std::to_string(contiguous) + "/" + std::to_string(results.size()) +
               " contiguous nonempty arcs");
}

void cmd_combine(const ExperimentConfig& cfg, ArtifactStore& store, Log log) {
  if (!cfg.combine) throw ConfigError("`combine` needs a combine block");
  const CombineBlock& b = *cfg.combine;
  const TrainedDenoiser d = resolve_model(cfg, store, b.model);
  const TestSet t = load_test_set(cfg);
  const AttackConfig base = attack_for(cfg, "pgd");
  const std::size_t n = t.clean.size();
  std::vector<std::vector<ProbePoint>> probes(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    AttackConfig a = base, c = base;
    a.seed = image_seed(cfg, "combine/a/" + d.id(), t.clean[i].id());
    c.seed = image_seed(cfg, "combine/b/" + d.id(), t.clean[i].id());
    const auto s1 = denoising_pgd(d, t.noisy[i], t.clean[i], a, &t.noise[i]);
    const auto s2 = denoising_pgd(d, t.noisy[i], t.clean[i], c, &t.noise[i]);
    probes[i] = linear_combination_probe(d, s1.x_prime, s2.x_prime, t.clean[i], b.lambdas, t.noisy[i]);
  }
  std::string csv = "image_id,lambda,psnr,psnr_drop,adversarial\n";
  nlohmann::json pairs = nlohmann::json::array();
  int good = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int adv = 0;
    for (const auto& p : probes[i]) {
      const bool is_adv = p.psnr_drop > b.threshold;
      adv += is_adv;
      csv += t.clean[i].id() + "," + f4(p.lambda) + "," + f4(p.psnr) + "," + f4(p.psnr_drop) + "," +
             (is_adv ? "1" : "0") + "\n";
    }
    const double frac = static_cast<double>(adv) / static_cast<double>(probes[i].size());
    good += frac >= 0.8;
    pairs.push_back({{"image_id", t.clean[i].id()}, {"adversarial_fraction", frac}});
  }
  store.write("reports/combine-" + d.id() + ".csv", csv);
  const nlohmann::json js = {{"model", d.id()},
                             {"threshold", b.threshold},
                             {"lambdas", b.lambdas},
                             {"pairs", pairs},
                             {"pairs_mostly_adversarial", n ? static_cast<double>(good) / n : 0.0}};
  store.write("reports/combine-" + d.id() + ".json", js.dump(2) + "\n");
  say(log, "combine " + d.id() + ": " + std::to_string(good) + "/" + std::to_string(n) +
               " pairs keep >= 80% of interior mixes adversarial");
}

void cmd_transfer(const ExperimentConfig& cfg, ArtifactStore& store, Log log) {
  if (!cfg.transfer) throw ConfigError("`transfer` needs a transfer block");
  const TransferBlock& b = *cfg.transfer;
  b.attack.validate();
  std::vector<TrainedDenoiser> models;
  for (const auto& id : b.models) models.push_back(resolve_model(cfg, store, id));
  std::vector<const TrainedDenoiser*> zoo;
  for (const auto& m : models) zoo.push_back(&m);
  const TestSet t = load_test_set(cfg);
  std::vector<std::vector<AttackTriple>> samples(zoo.size());
  for (std::size_t s = 0; s < zoo.size(); ++s) {
    if (!zoo[s]->has_gradient()) continue;
    samples[s].resize(t.clean.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < t.clean.size(); ++i) {
      AttackConfig c = b.attack;
      c.seed = image_seed(cfg, "transfer/" + zoo[s]->id(), t.clean[i].id());
      const auto a = run_attack(*zoo[s], t.noisy[i], t.clean[i], c, &t.noise[i]);
      samples[s][i] = {t.noisy[i], a.x_prime, t.clean[i]};
    }
  }
  const TransferMatrix m = transfer_matrix(zoo, samples, b.threshold);
  store.write("reports/transfer.csv", transfer_to_csv(m));
  store.write("reports/transfer.json", nlohmann::json(m).dump(2) + "\n");
  for (const auto& c : m.cells)
    if (c.source_id != c.target_id && c.n_admitted > 0)
      say(log, "transfer " + c.source_id + " -> " + c.target_id + ": rate " + f4(c.transfer_rate) + " over " +
                   std::to_string(c.n_admitted) + " admitted");
}

void cmd_advtrain(const ExperimentConfig& cfg, ArtifactStore& store, Log log) {
  if (!cfg.advtrain) throw ConfigError("`advtrain` needs an advtrain block");
  const AdvTrainBlock& b = *cfg.advtrain;
  const TrainedDenoiser base = resolve_model(cfg, store, b.base);
  AdvTrainConfig ac = b.cfg;
  ac.retrain.seed = derive_seed(cfg.seed, "advtrain/" + b.id);
  ac.retrain.provenance = "advtrain:" + base.id();
  if (base.spec().blind) {
    ac.retrain.sigma.reset();
    if (!ac.retrain.sigma_range)
      ac.retrain.sigma_range = std::make_pair(base.metadata().sigma_min, base.metadata().sigma_max);
  } else {
    ac.retrain.sigma_range.reset();
    if (!ac.retrain.sigma) ac.retrain.sigma = base.metadata().sigma_min;
  }
  const TestSet t = load_test_set(cfg);
  TrainedDenoiser adv = base;
  AdvTrainStats stats;
  if (store.exists(model_rel(b.id))) {
    adv = load_model(store.path(model_rel(b.id)));
    say(log, b.id + ": already trained");
  } else {
    const auto patches = extract_patches(load_manifest(cfg.resolve(cfg.train_manifest)));
    say(log, b.id + ": adversarial retraining from " + base.id() + " on " + std::to_string(patches.size()) +
                 " patches");
    adv = adversarial_train(b.id, base, patches, ac, &stats);
    store.write(model_rel(b.id), serialize_model(adv));
    nlohmann::json side = {{"id", b.id},
                           {"base", base.id()},
                           {"config", ac},
                           {"adversarial_fraction_per_epoch", stats.adversarial_fraction_per_epoch},
                           {"attack_failures", stats.attack_failures},
                           {"skipped_batches", stats.skipped_batches},
                           {"epoch_losses", stats.log.epoch_losses}};
    store.write("models/" + b.id + ".json", side.dump(2) + "\n");
  }

  AttackConfig gap = ac.attack;
  gap.seed = derive_seed(cfg.seed, "advtrain-gap");
  AdvTrainReport r;
  r.base_id = base.id();
  r.model_id = adv.id();
  for (const auto& y : t.clean) r.image_ids.push_back(y.id());
  r.self_before = measure_adversarial_gap(base, t.noisy, t.clean, gap);
  r.self_after = measure_adversarial_gap(adv, t.noisy, t.clean, gap);
  if (!b.cross_source.empty()) {
    const TrainedDenoiser cross = resolve_model(cfg, store, b.cross_source);
    std::vector<Image> xs(t.clean.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < t.clean.size(); ++i) {
      AttackConfig c = ac.attack;
      c.seed = image_seed(cfg, "advtrain-cross/" + cross.id(), t.clean[i].id());
      xs[i] = run_attack(cross, t.noisy[i], t.clean[i], c, &t.noise[i]).x_prime;
    }
    r.cross_source_id = cross.id();
    r.cross_before = measure_fixed_gap(base, t.noisy, xs, t.clean);
    r.cross_after = measure_fixed_gap(adv, t.noisy, xs, t.clean);
  }
  store.write("reports/advtrain-" + b.id + ".json", nlohmann::json(r).dump(2) + "\n");
  store.write("reports/advtrain-" + b.id + ".csv", advtrain_to_csv(r));
  say(log, "advtrain " + b.id + ": self gap " + f4(r.self_before.mean_gap) + " -> " + f4(r.self_after.mean_gap) +
               " dB, Gaussian PSNR " + f4(r.self_before.mean_gaussian_psnr) + " -> " +
               f4(r.self_after.mean_gaussian_psnr) + " dB");
}

void cmd_resist(const ExperimentConfig& cfg, ArtifactStore& store, Log log) {
  if (!cfg.resist) throw ConfigError("`resist` needs a resist block");
  const ResistBlock& b = *cfg.resist;
  const TrainedDenoiser src = resolve_model(cfg, store, b.source);
  const TrainedDenoiser classical = resolve_model(cfg, store, b.classical);
  const TestSet t = load_test_set(cfg);
  std::vector<AttackTriple> triples(t.clean.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < t.clean.size(); ++i) {
    AttackConfig c = b.attack;
    c.seed = image_seed(cfg, "resist/" + src.id(), t.clean[i].id());
    const auto a = run_attack(src, t.noisy[i], t.clean[i], c, &t.noise[i]);
    triples[i] = {t.noisy[i], a.x_prime, t.clean[i]};
  }
  const ResistanceSummary rc = resistance_test(classical, triples);
  const ResistanceSummary rs = resistance_test(src, triples);
  std::string csv = "image_id,classical_drop,source_drop\n";
  for (std::size_t i = 0; i < triples.size(); ++i)
    csv += rc.records[i].image_id + "," + f4(rc.records[i].drop) + "," + f4(rs.records[i].drop) + "\n";
  store.write("reports/resist-" + classical.id() + ".csv", csv);
  store.write("reports/resist-" + classical.id() + ".json",
              nlohmann::json({{"source", src.id()}, {"classical", rc}, {"source_self", rs}}).dump(2) + "\n");
  say(log, "resist " + classical.id() + ": mean drop " + f4(rc.mean_drop) + " dB vs " + src.id() + " " +
               f4(rs.mean_drop) + " dB");
}

// -- report -----------------------------------------------------------------

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

double column_mean(const std::vector<std::vector<std::string>>& rows, const std::string& column) {
  if (rows.size() < 2) return 0.0;
  const auto& header = rows.front();
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw FormatError("records lack column " + column);
  const std::size_t k = static_cast<std::size_t>(it - header.begin());
  double sum = 0.0;
  for (std::size_t r = 1; r < rows.size(); ++r) sum += std::stod(rows[r].at(k));
  return sum / static_cast<double>(rows.size() - 1);
}

struct ReportRow {
  std::string quantity, subject, measured, desk, published;
};

std::vector<std::string> sorted_dirs(const std::filesystem::path& p) {
  std::vector<std::string> out;
  if (!std::filesystem::exists(p)) return out;
  for (const auto& e : std::filesystem::directory_iterator(p))
    if (e.is_directory()) out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> sorted_files(const std::filesystem::path& p, const std::string& prefix,
                                      const std::string& suffix) {
  std::vector<std::string> out;
  if (!std::filesystem::exists(p)) return out;
  for (const auto& e : std::filesystem::directory_iterator(p)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with(prefix) && name.ends_with(suffix)) out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void cmd_report(const ExperimentConfig& cfg, ArtifactStore& store, Log log) {
  std::vector<ReportRow> rows;
  std::string inputs;
  auto take = [&](const std::string& rel) {
    std::string text = store.read(rel);
    inputs += rel + "\n" + text;
    return text;
  };

  for (const auto& model : sorted_dirs(store.path("attacks"))) {
    bool blind = false;
    if (store.exists(model_rel(model))) blind = load_model(store.path(model_rel(model))).spec().blind;
    for (const auto& mode : sorted_dirs(store.path("attacks/" + model))) {
      const std::string rel = "attacks/" + model + "/" + mode + "/records.csv";
      if (!store.exists(rel)) continue;
      const auto recs = parse_csv(take(rel));
      const std::string subject = model + " " + mode;
      if (mode == "pgd") {
        rows.push_back({"mean_psnr_drop", subject, f4(column_mean(recs, "psnr_drop")), ">= 0.3",
                        blind ? "4.012 (full-scale blind model)" : "0.807 (full-scale non-blind model)"});
        rows.push_back({"mean_control_drop", subject, f4(column_mean(recs, "control_drop")), "< 0.15",
                        "level shift not the cause"});
      } else if (mode == "l2pgd") {
        rows.push_back({"mean_psnr_drop", subject, f4(column_mean(recs, "psnr_drop")), ">= 0.6 x pgd drop",
                        "0.8051 vs 1.0635"});
        rows.push_back({"mean_w1_composed", subject, f4(column_mean(recs, "w1_composed")), "<= pgd w1",
                        "0.0017 vs 0.0024"});
      } else if (mode == "clean") {
        rows.push_back({"mean_drop_vs_matched_control", subject, f4(column_mean(recs, "adversarial_vs_control")),
                        "< 0.5 x pgd drop", "little adversarial effect"});
      }
      rows.push_back({"mean_ssim_drop", subject, f4(column_mean(recs, "ssim_drop")), "> 0", "0.044 (non-blind)"});
      rows.push_back({"mean_mae_increase", subject, f4(column_mean(recs, "mae_increase")), "> 0", ""});
    }
  }

  if (store.exists("reports/transfer.json")) {
    const auto j = nlohmann::json::parse(take("reports/transfer.json"));
    const auto models = j.at("models").get<std::vector<std::string>>();
    const auto records = j.at("records").get<std::vector<TransferRecord>>();
    std::vector<std::pair<std::size_t, std::size_t>> totals;
    for (std::size_t k = 0; k < j.at("cells").size(); ++k)
      totals.emplace_back(k, j.at("cells")[k].at("n_total").get<std::size_t>());
    const TransferMatrix m = aggregate_transfer(models, records, totals, j.at("threshold").get<double>());
    for (const auto& c : m.cells) {
      if (c.source_id == c.target_id || c.n_admitted == 0) continue;
      const std::string subject = c.source_id + " -> " + c.target_id;
      rows.push_back({"transfer_rate", subject, f4(c.transfer_rate), ">= 0.75", "strong transferability"});
      rows.push_back({"transfer_mean_psnr_drop", subject, f4(c.mean_psnr_drop), "> threshold",
                      "0.7579 (FFDNet target)"});
    }
  }

  for (const auto& model : sorted_dirs(store.path("sweeps")))
    for (const auto& mode : sorted_dirs(store.path("sweeps/" + model))) {
      const std::string rel = "sweeps/" + model + "/" + mode + "/summary.json";
      if (!store.exists(rel)) continue;
      const auto j = nlohmann::json::parse(take(rel));
      const std::string subject = model + " " + mode;
      const int images = j.at("images").get<int>();
      rows.push_back({"contiguous_arc_images", subject,
                      std::to_string(j.at("nonempty_contiguous").get<int>()) + "/" + std::to_string(images),
                      ">= 10/12", "30 to 150 degrees"});
      rows.push_back({"mean_arc_iou", subject, f4(j.at("mean_pairwise_iou").get<double>()), ">= 0.5",
                      "almost the same regions"});
    }

  for (const auto& name : sorted_files(store.path("reports"), "combine-", ".json")) {
    const auto j = nlohmann::json::parse(take("reports/" + name));
    rows.push_back({"pairs_mostly_adversarial", j.at("model").get<std::string>(),
                    f4(j.at("pairs_mostly_adversarial").get<double>()), ">= 0.8", "new adversarial samples"});
  }
  for (const auto& name : sorted_files(store.path("reports"), "resist-", ".json")) {
    const auto j = nlohmann::json::parse(take("reports/" + name));
    const double c = j.at("classical").at("mean_drop").get<double>();
    const double s = j.at("source_self").at("mean_drop").get<double>();
    rows.push_back({"classical_mean_drop", j.at("classical").at("model_id").get<std::string>(), f4(c), "<= 0.25",
                    "0.0636 / 0.2219 (BM3D)"});
    rows.push_back({"classical_to_source_ratio", j.at("source").get<std::string>(), f4(s != 0.0 ? c / s : 0.0),
                    "<= 0.5", ""});
  }
  for (const auto& name : sorted_files(store.path("reports"), "advtrain-", ".json")) {
    const auto j = nlohmann::json::parse(take("reports/" + name));
    const std::string id = j.at("model_id").get<std::string>();
    rows.push_back({"adversarial_gap_before", id, f4(j.at("self").at("before").at("mean_gap").get<double>()), "",
                    "0.807"});
    rows.push_back({"adversarial_gap_after", id, f4(j.at("self").at("after").at("mean_gap").get<double>()), "",
                    "0.117"});
    rows.push_back({"adversarial_gap_ratio", id, f4(j.at("gap_ratio").get<double>()), "<= 0.5", "0.145"});
    rows.push_back({"gaussian_psnr_delta", id, f4(j.at("gaussian_psnr_delta").get<double>()), ">= -0.1",
                    "no decrease"});
    if (j.contains("cross")) {
      const auto& x = j.at("cross");
      rows.push_back({"cross_gap_before", id + " <- " + x.at("source").get<std::string>(),
                      f4(x.at("before").at("mean_gap").get<double>()), "", ""});
      rows.push_back({"cross_gap_after", id + " <- " + x.at("source").get<std::string>(),
                      f4(x.at("after").at("mean_gap").get<double>()), "", ""});
    }
  }

  if (rows.empty()) throw ResolutionError("nothing to report under " + store.root().string());
  const std::string tag = hex64(fnv1a64(inputs));
  std::string csv = "quantity,subject,measured,desk_threshold,published_full_scale\n";
  std::string md = "# " + (cfg.report_title && !cfg.report_title->empty() ? *cfg.report_title : "advdn report") +
                   "\n\nDesk-scale measurements. The last column lists values published for full-scale models on "
                   "full datasets; they are context, not targets.\n\n"
                   "| quantity | subject | measured | desk threshold | published (full scale) |\n"
                   "|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    csv += r.quantity + "," + r.subject + "," + r.measured + "," + r.desk + "," + r.published + "\n";
    md += "| " + r.quantity + " | " + r.subject + " | " + r.measured + " | " + r.desk + " | " + r.published + " |\n";
  }
  store.write("reports/summary-" + tag + ".csv", csv);
  store.write("reports/summary-" + tag + ".md", md);
  say(log, "report: " + store.path("reports/summary-" + tag + ".csv").string());
}

}  // namespace

void run_command(const std::string& command, const std::string& mode, const ExperimentConfig& cfg,
                 ArtifactStore& store, std::ostream* log) {
  if (command == "corpus") cmd_corpus(cfg, log);
  else if (command == "train") cmd_train(cfg, store, log);
  else if (command == "attack") cmd_attack(cfg, store, mode.empty() ? "pgd" : mode, log);
  else if (command == "sweep") cmd_sweep(cfg, store, log);
  else if (command == "combine") cmd_combine(cfg, store, log);
  else if (command == "transfer") cmd_transfer(cfg, store, log);
  else if (command == "advtrain") cmd_advtrain(cfg, store, log);
  else if (command == "resist") cmd_resist(cfg, store, log);
  else if (command == "report") cmd_report(cfg, store, log);
  else throw ConfigError("unknown command '" + command + "'");
  store.write_manifest(cfg, command == "attack" ? "attack " + (mode.empty() ? std::string("pgd") : mode) : command);
}

}  // namespace advdn
