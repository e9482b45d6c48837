#include "advdn/zoo.hpp"

#include "advdn/dataset.hpp"
#include "advdn/errors.hpp"
#include "advdn/model_io.hpp"
#include "advdn/noise.hpp"
#include "advdn/rng.hpp"

namespace advdn {

std::vector<std::string> zoo_names() { return {kDncnnLite, kDncnnLiteBArch, kBlindLite, kTvClassical}; }

ZooRecipe zoo_recipe(const ZooSettings& s, const std::string& name) {
  ZooRecipe r;
  r.name = name;
  r.train.batch_size = 16;
  r.train.seed = derive_seed(s.seed, name);
  r.train.provenance = "zoo:" + name;
  if (name == kDncnnLite) {
    r.spec = DenoiserSpec::residual(7, 32, false);
    r.train.epochs = s.lite_epochs;
    r.train.sigma = 25.0;
  } else if (name == kDncnnLiteBArch) {
    r.spec = DenoiserSpec::residual(9, 48, false);
    r.train.epochs = s.b_arch_epochs;
    r.train.sigma = 25.0;
  } else if (name == kBlindLite) {
    r.spec = DenoiserSpec::residual(7, 32, true);
    r.train.epochs = s.blind_epochs;
    r.train.sigma_range = std::make_pair(0.0, 55.0);
  } else {
    throw ResolutionError("unknown zoo model '" + name + "'");
  }
  r.train.lr.decay_every = std::max(1, (r.train.epochs * 2 + 2) / 3);
  return r;
}

TestSet make_test_set(std::vector<Image> clean, double sigma255, std::uint64_t seed) {
  TestSet t;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    auto obs = add_gaussian_noise(clean[i], sigma255, derive_seed(seed, clean[i].id()));
    t.noisy.push_back(obs.x.with_id(clean[i].id()));
    t.noise.push_back(std::move(obs.n));
  }
  t.clean = std::move(clean);
  return t;
}

Zoo::Zoo(std::filesystem::path dir, ZooSettings settings) : dir_(std::move(dir)), settings_(std::move(settings)) {
  std::filesystem::create_directories(dir_);
}

namespace {
std::vector<Image> corpus_images(const std::filesystem::path& dir, const CorpusSpec& spec) {
  const auto manifest_path = dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    const DatasetManifest m = load_manifest(manifest_path);
    if (m.entries.size() == static_cast<std::size_t>(spec.count)) return load_images(m);
  }
  const DatasetManifest m = write_corpus(dir, spec);
  save_manifest(m, manifest_path);
  return load_images(m);
}

std::string corpus_tag(const CorpusSpec& c) {
  return std::to_string(c.count) + "x" + std::to_string(c.height) + "x" + std::to_string(c.width) + "x" +
         std::to_string(c.channels) + "-s" + std::to_string(c.seed);
}
}  // namespace

const std::vector<Image>& Zoo::train_images() {
  if (train_images_.empty())
    train_images_ = corpus_images(dir_ / ("corpus-" + corpus_tag(settings_.train_corpus)), settings_.train_corpus);
  return train_images_;
}

const std::vector<Image>& Zoo::train_patches() {
  if (train_patches_.empty())
    train_patches_ = extract_patches(train_images(), settings_.train_corpus.patch_size, settings_.train_corpus.stride);
  return train_patches_;
}

const TestSet& Zoo::test_set() {
  if (!test_ready_) {
    auto clean = corpus_images(dir_ / ("corpus-" + corpus_tag(settings_.test_corpus)), settings_.test_corpus);
    test_ = make_test_set(std::move(clean), settings_.test_sigma, derive_seed(settings_.seed, "test-noise"));
    test_ready_ = true;
  }
  return test_;
}

std::filesystem::path Zoo::model_path(const std::string& name) const {
  const ZooRecipe r = zoo_recipe(settings_, name);
  nlohmann::json key = {{"spec", r.spec}, {"train", r.train}, {"corpus", corpus_tag(settings_.train_corpus)}};
  return dir_ / "models" / (name + "-" + hex64(fnv1a64(key.dump())) + ".advdn");
}

TrainedDenoiser Zoo::cached(const std::string& key, const std::function<TrainedDenoiser()>& build) {
  const auto path = dir_ / "models" / (key + ".advdn");
  if (std::filesystem::exists(path)) {
    try {
      return load_model(path);
    } catch (const Error&) {
      std::filesystem::remove(path);
    }
  }
  TrainedDenoiser d = build();
  std::filesystem::create_directories(path.parent_path());
  save_model(d, path);
  return d;
}

TrainedDenoiser Zoo::model(const std::string& name) {
  if (name == kTvClassical)
    return TrainedDenoiser::tv_classical(kTvClassical, settings_.tv_lambda, settings_.tv_iterations);
  const ZooRecipe r = zoo_recipe(settings_, name);
  return cached(model_path(name).stem().string(),
                [&] { return train(r.name, r.spec, train_patches(), r.train); });
}

}  // namespace advdn
