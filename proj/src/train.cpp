#include "advdn/train.hpp"

#include <cmath>
#include <numeric>

#include "advdn/errors.hpp"
#include "advdn/noise.hpp"
#include "advdn/rng.hpp"

namespace advdn {

double LearningRateSchedule::at(int epoch) const {
  if (decay_every <= 0) return initial;
  return initial * std::pow(decay_factor, epoch / decay_every);
}

void TrainConfig::validate(const DenoiserSpec& spec) const {
  if (epochs < 1 || batch_size < 1) throw ParameterError("epochs and batch size must be positive");
  if (!(lr.initial > 0.0)) throw ParameterError("learning rate must be positive");
  if (spec.blind) {
    if (!sigma_range) throw ParameterError("blind training requires a sigma range");
    if (sigma_range->first < 0.0 || sigma_range->second < sigma_range->first)
      throw ParameterError("invalid sigma range");
  } else {
    if (!sigma) throw ParameterError("non-blind training requires a single sigma");
    if (*sigma < 0.0) throw ParameterError("sigma must be non-negative");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"lr", c.lr.initial},
       {"lr_decay", c.lr.decay_factor},
       {"lr_decay_every", c.lr.decay_every},
       {"seed", c.seed}};
  if (c.sigma) j["sigma"] = *c.sigma;
  if (c.sigma_range) j["sigma_range"] = {c.sigma_range->first, c.sigma_range->second};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr.initial = j.value("lr", c.lr.initial);
  c.lr.decay_factor = j.value("lr_decay", c.lr.decay_factor);
  c.lr.decay_every = j.value("lr_decay_every", c.lr.decay_every);
  c.seed = j.value("seed", c.seed);
  if (j.contains("sigma")) c.sigma = j.at("sigma").get<double>();
  if (j.contains("sigma_range")) {
    const auto& r = j.at("sigma_range");
    c.sigma_range = std::make_pair(r.at(0).get<double>(), r.at(1).get<double>());
  }
}

void write_sample(kernels::Tensor<float>& t, int b, const Image& image) {
  const std::size_t plane = image.shape().plane();
  for (int c = 0; c < image.channels(); ++c) {
    float* dst = t.channel(c) + b * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>(image[c * plane + i]);
  }
}

void write_sample(kernels::Tensor<float>& t, int b, const NoiseField& field) {
  const std::size_t plane = field.shape().plane();
  for (int c = 0; c < field.shape().channels; ++c) {
    float* dst = t.channel(c) + b * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>(field[c * plane + i]);
  }
}

std::uint64_t training_noise_seed(const TrainConfig& cfg, int epoch, std::size_t position) {
  return derive_seed(derive_seed(derive_seed(cfg.seed, "noise"), static_cast<std::uint64_t>(epoch)),
                     static_cast<std::uint64_t>(position));
}

std::pair<Image, double> gaussian_training_input(const Image& clean, const TrainConfig& cfg,
                                                 std::uint64_t seed) {
  double sigma = cfg.sigma.value_or(0.0);
  std::uint64_t noise_seed = seed;
  if (cfg.sigma_range) {
    Rng level(seed);
    sigma = level.uniform(cfg.sigma_range->first, cfg.sigma_range->second);
    noise_seed = mix64(seed);
  }
  auto obs = add_gaussian_noise(clean, sigma, noise_seed);
  return {std::move(obs.x), sigma};
}

std::vector<float> initial_parameters(const DenoiserSpec& spec, const TrainConfig& cfg) {
  const ConvStack stack(spec.channels, spec.depth, spec.width);
  std::vector<float> params(stack.parameter_count());
  Rng rng(derive_seed(cfg.seed, "init"));
  stack.initialize(params, rng);
  return params;
}

std::vector<float> fit_residual(const ConvStack& stack, std::vector<float> params, std::size_t patch_count,
                                const TrainConfig& cfg, const BatchBuilder& build, TrainingLog* log,
                                const StepObserver& observer) {
  if (params.size() != stack.parameter_count()) throw ParameterError("parameter vector has wrong length");
  if (patch_count == 0) throw ParameterError("training needs at least one patch");
  const std::size_t np = params.size();
  std::vector<float> grad(np), m(np, 0.0f), v(np, 0.0f);
  std::vector<std::size_t> order(patch_count);
  long long t = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(derive_seed(cfg.seed, "shuffle"), static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    const double lr = cfg.lr.at(epoch);
    double epoch_loss = 0.0;
    int epoch_steps = 0;
    int step = 0;
    for (std::size_t start = 0; start < patch_count; start += cfg.batch_size, ++step) {
      const std::size_t count = std::min<std::size_t>(cfg.batch_size, patch_count - start);
      TrainingBatch batch;
      if (!build(epoch, step, std::span<const std::size_t>(order.data() + start, count), batch)) {
        if (log) ++log->skipped_batches;
        continue;
      }
      ConvStack::Trace<float> trace;
      const auto pred = stack.forward<float>(params, batch.noisy, &trace);
      kernels::Tensor<float> dpred(pred.channels, pred.batch, pred.height, pred.width);
      const double scale = 1.0 / static_cast<double>(pred.data.size());
      double loss = 0.0;
      for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - batch.residual.data[i];
        loss += d * d;
        dpred.data[i] = static_cast<float>(2.0 * d * scale);
      }
      loss *= scale;
      if (!std::isfinite(loss)) throw TrainingError("training loss diverged", epoch);
      stack.backward<float>(params, trace, std::move(dpred), grad, nullptr);

      ++t;
      const double b1 = cfg.adam.beta1, b2 = cfg.adam.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
      for (std::size_t i = 0; i < np; ++i) {
        m[i] = static_cast<float>(b1 * m[i] + (1.0 - b1) * grad[i]);
        v[i] = static_cast<float>(b2 * v[i] + (1.0 - b2) * static_cast<double>(grad[i]) * grad[i]);
        const double mh = m[i] / c1, vh = v[i] / c2;
        params[i] = static_cast<float>(params[i] - lr * mh / (std::sqrt(vh) + cfg.adam.epsilon));
      }
      if (log) log->batch_losses.push_back(loss);
      if (observer) observer(epoch, step, params);
      epoch_loss += loss;
      ++epoch_steps;
    }
    if (log) log->epoch_losses.push_back(epoch_steps ? epoch_loss / epoch_steps : 0.0);
  }
  return params;
}

TrainedDenoiser train(std::string id, const DenoiserSpec& spec, std::span<const Image> patches,
                      const TrainConfig& cfg, TrainingLog* log, const std::vector<float>* init) {
  if (spec.kind != DenoiserKind::ResidualCnn) throw UnsupportedOperation("only residual-cnn models train");
  spec.validate();
  cfg.validate(spec);
  if (patches.empty()) throw ParameterError("training needs at least one patch");
  for (const auto& p : patches)
    if (p.channels() != spec.channels) throw ParameterError("patch channel count does not match spec");
  const Shape patch_shape = patches.front().shape();

  const ConvStack stack(spec.channels, spec.depth, spec.width);
  std::vector<float> params = init ? *init : initial_parameters(spec, cfg);

  auto build = [&](int epoch, int step, std::span<const std::size_t> idx, TrainingBatch& batch) {
    const int n = static_cast<int>(idx.size());
    batch.noisy = kernels::Tensor<float>(spec.channels, n, patch_shape.height, patch_shape.width);
    batch.residual = batch.noisy;
    for (int b = 0; b < n; ++b) {
      const Image& clean = patches[idx[b]];
      const std::size_t position = static_cast<std::size_t>(step) * cfg.batch_size + b;
      auto [noisy, level] = gaussian_training_input(clean, cfg, training_noise_seed(cfg, epoch, position));
      write_sample(batch.noisy, b, noisy);
      write_sample(batch.residual, b, difference(noisy, clean));
    }
    return true;
  };

  TrainingLog local;
  TrainingLog& sink = log ? *log : local;
  params = fit_residual(stack, std::move(params), patches.size(), cfg, build, &sink);

  TrainingMetadata meta;
  if (cfg.sigma_range) {
    meta.sigma_min = cfg.sigma_range->first;
    meta.sigma_max = cfg.sigma_range->second;
  } else {
    meta.sigma_min = meta.sigma_max = *cfg.sigma;
  }
  meta.seed = cfg.seed;
  meta.provenance = cfg.provenance;
  meta.epochs = cfg.epochs;
  meta.final_loss = sink.epoch_losses.empty() ? 0.0 : sink.epoch_losses.back();
  meta.skipped_batches = sink.skipped_batches;
  meta.origin = init ? "warm-start" : "train";
  return TrainedDenoiser(std::move(id), spec, std::move(params), meta);
}

}  // namespace advdn
