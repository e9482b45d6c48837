#include "advdn/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "advdn/errors.hpp"
#include "advdn/noise.hpp"
#include "advdn/rng.hpp"

namespace advdn {

std::string to_string(InitMode m) { return m == InitMode::UniformBall ? "uniform-ball" : "gaussian"; }
std::string to_string(Projection p) { return p == Projection::LinfBall ? "linf-ball" : "l2-noise-ball"; }
std::string to_string(AttackBasis b) { return b == AttackBasis::NoisyImage ? "noisy-image" : "clean-image"; }

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0)) throw ParameterError("attack epsilon must be non-negative");
  if (steps < 1) throw ParameterError("attack steps must be >= 1");
  const double a = alpha();
  if (!(a >= 0.0) || a > epsilon + 1e-15) throw ParameterError("attack step size must lie in [0, epsilon]");
  if (projection == Projection::L2NoiseBall && l2_radius && !(*l2_radius > 0.0))
    throw ParameterError("l2-noise-ball projection requires a positive radius");
  if (!(gaussian_init_scale >= 0.0)) throw ParameterError("gaussian init scale must be non-negative");
}

AttackConfig AttackConfig::pgd(double epsilon, int steps, std::uint64_t seed) {
  AttackConfig c;
  c.epsilon = epsilon;
  c.steps = steps;
  c.seed = seed;
  return c;
}

AttackConfig AttackConfig::l2(double epsilon, int steps, std::uint64_t seed, std::optional<double> radius) {
  AttackConfig c;
  c.epsilon = epsilon;
  c.steps = steps;
  c.seed = seed;
  c.init = InitMode::Gaussian;
  c.projection = Projection::L2NoiseBall;
  c.l2_radius = radius;
  return c;
}

AttackConfig AttackConfig::clean(double epsilon, int steps, std::uint64_t seed) {
  AttackConfig c = pgd(epsilon, steps, seed);
  c.basis = AttackBasis::CleanImage;
  return c;
}

void to_json(nlohmann::json& j, const AttackConfig& c) {
  j = {{"epsilon", c.epsilon},
       {"steps", c.steps},
       {"alpha", c.alpha()},
       {"init", to_string(c.init)},
       {"projection", to_string(c.projection)},
       {"basis", to_string(c.basis)},
       {"seed", c.seed},
       {"gaussian_init_scale", c.gaussian_init_scale},
       {"gaussian_every_step", c.gaussian_every_step}};
  if (c.step_size) j["step_size"] = *c.step_size;
  if (c.l2_radius) j["l2_radius"] = *c.l2_radius;
}

void from_json(const nlohmann::json& j, AttackConfig& c) {
  c = AttackConfig{};
  c.epsilon = j.value("epsilon", c.epsilon);
  c.steps = j.value("steps", c.steps);
  if (j.contains("step_size")) c.step_size = j.at("step_size").get<double>();
  const std::string init = j.value("init", to_string(c.init));
  if (init == "uniform-ball") c.init = InitMode::UniformBall;
  else if (init == "gaussian") c.init = InitMode::Gaussian;
  else throw ConfigError("unknown attack init '" + init + "'");
  const std::string proj = j.value("projection", to_string(c.projection));
  if (proj == "linf-ball") c.projection = Projection::LinfBall;
  else if (proj == "l2-noise-ball") c.projection = Projection::L2NoiseBall;
  else throw ConfigError("unknown attack projection '" + proj + "'");
  const std::string basis = j.value("basis", to_string(c.basis));
  if (basis == "noisy-image") c.basis = AttackBasis::NoisyImage;
  else if (basis == "clean-image") c.basis = AttackBasis::CleanImage;
  else throw ConfigError("unknown attack basis '" + basis + "'");
  if (j.contains("l2_radius")) c.l2_radius = j.at("l2_radius").get<double>();
  c.seed = j.value("seed", c.seed);
  c.gaussian_init_scale = j.value("gaussian_init_scale", c.gaussian_init_scale);
  c.gaussian_every_step = j.value("gaussian_every_step", c.gaussian_every_step);
}

double sign_of(double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

NoiseField project_l2(NoiseField offset, double radius) {
  const double norm = l2_norm(offset);
  if (norm > radius && norm > 0.0) offset *= radius / norm;
  return offset;
}

namespace {

NoiseField checked_gradient(const TrainedDenoiser& d, const Image& x, const Image& y) {
  if (!d.has_gradient())
    throw UnsupportedOperation("cannot attack " + d.id() + ": no input gradient available");
  NoiseField g = d.input_gradient(x, y);
  for (double v : g.values())
    if (!std::isfinite(v)) throw AttackError("non-finite gradient while attacking " + d.id());
  return g;
}

AdversarialSample finish(const TrainedDenoiser& d, Image x_prime, const Image& x, const Image& y,
                         const NoiseField* n, const AttackConfig& cfg) {
  AdversarialSample s;
  s.v = difference(x_prime, x);
  s.x_prime = std::move(x_prime);
  s.source_model_id = d.id();
  s.config = cfg;
  s.x = x;
  s.n = n ? *n : difference(x, y);
  s.y = y;
  return s;
}

}  // namespace

AdversarialSample denoising_pgd(const TrainedDenoiser& d, const Image& x, const Image& y,
                                const AttackConfig& cfg, const NoiseField* n, const IterateObserver& observe) {
  cfg.validate();
  require_same_shape(x.shape(), y.shape(), "denoising_pgd");
  if (n) require_same_shape(x.shape(), n->shape(), "denoising_pgd noise");
  if (!d.has_gradient())
    throw UnsupportedOperation("cannot attack " + d.id() + ": no input gradient available");
  const double eps = cfg.epsilon, alpha = cfg.alpha();
  const std::size_t size = x.size();

  Rng rng(cfg.seed);
  std::vector<double> cur(size);
  for (std::size_t i = 0; i < size; ++i) cur[i] = std::clamp(x[i] + rng.uniform(-eps, eps), 0.0, 1.0);
  Image iterate(x.shape(), cur, x.id());

  for (int t = 0; t < cfg.steps; ++t) {
    const NoiseField g = checked_gradient(d, iterate, y);
    for (std::size_t i = 0; i < size; ++i) {
      const double stepped = std::clamp(cur[i] + alpha * sign_of(g[i]), 0.0, 1.0);
      cur[i] = std::clamp(stepped, x[i] - eps, x[i] + eps);
    }
    iterate = Image(x.shape(), cur, x.id());
    if (observe) observe(t + 1, iterate);
  }
  return finish(d, std::move(iterate), x, y, n, cfg);
}

AdversarialSample l2_denoising_pgd(const TrainedDenoiser& d, const Image& x, const Image& y,
                                   const AttackConfig& cfg, const NoiseField* n, const IterateObserver& observe) {
  cfg.validate();
  require_same_shape(x.shape(), y.shape(), "l2_denoising_pgd");
  if (n) require_same_shape(x.shape(), n->shape(), "l2_denoising_pgd noise");
  if (!d.has_gradient())
    throw UnsupportedOperation("cannot attack " + d.id() + ": no input gradient available");
  const NoiseField base_noise = n ? *n : difference(x, y);
  const double radius = cfg.l2_radius.value_or(l2_norm(base_noise));
  if (!(radius > 0.0)) throw ParameterError("l2-noise-ball projection requires a positive radius");
  const double alpha = cfg.alpha();
  const double jitter = cfg.gaussian_init_scale * alpha;
  const std::size_t size = x.size();

  Rng rng(cfg.seed);
  std::vector<double> cur(x.pixels().begin(), x.pixels().end());
  Image iterate = x;
  for (int t = 0; t < cfg.steps; ++t) {
    if (jitter > 0.0 && (t == 0 || cfg.gaussian_every_step)) {
      for (std::size_t i = 0; i < size; ++i) cur[i] = std::clamp(cur[i] + jitter * rng.normal(), 0.0, 1.0);
      iterate = Image(x.shape(), cur, x.id());
    }
    const NoiseField g = checked_gradient(d, iterate, y);
    NoiseField offset(x.shape());
    for (std::size_t i = 0; i < size; ++i) offset[i] = cur[i] + alpha * sign_of(g[i]) - y[i];
    offset = project_l2(std::move(offset), radius);
    for (std::size_t i = 0; i < size; ++i) cur[i] = std::clamp(y[i] + offset[i], 0.0, 1.0);
    iterate = Image(x.shape(), cur, x.id());
    if (observe) observe(t + 1, iterate);
  }
  return finish(d, std::move(iterate), x, y, n, cfg);
}

AdversarialSample attack_on_clean(const TrainedDenoiser& d, const Image& y, const AttackConfig& cfg,
                                  const IterateObserver& observe) {
  if (cfg.basis != AttackBasis::CleanImage) throw ParameterError("attack_on_clean requires basis = clean-image");
  const NoiseField zero(y.shape());
  return denoising_pgd(d, y, y, cfg, &zero, observe);
}

AdversarialSample run_attack(const TrainedDenoiser& d, const Image& x, const Image& y, const AttackConfig& cfg,
                             const NoiseField* n) {
  if (cfg.basis == AttackBasis::CleanImage) return attack_on_clean(d, y, cfg);
  if (cfg.projection == Projection::L2NoiseBall) return l2_denoising_pgd(d, x, y, cfg, n);
  return denoising_pgd(d, x, y, cfg, n);
}

Image matched_gaussian_control(const Image& x_prime, const Image& y, std::uint64_t seed) {
  require_same_shape(x_prime.shape(), y.shape(), "matched_gaussian_control");
  const double s = stddev(difference(x_prime, y));
  Rng rng(seed);
  return compose(y, gaussian_field(y.shape(), s, rng), x_prime.id());
}

}  // namespace advdn
