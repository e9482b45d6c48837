#include "advdn/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "advdn/errors.hpp"
#include "advdn/rng.hpp"
#include "advdn/tv.hpp"

namespace advdn {

std::string to_string(DenoiserKind k) {
  return k == DenoiserKind::ResidualCnn ? "residual-cnn" : "tv-classical";
}

DenoiserKind denoiser_kind_from_string(const std::string& s) {
  if (s == "residual-cnn") return DenoiserKind::ResidualCnn;
  if (s == "tv-classical") return DenoiserKind::TvClassical;
  throw ConfigError("unknown denoiser kind '" + s + "'");
}

DenoiserSpec DenoiserSpec::residual(int depth, int width, bool blind, int channels) {
  DenoiserSpec s;
  s.kind = DenoiserKind::ResidualCnn;
  s.depth = depth;
  s.width = width;
  s.blind = blind;
  s.channels = channels;
  s.validate();
  return s;
}

DenoiserSpec DenoiserSpec::tv(double lambda, int iterations, int channels) {
  DenoiserSpec s;
  s.kind = DenoiserKind::TvClassical;
  s.depth = 0;
  s.width = 0;
  s.blind = true;
  s.channels = channels;
  s.tv_lambda = lambda;
  s.tv_iterations = iterations;
  s.validate();
  return s;
}

void DenoiserSpec::validate() const {
  if (channels != 1 && channels != 3) throw ParameterError("denoiser channels must be 1 or 3");
  if (kind == DenoiserKind::ResidualCnn) {
    if (depth < 3) throw ParameterError("residual-cnn depth must be >= 3");
    if (width < 8) throw ParameterError("residual-cnn width must be >= 8");
  } else {
    if (!(tv_lambda > 0.0)) throw ParameterError("tv lambda must be positive");
    if (tv_iterations < 1) throw ParameterError("tv iterations must be >= 1");
  }
}

std::size_t DenoiserSpec::parameter_count() const {
  if (kind != DenoiserKind::ResidualCnn) return 0;
  return ConvStack(channels, depth, width).parameter_count();
}

std::uint64_t DenoiserSpec::hash() const {
  nlohmann::json j = *this;
  return fnv1a64(j.dump());
}

void to_json(nlohmann::json& j, const DenoiserSpec& s) {
  j = {{"kind", to_string(s.kind)}, {"channels", s.channels}, {"blind", s.blind}};
  if (s.kind == DenoiserKind::ResidualCnn) {
    j["depth"] = s.depth;
    j["width"] = s.width;
    j["kernel"] = 3;
  } else {
    j["tv_lambda"] = s.tv_lambda;
    j["tv_iterations"] = s.tv_iterations;
  }
}

void from_json(const nlohmann::json& j, DenoiserSpec& s) {
  s = DenoiserSpec{};
  s.kind = denoiser_kind_from_string(j.at("kind").get<std::string>());
  s.channels = j.at("channels").get<int>();
  s.blind = j.at("blind").get<bool>();
  if (s.kind == DenoiserKind::ResidualCnn) {
    s.depth = j.at("depth").get<int>();
    s.width = j.at("width").get<int>();
  } else {
    s.depth = 0;
    s.width = 0;
    s.tv_lambda = j.at("tv_lambda").get<double>();
    s.tv_iterations = j.at("tv_iterations").get<int>();
  }
  s.validate();
}

void to_json(nlohmann::json& j, const TrainingMetadata& m) {
  j = {{"sigma_min", m.sigma_min},   {"sigma_max", m.sigma_max},
       {"seed", m.seed},             {"provenance", m.provenance},
       {"epochs", m.epochs},         {"final_loss", m.final_loss},
       {"skipped_batches", m.skipped_batches}, {"origin", m.origin}};
}

void from_json(const nlohmann::json& j, TrainingMetadata& m) {
  m.sigma_min = j.at("sigma_min").get<double>();
  m.sigma_max = j.at("sigma_max").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.provenance = j.at("provenance").get<std::string>();
  m.epochs = j.at("epochs").get<int>();
  m.final_loss = j.at("final_loss").get<double>();
  m.skipped_batches = j.value("skipped_batches", 0);
  m.origin = j.value("origin", std::string("train"));
}

template <typename T>
kernels::Tensor<T> to_tensor(std::span<const Image> images) {
  if (images.empty()) throw ParameterError("to_tensor: empty batch");
  const Shape s = images.front().shape();
  kernels::Tensor<T> t(s.channels, static_cast<int>(images.size()), s.height, s.width);
  const std::size_t plane = s.plane();
  for (std::size_t b = 0; b < images.size(); ++b) {
    require_same_shape(s, images[b].shape(), "to_tensor");
    const auto px = images[b].pixels();
    for (int c = 0; c < s.channels; ++c) {
      T* dst = t.channel(c) + b * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<T>(px[c * plane + i]);
    }
  }
  return t;
}

template <typename T>
NoiseField field_from_tensor(const kernels::Tensor<T>& t, int index, const Shape& shape) {
  const std::size_t plane = shape.plane();
  std::vector<double> v(shape.size());
  for (int c = 0; c < shape.channels; ++c) {
    const T* src = t.channel(c) + index * plane;
    for (std::size_t i = 0; i < plane; ++i) v[c * plane + i] = static_cast<double>(src[i]);
  }
  return NoiseField(shape, std::move(v));
}

template kernels::Tensor<float> to_tensor<float>(std::span<const Image>);
template kernels::Tensor<double> to_tensor<double>(std::span<const Image>);
template NoiseField field_from_tensor<float>(const kernels::Tensor<float>&, int, const Shape&);
template NoiseField field_from_tensor<double>(const kernels::Tensor<double>&, int, const Shape&);

TrainedDenoiser::TrainedDenoiser(std::string id, DenoiserSpec spec, std::vector<float> weights,
                                 TrainingMetadata meta)
    : id_(std::move(id)), spec_(spec), weights_(std::move(weights)), meta_(std::move(meta)) {
  spec_.validate();
  if (weights_.size() != spec_.parameter_count())
    throw ParameterError("weight vector length " + std::to_string(weights_.size()) +
                         " does not match architecture (" + std::to_string(spec_.parameter_count()) + ")");
  if (spec_.kind == DenoiserKind::ResidualCnn) stack_.emplace_back(spec_.channels, spec_.depth, spec_.width);
}

TrainedDenoiser TrainedDenoiser::tv_classical(std::string id, double lambda, int iterations, int channels) {
  return TrainedDenoiser(std::move(id), DenoiserSpec::tv(lambda, iterations, channels), {});
}

TrainedDenoiser TrainedDenoiser::renamed(std::string id) const {
  TrainedDenoiser copy = *this;
  copy.id_ = std::move(id);
  return copy;
}

void TrainedDenoiser::check_input(const Image& x) const {
  if (x.channels() != spec_.channels)
    throw ParameterError("denoiser " + id_ + " expects " + std::to_string(spec_.channels) +
                         " channel(s), got " + std::to_string(x.channels()));
}

NoiseField TrainedDenoiser::predicted_noise(const Image& x, Precision p) const {
  check_input(x);
  if (stack_.empty()) throw UnsupportedOperation("tv-classical has no residual prediction");
  if (p == Precision::Double) {
    const std::vector<double> w(weights_.begin(), weights_.end());
    return field_from_tensor(stack_[0].forward<double>(w, to_tensor<double>(x)), 0, x.shape());
  }
  return field_from_tensor(stack_[0].forward<float>(weights_, to_tensor<float>(x)), 0, x.shape());
}

Image TrainedDenoiser::denoise(const Image& x) const {
  check_input(x);
  if (spec_.kind == DenoiserKind::TvClassical) return tv_denoise(x, spec_.tv_lambda, spec_.tv_iterations);
  return compose(x, -1.0 * predicted_noise(x));
}

std::vector<Image> TrainedDenoiser::denoise_batch(std::span<const Image> xs) const {
  std::vector<Image> out;
  out.reserve(xs.size());
  if (xs.empty()) return out;
  if (spec_.kind == DenoiserKind::TvClassical) {
    for (const auto& x : xs) out.push_back(denoise(x));
    return out;
  }
  for (const auto& x : xs) check_input(x);
  const auto r = stack_[0].forward<float>(weights_, to_tensor<float>(xs));
  for (std::size_t b = 0; b < xs.size(); ++b)
    out.push_back(compose(xs[b], -1.0 * field_from_tensor(r, static_cast<int>(b), xs[b].shape())));
  return out;
}

namespace {

template <typename T>
NoiseField residual_input_gradient(const ConvStack& stack, std::span<const T> w, const Image& x,
                                   const Image& y) {
  ConvStack::Trace<T> trace;
  const auto r = stack.forward<T>(w, to_tensor<T>(x), &trace);
  const std::size_t n = x.size();
  // e = clip(x - R(x)) - y ; dJ/dD = 2e ; dJ/dR = -2e.
  std::vector<double> twice_e(n);
  kernels::Tensor<T> grad_r(r.channels, 1, r.height, r.width);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::clamp(x[i] - static_cast<double>(r.data[i]), 0.0, 1.0);
    twice_e[i] = 2.0 * (d - y[i]);
    grad_r.data[i] = static_cast<T>(-twice_e[i]);
  }
  kernels::Tensor<T> grad_x;
  stack.backward<T>(w, trace, std::move(grad_r), {}, &grad_x);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = twice_e[i] + static_cast<double>(grad_x.data[i]);
  return NoiseField(x.shape(), std::move(g));
}

}  // namespace

NoiseField TrainedDenoiser::input_gradient(const Image& x, const Image& y, Precision p) const {
  check_input(x);
  require_same_shape(x.shape(), y.shape(), "input_gradient");
  if (stack_.empty())
    throw UnsupportedOperation("denoiser " + id_ + " (tv-classical) exposes no input gradient");
  if (p == Precision::Double) {
    const std::vector<double> w(weights_.begin(), weights_.end());
    return residual_input_gradient<double>(stack_[0], w, x, y);
  }
  return residual_input_gradient<float>(stack_[0], weights_, x, y);
}

double TrainedDenoiser::reconstruction_loss(const Image& x, const Image& y) const {
  require_same_shape(x.shape(), y.shape(), "reconstruction_loss");
  const Image d = denoise(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) acc += (d[i] - y[i]) * (d[i] - y[i]);
  return acc;
}

}  // namespace advdn
