#include "advdn/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "advdn/errors.hpp"
#include "advdn/io.hpp"
#include "advdn/rng.hpp"

namespace advdn {
namespace {

enum class Outline { Ellipse, Rectangle, Triangle };
enum class Fill { Flat, Gradient, Stripes };

struct Layer {
  Outline outline;
  Fill fill;
  double cx, cy, rx, ry, angle;
  std::array<double, 6> tri;  // triangle vertices, absolute coordinates
  std::array<double, 3> base, alt;
  double fx, fy;    // stripe / gradient direction scaled by frequency
  double phase;
};

bool inside(const Layer& l, double px, double py) {
  if (l.outline == Outline::Triangle) {
    auto edge = [&](int a, int b) {
      return (l.tri[2 * b] - l.tri[2 * a]) * (py - l.tri[2 * a + 1]) -
             (l.tri[2 * b + 1] - l.tri[2 * a + 1]) * (px - l.tri[2 * a]);
    };
    const double e0 = edge(0, 1), e1 = edge(1, 2), e2 = edge(2, 0);
    return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
  }
  const double c = std::cos(l.angle), s = std::sin(l.angle);
  const double dx = px - l.cx, dy = py - l.cy;
  const double u = (c * dx + s * dy) / l.rx;
  const double v = (-s * dx + c * dy) / l.ry;
  if (l.outline == Outline::Ellipse) return u * u + v * v <= 1.0;
  return std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
}

double shade(const Layer& l, double px, double py, int ch) {
  const double t = l.fx * (px - l.cx) + l.fy * (py - l.cy);
  switch (l.fill) {
    case Fill::Flat:
      return l.base[ch];
    case Fill::Gradient:
      return l.base[ch] + (l.alt[ch] - l.base[ch]) * std::clamp(0.5 + t, 0.0, 1.0);
    case Fill::Stripes:
      return l.base[ch] + (l.alt[ch] - l.base[ch]) *
                              (0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * t + l.phase));
  }
  return l.base[ch];
}

std::array<double, 3> pick_colour(Rng& rng, int channels) {
  const double g = rng.uniform(0.08, 0.92);
  if (channels == 1) return {g, g, g};
  return {std::clamp(g + rng.uniform(-0.2, 0.2), 0.05, 0.95),
          std::clamp(g + rng.uniform(-0.2, 0.2), 0.05, 0.95),
          std::clamp(g + rng.uniform(-0.2, 0.2), 0.05, 0.95)};
}

}  // namespace

Image synthesize_scene(int height, int width, int channels, std::uint64_t seed, std::string id) {
  const Shape shape{height, width, channels};
  validate_image_shape(shape);
  Rng rng(seed);
  const double scale = std::min(height, width);

  // Background: linear ramp plus a low-frequency undulation.
  const auto bg0 = pick_colour(rng, channels);
  const auto bg1 = pick_colour(rng, channels);
  const double bg_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double wave_f = rng.uniform(0.5, 2.0) / scale;
  const double wave_amp = rng.uniform(0.0, 0.08);

  const int layers = 10 + static_cast<int>(rng.below(12));
  std::vector<Layer> stack;
  stack.reserve(layers);
  for (int i = 0; i < layers; ++i) {
    Layer l{};
    const auto o = rng.below(3);
    l.outline = o == 0 ? Outline::Ellipse : o == 1 ? Outline::Rectangle : Outline::Triangle;
    const auto f = rng.below(5);
    l.fill = f < 3 ? Fill::Flat : f == 3 ? Fill::Gradient : Fill::Stripes;
    l.cx = rng.uniform(0.0, width);
    l.cy = rng.uniform(0.0, height);
    l.rx = rng.uniform(0.04, 0.3) * scale;
    l.ry = rng.uniform(0.04, 0.3) * scale;
    l.angle = rng.uniform(0.0, std::numbers::pi);
    for (int k = 0; k < 3; ++k) {
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double r = rng.uniform(0.3, 1.0) * std::max(l.rx, l.ry);
      l.tri[2 * k] = l.cx + r * std::cos(a);
      l.tri[2 * k + 1] = l.cy + r * std::sin(a);
    }
    l.base = pick_colour(rng, channels);
    l.alt = pick_colour(rng, channels);
    const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double freq = l.fill == Fill::Stripes ? rng.uniform(0.04, 0.2)
                                                : 1.0 / (2.0 * std::max(l.rx, l.ry));
    l.fx = freq * std::cos(dir);
    l.fy = freq * std::sin(dir);
    l.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    stack.push_back(l);
  }

  // 3x3 supersampling gives anti-aliased edges.
  constexpr int kSub = 3;
  std::vector<double> px(shape.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      std::array<double, 3> acc{0, 0, 0};
      for (int sy = 0; sy < kSub; ++sy)
        for (int sx = 0; sx < kSub; ++sx) {
          const double qx = x + (sx + 0.5) / kSub, qy = y + (sy + 0.5) / kSub;
          const double ramp = 0.5 + 0.5 * (std::cos(bg_angle) * (qx / width - 0.5) +
                                           std::sin(bg_angle) * (qy / height - 0.5));
          const double wave = wave_amp * std::sin(2.0 * std::numbers::pi * wave_f * (qx + 0.7 * qy));
          std::array<double, 3> v;
          for (int c = 0; c < channels; ++c) v[c] = bg0[c] + (bg1[c] - bg0[c]) * ramp + wave;
          for (const auto& l : stack)
            if (inside(l, qx, qy))
              for (int c = 0; c < channels; ++c) v[c] = shade(l, qx, qy, c);
          for (int c = 0; c < channels; ++c) acc[c] += v[c];
        }
      for (int c = 0; c < channels; ++c)
        px[(static_cast<std::size_t>(c) * height + y) * width + x] =
            std::clamp(acc[c] / (kSub * kSub), 0.0, 1.0);
    }
  return Image(shape, std::move(px), std::move(id));
}

DatasetManifest write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec) {
  if (spec.count <= 0) throw ParameterError("corpus count must be positive");
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  m.root = dir.string();
  m.split = spec.split;
  m.patch_size = spec.patch_size;
  m.stride = spec.stride;
  for (int i = 0; i < spec.count; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%s%03d", spec.prefix.c_str(), i);
    const Image scene = synthesize_scene(spec.height, spec.width, spec.channels,
                                         derive_seed(spec.seed, static_cast<std::uint64_t>(i)), name);
    const std::string file = std::string(name) + ".png";
    save_image(scene, dir / file);
    m.entries.push_back({name, file});
  }
  return m;
}

}  // namespace advdn
