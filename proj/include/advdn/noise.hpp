#pragma once

#include <cstdint>

#include "advdn/image.hpp"
#include "advdn/rng.hpp"

namespace advdn {

/// Converts a 0-255 noise level to the internal [0, 1] scale.
constexpr double sigma_to_unit(double sigma255) { return sigma255 / 255.0; }

/// A Gaussian observation x = clip(u + n) together with the unclipped n.
struct NoisyObservation {
  Image x;
  NoiseField n;
};

/// i.i.d. N(0, stddev^2) field, values drawn in planar index order.
NoiseField gaussian_field(const Shape& shape, double stddev, Rng& rng);

/// Draws n ~ N(0, (sigma/255)^2) from Rng(seed) and returns clip(u + n) with n.
/// Throws ParameterError for negative sigma.
NoisyObservation add_gaussian_noise(const Image& u, double sigma255, std::uint64_t seed);

}  // namespace advdn
