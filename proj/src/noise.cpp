#include "advdn/noise.hpp"

#include "advdn/errors.hpp"

namespace advdn {

NoiseField gaussian_field(const Shape& shape, double stddev, Rng& rng) {
  NoiseField n(shape);
  if (stddev == 0.0) return n;
  for (double& v : n.values()) v = stddev * rng.normal();
  return n;
}

NoisyObservation add_gaussian_noise(const Image& u, double sigma255, std::uint64_t seed) {
  if (!(sigma255 >= 0.0)) throw ParameterError("sigma must be non-negative");
  Rng rng(seed);
  NoiseField n = gaussian_field(u.shape(), sigma_to_unit(sigma255), rng);
  Image x = compose(u, n, u.id());
  return {std::move(x), std::move(n)};
}

}  // namespace advdn
