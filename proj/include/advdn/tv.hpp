#pragma once

#include "advdn/image.hpp"

namespace advdn {

/// Minimizes ||u - x||^2 + lambda * TV(u) per channel with Chambolle's dual
/// projection iteration (step 1/8, fixed iteration count), isotropic TV with
/// forward differences. Output is clipped to [0, 1].
Image tv_denoise(const Image& x, double lambda, int iterations);

}  // namespace advdn
