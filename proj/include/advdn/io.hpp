#pragma once

#include <filesystem>

#include "advdn/image.hpp"

namespace advdn {

/// Reads an 8- or 16-bit PNG or binary PGM/PPM (P5/P6). Intensities are divided
/// by the format maximum. Alpha channels are dropped; grey stays one channel.
Image load_image(const std::filesystem::path& path);

/// Writes PNG (1 or 3 channels) or PGM/PPM by extension, rounding to the
/// nearest level of the chosen bit depth (8 or 16).
void save_image(const Image& image, const std::filesystem::path& path, int bit_depth = 8);

/// Raw little-endian float32 values in planar order, no header.
void save_field(const NoiseField& field, const std::filesystem::path& path);
NoiseField load_field(const std::filesystem::path& path, const Shape& shape);

}  // namespace advdn
