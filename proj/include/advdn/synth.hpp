#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "advdn/dataset.hpp"
#include "advdn/image.hpp"

namespace advdn {

/// Piecewise-smooth test scene: a shaded background with overlapping
/// anti-aliased ellipses, rotated rectangles and triangles, some filled with
/// gradients or oriented stripe textures.
Image synthesize_scene(int height, int width, int channels, std::uint64_t seed, std::string id = {});

struct CorpusSpec {
  int count = 24;
  int height = 180;
  int width = 180;
  int channels = 1;
  std::string split = "train";
  std::string prefix = "img";
  int patch_size = 40;
  int stride = 20;
  std::uint64_t seed = 1;
};

/// Writes `count` 8-bit PNG scenes into `dir` and returns their manifest
/// (root = dir). Images are quantized exactly as they will be reloaded.
DatasetManifest write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec);

}  // namespace advdn
