#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "advdn/image.hpp"

namespace advdn {

struct DatasetEntry {
  std::string id;
  std::string path;  // relative to the manifest root unless absolute
};

/// JSON document {root, entries[], split, patch_size, stride}.
struct DatasetManifest {
  std::string root;
  std::vector<DatasetEntry> entries;
  std::string split = "train";
  int patch_size = 40;
  int stride = 20;

  std::filesystem::path resolve(const DatasetEntry& e) const;
  /// Hash of the canonical JSON form; recorded as training provenance.
  std::uint64_t hash() const;
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

/// Decodes every entry; ids come from the manifest.
std::vector<Image> load_images(const DatasetManifest& m);

/// Sliding-window patches in image order, then row-major window order.
std::vector<Image> extract_patches(const std::vector<Image>& images, int patch_size, int stride);
/// Loads the manifest's images and validates patch_size <= min(H, W) for all.
std::vector<Image> extract_patches(const DatasetManifest& m);

}  // namespace advdn
