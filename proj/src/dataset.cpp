#include "advdn/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "advdn/errors.hpp"
#include "advdn/io.hpp"
#include "advdn/rng.hpp"

namespace advdn {

std::filesystem::path DatasetManifest::resolve(const DatasetEntry& e) const {
  std::filesystem::path p(e.path);
  return p.is_absolute() ? p : std::filesystem::path(root) / p;
}

std::uint64_t DatasetManifest::hash() const {
  nlohmann::json j = *this;
  return fnv1a64(j.dump());
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) entries.push_back({{"id", e.id}, {"path", e.path}});
  j = {{"root", m.root},
       {"entries", entries},
       {"split", m.split},
       {"patch_size", m.patch_size},
       {"stride", m.stride}};
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  try {
    m.root = j.at("root").get<std::string>();
    m.split = j.at("split").get<std::string>();
    m.patch_size = j.at("patch_size").get<int>();
    m.stride = j.at("stride").get<int>();
    m.entries.clear();
    for (const auto& e : j.at("entries"))
      m.entries.push_back({e.at("id").get<std::string>(), e.at("path").get<std::string>()});
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("invalid dataset manifest: ") + ex.what());
  }
  if (m.patch_size <= 0 || m.stride <= 0)
    throw ParameterError("manifest patch_size and stride must be positive");
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ResolutionError("cannot open dataset manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError(path.string() + ": " + ex.what());
  }
  DatasetManifest m = j.get<DatasetManifest>();
  // A relative root is taken relative to the manifest's own directory.
  if (std::filesystem::path(m.root).is_relative())
    m.root = (path.parent_path() / m.root).lexically_normal().string();
  return m;
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  DatasetManifest stored = m;
  // Root is written relative to the manifest's directory.
  const auto dir = std::filesystem::absolute(path).parent_path().lexically_normal();
  const auto rel = std::filesystem::absolute(m.root).lexically_normal().lexically_relative(dir);
  if (!rel.empty()) stored.root = rel.string();
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << nlohmann::json(stored).dump(2) << "\n";
}

std::vector<Image> load_images(const DatasetManifest& m) {
  std::vector<Image> images;
  images.reserve(m.entries.size());
  for (const auto& e : m.entries) images.push_back(load_image(m.resolve(e)).with_id(e.id));
  return images;
}

std::vector<Image> extract_patches(const std::vector<Image>& images, int patch_size, int stride) {
  if (patch_size <= 0 || stride <= 0)
    throw ParameterError("patch size and stride must be positive");
  std::vector<Image> patches;
  for (const auto& img : images) {
    if (patch_size > std::min(img.height(), img.width()))
      throw ParameterError("patch size " + std::to_string(patch_size) + " exceeds image " +
                           img.id() + " (" + to_string(img.shape()) + ")");
    for (int top = 0; top + patch_size <= img.height(); top += stride)
      for (int left = 0; left + patch_size <= img.width(); left += stride)
        patches.push_back(img.crop(top, left, patch_size, patch_size,
                                   img.id() + "@" + std::to_string(top) + "," + std::to_string(left)));
  }
  return patches;
}

std::vector<Image> extract_patches(const DatasetManifest& m) {
  return extract_patches(load_images(m), m.patch_size, m.stride);
}

}  // namespace advdn
