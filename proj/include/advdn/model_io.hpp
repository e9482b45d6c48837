#pragma once

#include <filesystem>
#include <string>

#include "advdn/denoiser.hpp"

namespace advdn {

/// Container layout (all integers little-endian):
///   "ADVDNMDL" | u32 format version | u32 header length | JSON header |
///   weight_count x f32 | u64 FNV-1a checksum of every preceding byte.
/// The header carries id, spec, spec_hash, metadata and weight_count.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const TrainedDenoiser& d, const std::filesystem::path& path);
std::string serialize_model(const TrainedDenoiser& d);

/// Throws ChecksumError on truncation or corruption and VersionError on a
/// format version or spec hash mismatch.
TrainedDenoiser load_model(const std::filesystem::path& path);
TrainedDenoiser deserialize_model(const std::string& bytes);

std::string hex64(std::uint64_t v);

}  // namespace advdn
