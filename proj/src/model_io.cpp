#include "advdn/model_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "advdn/errors.hpp"
#include "advdn/rng.hpp"

namespace advdn {
namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'D', 'N', 'M', 'D', 'L'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string serialize_model(const TrainedDenoiser& d) {
  nlohmann::json header = {{"format_version", kModelFormatVersion},
                           {"id", d.id()},
                           {"spec", d.spec()},
                           {"spec_hash", hex64(d.spec().hash())},
                           {"metadata", d.metadata()},
                           {"weight_count", d.weights().size()}};
  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (float w : d.weights()) put_u32(out, std::bit_cast<std::uint32_t>(w));
  put_u64(out, fnv1a64(out));
  return out;
}

void save_model(const TrainedDenoiser& d, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(d);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

TrainedDenoiser deserialize_model(const std::string& bytes) {
  constexpr std::size_t kFixed = sizeof kMagic + 4 + 4;
  if (bytes.size() < kFixed + 8) throw ChecksumError("model file truncated");
  const std::size_t body = bytes.size() - 8;
  if (fnv1a64(std::string_view(bytes.data(), body)) != get_le(bytes, body, 8))
    throw ChecksumError("model checksum mismatch (file corrupt or truncated)");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw FormatError("not a model file");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, sizeof kMagic, 4));
  if (version != kModelFormatVersion)
    throw VersionError("unsupported model format version " + std::to_string(version));
  const auto header_len = static_cast<std::size_t>(get_le(bytes, sizeof kMagic + 4, 4));
  if (kFixed + header_len > body) throw ChecksumError("model header exceeds file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kFixed, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model header is not valid JSON: ") + e.what());
  }
  const DenoiserSpec spec = header.at("spec").get<DenoiserSpec>();
  if (header.at("spec_hash").get<std::string>() != hex64(spec.hash()))
    throw VersionError("model spec hash mismatch");
  const auto count = header.at("weight_count").get<std::size_t>();
  if (count != spec.parameter_count()) throw VersionError("weight count does not match spec");
  if (kFixed + header_len + 4 * count != body) throw ChecksumError("model payload length mismatch");
  std::vector<float> weights(count);
  const std::size_t base = kFixed + header_len;
  for (std::size_t i = 0; i < count; ++i)
    weights[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, base + 4 * i, 4)));
  return TrainedDenoiser(header.at("id").get<std::string>(), spec, std::move(weights),
                         header.at("metadata").get<TrainingMetadata>());
}

TrainedDenoiser load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResolutionError("cannot open model " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  return deserialize_model(bytes);
}

}  // namespace advdn
