#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dualview/image.hpp"
#include "dualview/synthgen.hpp"

namespace dualview {

/// Source images grouped by the mixture slot they may fill. An empty slot
/// falls back to the union of all slots.
struct SourcePools {
  std::array<std::vector<Image>, 3> by_kind;

  std::size_t total() const noexcept;
  /// Pool serving `kind` after fallback.
  std::vector<const Image*> pool_for(SourceKind kind) const;
};

/// Loads every .png/.pfm under `dir` (sorted by filename). A directory with
/// subdirectories named after source kinds fills those slots; a flat
/// directory fills the rendered slot.
SourcePools load_source_dir(const std::filesystem::path& dir);

/// `per_kind` procedural textures per slot, each width x height, all seeded
/// from `seed`.
SourcePools procedural_pools(std::uint64_t seed, int per_kind, int width, int height);

/// The pair at position `index` of the dataset described by (cfg, pools).
/// Pure: depends on nothing but its arguments.
SamplePair generate_sample(const GenConfig& cfg, const SourcePools& pools, std::size_t index);

std::string sample_id(std::size_t index);

struct ManifestEntry {
  std::string id;
  std::string dir;  ///< relative to the manifest's directory
  SampleParams params;
};

/// File names inside a sample directory.
namespace sample_files {
inline constexpr const char* kI1 = "i1.pfm";
inline constexpr const char* kI2 = "i2.pfm";
inline constexpr const char* kI1Preview = "i1.png";
inline constexpr const char* kI2Preview = "i2.png";
inline constexpr const char* kT1 = "t1.pfm";
inline constexpr const char* kT2 = "t2.pfm";
inline constexpr const char* kR1 = "r1.pfm";
inline constexpr const char* kR2 = "r2.pfm";
inline constexpr const char* kS1 = "s1.pfm";
inline constexpr const char* kS2 = "s2.pfm";
inline constexpr const char* kF12 = "f12.flo";
inline constexpr const char* kF21 = "f21.flo";
inline constexpr const char* kOccl12 = "occl12.pfm";
inline constexpr const char* kOccl21 = "occl21.pfm";
inline constexpr const char* kParams = "params.json";
}  // namespace sample_files

/// Writes one sample into `dir` (created if needed).
void write_sample(const SamplePair& pair, const std::filesystem::path& dir);
SamplePair load_sample(const std::filesystem::path& dir);

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Generates `count` samples into out_dir/<id>/ plus out_dir/manifest.jsonl
/// and out_dir/gen_config.json. Everything is validated before the first
/// write. Output bytes do not depend on `workers`. Returns the manifest path.
std::filesystem::path gen_dataset(const GenConfig& cfg, const SourcePools& pools, std::size_t count,
                                  const std::filesystem::path& out_dir, int workers = 1);

void to_json(nlohmann::json& j, const ManifestEntry& e);
void from_json(const nlohmann::json& j, ManifestEntry& e);

}  // namespace dualview
