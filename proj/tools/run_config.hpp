#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualview/dereflect.hpp"
#include "dualview/flow.hpp"
#include "dualview/metrics.hpp"
#include "dualview/synthgen.hpp"

namespace dualview::cli {

/// Configuration problems found before any output is written. Maps to exit
/// code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct SourceSpec {
  std::filesystem::path dir;  ///< image pool; empty selects procedural sources
  int per_kind = 3;           ///< procedural textures per mixture slot
  int size = 640;             ///< procedural texture side, px
};

struct RunConfig {
  std::filesystem::path config_dir;  ///< relative paths resolve against this
  std::uint64_t master_seed = 0;
  int workers = 1;
  std::filesystem::path out = "out";
  bool record_timings = false;

  GenConfig gen;
  std::size_t count = 1;
  SourceSpec sources;

  FlowParams flow;
  DereflectMethod dereflect;

  std::filesystem::path manifest;   ///< input dataset for align/dereflect/eval
  std::filesystem::path i1, i2;     ///< single pair input, used when no manifest
  std::filesystem::path estimates;  ///< dereflect output directory, for eval
  std::vector<Threshold> thresholds;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::filesystem::path> out;
};

/// Parses the JSON config at `path` (empty path: all defaults) and applies
/// overrides. Throws ConfigError listing every parse problem.
RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides);

/// Checks everything the subcommand needs; returns all problems at once.
std::vector<std::string> validate_for(const RunConfig& cfg, const std::string& subcommand);

}  // namespace dualview::cli
