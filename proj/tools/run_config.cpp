#include "run_config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace dualview::cli {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out = "invalid configuration";
  for (const auto& s : items) out += "\n  - " + s;
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// Runs `fn`, recording any parse failure under `where` instead of throwing.
template <typename Fn>
void guarded(std::vector<std::string>& problems, const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(where + ": " + e.what());
  } catch (const Error& e) {
    problems.push_back(where + ": " + e.what());
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

RunConfig load_run_config(const fs::path& path, const Overrides& overrides) {
  RunConfig cfg;
  std::vector<std::string> problems;
  nlohmann::json j = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot read config file " + path.string()});
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError({path.string() + ": " + e.what()});
    }
    if (!j.is_object()) throw ConfigError({path.string() + ": top level must be an object"});
    cfg.config_dir = fs::absolute(path).parent_path();
  } else {
    cfg.config_dir = fs::current_path();
  }

  guarded(problems, "master_seed", [&] { cfg.master_seed = j.value("master_seed", cfg.master_seed); });
  guarded(problems, "workers", [&] { cfg.workers = j.value("workers", cfg.workers); });
  guarded(problems, "record_timings", [&] { cfg.record_timings = j.value("record_timings", cfg.record_timings); });
  guarded(problems, "out", [&] {
    if (j.contains("out")) cfg.out = resolve(cfg.config_dir, j.at("out").get<std::string>());
  });
  if (j.contains("gen")) {
    const auto& g = j.at("gen");
    guarded(problems, "gen", [&] { g.get_to(cfg.gen); });
    guarded(problems, "gen.count", [&] { cfg.count = g.value("count", cfg.count); });
    if (g.contains("sources")) {
      const auto& s = g.at("sources");
      guarded(problems, "gen.sources", [&] {
        cfg.sources.dir = resolve(cfg.config_dir, s.value("dir", std::string()));
        cfg.sources.per_kind = s.value("per_kind", cfg.sources.per_kind);
        cfg.sources.size = s.value("size", cfg.sources.size);
      });
    }
  }
  if (j.contains("flow")) guarded(problems, "flow", [&] { j.at("flow").get_to(cfg.flow); });
  if (j.contains("dereflect")) guarded(problems, "dereflect", [&] { j.at("dereflect").get_to(cfg.dereflect); });
  if (j.contains("input")) {
    const auto& in = j.at("input");
    guarded(problems, "input", [&] {
      cfg.manifest = resolve(cfg.config_dir, in.value("manifest", std::string()));
      cfg.i1 = resolve(cfg.config_dir, in.value("i1", std::string()));
      cfg.i2 = resolve(cfg.config_dir, in.value("i2", std::string()));
      cfg.estimates = resolve(cfg.config_dir, in.value("estimates", std::string()));
    });
  }
  if (j.contains("thresholds")) {
    guarded(problems, "thresholds", [&] { cfg.thresholds = j.at("thresholds").get<std::vector<Threshold>>(); });
  }
  if (!problems.empty()) throw ConfigError(problems);

  if (overrides.seed) cfg.master_seed = *overrides.seed;
  if (overrides.workers) cfg.workers = *overrides.workers;
  if (overrides.out) cfg.out = *overrides.out;
  cfg.gen.master_seed = cfg.master_seed;
  return cfg;
}

std::vector<std::string> validate_for(const RunConfig& cfg, const std::string& subcommand) {
  std::vector<std::string> problems;
  auto check = [&](auto&& fn, const std::string& where) {
    try {
      fn();
    } catch (const Error& e) {
      problems.push_back(where + ": " + e.what());
    }
  };
  if (cfg.workers < 1) problems.push_back("workers must be >= 1");
  if (cfg.out.empty()) problems.push_back("out must name a directory");
  if (fs::exists(cfg.out) && !fs::is_directory(cfg.out)) {
    problems.push_back("out exists and is not a directory: " + cfg.out.string());
  }

  const bool gen = subcommand == "gen" || subcommand == "bench";
  const bool flow = subcommand == "align" || subcommand == "dereflect" || subcommand == "bench";
  if (gen) {
    check([&] { cfg.gen.validate(); }, "gen");
    if (cfg.count < 1) problems.push_back("gen.count must be >= 1");
    if (!cfg.sources.dir.empty()) {
      if (!fs::is_directory(cfg.sources.dir)) problems.push_back("source directory not found: " + cfg.sources.dir.string());
    } else {
      if (cfg.sources.per_kind < 2) problems.push_back("gen.sources.per_kind must be >= 2");
      if (cfg.sources.size < cfg.gen.out_size) problems.push_back("gen.sources.size must be >= gen.out_size");
    }
  }
  if (flow) {
    check([&] { cfg.flow.validate(); }, "flow");
    check([&] { cfg.dereflect.validate(); }, "dereflect");
  }
  const bool needs_input = subcommand == "align" || subcommand == "dereflect";
  if (needs_input) {
    if (!cfg.manifest.empty()) {
      if (!fs::is_regular_file(cfg.manifest)) problems.push_back("manifest not found: " + cfg.manifest.string());
    } else if (!cfg.i1.empty() || !cfg.i2.empty()) {
      for (const auto& p : {cfg.i1, cfg.i2}) {
        if (!fs::is_regular_file(p)) problems.push_back("input image not found: " + p.string());
      }
    } else {
      problems.push_back("input.manifest or input.i1/input.i2 is required");
    }
  }
  if (subcommand == "eval") {
    if (cfg.manifest.empty() || !fs::is_regular_file(cfg.manifest)) {
      problems.push_back("manifest not found: " + cfg.manifest.string());
    }
    if (cfg.estimates.empty() || !fs::is_directory(cfg.estimates)) {
      problems.push_back("estimates directory not found: " + cfg.estimates.string());
    }
  }
  for (const auto& t : cfg.thresholds) {
    if (t.stat != "mean" && t.stat != "median") problems.push_back("threshold stat must be mean or median: " + t.metric);
    if (!t.min && !t.max) problems.push_back("threshold needs min or max: " + t.metric);
  }
  return problems;
}

}  // namespace dualview::cli
