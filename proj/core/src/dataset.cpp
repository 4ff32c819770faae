#include "dualview/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "dualview/io.hpp"
#include "dualview/parallel.hpp"
#include "dualview/random.hpp"

namespace dualview {

namespace fs = std::filesystem;

std::size_t SourcePools::total() const noexcept {
  std::size_t n = 0;
  for (const auto& p : by_kind) n += p.size();
  return n;
}

std::vector<const Image*> SourcePools::pool_for(SourceKind kind) const {
  std::vector<const Image*> out;
  const auto& own = by_kind[static_cast<std::size_t>(kind)];
  if (own.size() >= 2) {
    for (const Image& img : own) out.push_back(&img);
    return out;
  }
  for (const auto& p : by_kind) {
    for (const Image& img : p) out.push_back(&img);
  }
  return out;
}

namespace {

bool is_image_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".png" || ext == ".pfm" || ext == ".PNG" || ext == ".PFM";
}

std::vector<Image> load_flat(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> images;
  images.reserve(files.size());
  for (const auto& f : files) {
    Image img = read_image(f);
    if (img.channels() == 1) {
      Image rgb(img.width(), img.height(), 3);
      for (int c = 0; c < 3; ++c) std::ranges::copy(img.plane(0), rgb.plane(c).begin());
      img = std::move(rgb);
    }
    if (img.channels() != 3) throw Error(ErrorCode::kUnsupportedFormat, "source must be gray or RGB: " + f.string());
    images.push_back(std::move(img));
  }
  return images;
}

}  // namespace

SourcePools load_source_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "source directory not found: " + dir.string());
  SourcePools pools;
  bool nested = false;
  for (SourceKind kind : {SourceKind::kRendered, SourceKind::kWarped, SourceKind::kRenderedHomography}) {
    const fs::path sub = dir / std::string(to_string(kind));
    if (fs::is_directory(sub)) {
      pools.by_kind[static_cast<std::size_t>(kind)] = load_flat(sub);
      nested = true;
    }
  }
  if (!nested) pools.by_kind[0] = load_flat(dir);
  return pools;
}

SourcePools procedural_pools(std::uint64_t seed, int per_kind, int width, int height) {
  SourcePools pools;
  for (std::size_t k = 0; k < pools.by_kind.size(); ++k) {
    for (int i = 0; i < per_kind; ++i) {
      const std::uint64_t s = split_seed(seed, k * 1000003ULL + static_cast<std::uint64_t>(i));
      pools.by_kind[k].push_back(procedural_source(s, width, height, static_cast<SourceKind>(k)));
    }
  }
  return pools;
}

std::string sample_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05zu", index);
  return buf;
}

SamplePair generate_sample(const GenConfig& cfg, const SourcePools& pools, std::size_t index) {
  const std::uint64_t seed = split_seed(cfg.master_seed, index);
  Rng rng(seed);

  const double u = rng.uniform();
  // Rounding can leave u above the final cumulative weight; the last
  // positive-weight kind absorbs it.
  SourceKind kind = SourceKind::kRendered;
  double acc = 0.0;
  for (std::size_t k = 0; k < cfg.source_mixture.size(); ++k) {
    if (cfg.source_mixture[k] <= 0.0) continue;
    acc += cfg.source_mixture[k];
    kind = static_cast<SourceKind>(k);
    if (u < acc) break;
  }
  const auto pool = pools.pool_for(kind);
  if (pool.size() < 2) throw Error(ErrorCode::kInsufficientSources, "need at least 2 source images");
  const auto ti = rng.below(pool.size());
  auto ri = rng.below(pool.size() - 1);
  if (ri >= ti) ++ri;

  SamplePair pair = compose_views(*pool[ti], *pool[ri], rng, cfg);
  pair.id = sample_id(index);
  pair.params.seed = seed;
  pair.params.source_kind = kind;
  pair.params.transmission_source = static_cast<int>(ti);
  pair.params.reflection_source = static_cast<int>(ri);
  return pair;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
}

}  // namespace

void write_sample(const SamplePair& pair, const fs::path& dir) {
  namespace f = sample_files;
  fs::create_directories(dir);
  write_pfm(pair.i1, dir / f::kI1);
  write_pfm(pair.i2, dir / f::kI2);
  write_png(pair.i1, dir / f::kI1Preview);
  write_png(pair.i2, dir / f::kI2Preview);
  write_pfm(pair.t1, dir / f::kT1);
  write_pfm(pair.t2, dir / f::kT2);
  write_pfm(pair.r1, dir / f::kR1);
  write_pfm(pair.r2, dir / f::kR2);
  write_pfm(pair.s1, dir / f::kS1);
  write_pfm(pair.s2, dir / f::kS2);
  write_flo(pair.f12, dir / f::kF12);
  write_flo(pair.f21, dir / f::kF21);
  write_pfm(pair.occl12, dir / f::kOccl12);
  write_pfm(pair.occl21, dir / f::kOccl21);
  nlohmann::json params = pair.params;
  params["id"] = pair.id;
  write_text(dir / f::kParams, params.dump(2) + "\n");
}

SamplePair load_sample(const fs::path& dir) {
  namespace f = sample_files;
  SamplePair pair;
  const nlohmann::json params = read_json_file(dir / f::kParams);
  pair.params = params.get<SampleParams>();
  pair.id = params.value("id", dir.filename().string());
  pair.i1 = read_pfm(dir / f::kI1);
  pair.i2 = read_pfm(dir / f::kI2);
  pair.t1 = read_pfm(dir / f::kT1);
  pair.t2 = read_pfm(dir / f::kT2);
  pair.r1 = read_pfm(dir / f::kR1);
  pair.r2 = read_pfm(dir / f::kR2);
  pair.s1 = read_pfm(dir / f::kS1);
  pair.s2 = read_pfm(dir / f::kS2);
  pair.f12 = read_flo(dir / f::kF12);
  pair.f21 = read_flo(dir / f::kF21);
  pair.occl12 = read_pfm(dir / f::kOccl12);
  pair.occl21 = read_pfm(dir / f::kOccl21);
  return pair;
}

void to_json(nlohmann::json& j, const ManifestEntry& e) {
  namespace f = sample_files;
  j = nlohmann::json{{"id", e.id},
                     {"dir", e.dir},
                     {"paths",
                      {{"i1", f::kI1},
                       {"i2", f::kI2},
                       {"t1", f::kT1},
                       {"t2", f::kT2},
                       {"r1", f::kR1},
                       {"r2", f::kR2},
                       {"f12", f::kF12},
                       {"f21", f::kF21},
                       {"occl12", f::kOccl12},
                       {"occl21", f::kOccl21}}},
                     {"params", e.params}};
}

void from_json(const nlohmann::json& j, ManifestEntry& e) {
  e.id = j.at("id").get<std::string>();
  e.dir = j.value("dir", e.id);
  e.params = j.at("params").get<SampleParams>();
}

void write_manifest(const std::vector<ManifestEntry>& entries, const fs::path& path) {
  std::string text;
  for (const auto& e : entries) text += nlohmann::json(e).dump() + "\n";
  write_text(path, text);
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest: " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      entries.push_back(nlohmann::json::parse(line).get<ManifestEntry>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return entries;
}

fs::path gen_dataset(const GenConfig& cfg, const SourcePools& pools, std::size_t count, const fs::path& out_dir,
                     int workers) {
  cfg.validate();
  for (std::size_t k = 0; k < cfg.source_mixture.size(); ++k) {
    if (cfg.source_mixture[k] > 0.0 && pools.pool_for(static_cast<SourceKind>(k)).size() < 2) {
      throw Error(ErrorCode::kInsufficientSources, "need at least 2 source images");
    }
  }
  if (fs::exists(out_dir) && !fs::is_directory(out_dir)) {
    throw Error(ErrorCode::kIo, "output path is not a directory: " + out_dir.string());
  }
  fs::create_directories(out_dir);

  std::vector<ManifestEntry> entries(count);
  parallel_for(count, workers, [&](std::size_t i) {
    const SamplePair pair = generate_sample(cfg, pools, i);
    write_sample(pair, out_dir / pair.id);
    entries[i] = {pair.id, pair.id, pair.params};
  });
  write_text(out_dir / "gen_config.json", nlohmann::json(cfg).dump(2) + "\n");
  const fs::path manifest = out_dir / "manifest.jsonl";
  write_manifest(entries, manifest);
  return manifest;
}

}  // namespace dualview
