#include "commands.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dualview/dataset.hpp"
#include "dualview/dereflect.hpp"
#include "dualview/flow.hpp"
#include "dualview/io.hpp"
#include "dualview/metrics.hpp"
#include "dualview/parallel.hpp"
#include "dualview/warp.hpp"
#include "run_config.hpp"

namespace dualview::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kEstimateFile = "t1_est.pfm";
constexpr const char* kEstimatePreview = "t1_est.png";
constexpr const char* kFlowFile = "flow.flo";
constexpr const char* kRecordFile = "record.json";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::string jsonl(const std::vector<nlohmann::json>& records) {
  std::string text;
  for (const auto& r : records) text += r.dump() + "\n";
  return text;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void require_valid(const RunConfig& cfg, const std::string& subcommand) {
  auto problems = validate_for(cfg, subcommand);
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

// One unit of align/dereflect work: a manifest sample or a bare image pair.
struct WorkItem {
  std::string id;
  fs::path sample_dir;  ///< empty for bare pairs
  fs::path i1, i2;
};

std::vector<WorkItem> work_items(const RunConfig& cfg) {
  std::vector<WorkItem> items;
  if (!cfg.manifest.empty()) {
    const fs::path root = cfg.manifest.parent_path();
    for (const auto& e : read_manifest(cfg.manifest)) {
      const fs::path dir = root / e.dir;
      items.push_back({e.id, dir, dir / sample_files::kI1, dir / sample_files::kI2});
    }
  } else {
    items.push_back({"pair", {}, cfg.i1, cfg.i2});
  }
  return items;
}

SourcePools make_pools(const RunConfig& cfg) {
  if (!cfg.sources.dir.empty()) return load_source_dir(cfg.sources.dir);
  return procedural_pools(split_seed(cfg.master_seed, 0xC0FFEEULL), cfg.sources.per_kind, cfg.sources.size,
                          cfg.sources.size);
}

int report_thresholds(const std::vector<SummaryRow>& summary, const RunConfig& cfg, std::ostream& out,
                      std::ostream& err) {
  out << summary_table(summary);
  const auto violations = check_thresholds(summary, cfg.thresholds);
  for (const auto& v : violations) err << "threshold violated: " << v << "\n";
  return violations.empty() ? kOk : kThresholdsViolated;
}

int cmd_gen(const RunConfig& cfg, std::ostream& out) {
  require_valid(cfg, "gen");
  const SourcePools pools = make_pools(cfg);
  if (pools.total() < 2) throw ConfigError({"need at least 2 source images"});
  const auto t0 = Clock::now();
  const fs::path manifest = gen_dataset(cfg.gen, pools, cfg.count, cfg.out, cfg.workers);
  out << manifest.string() << "\n";
  out << "samples: " << cfg.count << "  sources: " << pools.total() << "  seconds: " << seconds_since(t0) << "\n";
  return kOk;
}

int cmd_align(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_valid(cfg, "align");
  const auto items = work_items(cfg);
  fs::create_directories(cfg.out);
  std::vector<nlohmann::json> records(items.size());
  parallel_for(items.size(), cfg.workers, [&](std::size_t i) {
    const WorkItem& item = items[i];
    const auto t0 = Clock::now();
    const Image i1 = read_image(item.i1);
    const Image i2 = read_image(item.i2);
    Rng rng(split_seed(cfg.master_seed, i));
    const FlowEstimate est = estimate_flow(i1, i2, cfg.flow, rng);
    write_flo(est.flow, cfg.out / (item.id + ".flo"));
    nlohmann::json rec{{"id", item.id},
                       {"reliable", est.reliable},
                       {"homography", est.alignment.homography},
                       {"alignment", est.alignment.diagnostics}};
    if (!item.sample_dir.empty()) {
      const FlowField gt = read_flo(item.sample_dir / sample_files::kF12);
      const ErrorStats e = epe(est.flow, gt);
      rec["epe_mean"] = e.mean;
      rec["epe_median"] = e.median;
    }
    if (cfg.record_timings) rec["seconds"] = seconds_since(t0);
    records[i] = std::move(rec);
  });
  for (const auto& r : records) {
    if (!r.at("reliable").get<bool>()) {
      err << "warning: alignment unreliable for " << r.at("id").get<std::string>() << ": "
          << r.at("alignment").value("message", std::string()) << "\n";
    }
  }
  write_text(cfg.out / "align_records.jsonl", jsonl(records));
  out << "aligned " << items.size() << " pair(s) into " << cfg.out.string() << "\n";
  return kOk;
}

int cmd_dereflect(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_valid(cfg, "dereflect");
  const auto items = work_items(cfg);
  fs::create_directories(cfg.out);
  std::vector<nlohmann::json> records(items.size());
  parallel_for(items.size(), cfg.workers, [&](std::size_t i) {
    const WorkItem& item = items[i];
    const auto t0 = Clock::now();
    const Image i1 = read_image(item.i1);
    const Image i2 = read_image(item.i2);
    Rng rng(split_seed(cfg.master_seed, i));
    const DereflectResult res = dereflect_pair(i1, i2, cfg.dereflect, cfg.flow, rng);
    const fs::path dir = cfg.out / item.id;
    fs::create_directories(dir);
    write_pfm(res.estimate, dir / kEstimateFile);
    write_png(res.estimate, dir / kEstimatePreview);
    write_flo(res.flow.flow, dir / kFlowFile);
    nlohmann::json rec = res.record;
    rec["id"] = item.id;
    if (cfg.record_timings) rec["seconds"] = seconds_since(t0);
    write_text(dir / kRecordFile, rec.dump(2) + "\n");
    records[i] = std::move(rec);
  });
  for (const auto& r : records) {
    if (!r.at("alignment_reliable").get<bool>()) {
      err << "warning: alignment unreliable for " << r.at("id").get<std::string>() << "\n";
    }
  }
  write_text(cfg.out / "dereflect_records.jsonl", jsonl(records));
  out << "dereflected " << items.size() << " pair(s) into " << cfg.out.string() << " using "
      << to_string(cfg.dereflect.kind) << "\n";
  return kOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_valid(cfg, "eval");
  const auto entries = read_manifest(cfg.manifest);
  std::vector<std::string> missing;
  for (const auto& e : entries) {
    for (const char* f : {kEstimateFile, kFlowFile}) {
      if (!fs::is_regular_file(cfg.estimates / e.id / f)) missing.push_back("missing estimate: " + (cfg.estimates / e.id / f).string());
    }
  }
  if (!missing.empty()) throw ConfigError(missing);
  if (entries.empty()) throw ConfigError({"manifest is empty"});

  const fs::path root = cfg.manifest.parent_path();
  std::vector<MetricsReport> reports(entries.size());
  parallel_for(entries.size(), cfg.workers, [&](std::size_t i) {
    const SamplePair pair = load_sample(root / entries[i].dir);
    const Image est = read_pfm(cfg.estimates / entries[i].id / kEstimateFile);
    const FlowField flow = read_flo(cfg.estimates / entries[i].id / kFlowFile);
    reports[i] = evaluate_sample(pair, flow, est);
  });
  fs::create_directories(cfg.out);
  std::vector<nlohmann::json> rows;
  for (const auto& r : reports) rows.emplace_back(r);
  write_text(cfg.out / "reports.jsonl", jsonl(rows));
  const auto summary = aggregate(reports);
  write_text(cfg.out / "summary.jsonl", summary_jsonl(summary));
  write_text(cfg.out / "summary.txt", summary_table(summary));
  return report_thresholds(summary, cfg, out, err);
}

int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_valid(cfg, "bench");
  const SourcePools pools = make_pools(cfg);
  if (pools.total() < 2) throw ConfigError({"need at least 2 source images"});
  std::vector<MetricsReport> reports(cfg.count);
  std::vector<double> seconds(cfg.count);
  parallel_for(cfg.count, cfg.workers, [&](std::size_t i) {
    const SamplePair pair = generate_sample(cfg.gen, pools, i);
    const auto t0 = Clock::now();
    Rng rng(split_seed(cfg.master_seed, i));
    const DereflectResult res = dereflect_pair(pair.i1, pair.i2, cfg.dereflect, cfg.flow, rng);
    seconds[i] = seconds_since(t0);
    reports[i] = evaluate_sample(pair, res.flow.flow, res.estimate);
  });
  fs::create_directories(cfg.out);
  std::vector<nlohmann::json> rows;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    nlohmann::json r = reports[i];
    if (cfg.record_timings) r["seconds"] = seconds[i];
    rows.push_back(std::move(r));
  }
  write_text(cfg.out / "reports.jsonl", jsonl(rows));
  const auto summary = aggregate(reports);
  write_text(cfg.out / "summary.jsonl", summary_jsonl(summary));
  write_text(cfg.out / "summary.txt", summary_table(summary));
  double total = 0.0;
  for (double s : seconds) total += s;
  err << "pairs: " << cfg.count << "  mean seconds per pair: " << total / static_cast<double>(cfg.count) << "\n";
  return report_thresholds(summary, cfg, out, err);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-view reflection removal: dataset generation, alignment, dereflection, evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "Override master_seed");
    sub->add_option("--workers", workers, "Override worker count");
    sub->add_option("--out", out_dir, "Override output directory");
  };
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"gen", "Generate a synthetic dual-view dataset"},
      {"align", "Estimate transmission flow for each pair"},
      {"dereflect", "Estimate the view-1 transmission for each pair"},
      {"eval", "Score estimates against a generated dataset"},
      {"bench", "Generate, dereflect and score in memory"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return e.get_exit_code() == 0 ? kOk : kConfigInvalid;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    Overrides ov;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--workers")) ov.workers = workers;
    if (sub->count("--out")) ov.out = fs::path(out_dir);
    const RunConfig cfg = load_run_config(config_path, ov);
    if (name == "gen") return cmd_gen(cfg, out);
    if (name == "align") return cmd_align(cfg, out, err);
    if (name == "dereflect") return cmd_dereflect(cfg, out, err);
    if (name == "eval") return cmd_eval(cfg, out, err);
    return cmd_bench(cfg, out, err);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kConfigInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

}  // namespace dualview::cli
