// Acceptance suite on the desk benchmark. Prints one PASS/FAIL line per
// criterion and exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "dualview/dataset.hpp"
#include "dualview/dereflect.hpp"
#include "dualview/flow.hpp"
#include "dualview/io.hpp"
#include "dualview/metrics.hpp"
#include "dualview/warp.hpp"
#include "run_config.hpp"

namespace {

using namespace dualview;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  std::string id;
  bool pass;
  std::string detail;
};

std::vector<Outcome> outcomes;

void record(const std::string& id, bool pass, const std::string& detail) {
  outcomes.push_back({id, pass, detail});
  std::cout << id << (pass ? " PASS " : " FAIL ") << detail << std::endl;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_abs(const Image& a, const Image& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(double(a.data()[i]) - b.data()[i]);
  return acc / static_cast<double>(a.size());
}

double mean_flow_norm(const FlowField& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += std::hypot(double(f.u_data()[i]), double(f.v_data()[i]));
  return acc / static_cast<double>(f.size());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

SourcePools pools_for(const cli::RunConfig& cfg) {
  if (!cfg.sources.dir.empty()) return load_source_dir(cfg.sources.dir);
  return procedural_pools(split_seed(cfg.master_seed, 0xC0FFEEULL), cfg.sources.per_kind, cfg.sources.size,
                          cfg.sources.size);
}

// Largest |I_k - model| over pixels where the unclamped model lies in [0, 1].
double formation_residual(const SamplePair& p) {
  const double a = p.params.alpha, g = p.params.spot_gain;
  double worst = 0.0;
  for (int k = 0; k < 2; ++k) {
    const Image& i = k ? p.i2 : p.i1;
    const Image& t = k ? p.t2 : p.t1;
    const Image& r = k ? p.r2 : p.r1;
    const Image& s = k ? p.s2 : p.s1;
    for (int c = 0; c < i.channels(); ++c) {
      for (int y = 0; y < i.height(); ++y) {
        for (int x = 0; x < i.width(); ++x) {
          const double model = a * t.at(x, y, c) + (1 - a) * r.at(x, y, c) + s.at(x, y) * (1 - a) * g;
          if (model < 0.0 || model > 1.0) continue;
          worst = std::max(worst, std::abs(i.at(x, y, c) - model));
        }
      }
    }
  }
  return worst;
}

// Mean |T1 - warp(T2, F12)| over unoccluded, warp-valid pixels.
double oracle_warp_error(const SamplePair& p) {
  const WarpResult w = backward_warp(p.t2, p.f12, BorderPolicy::kMarkInvalid);
  double acc = 0.0;
  std::size_t n = 0;
  for (int c = 0; c < p.t1.channels(); ++c) {
    for (int y = 0; y < p.t1.height(); ++y) {
      for (int x = 0; x < p.t1.width(); ++x) {
        if (p.occl12.at(x, y) > 0.5f || w.valid.at(x, y) < 0.5f) continue;
        acc += std::abs(double(p.t1.at(x, y, c)) - w.image.at(x, y, c));
        ++n;
      }
    }
  }
  return n ? acc / n : 0.0;
}

struct PairRun {
  SamplePair pair;
  DereflectResult result;
  double flow_seconds = 0.0;
};

void check_a1(const std::vector<PairRun>& runs) {
  double worst = 0.0, slowest = 0.0;
  for (const auto& r : runs) {
    const auto t0 = Clock::now();
    worst = std::max(worst, formation_residual(r.pair));
    slowest = std::max(slowest, seconds_since(t0));
  }
  record("A1", worst <= 1e-6 && slowest < 1.0,
         fmt("formation identity: max residual %.3g over %zu pairs (limit 1e-6); slowest check %.3f s (limit 1 s)",
             worst, runs.size(), slowest));
}

void check_a2(const std::vector<PairRun>& runs, const cli::RunConfig& cfg, const SourcePools& pools) {
  double worst = 0.0;
  for (const auto& r : runs) worst = std::max(worst, oracle_warp_error(r.pair));
  GenConfig integer = cfg.gen;
  integer.inter_view = {cfg.gen.inter_view.max_translation, 0.0, 0.0, true};
  integer.view_jitter = {cfg.gen.view_jitter.max_translation, 0.0, 0.0, true};
  double worst_integer = 0.0;
  const std::size_t n_integer = 5;
  for (std::size_t i = 0; i < n_integer; ++i) {
    worst_integer = std::max(worst_integer, oracle_warp_error(generate_sample(integer, pools, i)));
  }
  record("A2", worst < 0.02 && worst_integer == 0.0,
         fmt("oracle warp consistency: worst pair mean abs %.5f (limit 0.02); integer-translation pairs %.3g over %zu "
             "(must be 0)",
             worst, worst_integer, n_integer));
}

void check_a3(const std::vector<PairRun>& runs, const cli::RunConfig& cfg, const SourcePools& pools) {
  std::size_t under = 0;
  double sum_contaminated = 0.0, sum_twin = 0.0, slowest = 0.0;
  GenConfig twin_cfg = cfg.gen;
  twin_cfg.alpha = {1.0, 1.0};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double e = epe(runs[i].result.flow.flow, runs[i].pair.f12).mean;
    under += e < 0.5;
    sum_contaminated += e;
    slowest = std::max(slowest, runs[i].flow_seconds);
    const SamplePair twin = generate_sample(twin_cfg, pools, i);
    Rng rng(split_seed(cfg.master_seed, i));
    sum_twin += epe(estimate_flow(twin.i1, twin.i2, cfg.flow, rng).flow, twin.f12).mean;
  }
  const double n = static_cast<double>(runs.size());
  const double frac = under / n;
  const double ratio = sum_contaminated / std::max(sum_twin, 1e-12);
  record("A3", frac >= 0.9 && ratio <= 2.0 && slowest < 5.0,
         fmt("reflection-robust alignment: %zu/%zu pairs EPE < 0.5 px (%.0f%%, need 90%%); mean EPE contaminated "
             "%.3f vs reflection-free twins %.3f, ratio %.2f (limit 2); slowest flow %.2f s (limit 5 s)",
             under, runs.size(), 100 * frac, sum_contaminated / n, sum_twin / n, ratio, slowest));
}

void check_a3b(const cli::RunConfig& cfg) {
  const int size = 256;
  const Image t = to_gray(procedural_source(split_seed(cfg.master_seed, 31), size + 16, size));
  const Image r = to_gray(procedural_source(split_seed(cfg.master_seed, 32), size + 16, size));
  // View 1 crops at x offset 8; view 2 sees T moved by +3 and R by -3.
  auto view = [&](int t_shift, int r_shift) {
    Image out(size, size, 1);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        out.at(x, y) = 0.7f * t.at(x + 8 - t_shift, y) + 0.3f * r.at(x + 8 - r_shift, y);
      }
    }
    return out;
  };
  const Image i1 = view(0, 0), i2 = view(3, -3);
  Rng rng(split_seed(cfg.master_seed, 33));
  const FlowField f = estimate_flow(i1, i2, cfg.flow, rng).flow;
  double acc = 0.0;
  std::size_t n = 0;
  for (int y = 8; y < size - 8; ++y) {
    for (int x = 8; x < size - 8; ++x) {
      const double gx = 0.5 * (t.at(x + 9, y) - t.at(x + 7, y));
      const double gy = 0.5 * (t.at(x + 8, y + 1) - t.at(x + 8, y - 1));
      if (std::hypot(gx, gy) < 0.01) continue;  // textured transmission only
      acc += std::hypot(f.u(x, y) - 3.0, double(f.v(x, y)));
      ++n;
    }
  }
  const double e = n ? acc / n : INFINITY;
  record("A3b", e < 1.0,
         fmt("two-motion separation: EPE vs transmission (3,0) %.3f px on %zu textured pixels (limit 1.0)", e, n));
}

void check_a4(const std::vector<PairRun>& runs) {
  double zeros_err = 0.0, psnr_shift = 0.0, ssim_err = 0.0;
  for (const auto& r : runs) {
    const MetricsReport rep = evaluate_sample(r.pair, r.result.flow.flow, r.result.estimate);
    zeros_err = std::max(zeros_err, std::abs(rep.zeros_flow.epe.mean - mean_flow_norm(r.pair.f12)));
  }
  const SamplePair& p = runs.front().pair;
  const Image target = p.target();
  const double base = score_transmission(p.i1, target).psnr;
  for (auto [s, b] : {std::pair{1.7, -0.2}, std::pair{0.45, 0.3}}) {
    Image moved = p.i1;
    for (float& v : moved.data()) v = static_cast<float>(s * v + b);
    psnr_shift = std::max(psnr_shift, std::abs(score_transmission(moved, target).psnr - base));
  }
  for (const auto& r : runs) ssim_err = std::max(ssim_err, std::abs(ssim(r.pair.i1, r.pair.i1) - 1.0));
  Image pred(64, 64, 3), gt(64, 64, 3);
  Rng rng(5);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double v = static_cast<double>(rng.below(4096)) / 4096.0;
    pred.data()[i] = static_cast<float>(v);
    gt.data()[i] = static_cast<float>(0.75 * v + 0.125);
  }
  const Calibration c = calibrate_gain_bias(pred, gt);
  const double cal_err = std::max(std::abs(c.gain - 0.75), std::abs(c.bias - 0.125));
  record("A4", zeros_err <= 1e-6 && cal_err <= 1e-9 && psnr_shift <= 1e-6 && ssim_err <= 1e-9,
         fmt("metric protocol: zeros row vs analytic %.2g (limit 1e-6); planted gain/bias error %.2g (limit 1e-9); "
             "PSNR change under affine maps %.2g dB (limit 1e-6); |SSIM(x,x)-1| %.2g (limit 1e-9)",
             zeros_err, cal_err, psnr_shift, ssim_err));
}

void check_a5(const std::vector<PairRun>& runs, const cli::RunConfig& cfg) {
  std::vector<double> est, input;
  std::size_t no_worse = 0;
  for (const auto& r : runs) {
    const Image target = r.pair.target();
    est.push_back(score_transmission(r.result.estimate, target).psnr);
    input.push_back(score_transmission(r.pair.i1, target).psnr);
    no_worse += mean_abs(r.result.estimate, target) <= mean_abs(r.pair.i1, target);
  }
  const double gain = median(est) - median(input);
  const double frac = no_worse / static_cast<double>(runs.size());
  record("A5", gain >= 1.0 && frac >= 0.9,
         fmt("dereflection (%s): median calibrated PSNR %.2f dB vs input %.2f dB, gain %+.2f dB (need +1); "
             "mean abs error not above input on %zu/%zu pairs (%.0f%%, need 90%%)",
             std::string(to_string(cfg.dereflect.kind)).c_str(), median(est), median(input), gain, no_worse,
             runs.size(), 100 * frac));
}

void check_a6(const std::vector<PairRun>& runs) {
  const Image& photo = runs.front().pair.t1;
  Rng rng(6);
  Image noise(photo.width(), photo.height(), 1);
  for (float& v : noise.data()) v = static_cast<float>(rng.uniform());
  double worst_rmse = 0.0, worst_residual = 0.0;
  int worst_iterations = 0;
  bool converged = true;
  for (const Image* img : {&photo, static_cast<const Image*>(&noise)}) {
    Image gx, gy;
    forward_gradients(*img, gx, gy);
    const PoissonResult r = poisson_reconstruct(gx, gy, Image(img->width(), img->height(), img->channels()), 0.0);
    for (int c = 0; c < img->channels(); ++c) {
      const auto a = r.image.plane(c), b = img->plane(c);
      double shift = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) shift += double(a[i]) - b[i];
      shift /= a.size();
      double acc = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(double(a[i]) - b[i] - shift, 2);
      worst_rmse = std::max(worst_rmse, std::sqrt(acc / a.size()));
    }
    worst_residual = std::max(worst_residual, r.residual);
    worst_iterations = std::max(worst_iterations, r.iterations);
    converged = converged && r.converged;
  }
  record("A6", worst_rmse < 1e-3 && worst_residual < 1e-6 && converged && worst_iterations <= 2000,
         fmt("Poisson at %dx%d: RMSE after mean alignment %.2g (limit 1e-3); relative residual %.2g in %d iterations "
             "(limits 1e-6, 2000)",
             photo.width(), photo.height(), worst_rmse, worst_residual, worst_iterations));
}

void check_a7(const fs::path& desk_config, const std::vector<PairRun>& runs) {
  const fs::path root = fs::temp_directory_path() / "dualview_acceptance_a7";
  fs::remove_all(root);
  fs::create_directories(root);
  // Same generator, flow and method settings as the benchmark; fewer pairs.
  std::ifstream in(desk_config);
  nlohmann::json cfg = nlohmann::json::parse(in);
  cfg["gen"]["count"] = 4;
  std::string detail;
  bool same = true;
  std::map<std::string, std::string> trees[2];
  for (int pass = 0; pass < 2; ++pass) {
    const std::string workers = pass ? "4" : "1";
    const fs::path dir = root / ("w" + workers);
    fs::create_directories(dir);
    nlohmann::json c = cfg;
    c["out"] = "data";
    c["input"] = {{"manifest", "data/manifest.jsonl"}, {"estimates", "est"}};
    std::ofstream(dir / "run.json") << c.dump(2);
    for (const auto& [cmd, out] : {std::pair{"gen", "data"}, std::pair{"dereflect", "est"}, std::pair{"eval", "eval"}}) {
      const std::string config = (dir / "run.json").string(), out_dir = (dir / out).string();
      const char* argv[] = {"dualview", cmd, "--config", config.c_str(), "--workers", workers.c_str(), "--out",
                            out_dir.c_str()};
      std::ostringstream sink_out, sink_err;
      const int code = cli::run(8, argv, sink_out, sink_err);
      if (code != cli::kOk) {
        same = false;
        detail += std::string(cmd) + " exited " + std::to_string(code) + "; ";
      }
    }
    trees[pass] = snapshot(dir / "data");
    for (auto& [k, v] : snapshot(dir / "est")) trees[pass]["est/" + k] = v;
    for (auto& [k, v] : snapshot(dir / "eval")) trees[pass]["eval/" + k] = v;
  }
  same = same && trees[0] == trees[1] && !trees[0].empty();

  bool exact = true;
  for (const auto& r : runs) {
    write_pfm(r.pair.i1, root / "x.pfm");
    write_flo(r.pair.f12, root / "x.flo");
    exact = exact && read_pfm(root / "x.pfm") == r.pair.i1 && read_flo(root / "x.flo") == r.pair.f12;
  }
  fs::remove_all(root);
  record("A7", same && exact,
         fmt("determinism: gen+dereflect+eval outputs %s across 1 vs 4 workers (%zu files); FLO/PFM round-trips %s "
             "on %zu pairs %s",
             same ? "byte-identical" : "DIFFER", trees[0].size(), exact ? "bit-exact" : "NOT exact", runs.size(),
             detail.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path desk = argc > 1 ? fs::path(argv[1]) : fs::path(DUALVIEW_DESK_CONFIG);
  const cli::RunConfig cfg = cli::load_run_config(desk, {});
  if (const auto problems = cli::validate_for(cfg, "bench"); !problems.empty()) {
    for (const auto& p : problems) std::cerr << p << "\n";
    return 2;
  }
  const SourcePools pools = pools_for(cfg);
  std::cout << "desk benchmark: " << cfg.count << " pairs at " << cfg.gen.out_size << "x" << cfg.gen.out_size
            << ", seed " << cfg.master_seed << ", method " << to_string(cfg.dereflect.kind) << std::endl;

  std::vector<PairRun> runs(cfg.count);
  const auto t0 = Clock::now();
  for (std::size_t i = 0; i < cfg.count; ++i) {
    runs[i].pair = generate_sample(cfg.gen, pools, i);
    Rng rng(split_seed(cfg.master_seed, i));
    const auto tf = Clock::now();
    runs[i].result = dereflect_pair(runs[i].pair.i1, runs[i].pair.i2, cfg.dereflect, cfg.flow, rng);
    runs[i].flow_seconds = seconds_since(tf);
  }
  std::cout << "pipeline: " << fmt("%.1f", seconds_since(t0)) << " s" << std::endl;

  check_a1(runs);
  check_a2(runs, cfg, pools);
  check_a3(runs, cfg, pools);
  check_a3b(cfg);
  check_a4(runs);
  check_a5(runs, cfg);
  check_a6(runs);
  check_a7(desk, runs);

  const auto failed = std::count_if(outcomes.begin(), outcomes.end(), [](const Outcome& o) { return !o.pass; });
  std::cout << (outcomes.size() - failed) << "/" << outcomes.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
