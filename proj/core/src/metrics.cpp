#include "dualview/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dualview/filter.hpp"
#include "dualview/parallel.hpp"
#include "dualview/warp.hpp"

namespace dualview {

namespace {

ErrorStats stats_of(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyMask, "no pixels selected for evaluation");
  ErrorStats s;
  s.count = values.size();
  s.mean = pairwise_sum(values) / static_cast<double>(values.size());
  const std::size_t k = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  s.median = values[k];
  return s;
}

bool selected(const Mask& mask, int x, int y) { return mask.empty() || mask.at(x, y) > 0.5f; }

}  // namespace

ErrorStats epe(const FlowField& est, const FlowField& gt, const Mask& mask) {
  if (!est.same_extent(gt.width(), gt.height()) || (!mask.empty() && !mask.same_extent(gt.width(), gt.height()))) {
    throw Error(ErrorCode::kDimensionMismatch, "epe: extents differ");
  }
  std::vector<double> errs;
  errs.reserve(gt.size());
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!selected(mask, x, y)) continue;
      errs.push_back(std::hypot(static_cast<double>(est.u(x, y)) - gt.u(x, y),
                                static_cast<double>(est.v(x, y)) - gt.v(x, y)));
    }
  }
  return stats_of(std::move(errs));
}

ErrorStats abs_warp_error(const Image& t1, const Image& t2, const FlowField& flow, const Mask& occl) {
  require_same_shape(t1, t2, "abs_warp_error");
  if (!flow.same_extent(t1.width(), t1.height())) {
    throw Error(ErrorCode::kDimensionMismatch, "abs_warp_error: flow extent differs");
  }
  if (!occl.empty()) require_same_extent(t1, occl, "abs_warp_error");
  const WarpResult warped = backward_warp(t2, flow, BorderPolicy::kMarkInvalid);
  std::vector<double> errs;
  errs.reserve(t1.size());
  for (int c = 0; c < t1.channels(); ++c) {
    for (int y = 0; y < t1.height(); ++y) {
      for (int x = 0; x < t1.width(); ++x) {
        if (warped.valid.at(x, y) < 0.5f || (!occl.empty() && occl.at(x, y) >= 0.5f)) continue;
        errs.push_back(255.0 * std::abs(static_cast<double>(t1.at(x, y, c)) - warped.image.at(x, y, c)));
      }
    }
  }
  return stats_of(std::move(errs));
}

Calibration calibrate_gain_bias(const Image& pred, const Image& gt, const Mask& mask) {
  require_same_shape(pred, gt, "calibrate_gain_bias");
  if (!mask.empty()) require_same_extent(pred, mask, "calibrate_gain_bias");
  std::vector<double> p, g;
  p.reserve(pred.size());
  g.reserve(pred.size());
  for (int c = 0; c < pred.channels(); ++c) {
    for (int y = 0; y < pred.height(); ++y) {
      for (int x = 0; x < pred.width(); ++x) {
        if (!selected(mask, x, y)) continue;
        p.push_back(pred.at(x, y, c));
        g.push_back(gt.at(x, y, c));
      }
    }
  }
  if (p.empty()) throw Error(ErrorCode::kEmptyMask, "calibrate_gain_bias: empty mask");
  const double n = static_cast<double>(p.size());
  const double mp = pairwise_sum(p) / n;
  const double mg = pairwise_sum(g) / n;
  std::vector<double> cov(p.size()), var(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    cov[i] = (p[i] - mp) * (g[i] - mg);
    var[i] = (p[i] - mp) * (p[i] - mp);
  }
  const double vp = pairwise_sum(var) / n;
  Calibration cal;
  if (!(vp > 1e-12)) {
    cal.degenerate = true;
    cal.gain = 1.0;
    cal.bias = mg - mp;
    return cal;
  }
  cal.gain = pairwise_sum(cov) / n / vp;
  cal.bias = mg - cal.gain * mp;
  return cal;
}

Image apply_calibration(const Image& img, const Calibration& cal) {
  Image out = img;
  for (float& v : out.data()) v = static_cast<float>(cal.gain * v + cal.bias);
  return out;
}

double psnr(const Image& a, const Image& b, double peak, double cap) {
  require_same_shape(a, b, "psnr");
  std::vector<double> sq(a.size());
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double d = static_cast<double>(da[i]) - db[i];
    sq[i] = d * d;
  }
  const double mse = sq.empty() ? 0.0 : pairwise_sum(sq) / static_cast<double>(sq.size());
  if (!(mse > 0.0)) return cap;
  return std::min(cap, 10.0 * std::log10(peak * peak / mse));
}

namespace {

// Gaussian-weighted window sums at every position where the 11x11 window
// fits; the result is (w - 10) x (h - 10).
std::vector<double> window_filter(const std::vector<double>& plane, int w, int h, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int ow = w - 2 * r;
  const int oh = h - 2 * r;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < static_cast<int>(k.size()); ++t) acc += k[t] * plane[static_cast<std::size_t>(y) * w + x + t];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < static_cast<int>(k.size()); ++t) acc += k[t] * rows[static_cast<std::size_t>(y + t) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

std::vector<double> ssim_kernel() {
  constexpr int kRadius = 5;
  constexpr double kSigma = 1.5;
  std::vector<double> k(2 * kRadius + 1);
  double sum = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    k[i + kRadius] = std::exp(-(i * i) / (2.0 * kSigma * kSigma));
    sum += k[i + kRadius];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (a.width() < 11 || a.height() < 11) throw Error(ErrorCode::kRasterTooSmall, "ssim needs at least 11x11");
  constexpr double kC1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double kC2 = (0.03 * 1.0) * (0.03 * 1.0);
  const std::vector<double> k = ssim_kernel();
  const int w = a.width();
  const int h = a.height();
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const auto pa = a.plane(c);
    const auto pb = b.plane(c);
    std::vector<double> xa(pa.begin(), pa.end()), xb(pb.begin(), pb.end());
    std::vector<double> aa(xa.size()), bb(xa.size()), ab(xa.size());
    for (std::size_t i = 0; i < xa.size(); ++i) {
      aa[i] = xa[i] * xa[i];
      bb[i] = xb[i] * xb[i];
      ab[i] = xa[i] * xb[i];
    }
    const auto ma = window_filter(xa, w, h, k);
    const auto mb = window_filter(xb, w, h, k);
    const auto saa = window_filter(aa, w, h, k);
    const auto sbb = window_filter(bb, w, h, k);
    const auto sab = window_filter(ab, w, h, k);
    std::vector<double> map(ma.size());
    for (std::size_t i = 0; i < ma.size(); ++i) {
      const double mab = ma[i] * mb[i];
      const double ma2 = ma[i] * ma[i];
      const double mb2 = mb[i] * mb[i];
      const double va = saa[i] - ma2;
      const double vb = sbb[i] - mb2;
      const double cov = sab[i] - mab;
      map[i] = ((2.0 * mab + kC1) * (2.0 * cov + kC2)) / ((ma2 + mb2 + kC1) * (va + vb + kC2));
    }
    total += pairwise_sum(map) / static_cast<double>(map.size());
  }
  return total / a.channels();
}

ImageRow score_transmission(const Image& estimate, const Image& target) {
  ImageRow row;
  row.calibration = calibrate_gain_bias(estimate, target);
  const Image scaled = apply_calibration(estimate, row.calibration);
  row.psnr = psnr(scaled, target);
  row.ssim = ssim(scaled, target);
  return row;
}

FlowRow score_flow(const SamplePair& pair, const FlowField& flow) {
  return {epe(flow, pair.f12), abs_warp_error(pair.t1, pair.t2, flow, pair.occl12)};
}

MetricsReport evaluate_sample(const SamplePair& pair, const FlowField& flow_est, const Image& t1_est) {
  require_same_shape(pair.i1, t1_est, "evaluate_sample");
  MetricsReport r;
  r.id = pair.id;
  r.estimate_flow = score_flow(pair, flow_est);
  r.zeros_flow = score_flow(pair, FlowField(pair.f12.width(), pair.f12.height()));
  r.oracle_flow = score_flow(pair, pair.f12);
  const Image target = pair.target();
  r.estimate = score_transmission(t1_est, target);
  r.input = score_transmission(pair.i1, target);
  return r;
}

std::vector<std::pair<std::string, double>> report_columns(const MetricsReport& r) {
  std::vector<std::pair<std::string, double>> cols;
  auto flow = [&](const char* prefix, const FlowRow& f) {
    const std::string p(prefix);
    cols.emplace_back(p + ".epe_mean", f.epe.mean);
    cols.emplace_back(p + ".epe_median", f.epe.median);
    cols.emplace_back(p + ".abs_mean", f.abs.mean);
    cols.emplace_back(p + ".abs_median", f.abs.median);
  };
  auto image = [&](const char* prefix, const ImageRow& i) {
    const std::string p(prefix);
    cols.emplace_back(p + ".psnr", i.psnr);
    cols.emplace_back(p + ".ssim", i.ssim);
    cols.emplace_back(p + ".gain", i.calibration.gain);
    cols.emplace_back(p + ".bias", i.calibration.bias);
  };
  flow("flow", r.estimate_flow);
  flow("zeros", r.zeros_flow);
  flow("oracle", r.oracle_flow);
  image("estimate", r.estimate);
  image("input", r.input);
  return cols;
}

std::vector<SummaryRow> aggregate(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw Error(ErrorCode::kInvalidArgument, "aggregate: no reports");
  const auto names = report_columns(reports.front());
  std::vector<SummaryRow> rows;
  for (std::size_t m = 0; m < names.size(); ++m) {
    std::vector<double> v;
    v.reserve(reports.size());
    for (const auto& r : reports) v.push_back(report_columns(r)[m].second);
    SummaryRow row;
    row.metric = names[m].first;
    row.count = v.size();
    row.mean = pairwise_sum(v) / static_cast<double>(v.size());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    row.median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    rows.push_back(row);
  }
  return rows;
}

std::string summary_jsonl(const std::vector<SummaryRow>& rows) {
  std::string out;
  for (const auto& r : rows) out += nlohmann::json(r).dump() + "\n";
  return out;
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.metric.size());
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-*s %14s %14s %6s\n", static_cast<int>(width), "metric", "mean", "median", "n");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s %14.6f %14.6f %6zu\n", static_cast<int>(width), r.metric.c_str(), r.mean,
                  r.median, r.count);
    out += buf;
  }
  return out;
}

std::vector<std::string> check_thresholds(const std::vector<SummaryRow>& rows,
                                          const std::vector<Threshold>& thresholds) {
  std::vector<std::string> violations;
  for (const auto& t : thresholds) {
    const auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& r) { return r.metric == t.metric; });
    if (it == rows.end()) {
      violations.push_back("unknown metric " + t.metric);
      continue;
    }
    if (t.stat != "mean" && t.stat != "median") {
      violations.push_back("unknown statistic " + t.stat + " for " + t.metric);
      continue;
    }
    const double v = t.stat == "mean" ? it->mean : it->median;
    if (t.min && !(v >= *t.min)) {
      violations.push_back(t.metric + " " + t.stat + " " + std::to_string(v) + " < " + std::to_string(*t.min));
    }
    if (t.max && !(v <= *t.max)) {
      violations.push_back(t.metric + " " + t.stat + " " + std::to_string(v) + " > " + std::to_string(*t.max));
    }
  }
  return violations;
}

namespace {

nlohmann::json stats_json(const ErrorStats& s) {
  return {{"mean", s.mean}, {"median", s.median}, {"count", s.count}};
}

nlohmann::json flow_json(const FlowRow& f) { return {{"epe", stats_json(f.epe)}, {"abs", stats_json(f.abs)}}; }

nlohmann::json image_json(const ImageRow& i) {
  return {{"psnr", i.psnr},
          {"ssim", i.ssim},
          {"gain", i.calibration.gain},
          {"bias", i.calibration.bias},
          {"calibration_degenerate", i.calibration.degenerate}};
}

}  // namespace

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = nlohmann::json{{"id", r.id},
                     {"flow", flow_json(r.estimate_flow)},
                     {"zeros", flow_json(r.zeros_flow)},
                     {"oracle", flow_json(r.oracle_flow)},
                     {"estimate", image_json(r.estimate)},
                     {"input", image_json(r.input)}};
}

void to_json(nlohmann::json& j, const SummaryRow& r) {
  j = nlohmann::json{{"metric", r.metric}, {"mean", r.mean}, {"median", r.median}, {"count", r.count}};
}

void from_json(const nlohmann::json& j, Threshold& t) {
  t.metric = j.at("metric").get<std::string>();
  t.stat = j.value("stat", t.stat);
  if (j.contains("min")) t.min = j.at("min").get<double>();
  if (j.contains("max")) t.max = j.at("max").get<double>();
}

}  // namespace dualview
