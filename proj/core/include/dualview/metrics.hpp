#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dualview/image.hpp"
#include "dualview/synthgen.hpp"

namespace dualview {

struct ErrorStats {
  double mean = 0.0;
  double median = 0.0;  ///< lower of the two middles for even counts
  std::size_t count = 0;
};

/// Per-pixel end-point error ||est - gt||. Pixels where mask > 0.5 count; an
/// empty mask selects every pixel. Throws kEmptyMask when nothing is selected.
ErrorStats epe(const FlowField& est, const FlowField& gt, const Mask& mask = {});

/// Warps T2 onto view 1 with `flow` and compares with T1 per pixel and
/// channel, on pixels that are unoccluded (occl < 0.5) and warp-valid.
/// Reported on a 0-255 scale.
ErrorStats abs_warp_error(const Image& t1, const Image& t2, const FlowField& flow, const Mask& occl);

struct Calibration {
  double gain = 1.0;
  double bias = 0.0;
  bool degenerate = false;  ///< prediction variance too small; gain forced to 1
};

/// Least-squares (s, b) minimizing ||s pred + b - gt||^2 jointly over all
/// channels of the pixels selected by `mask` (empty = all).
Calibration calibrate_gain_bias(const Image& pred, const Image& gt, const Mask& mask = {});

/// s * img + b.
Image apply_calibration(const Image& img, const Calibration& cal);

/// 10 log10(peak^2 / MSE) over all samples of all channels, capped.
double psnr(const Image& a, const Image& b, double peak = 1.0, double cap = 99.0);

/// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, peak 1, averaged over window positions that fit inside the
/// raster and then over channels.
double ssim(const Image& a, const Image& b);

struct FlowRow {
  ErrorStats epe;
  ErrorStats abs;
};

struct ImageRow {
  double psnr = 0.0;
  double ssim = 0.0;
  Calibration calibration;
};

struct MetricsReport {
  std::string id;
  FlowRow estimate_flow;
  FlowRow zeros_flow;
  FlowRow oracle_flow;
  ImageRow estimate;
  ImageRow input;  ///< I1 treated as the estimate
};

/// Scores a flow estimate and a transmission estimate against the pair's
/// ground truth. The transmission target is pair.target(); the estimate
/// and the input row are gain/bias calibrated before PSNR and SSIM.
MetricsReport evaluate_sample(const SamplePair& pair, const FlowField& flow_est, const Image& t1_est);

ImageRow score_transmission(const Image& estimate, const Image& target);
FlowRow score_flow(const SamplePair& pair, const FlowField& flow);

/// Named scalar columns of a report, in a fixed order.
std::vector<std::pair<std::string, double>> report_columns(const MetricsReport& r);

struct SummaryRow {
  std::string metric;
  double mean = 0.0;
  double median = 0.0;  ///< mean of the two middles for even counts
  std::size_t count = 0;
};

std::vector<SummaryRow> aggregate(const std::vector<MetricsReport>& reports);

std::string summary_jsonl(const std::vector<SummaryRow>& rows);
std::string summary_table(const std::vector<SummaryRow>& rows);

struct Threshold {
  std::string metric;
  std::string stat = "mean";  ///< "mean" or "median"
  std::optional<double> min;
  std::optional<double> max;
};

/// Human-readable description of every violated threshold; empty if none.
/// Unknown metric names count as violations.
std::vector<std::string> check_thresholds(const std::vector<SummaryRow>& rows,
                                          const std::vector<Threshold>& thresholds);

void to_json(nlohmann::json& j, const MetricsReport& r);
void to_json(nlohmann::json& j, const SummaryRow& r);
void from_json(const nlohmann::json& j, Threshold& t);

}  // namespace dualview
