#include "dualview/dereflect.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "dualview/filter.hpp"

namespace dualview {

namespace {

bool valid_at(const Mask& valid, int x, int y) { return valid.empty() || valid.at(x, y) > 0.5f; }

void check_inputs(const Image& i1, const Image& i21, const Mask& valid, const char* what) {
  require_same_shape(i1, i21, what);
  if (!valid.empty()) require_same_extent(i1, valid, what);
}

}  // namespace

Image min_composite(const Image& i1, const Image& i21, const Mask& valid) {
  check_inputs(i1, i21, valid, "min_composite");
  Image out = i1;
  for (int c = 0; c < i1.channels(); ++c) {
    for (int y = 0; y < i1.height(); ++y) {
      for (int x = 0; x < i1.width(); ++x) {
        if (valid_at(valid, x, y)) out.at(x, y, c) = std::min(i1.at(x, y, c), i21.at(x, y, c));
      }
    }
  }
  return out;
}

double soft_min(double a, double b, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "soft_min: tau must be positive");
  const double m = std::min(a, b);
  const double s = 0.5 * (std::exp(-(a - m) / tau) + std::exp(-(b - m) / tau));
  return m - tau * std::log(s);
}

Image soft_min(const Image& i1, const Image& i21, double tau, const Mask& valid) {
  check_inputs(i1, i21, valid, "soft_min");
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "soft_min: tau must be positive");
  Image out = i1;
  for (int c = 0; c < i1.channels(); ++c) {
    for (int y = 0; y < i1.height(); ++y) {
      for (int x = 0; x < i1.width(); ++x) {
        if (valid_at(valid, x, y)) {
          out.at(x, y, c) = static_cast<float>(soft_min(i1.at(x, y, c), i21.at(x, y, c), tau));
        }
      }
    }
  }
  return out;
}

EdgeLabel classify_edges(const Image& i1, const Image& i21, const Mask& valid, double sigma_agg) {
  check_inputs(i1, i21, valid, "classify_edges");
  const Image g1 = to_gray(i1);
  const Image g2 = to_gray(i21);
  const int w = g1.width();
  const int h = g1.height();
  const std::size_t n = g1.plane_size();

  auto central = [&](const Image& g, bool along_x) {
    std::vector<double> d(n);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double v;
        if (along_x) {
          v = 0.5 * (g.at(std::min(x + 1, w - 1), y) - g.at(std::max(x - 1, 0), y));
        } else {
          v = 0.5 * (g.at(x, std::min(y + 1, h - 1)) - g.at(x, std::max(y - 1, 0)));
        }
        d[static_cast<std::size_t>(y) * w + x] = v;
      }
    }
    return d;
  };

  auto weights = [&](bool along_x) {
    const std::vector<double> a = central(g1, along_x);
    const std::vector<double> b = central(g2, along_x);
    std::vector<double> ab(n), aa(n), bb(n);
    for (std::size_t i = 0; i < n; ++i) {
      ab[i] = a[i] * b[i];
      aa[i] = a[i] * a[i];
      bb[i] = b[i] * b[i];
    }
    const auto s_ab = gaussian_blur_plane(ab, w, h, sigma_agg);
    const auto s_aa = gaussian_blur_plane(aa, w, h, sigma_agg);
    const auto s_bb = gaussian_blur_plane(bb, w, h, sigma_agg);
    Image out(w, h, 1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (!valid_at(valid, x, y)) {
          out.at(x, y) = 1.0f;
          continue;
        }
        const double denom = s_aa[i] * s_bb[i];
        const double corr = denom > 1e-30 ? s_ab[i] / std::sqrt(denom) : 0.0;
        const double agree = std::clamp(corr, 0.0, 1.0);
        const double ratio = std::min(1.0, std::abs(b[i]) / (std::abs(a[i]) + 1e-6));
        out.at(x, y) = static_cast<float>(agree * ratio);
      }
    }
    return out;
  };

  return {weights(true), weights(false)};
}

void select_min_gradients(const Image& i1, const Image& i21, const Mask& valid, double margin, Image& gx,
                          Image& gy) {
  check_inputs(i1, i21, valid, "select_min_gradients");
  Image hx, hy;
  forward_gradients(i1, gx, gy);
  forward_gradients(i21, hx, hy);
  for (int c = 0; c < gx.channels(); ++c) {
    for (int y = 0; y < gx.height(); ++y) {
      for (int x = 0; x < gx.width(); ++x) {
        if (!valid_at(valid, x, y)) continue;
        if (std::abs(hx.at(x, y, c)) < margin * std::abs(gx.at(x, y, c))) gx.at(x, y, c) = hx.at(x, y, c);
        if (std::abs(hy.at(x, y, c)) < margin * std::abs(gy.at(x, y, c))) gy.at(x, y, c) = hy.at(x, y, c);
      }
    }
  }
}

std::string_view to_string(DereflectKind kind) {
  switch (kind) {
    case DereflectKind::kMinComposite: return "min-composite";
    case DereflectKind::kSoftMin: return "soft-min";
    case DereflectKind::kGradientDomain: return "gradient-domain";
    case DereflectKind::kGradientMin: return "gradient-min";
  }
  return "min-composite";
}

DereflectKind dereflect_kind_from_string(std::string_view name) {
  if (name == "min-composite") return DereflectKind::kMinComposite;
  if (name == "soft-min") return DereflectKind::kSoftMin;
  if (name == "gradient-domain") return DereflectKind::kGradientDomain;
  if (name == "gradient-min") return DereflectKind::kGradientMin;
  throw Error(ErrorCode::kInvalidArgument, "unknown dereflect method: " + std::string(name));
}

void DereflectMethod::validate() const {
  if (kind == DereflectKind::kSoftMin && !(tau > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "soft-min tau must be > 0");
  }
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  if (!(sigma_agg > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma_agg must be > 0");
  if (!(margin > 0.0 && margin <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "margin must be in (0, 1]");
  if (poisson.max_iterations < 1 || !(poisson.tolerance > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "poisson iterations and tolerance must be positive");
  }
}

namespace {

Image reconstruct(const Image& gx, const Image& gy, const Image& anchor, const DereflectMethod& method,
                  DereflectRecord* record) {
  PoissonResult solved = poisson_reconstruct(gx, gy, anchor, method.lambda, method.poisson);
  if (record) {
    record->poisson_converged = solved.converged;
    record->poisson_iterations = solved.iterations;
    record->poisson_residual = solved.residual;
  }
  return std::move(solved.image);
}

}  // namespace

Image synthesize(const Image& i1, const Image& i21, const Mask& valid, const DereflectMethod& method,
                 DereflectRecord* record) {
  method.validate();
  switch (method.kind) {
    case DereflectKind::kMinComposite:
      return min_composite(i1, i21, valid);
    case DereflectKind::kSoftMin:
      return soft_min(i1, i21, method.tau, valid);
    case DereflectKind::kGradientDomain: {
      const Image anchor = min_composite(i1, i21, valid);
      const EdgeLabel labels = classify_edges(i1, i21, valid, method.sigma_agg);
      Image gx, gy;
      forward_gradients(i1, gx, gy);
      for (int c = 0; c < gx.channels(); ++c) {
        for (int y = 0; y < gx.height(); ++y) {
          for (int x = 0; x < gx.width(); ++x) {
            gx.at(x, y, c) *= labels.wx.at(x, y);
            gy.at(x, y, c) *= labels.wy.at(x, y);
          }
        }
      }
      return reconstruct(gx, gy, anchor, method, record);
    }
    case DereflectKind::kGradientMin: {
      const Image anchor = min_composite(i1, i21, valid);
      Image gx, gy;
      select_min_gradients(i1, i21, valid, method.margin, gx, gy);
      return reconstruct(gx, gy, anchor, method, record);
    }
  }
  return i1;
}

DereflectResult dereflect_pair(const Image& i1, const Image& i2, const DereflectMethod& method,
                               const FlowParams& flow_params, Rng& rng) {
  require_same_shape(i1, i2, "dereflect_pair");
  method.validate();
  DereflectResult result;
  result.flow = estimate_flow(i1, i2, flow_params, rng);
  const WarpResult warped = backward_warp(i2, result.flow.flow, BorderPolicy::kMarkInvalid);

  DereflectRecord& rec = result.record;
  rec.method = std::string(to_string(method.kind));
  rec.tau = method.tau;
  rec.lambda = method.lambda;
  rec.alignment_reliable = result.flow.reliable;
  rec.alignment = result.flow.alignment.diagnostics;
  double valid_count = 0.0;
  for (float v : warped.valid.data()) valid_count += v > 0.5f ? 1.0 : 0.0;
  rec.warp_valid_fraction = valid_count / static_cast<double>(warped.valid.plane_size());

  result.estimate = synthesize(i1, warped.image, warped.valid, method, &rec);
  return result;
}

void to_json(nlohmann::json& j, const DereflectMethod& m) {
  j = nlohmann::json{{"method", to_string(m.kind)},
                     {"tau", m.tau},
                     {"lambda", m.lambda},
                     {"sigma_agg", m.sigma_agg},
                     {"margin", m.margin},
                     {"poisson_max_iterations", m.poisson.max_iterations},
                     {"poisson_tolerance", m.poisson.tolerance},
                     {"poisson_precondition", m.poisson.precondition}};
}

void from_json(const nlohmann::json& j, DereflectMethod& m) {
  if (j.contains("method")) m.kind = dereflect_kind_from_string(j.at("method").get<std::string>());
  m.tau = j.value("tau", m.tau);
  m.lambda = j.value("lambda", m.lambda);
  m.sigma_agg = j.value("sigma_agg", m.sigma_agg);
  m.margin = j.value("margin", m.margin);
  m.poisson.max_iterations = j.value("poisson_max_iterations", m.poisson.max_iterations);
  m.poisson.tolerance = j.value("poisson_tolerance", m.poisson.tolerance);
  m.poisson.precondition = j.value("poisson_precondition", m.poisson.precondition);
}

void to_json(nlohmann::json& j, const DereflectRecord& r) {
  j = nlohmann::json{{"method", r.method},
                     {"tau", r.tau},
                     {"lambda", r.lambda},
                     {"alignment_reliable", r.alignment_reliable},
                     {"alignment", r.alignment},
                     {"warp_valid_fraction", r.warp_valid_fraction},
                     {"poisson_converged", r.poisson_converged},
                     {"poisson_iterations", r.poisson_iterations},
                     {"poisson_residual", r.poisson_residual}};
}

}  // namespace dualview
