#include "dualview/align.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dualview/filter.hpp"
#include "dualview/parallel.hpp"

namespace dualview {

// ---------------------------------------------------------------------------
// Corners

std::vector<Corner> detect_corners(const Image& gray, int max_count, double min_distance) {
  if (gray.channels() != 1) throw Error(ErrorCode::kInvalidArgument, "detect_corners expects one channel");
  if (max_count < 1) throw Error(ErrorCode::kInvalidArgument, "max_count must be >= 1");
  const int w = gray.width();
  const int h = gray.height();
  if (w < 3 || h < 3) return {};

  const std::size_t n = gray.plane_size();
  std::vector<double> ixx(n, 0.0), iyy(n, 0.0), ixy(n, 0.0);
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double gx = 0.5 * (gray.at(x + 1, y) - gray.at(x - 1, y));
      const double gy = 0.5 * (gray.at(x, y + 1) - gray.at(x, y - 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      ixx[i] = gx * gx;
      iyy[i] = gy * gy;
      ixy[i] = gx * gy;
    }
  }
  constexpr double kWindowSigma = 1.0;
  constexpr double kHarrisK = 0.04;
  ixx = gaussian_blur_plane(ixx, w, h, kWindowSigma);
  iyy = gaussian_blur_plane(iyy, w, h, kWindowSigma);
  ixy = gaussian_blur_plane(ixy, w, h, kWindowSigma);

  std::vector<double> response(n, 0.0);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double tr = ixx[i] + iyy[i];
    response[i] = ixx[i] * iyy[i] - ixy[i] * ixy[i] - kHarrisK * tr * tr;
    peak = std::max(peak, response[i]);
  }
  if (!(peak > 1e-12)) return {};
  const double floor = 0.01 * peak;

  constexpr int kBorder = 2;
  std::vector<Corner> candidates;
  for (int y = kBorder; y < h - kBorder; ++y) {
    for (int x = kBorder; x < w - kBorder; ++x) {
      const double r = response[static_cast<std::size_t>(y) * w + x];
      if (r <= floor) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double other = response[static_cast<std::size_t>(y + dy) * w + (x + dx)];
          // Ties resolve toward the earlier pixel in raster order.
          if (other > r || (other == r && (dy < 0 || (dy == 0 && dx < 0)))) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({x, y, r});
    }
  }
  std::ranges::stable_sort(candidates, [](const Corner& a, const Corner& b) { return a.response > b.response; });

  // Greedy spacing on a coarse occupancy grid.
  const double min_d2 = min_distance * min_distance;
  const int cell = std::max(1, static_cast<int>(std::ceil(min_distance)));
  const int gw = (w + cell - 1) / cell;
  const int gh = (h + cell - 1) / cell;
  std::vector<std::vector<int>> grid(static_cast<std::size_t>(gw) * gh);
  std::vector<Corner> kept;
  for (const Corner& c : candidates) {
    if (static_cast<int>(kept.size()) >= max_count) break;
    const int gx = c.x / cell;
    const int gy = c.y / cell;
    bool ok = true;
    for (int yy = std::max(0, gy - 1); yy <= std::min(gh - 1, gy + 1) && ok; ++yy) {
      for (int xx = std::max(0, gx - 1); xx <= std::min(gw - 1, gx + 1) && ok; ++xx) {
        for (int k : grid[static_cast<std::size_t>(yy) * gw + xx]) {
          const double dx = kept[k].x - c.x;
          const double dy = kept[k].y - c.y;
          if (dx * dx + dy * dy < min_d2) {
            ok = false;
            break;
          }
        }
      }
    }
    if (!ok) continue;
    grid[static_cast<std::size_t>(gy) * gw + gx].push_back(static_cast<int>(kept.size()));
    kept.push_back(c);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// ZNCC matching

namespace {

// Summed-area tables for O(1) patch mean / variance.
class PatchStats {
 public:
  explicit PatchStats(const Image& img) : w_(img.width()), h_(img.height()) {
    const std::size_t stride = static_cast<std::size_t>(w_) + 1;
    sum_.assign(stride * (h_ + 1), 0.0);
    sq_.assign(stride * (h_ + 1), 0.0);
    for (int y = 0; y < h_; ++y) {
      double rs = 0.0, rq = 0.0;
      for (int x = 0; x < w_; ++x) {
        const double v = img.at(x, y);
        rs += v;
        rq += v * v;
        sum_[(y + 1) * stride + x + 1] = sum_[y * stride + x + 1] + rs;
        sq_[(y + 1) * stride + x + 1] = sq_[y * stride + x + 1] + rq;
      }
    }
  }

  // Sum and sum of squares over the (2r+1)^2 patch centred at (x, y).
  std::pair<double, double> patch(int x, int y, int r) const {
    const std::size_t stride = static_cast<std::size_t>(w_) + 1;
    const std::size_t x0 = x - r, x1 = x + r + 1, y0 = y - r, y1 = y + r + 1;
    auto box = [&](const std::vector<double>& t) {
      return t[y1 * stride + x1] - t[y0 * stride + x1] - t[y1 * stride + x0] + t[y0 * stride + x0];
    };
    return {box(sum_), box(sq_)};
  }

 private:
  int w_, h_;
  std::vector<double> sum_, sq_;
};

struct Peak {
  int x = 0;
  int y = 0;
  double score = -2.0;
};

// Zero-mean template around (cx, cy) in `src`; returns false on a flat patch.
bool make_template(const Image& src, int cx, int cy, int r, std::vector<double>& tmpl) {
  const int side = 2 * r + 1;
  tmpl.resize(static_cast<std::size_t>(side) * side);
  double mean = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double v = src.at(cx + dx, cy + dy);
      tmpl[(dy + r) * side + (dx + r)] = v;
      mean += v;
    }
  }
  mean /= static_cast<double>(tmpl.size());
  double norm = 0.0;
  for (double& v : tmpl) {
    v -= mean;
    norm += v * v;
  }
  if (norm < 1e-12) return false;
  const double inv = 1.0 / std::sqrt(norm);
  for (double& v : tmpl) v *= inv;
  return true;
}

Peak best_peak(const std::vector<double>& tmpl, const Image& dst, const PatchStats& stats, int cx, int cy, int r,
               int search) {
  const int side = 2 * r + 1;
  const double n = static_cast<double>(side) * side;
  Peak best;
  double best_d2 = std::numeric_limits<double>::infinity();
  const int x_lo = std::max(r, cx - search), x_hi = std::min(dst.width() - 1 - r, cx + search);
  const int y_lo = std::max(r, cy - search), y_hi = std::min(dst.height() - 1 - r, cy + search);
  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      const auto [s, q] = stats.patch(x, y, r);
      const double var = q - s * s / n;
      if (var < 1e-12) continue;
      double dot = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const float* row = &dst.plane(0)[static_cast<std::size_t>(y + dy) * dst.width() + (x - r)];
        const double* t = &tmpl[(dy + r) * side];
        for (int k = 0; k < side; ++k) dot += t[k] * row[k];
      }
      const double score = dot / std::sqrt(var);
      const double d2 = static_cast<double>(x - cx) * (x - cx) + static_cast<double>(y - cy) * (y - cy);
      if (score > best.score || (score == best.score && d2 < best_d2)) {
        best = {x, y, score};
        best_d2 = d2;
      }
    }
  }
  return best;
}

}  // namespace

std::vector<Match> match_patches(const Image& gray1, const Image& gray2, std::span<const Corner> corners, int radius,
                                 int search) {
  if (gray1.channels() != 1 || gray2.channels() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "match_patches expects one-channel images");
  }
  if (radius < 2) throw Error(ErrorCode::kInvalidArgument, "patch radius must be >= 2");
  if (search < 0) throw Error(ErrorCode::kInvalidArgument, "search radius must be >= 0");
  constexpr double kMinScore = 0.5;

  const PatchStats stats1(gray1);
  const PatchStats stats2(gray2);
  std::vector<Match> out;
  std::vector<double> fwd, back;
  for (const Corner& c : corners) {
    if (c.x < radius || c.y < radius || c.x >= gray1.width() - radius || c.y >= gray1.height() - radius) continue;
    if (!make_template(gray1, c.x, c.y, radius, fwd)) continue;
    const Peak p = best_peak(fwd, gray2, stats2, c.x, c.y, radius, search);
    if (p.score < kMinScore) continue;
    if (!make_template(gray2, p.x, p.y, radius, back)) continue;
    const Peak q = best_peak(back, gray1, stats1, p.x, p.y, radius, search);
    if (std::abs(q.x - c.x) > 1 || std::abs(q.y - c.y) > 1) continue;
    out.push_back({{static_cast<double>(c.x), static_cast<double>(c.y)},
                   {static_cast<double>(p.x), static_cast<double>(p.y)},
                   std::clamp(p.score, -1.0, 1.0)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// DLT

namespace {

struct Normalizer {
  double cx = 0.0, cy = 0.0, s = 1.0;

  static Normalizer of(std::span<const Point2> pts) {
    Normalizer n;
    for (const Point2& p : pts) {
      n.cx += p.x;
      n.cy += p.y;
    }
    n.cx /= static_cast<double>(pts.size());
    n.cy /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const Point2& p : pts) mean_dist += std::hypot(p.x - n.cx, p.y - n.cy);
    mean_dist /= static_cast<double>(pts.size());
    n.s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
    return n;
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
  }
};

Homography dlt(std::span<const Point2> src, std::span<const Point2> dst) {
  const std::size_t n = src.size();
  if (n < 4) throw Error(ErrorCode::kDegenerateConfiguration, "need at least 4 correspondences");
  const Normalizer ns = Normalizer::of(src);
  const Normalizer nd = Normalizer::of(dst);

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (src[i].x - ns.cx) * ns.s;
    const double y = (src[i].y - ns.cy) * ns.s;
    const double u = (dst[i].x - nd.cx) * nd.s;
    const double v = (dst[i].y - nd.cy) * nd.s;
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  // The null direction of A is the eigenvector of A^T A with the smallest
  // eigenvalue. A rank below 8 means the points do not determine H.
  const Eigen::Matrix<double, 9, 9> ata = a.transpose() * a;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(ata);
  const auto& ev = eig.eigenvalues();
  if (!(ev(1) > 1e-12 * ev(8))) {
    throw Error(ErrorCode::kDegenerateConfiguration, "correspondences are rank deficient");
  }
  const Eigen::Matrix<double, 9, 1> h = eig.eigenvectors().col(0);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d full = nd.matrix().inverse() * hn * ns.matrix();
  Homography::Coefficients c;
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) c[3 * r + k] = full(r, k);
  }
  try {
    return Homography::from_coefficients(c);
  } catch (const Error& e) {
    throw Error(ErrorCode::kDegenerateConfiguration, e.what());
  }
}

bool has_collinear_triple(std::span<const Point2> pts) {
  double extent = 0.0;
  for (const Point2& a : pts) {
    for (const Point2& b : pts) extent = std::max(extent, std::hypot(a.x - b.x, a.y - b.y));
  }
  const double tol = 1e-3 * extent * extent;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      for (std::size_t k = j + 1; k < pts.size(); ++k) {
        const double area = (pts[j].x - pts[i].x) * (pts[k].y - pts[i].y) -
                            (pts[j].y - pts[i].y) * (pts[k].x - pts[i].x);
        if (std::abs(area) <= tol) return true;
      }
    }
  }
  return false;
}

}  // namespace

Homography fit_homography_dlt(std::span<const Match> matches) {
  std::vector<Point2> src, dst;
  src.reserve(matches.size());
  dst.reserve(matches.size());
  for (const Match& m : matches) {
    src.push_back(m.p1);
    dst.push_back(m.p2);
  }
  if (matches.size() == 4 && (has_collinear_triple(src) || has_collinear_triple(dst))) {
    throw Error(ErrorCode::kDegenerateConfiguration, "three of four points are collinear");
  }
  return dlt(src, dst);
}

// ---------------------------------------------------------------------------
// RANSAC

namespace {

double transfer_error(const Homography& h, const Match& m) {
  if (h.denominator(m.p1) <= 0.0) return std::numeric_limits<double>::infinity();
  const Point2 q = h.apply(m.p1);
  return std::hypot(q.x - m.p2.x, q.y - m.p2.y);
}

struct Hypothesis {
  bool ok = false;
  Homography h;
  int inliers = 0;
  double cost = std::numeric_limits<double>::infinity();
};

Hypothesis score(const Homography& h, std::span<const Match> matches, double threshold) {
  Hypothesis hyp{true, h, 0, 0.0};
  const double t2 = threshold * threshold;
  for (const Match& m : matches) {
    const double e = transfer_error(h, m);
    if (e <= threshold) {
      ++hyp.inliers;
      hyp.cost += e * e;
    } else {
      hyp.cost += t2;
    }
  }
  return hyp;
}

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (!a.ok) return false;
  if (!b.ok) return true;
  if (a.inliers != b.inliers) return a.inliers > b.inliers;
  return a.cost < b.cost;
}

std::vector<std::uint8_t> classify(const Homography& h, std::span<const Match> matches, double threshold) {
  std::vector<std::uint8_t> flags(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) flags[i] = transfer_error(h, matches[i]) <= threshold;
  return flags;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::ranges::sort(v);
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
  return v[idx];
}

}  // namespace

AlignResult estimate_dominant_homography(const Image& img1, const Image& img2, const AlignParams& params, Rng& rng) {
  require_same_extent(img1, img2, "estimate_dominant_homography");
  const Image g1 = to_gray(img1);
  const Image g2 = to_gray(img2);

  AlignResult result;
  auto& diag = result.diagnostics;
  const auto corners = detect_corners(g1, params.max_corners, params.min_corner_distance);
  result.matches = match_patches(g1, g2, corners, params.patch_radius, params.search_radius);
  const auto& matches = result.matches;
  diag.corners = static_cast<int>(corners.size());
  diag.matches = static_cast<int>(matches.size());
  result.inliers.assign(matches.size(), 0);

  // Consumed unconditionally so downstream draws do not depend on the data.
  const std::uint64_t master = rng.next();

  if (diag.matches < std::max(params.min_matches, 4)) {
    diag.reliable = false;
    diag.message = "alignment unreliable: " + std::to_string(diag.matches) + " matches";
    return result;
  }

  const std::size_t n = matches.size();
  constexpr int kBlock = 64;
  const double log_fail = std::log(1.0 - params.confidence);
  Hypothesis best;
  int done = 0;
  double needed = params.max_iterations;
  while (done < params.max_iterations && done < needed) {
    const int block = std::min(kBlock, params.max_iterations - done);
    std::vector<Hypothesis> trials(static_cast<std::size_t>(block));
    parallel_for(trials.size(), params.workers, [&](std::size_t t) {
      Rng local(split_seed(master, static_cast<std::uint64_t>(done) + t));
      std::array<std::size_t, 4> pick{};
      for (int k = 0; k < 4; ++k) {
        std::size_t idx;
        do {
          idx = static_cast<std::size_t>(local.below(n));
        } while (std::find(pick.begin(), pick.begin() + k, idx) != pick.begin() + k);
        pick[k] = idx;
      }
      std::array<Match, 4> sample{matches[pick[0]], matches[pick[1]], matches[pick[2]], matches[pick[3]]};
      try {
        trials[t] = score(fit_homography_dlt(sample), matches, params.inlier_threshold);
      } catch (const Error&) {
        trials[t] = Hypothesis{};
      }
    });
    for (const Hypothesis& hyp : trials) {
      if (better(hyp, best)) best = hyp;
    }
    done += block;
    if (best.ok) {
      const double w = static_cast<double>(best.inliers) / static_cast<double>(n);
      const double p_good = std::pow(w, 4.0);
      if (p_good >= 1.0) {
        needed = 0.0;
      } else if (p_good > 0.0) {
        needed = std::min<double>(params.max_iterations, std::ceil(log_fail / std::log1p(-p_good)));
      }
    }
  }
  diag.iterations = done;

  if (!best.ok) {
    diag.reliable = false;
    diag.message = "alignment unreliable: no non-degenerate sample";
    return result;
  }

  // Refit on the consensus set until it stops changing.
  Homography h = best.h;
  auto flags = classify(h, matches, params.inlier_threshold);
  for (int round = 0; round < 5; ++round) {
    std::vector<Match> inl;
    for (std::size_t i = 0; i < n; ++i) {
      if (flags[i]) inl.push_back(matches[i]);
    }
    if (inl.size() < 4) break;
    Homography refit;
    try {
      refit = fit_homography_dlt(inl);
    } catch (const Error&) {
      break;
    }
    auto next = classify(refit, matches, params.inlier_threshold);
    const auto count = [](const std::vector<std::uint8_t>& f) { return std::count(f.begin(), f.end(), 1); };
    if (count(next) < count(flags)) break;
    h = refit;
    const bool stable = next == flags;
    flags = std::move(next);
    if (stable) break;
  }

  result.homography = h;
  result.inliers = flags;
  std::vector<double> residuals;
  for (std::size_t i = 0; i < n; ++i) {
    if (flags[i]) residuals.push_back(transfer_error(h, matches[i]));
  }
  diag.inliers = static_cast<int>(residuals.size());
  diag.inlier_ratio = static_cast<double>(diag.inliers) / static_cast<double>(n);
  diag.residual_p50 = quantile(residuals, 0.5);
  diag.residual_p90 = quantile(residuals, 0.9);
  diag.residual_max = residuals.empty() ? 0.0 : *std::ranges::max_element(residuals);
  diag.reliable = diag.inlier_ratio >= params.min_inlier_ratio;
  diag.message = diag.reliable ? "ok" : "alignment unreliable: consensus below minimum inlier ratio";
  return result;
}

// ---------------------------------------------------------------------------
// Records

void to_json(nlohmann::json& j, const AlignDiagnostics& d) {
  j = nlohmann::json{{"corners", d.corners},
                     {"matches", d.matches},
                     {"inliers", d.inliers},
                     {"inlier_ratio", d.inlier_ratio},
                     {"iterations", d.iterations},
                     {"residual_p50", d.residual_p50},
                     {"residual_p90", d.residual_p90},
                     {"residual_max", d.residual_max},
                     {"reliable", d.reliable},
                     {"message", d.message}};
}

void to_json(nlohmann::json& j, const Homography& h) {
  j = nlohmann::json::array();
  for (double v : h.coefficients()) j.push_back(v);
}

void from_json(const nlohmann::json& j, Homography& h) {
  if (!j.is_array() || j.size() != 9) throw Error(ErrorCode::kInvalidArgument, "homography needs 9 numbers");
  Homography::Coefficients c;
  for (int i = 0; i < 9; ++i) c[i] = j.at(i).get<double>();
  h = Homography::from_coefficients(c);
}

}  // namespace dualview
