#include "dualview/synthgen.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dualview/align.hpp"
#include "dualview/filter.hpp"
#include "dualview/warp.hpp"

namespace dualview {

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::kRendered: return "rendered";
    case SourceKind::kWarped: return "warped";
    case SourceKind::kRenderedHomography: return "rendered_homography";
  }
  return "rendered";
}

SourceKind source_kind_from_string(std::string_view name) {
  if (name == "rendered") return SourceKind::kRendered;
  if (name == "warped") return SourceKind::kWarped;
  if (name == "rendered_homography") return SourceKind::kRenderedHomography;
  throw Error(ErrorCode::kInvalidArgument, "unknown source kind: " + std::string(name));
}

void GenConfig::validate() const {
  std::string problems;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) problems += (problems.empty() ? "" : "; ") + what;
  };
  auto ordered = [&](const Range& r, const char* name) {
    check(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi, std::string(name) + " must be an ordered range");
  };
  check(out_size >= 64, "out_size must be >= 64");
  ordered(alpha, "alpha");
  ordered(refl_blur_sigma, "refl_blur_sigma");
  ordered(spot_blur_sigma, "spot_blur_sigma");
  ordered(persistence, "persistence");
  check(alpha.lo >= 0.0 && alpha.hi <= 1.0, "alpha must lie in [0, 1]");
  check(refl_blur_sigma.lo >= 0.0 && spot_blur_sigma.lo >= 0.0, "blur sigmas must be >= 0");
  check(persistence.lo >= 0.0 && persistence.hi <= 1.0, "persistence must lie in [0, 1]");
  check(octaves >= 1, "octaves must be >= 1");
  check(!std::isnan(spot_threshold), "spot_threshold must be a number");
  check(spot_gain >= 0.0, "spot_gain must be >= 0");
  for (const MotionBounds* m : {&inter_view, &view_jitter}) {
    check(m->max_translation >= 0.0 && m->max_rotation >= 0.0 && m->max_perspective >= 0.0,
          "motion bounds must be >= 0");
  }
  double total = 0.0;
  for (double w : source_mixture) {
    check(w >= 0.0, "source_mixture weights must be >= 0");
    total += w;
  }
  check(std::abs(total - 1.0) <= 1e-9, "source_mixture weights must sum to 1");
  check(min_coverage > 0.0 && min_coverage <= 1.0, "min_coverage must lie in (0, 1]");
  check(max_resamples >= 0, "max_resamples must be >= 0");
  if (!problems.empty()) throw Error(ErrorCode::kInvalidArgument, "gen config: " + problems);
}

Homography SampleParams::transmission_motion() const { return h_t2 * h_t1.inverse(); }
Homography SampleParams::reflection_motion() const { return h_r2 * h_r1.inverse(); }

Image SamplePair::target() const {
  Image out = t1;
  const auto a = static_cast<float>(params.alpha);
  for (float& s : out.data()) s *= a;
  return out;
}

Homography sample_motion(Rng& rng, const MotionBounds& bounds, double cx, double cy) {
  constexpr int kRetries = 16;
  for (int attempt = 0;; ++attempt) {
    double tx = rng.uniform(-bounds.max_translation, bounds.max_translation);
    double ty = rng.uniform(-bounds.max_translation, bounds.max_translation);
    const double rot = rng.uniform(-bounds.max_rotation, bounds.max_rotation);
    const double p1 = rng.uniform(-bounds.max_perspective, bounds.max_perspective);
    const double p2 = rng.uniform(-bounds.max_perspective, bounds.max_perspective);
    if (bounds.integer_translation) {
      tx = std::round(tx);
      ty = std::round(ty);
    }
    try {
      const Homography centre = Homography::translation(cx, cy);
      const Homography uncentre = Homography::translation(-cx, -cy);
      const Homography persp = Homography::from_coefficients({1, 0, 0, 0, 1, 0, p1, p2, 1});
      const Homography motion =
          centre * Homography::translation(tx, ty) * Homography::rotation(rot, 0.0, 0.0) * persp * uncentre;
      if (std::abs(motion.determinant()) > 1e-6) return motion;
    } catch (const Error&) {
    }
    if (attempt >= kRetries) throw Error(ErrorCode::kSingularHomography, "could not draw an invertible motion");
  }
}

std::pair<Homography, Homography> sample_layer_homographies(Rng& rng, const GenConfig& cfg) {
  const double c = 0.5 * (cfg.out_size - 1);
  Homography ht = sample_motion(rng, cfg.inter_view, c, c);
  Homography hr = sample_motion(rng, cfg.inter_view, c, c);
  return {ht, hr};
}

namespace {

double coverage(const Homography& src_to_view, int src_w, int src_h, int out) {
  const Homography inv = src_to_view.inverse();
  std::size_t inside = 0;
  for (int y = 0; y < out; ++y) {
    for (int x = 0; x < out; ++x) {
      const Point2 q = inv.apply({static_cast<double>(x), static_cast<double>(y)});
      if (q.x >= 0.0 && q.y >= 0.0 && q.x <= src_w - 1 && q.y <= src_h - 1) ++inside;
    }
  }
  return static_cast<double>(inside) / (static_cast<double>(out) * out);
}

// Places a source so its centre lands on the view centre, perturbed by `jitter`
// (itself about the view centre).
Homography placement(const Image& src, const Homography& jitter, int out) {
  const double sc_x = 0.5 * (src.width() - 1);
  const double sc_y = 0.5 * (src.height() - 1);
  const double oc = 0.5 * (out - 1);
  return jitter * Homography::translation(oc - sc_x, oc - sc_y);
}

}  // namespace

SamplePair compose_views(const Image& transmission_src, const Image& reflection_src, Rng& rng,
                         const GenConfig& cfg) {
  cfg.validate();
  if (transmission_src.channels() != reflection_src.channels()) {
    throw Error(ErrorCode::kDimensionMismatch, "compose_views: sources differ in channel count");
  }
  const int out = cfg.out_size;
  const double oc = 0.5 * (out - 1);

  SamplePair pair;
  SampleParams& p = pair.params;
  p.alpha = cfg.alpha.draw(rng);
  p.refl_blur_sigma = cfg.refl_blur_sigma.draw(rng);
  p.spot_gain = cfg.spot_gain;

  for (int attempt = 0;; ++attempt) {
    const Homography jt = sample_motion(rng, cfg.view_jitter, oc, oc);
    const Homography jr = sample_motion(rng, cfg.view_jitter, oc, oc);
    const auto [mt, mr] = sample_layer_homographies(rng, cfg);
    p.h_t1 = placement(transmission_src, jt, out);
    p.h_r1 = placement(reflection_src, jr, out);
    p.h_t2 = mt * p.h_t1;
    p.h_r2 = mr * p.h_r1;
    p.resamples = attempt;
    const double worst =
        std::min({coverage(p.h_t1, transmission_src.width(), transmission_src.height(), out),
                  coverage(p.h_t2, transmission_src.width(), transmission_src.height(), out),
                  coverage(p.h_r1, reflection_src.width(), reflection_src.height(), out),
                  coverage(p.h_r2, reflection_src.width(), reflection_src.height(), out)});
    if (worst >= cfg.min_coverage) break;
    if (attempt >= cfg.max_resamples) {
      throw Error(ErrorCode::kDegenerateConfiguration,
                  "warp coverage stayed below " + std::to_string(cfg.min_coverage) + " after resampling");
    }
  }

  // Spots live on the reflection plane, so both views see them move with it.
  const SpotMask spots = bright_spot_mask(rng, reflection_src.width(), reflection_src.height(), cfg);
  p.spot_persistence = spots.persistence;
  p.spot_blur_sigma = spots.blur_sigma;

  pair.t1 = warp_homography(transmission_src, p.h_t1, out, out, BorderPolicy::kClamp).image;
  pair.t2 = warp_homography(transmission_src, p.h_t2, out, out, BorderPolicy::kClamp).image;
  pair.r1 = gaussian_blur(warp_homography(reflection_src, p.h_r1, out, out, BorderPolicy::kClamp).image,
                          p.refl_blur_sigma);
  pair.r2 = gaussian_blur(warp_homography(reflection_src, p.h_r2, out, out, BorderPolicy::kClamp).image,
                          p.refl_blur_sigma);
  pair.s1 = warp_homography(spots.mask, p.h_r1, out, out, BorderPolicy::kClamp).image;
  pair.s2 = warp_homography(spots.mask, p.h_r2, out, out, BorderPolicy::kClamp).image;

  const auto a = static_cast<float>(p.alpha);
  const auto b = static_cast<float>(1.0 - p.alpha);
  const auto g = static_cast<float>((1.0 - p.alpha) * p.spot_gain);
  auto form = [&](const Image& t, const Image& r, const Image& s) {
    Image img(out, out, t.channels());
    for (int c = 0; c < t.channels(); ++c) {
      for (int y = 0; y < out; ++y) {
        for (int x = 0; x < out; ++x) {
          img.at(x, y, c) = std::clamp(a * t.at(x, y, c) + b * r.at(x, y, c) + g * s.at(x, y), 0.0f, 1.0f);
        }
      }
    }
    return img;
  };
  pair.i1 = form(pair.t1, pair.r1, pair.s1);
  pair.i2 = form(pair.t2, pair.r2, pair.s2);

  const Homography motion = p.transmission_motion();
  pair.f12 = homography_to_flow(motion, out, out);
  pair.f21 = homography_to_flow(motion.inverse(), out, out);
  pair.occl12 = occlusion_mask(pair.f12, pair.f21);
  pair.occl21 = occlusion_mask(pair.f21, pair.f12);
  return pair;
}

// ---------------------------------------------------------------------------
// Records

namespace {

nlohmann::json range_json(const Range& r) { return nlohmann::json::array({r.lo, r.hi}); }

Range range_from(const nlohmann::json& j, const Range& fallback) {
  if (j.is_null()) return fallback;
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::kInvalidArgument, "range needs [lo, hi]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

nlohmann::json motion_json(const MotionBounds& m) {
  return {{"max_translation", m.max_translation},
          {"max_rotation", m.max_rotation},
          {"max_perspective", m.max_perspective},
          {"integer_translation", m.integer_translation}};
}

MotionBounds motion_from(const nlohmann::json& j, MotionBounds m) {
  if (j.is_null()) return m;
  m.max_translation = j.value("max_translation", m.max_translation);
  m.max_rotation = j.value("max_rotation", m.max_rotation);
  m.max_perspective = j.value("max_perspective", m.max_perspective);
  m.integer_translation = j.value("integer_translation", m.integer_translation);
  return m;
}

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  static const nlohmann::json null;
  return j.contains(key) ? j.at(key) : null;
}

}  // namespace

void to_json(nlohmann::json& j, const GenConfig& cfg) {
  j = nlohmann::json{{"out_size", cfg.out_size},
                     {"alpha", range_json(cfg.alpha)},
                     {"refl_blur_sigma", range_json(cfg.refl_blur_sigma)},
                     {"spot_blur_sigma", range_json(cfg.spot_blur_sigma)},
                     {"persistence", range_json(cfg.persistence)},
                     {"octaves", cfg.octaves},
                     {"spot_threshold", cfg.spot_threshold},
                     {"spot_gain", cfg.spot_gain},
                     {"inter_view", motion_json(cfg.inter_view)},
                     {"view_jitter", motion_json(cfg.view_jitter)},
                     {"source_mixture", cfg.source_mixture},
                     {"min_coverage", cfg.min_coverage},
                     {"max_resamples", cfg.max_resamples},
                     {"master_seed", cfg.master_seed}};
}

void from_json(const nlohmann::json& j, GenConfig& cfg) {
  cfg.out_size = j.value("out_size", cfg.out_size);
  cfg.alpha = range_from(field(j, "alpha"), cfg.alpha);
  cfg.refl_blur_sigma = range_from(field(j, "refl_blur_sigma"), cfg.refl_blur_sigma);
  cfg.spot_blur_sigma = range_from(field(j, "spot_blur_sigma"), cfg.spot_blur_sigma);
  cfg.persistence = range_from(field(j, "persistence"), cfg.persistence);
  cfg.octaves = j.value("octaves", cfg.octaves);
  cfg.spot_threshold = j.value("spot_threshold", cfg.spot_threshold);
  cfg.spot_gain = j.value("spot_gain", cfg.spot_gain);
  cfg.inter_view = motion_from(field(j, "inter_view"), cfg.inter_view);
  cfg.view_jitter = motion_from(field(j, "view_jitter"), cfg.view_jitter);
  if (j.contains("source_mixture")) cfg.source_mixture = j.at("source_mixture").get<std::array<double, 3>>();
  cfg.min_coverage = j.value("min_coverage", cfg.min_coverage);
  cfg.max_resamples = j.value("max_resamples", cfg.max_resamples);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
}

void to_json(nlohmann::json& j, const SampleParams& p) {
  auto h = [](const Homography& m) { return nlohmann::json(m); };
  j = nlohmann::json{{"seed", p.seed},
                     {"source_kind", to_string(p.source_kind)},
                     {"transmission_source", p.transmission_source},
                     {"reflection_source", p.reflection_source},
                     {"alpha", p.alpha},
                     {"refl_blur_sigma", p.refl_blur_sigma},
                     {"spot_persistence", p.spot_persistence},
                     {"spot_blur_sigma", p.spot_blur_sigma},
                     {"spot_gain", p.spot_gain},
                     {"H_T1", h(p.h_t1)},
                     {"H_T2", h(p.h_t2)},
                     {"H_R1", h(p.h_r1)},
                     {"H_R2", h(p.h_r2)},
                     {"H_T", h(p.transmission_motion())},
                     {"H_R", h(p.reflection_motion())},
                     {"resamples", p.resamples}};
}

void from_json(const nlohmann::json& j, SampleParams& p) {
  p.seed = j.at("seed").get<std::uint64_t>();
  p.source_kind = source_kind_from_string(j.at("source_kind").get<std::string>());
  p.transmission_source = j.value("transmission_source", -1);
  p.reflection_source = j.value("reflection_source", -1);
  p.alpha = j.at("alpha").get<double>();
  p.refl_blur_sigma = j.at("refl_blur_sigma").get<double>();
  p.spot_persistence = j.at("spot_persistence").get<double>();
  p.spot_blur_sigma = j.at("spot_blur_sigma").get<double>();
  p.spot_gain = j.value("spot_gain", 0.0);
  j.at("H_T1").get_to(p.h_t1);
  j.at("H_T2").get_to(p.h_t2);
  j.at("H_R1").get_to(p.h_r1);
  j.at("H_R2").get_to(p.h_r2);
  p.resamples = j.value("resamples", 0);
}

}  // namespace dualview
