#pragma once

// Clock centre/size estimation and separation of the digit strokes from the
// clock circle and hands by clustering strokes on (start time, radial
// distance).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "clockst/error.hpp"
#include "clockst/geometry.hpp"
#include "clockst/model.hpp"

namespace clockst {

enum class GeometrySource { ellipse_fit, centroid_fallback };

inline std::string to_string(GeometrySource s) {
  return s == GeometrySource::ellipse_fit ? "ellipse-fit" : "centroid-fallback";
}

struct ClockGeometry {
  Vec2 center;
  std::optional<Ellipse> ellipse;
  double clock_radius = 1.0;
  double bbox_diagonal = 1.0;
  GeometrySource source = GeometrySource::centroid_fallback;

  /// Buffer used to inflate degenerate hulls.
  double hull_buffer() const {
    const double base = ellipse ? ellipse->semi_major : bbox_diagonal;
    return std::max(0.02 * base, 1e-9);
  }
};

struct GeometryConfig {
  double circularity_min = 0.5;
  double length_frac_min = 0.5;
};

struct ClusterConfig {
  std::uint64_t seed = 7;
  int restarts = 50;
  int max_iterations = 100;
  double time_weight = 1.0;  // scale of z-scored start time against z-scored radius
  // After clustering, strokes passing the circle gate become the circle and
  // every other stroke outside the innermost (hand) cluster becomes a digit.
  bool refine = true;
};

inline double bbox_diagonal(const std::vector<PenPoint>& pts) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return std::hypot(x1 - x0, y1 - y0);
}

/// Ellipse fit to the long, circular strokes; centroid of all ink otherwise.
inline ClockGeometry estimate_geometry(const Drawing& d, const GeometryConfig& cfg = {}) {
  if (d.empty()) throw EmptyInputError("cannot estimate geometry of an empty drawing");
  const auto all = d.all_points();
  ClockGeometry g;
  g.bbox_diagonal = std::max(bbox_diagonal(all), 1e-9);

  double max_len = 0.0;
  for (const auto& s : d.strokes()) max_len = std::max(max_len, s.path_length());
  std::vector<Vec2> pooled;
  for (const auto& s : d.strokes()) {
    if (s.path_length() < cfg.length_frac_min * max_len || max_len <= 0.0) continue;
    if (circularity(s) < cfg.circularity_min) continue;
    for (const auto& p : s.points) pooled.push_back(p.pos());
  }
  if (!pooled.empty()) {
    try {
      const Ellipse e = fit_ellipse(pooled);
      g.center = e.center;
      g.ellipse = e;
      g.clock_radius = e.semi_major;
      g.source = GeometrySource::ellipse_fit;
      return g;
    } catch (const FitError&) {
    }
  }
  Vec2 c;
  for (const auto& p : all) c = c + p.pos();
  g.center = c * (1.0 / static_cast<double>(all.size()));
  g.clock_radius = 0.5 * g.bbox_diagonal;
  g.source = GeometrySource::centroid_fallback;
  return g;
}

// ---------------------------------------------------------------------------
// k-means

struct KMeansResult {
  std::vector<int> assignment;
  std::vector<std::array<double, 2>> centroids;
  double inertia = 0.0;
};

namespace detail {

inline double sq_dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

inline KMeansResult lloyd(const std::vector<std::array<double, 2>>& pts, std::vector<std::array<double, 2>> centroids,
                          int max_iterations) {
  const std::size_t k = centroids.size();
  std::vector<int> assign(pts.size(), -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int best = 0;
      double bd = sq_dist(pts[i], centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double dd = sq_dist(pts[i], centroids[c]);
        if (dd < bd) {
          bd = dd;
          best = static_cast<int>(c);
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed && it > 0) break;
    std::vector<std::array<double, 2>> sum(k, {0.0, 0.0});
    std::vector<int> count(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sum[assign[i]][0] += pts[i][0];
      sum[assign[i]][1] += pts[i][1];
      ++count[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (count[c] > 0) centroids[c] = {sum[c][0] / count[c], sum[c][1] / count[c]};
  }
  KMeansResult r{assign, centroids, 0.0};
  for (std::size_t i = 0; i < pts.size(); ++i) r.inertia += sq_dist(pts[i], centroids[assign[i]]);
  return r;
}

}  // namespace detail

/// k-means with k-means++ seeding and restarts; keeps the lowest inertia.
inline KMeansResult kmeans(const std::vector<std::array<double, 2>>& pts, int k, const ClusterConfig& cfg) {
  if (k <= 0 || pts.size() < static_cast<std::size_t>(k)) throw ClusteringError("fewer points than clusters");
  std::mt19937_64 rng(cfg.seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
    std::vector<std::array<double, 2>> cents;
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    cents.push_back(pts[pick(rng)]);
    std::vector<double> d2(pts.size());
    while (cents.size() < static_cast<std::size_t>(k)) {
      double total = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& c : cents) m = std::min(m, detail::sq_dist(pts[i], c));
        d2[i] = m;
        total += m;
      }
      std::size_t chosen = 0;
      if (total > 0.0) {
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        for (chosen = 0; chosen + 1 < pts.size(); ++chosen) {
          if (u < d2[chosen]) break;
          u -= d2[chosen];
        }
        // skip points already used as centroids
        while (d2[chosen] == 0.0 && chosen + 1 < pts.size()) ++chosen;
      } else {
        chosen = pick(rng);
      }
      cents.push_back(pts[chosen]);
    }
    auto res = detail::lloyd(pts, std::move(cents), cfg.max_iterations);
    if (res.inertia < best.inertia - 1e-12) best = std::move(res);
  }
  return best;
}

struct StrokePartition {
  std::vector<int> digit_strokes;
  std::vector<int> circle_strokes;
  std::vector<int> hand_strokes;
};

inline double mean_radial_distance(const Stroke& s, Vec2 center) {
  double sum = 0.0;
  for (const auto& p : s.points) sum += norm(p.pos() - center);
  return sum / static_cast<double>(s.points.size());
}

/// Three-way k-means on z-scored (start time, mean radial distance). The most
/// populous cluster (ties: more ink) holds the digits; of the others the outer
/// one is the circle. Plain k-means often splits the long digit phase into
/// early and late halves and lets the single circle stroke join one of them,
/// hence the refinement pass (ClusterConfig::refine).
inline StrokePartition extract_digit_cluster(const Drawing& d, const ClockGeometry& g, const ClusterConfig& cfg = {},
                                             const GeometryConfig& gcfg = {}) {
  const auto& strokes = d.strokes();
  if (strokes.size() < 3) throw ClusteringError("clustering needs at least 3 strokes");
  const std::size_t n = strokes.size();
  std::vector<std::array<double, 2>> feats(n);
  for (std::size_t i = 0; i < n; ++i)
    feats[i] = {static_cast<double>(strokes[i].start_time()), mean_radial_distance(strokes[i], g.center)};
  for (int dim = 0; dim < 2; ++dim) {
    double mean = 0.0;
    for (const auto& f : feats) mean += f[dim];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& f : feats) var += (f[dim] - mean) * (f[dim] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    const double w = dim == 0 ? cfg.time_weight : 1.0;
    for (auto& f : feats) f[dim] = sd > 0.0 ? w * (f[dim] - mean) / sd : 0.0;
  }
  const auto km = kmeans(feats, 3, cfg);

  struct Group {
    std::vector<int> ids;
    double ink = 0.0;
    double radial = 0.0;
  };
  std::array<Group, 3> groups;
  for (std::size_t i = 0; i < n; ++i) {
    auto& gr = groups[static_cast<std::size_t>(km.assignment[i])];
    gr.ids.push_back(strokes[i].id);
    gr.ink += strokes[i].path_length();
    gr.radial += mean_radial_distance(strokes[i], g.center);
  }
  for (auto& gr : groups)
    if (!gr.ids.empty()) gr.radial /= static_cast<double>(gr.ids.size());

  std::size_t digit = 0;
  for (std::size_t c = 1; c < 3; ++c) {
    const auto& a = groups[c];
    const auto& b = groups[digit];
    if (a.ids.size() > b.ids.size() || (a.ids.size() == b.ids.size() && a.ink > b.ink)) digit = c;
  }
  StrokePartition part;
  part.digit_strokes = groups[digit].ids;
  std::vector<std::size_t> rest;
  for (std::size_t c = 0; c < 3; ++c)
    if (c != digit && !groups[c].ids.empty()) rest.push_back(c);
  if (rest.size() == 2 && groups[rest[1]].radial > groups[rest[0]].radial) std::swap(rest[0], rest[1]);
  if (!rest.empty()) part.circle_strokes = groups[rest[0]].ids;
  if (rest.size() > 1) part.hand_strokes = groups[rest[1]].ids;
  if (cfg.refine) {
    double max_len = 0.0;
    for (const auto& s : strokes) max_len = std::max(max_len, s.path_length());
    std::vector<bool> gated(n, false);
    bool any_gated = false;
    for (std::size_t i = 0; i < n; ++i) {
      gated[i] = max_len > 0.0 && strokes[i].path_length() >= gcfg.length_frac_min * max_len &&
                 circularity(strokes[i]) >= gcfg.circularity_min;
      any_gated = any_gated || gated[i];
    }
    if (any_gated) {
      std::size_t inner = 0;
      for (std::size_t c = 1; c < 3; ++c)
        if (!groups[c].ids.empty() && (groups[inner].ids.empty() || groups[c].radial < groups[inner].radial)) inner = c;
      StrokePartition refined;
      for (std::size_t i = 0; i < n; ++i) {
        const int id = strokes[i].id;
        if (gated[i]) {
          refined.circle_strokes.push_back(id);
        } else if (static_cast<std::size_t>(km.assignment[i]) == inner) {
          refined.hand_strokes.push_back(id);
        } else {
          refined.digit_strokes.push_back(id);
        }
      }
      if (!refined.digit_strokes.empty()) part = std::move(refined);
    }
  }
  for (auto* v : {&part.digit_strokes, &part.circle_strokes, &part.hand_strokes}) std::sort(v->begin(), v->end());
  return part;
}

}  // namespace clockst
