#pragma once

// Spatio-temporal slices: chronologically contiguous stroke groups that
// occupy a coherent angular region of the clock. Consecutive stroke pairs are
// described by (angular difference, pen-up gap) and a boosted-stump logistic
// model decides where a new slice starts.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "clockst/error.hpp"
#include "clockst/geometry.hpp"
#include "clockst/model.hpp"
#include "clockst/preprocess.hpp"

namespace clockst {

struct STSlice {
  std::vector<Stroke> strokes;  // chronological
  ClockBearing angular_mid;
  double angular_width = 0.0;
  std::int64_t t_begin = 0;
  std::int64_t t_end = 0;
  int layer = 0;

  std::vector<int> stroke_ids() const {
    std::vector<int> ids;
    for (const auto& s : strokes) ids.push_back(s.id);
    return ids;
  }

  std::vector<Vec2> ink() const {
    std::vector<Vec2> pts;
    for (const auto& s : strokes)
      for (const auto& p : s.points) pts.push_back(p.pos());
    return pts;
  }

  std::size_t size() const { return strokes.size(); }
};

namespace detail {

inline bool chrono_less(const Stroke& a, const Stroke& b) {
  return a.start_time() < b.start_time() || (a.start_time() == b.start_time() && a.id < b.id);
}

/// Maximum pairwise circular distance of a set of bearings, capped at 180.
inline double max_pairwise_bearing_diff(std::vector<double> deg) {
  if (deg.size() < 2) return 0.0;
  std::sort(deg.begin(), deg.end());
  double best = 0.0;
  const std::size_t n = deg.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double target = ClockBearing::wrap(deg[i] + 180.0);
    auto it = std::lower_bound(deg.begin(), deg.end(), target);
    for (auto cand : {it, it == deg.begin() ? deg.end() - 1 : it - 1}) {
      if (cand == deg.end()) cand = deg.begin();
      best = std::max(best, bearing_diff(ClockBearing(deg[i]), ClockBearing(*cand)));
    }
    if (best >= 180.0) return 180.0;
  }
  return std::min(best, 180.0);
}

}  // namespace detail

/// Bearing of the ink centroid; 0 when the centroid coincides with the centre.
inline ClockBearing ink_bearing(std::span<const Stroke> strokes, Vec2 center) {
  Vec2 c;
  std::size_t n = 0;
  for (const auto& s : strokes)
    for (const auto& p : s.points) {
      c = c + p.pos();
      ++n;
    }
  c = c * (1.0 / static_cast<double>(n));
  if (c == center) return ClockBearing(0.0);
  return bearing(c, center);
}

/// Builds a slice and its derived fields. Strokes are sorted chronologically.
inline STSlice make_slice(std::vector<Stroke> strokes, const ClockGeometry& g, int layer) {
  if (strokes.empty()) throw EmptyInputError("slice without strokes");
  std::sort(strokes.begin(), strokes.end(), detail::chrono_less);
  STSlice s;
  s.angular_mid = ink_bearing(strokes, g.center);
  std::vector<double> bearings;
  s.t_begin = std::numeric_limits<std::int64_t>::max();
  s.t_end = std::numeric_limits<std::int64_t>::min();
  for (const auto& st : strokes) {
    s.t_begin = std::min(s.t_begin, st.start_time());
    s.t_end = std::max(s.t_end, st.end_time());
    for (const auto& p : st.points)
      if (p.pos() != g.center) bearings.push_back(bearing(p, g.center).degrees());
  }
  s.angular_width = detail::max_pairwise_bearing_diff(std::move(bearings));
  s.strokes = std::move(strokes);
  s.layer = layer;
  return s;
}

inline ConvexPolygon slice_hull(const STSlice& s, double buffer) {
  const auto pts = s.ink();
  return convex_hull(pts, buffer);
}

/// Hull overlap between two slices (see hull_overlap).
inline double overlap(const STSlice& a, const STSlice& b, double buffer) {
  return hull_overlap(slice_hull(a, buffer), slice_hull(b, buffer));
}

/// Chronological union of two slices with disjoint strokes.
inline STSlice merge(const STSlice& a, const STSlice& b, const ClockGeometry& g) {
  for (const auto& sa : a.strokes)
    for (const auto& sb : b.strokes)
      if (sa.id == sb.id) throw ConsistencyError("cannot merge slices sharing stroke " + std::to_string(sa.id));
  std::vector<Stroke> all = a.strokes;
  all.insert(all.end(), b.strokes.begin(), b.strokes.end());
  return make_slice(std::move(all), g, std::min(a.layer, b.layer));
}

// ---------------------------------------------------------------------------
// Pair features

struct PairFeatures {
  double d_angle = 0.0;  // degrees, [0, 180]
  double d_time = 0.0;   // ms, pen-up gap, >= 0

  std::array<double, 2> as_array() const { return {d_angle, d_time}; }
};

inline PairFeatures pair_features(const Stroke& prev, const Stroke& next, const ClockGeometry& g) {
  auto b = [&](const Stroke& s) { return ink_bearing(std::span<const Stroke>(&s, 1), g.center); };
  PairFeatures f;
  f.d_angle = bearing_diff(b(prev), b(next));
  f.d_time = static_cast<double>(std::max<std::int64_t>(0, next.start_time() - prev.end_time()));
  return f;
}

// ---------------------------------------------------------------------------
// Boosted stumps (two-class LogitBoost)

struct Stump {
  int feature = 0;
  double threshold = 0.0;
  int polarity = 1;  // +1: x > threshold pushes towards "boundary"
  double weight = 0.0;

  double eval(const std::array<double, 2>& x) const {
    return weight * polarity * (x[static_cast<std::size_t>(feature)] > threshold ? 1.0 : -1.0);
  }
};

struct SegmenterModel {
  std::vector<Stump> rounds;
  double intercept = 0.0;
  std::array<bool, 2> features_used = {true, true};

  double score(const std::array<double, 2>& x) const {
    double s = intercept;
    for (const auto& r : rounds) s += r.eval(x);
    return s;
  }
  double probability(const PairFeatures& f) const { return 1.0 / (1.0 + std::exp(-score(f.as_array()))); }
  bool boundary(const PairFeatures& f) const { return probability(f) > 0.5; }
};

struct SegmenterTrainConfig {
  int rounds = 50;
  std::array<bool, 2> features = {true, true};  // {d_angle, d_time}
  double max_response = 4.0;
};

struct LabeledPair {
  PairFeatures features;
  bool boundary = false;
};

/// LogitBoost with weighted least-squares regression stumps. The stored score
/// equals twice the additive model F, so probability = logistic(score).
inline SegmenterModel train_segmenter(std::span<const LabeledPair> data, const SegmenterTrainConfig& cfg = {}) {
  const std::size_t n = data.size();
  std::size_t pos = 0;
  for (const auto& d : data) pos += d.boundary ? 1 : 0;
  if (pos == 0 || pos == n) throw TrainingError("segmenter training needs both boundary and non-boundary pairs");
  if (cfg.rounds < 1) throw TrainingError("segmenter needs at least one boosting round");
  if (!cfg.features[0] && !cfg.features[1]) throw TrainingError("segmenter needs at least one feature");

  std::vector<std::array<double, 2>> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = data[i].features.as_array();
    y[i] = data[i].boundary ? 1.0 : 0.0;
  }
  std::array<std::vector<std::size_t>, 2> order;
  for (int f = 0; f < 2; ++f) {
    order[f].resize(n);
    std::iota(order[f].begin(), order[f].end(), 0);
    std::stable_sort(order[f].begin(), order[f].end(), [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
  }

  SegmenterModel model;
  model.features_used = cfg.features;
  std::vector<double> F(n, 0.0), w(n), z(n);
  for (int m = 0; m < cfg.rounds; ++m) {
    double sw = 0.0, swz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-2.0 * F[i]));
      const double pq = std::max(p * (1.0 - p), 1e-12);
      w[i] = pq;
      z[i] = std::clamp((y[i] - p) / pq, -cfg.max_response, cfg.max_response);
      sw += w[i];
      swz += w[i] * z[i];
    }
    // Best split: maximise between-side weighted sum of squares.
    int best_f = -1;
    double best_gain = -1.0, best_thr = 0.0, best_l = swz / sw, best_r = swz / sw;
    for (int f = 0; f < 2; ++f) {
      if (!cfg.features[f]) continue;
      double lw = 0.0, lwz = 0.0;
      const auto& ord = order[f];
      for (std::size_t k = 0; k + 1 < n; ++k) {
        lw += w[ord[k]];
        lwz += w[ord[k]] * z[ord[k]];
        const double xa = x[ord[k]][f], xb = x[ord[k + 1]][f];
        if (!(xb > xa)) continue;
        const double rw = sw - lw, rwz = swz - lwz;
        if (lw <= 0.0 || rw <= 0.0) continue;
        const double gain = lwz * lwz / lw + rwz * rwz / rw;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_f = f;
          best_thr = 0.5 * (xa + xb);
          best_l = lwz / lw;
          best_r = rwz / rw;
        }
      }
    }
    // Round update f(x) = c + d * s(x); F += f / 2 and score = 2F, so the
    // stored stump weight is |d| and c accumulates into the intercept.
    Stump st;
    double c = 0.5 * (best_l + best_r);
    if (best_f < 0) {
      st.feature = cfg.features[0] ? 0 : 1;
    } else {
      const double d = 0.5 * (best_r - best_l);
      st.feature = best_f;
      st.threshold = best_thr;
      st.polarity = d >= 0.0 ? 1 : -1;
      st.weight = std::fabs(d);
    }
    model.intercept += c;
    model.rounds.push_back(st);
    for (std::size_t i = 0; i < n; ++i) F[i] += 0.5 * (c + st.eval(x[i]));
  }
  return model;
}

inline json segmenter_to_json(const SegmenterModel& m) {
  json j;
  j["format"] = kFileFormat;
  j["kind"] = "segmenter";
  j["features"] = json::array();
  if (m.features_used[0]) j["features"].push_back("d_angle");
  if (m.features_used[1]) j["features"].push_back("d_time");
  j["intercept"] = m.intercept;
  j["rounds"] = json::array();
  for (const auto& r : m.rounds)
    j["rounds"].push_back({{"feature", r.feature}, {"threshold", r.threshold}, {"polarity", r.polarity}, {"weight", r.weight}});
  return j;
}

inline SegmenterModel segmenter_from_json(const json& j) {
  detail::check_format(j, "segmenter model");
  if (j.value("kind", "") != "segmenter") throw ParseError("not a segmenter model");
  SegmenterModel m;
  try {
    m.features_used = {false, false};
    for (const auto& f : j.at("features")) {
      if (f == "d_angle") m.features_used[0] = true;
      else if (f == "d_time") m.features_used[1] = true;
      else throw ParseError("unknown segmenter feature " + f.dump());
    }
    m.intercept = j.at("intercept").get<double>();
    for (const auto& r : j.at("rounds")) {
      Stump s{r.at("feature").get<int>(), r.at("threshold").get<double>(), r.at("polarity").get<int>(),
              r.at("weight").get<double>()};
      if (s.feature < 0 || s.feature > 1 || (s.polarity != 1 && s.polarity != -1))
        throw ParseError("invalid stump in segmenter model");
      m.rounds.push_back(s);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("segmenter model: ") + e.what());
  }
  if (m.rounds.empty()) throw ParseError("segmenter model has no rounds");
  return m;
}

// ---------------------------------------------------------------------------
// Segmentation

namespace detail {

template <class Boundary>
std::vector<STSlice> segment_by(std::span<const Stroke> strokes, const ClockGeometry& g, Boundary&& is_boundary) {
  if (strokes.empty()) throw EmptyInputError("nothing to segment");
  std::vector<STSlice> out;
  std::vector<Stroke> cur{strokes[0]};
  for (std::size_t i = 1; i < strokes.size(); ++i) {
    if (is_boundary(pair_features(strokes[i - 1], strokes[i], g))) {
      out.push_back(make_slice(std::move(cur), g, static_cast<int>(out.size())));
      cur.clear();
    }
    cur.push_back(strokes[i]);
  }
  out.push_back(make_slice(std::move(cur), g, static_cast<int>(out.size())));
  return out;
}

}  // namespace detail

/// Scans consecutive strokes (chronological order) and opens a new slice
/// wherever the segmenter's boundary probability exceeds 0.5.
inline std::vector<STSlice> segment(std::span<const Stroke> strokes, const SegmenterModel& model, const ClockGeometry& g) {
  return detail::segment_by(strokes, g, [&](const PairFeatures& f) { return model.boundary(f); });
}

inline std::vector<STSlice> threshold_segment(std::span<const Stroke> strokes, const ClockGeometry& g,
                                              double angle_thresh = 15.0, double time_thresh = 5000.0) {
  return detail::segment_by(strokes, g, [&](const PairFeatures& f) {
    return f.d_angle > angle_thresh || f.d_time > time_thresh;
  });
}

}  // namespace clockst
