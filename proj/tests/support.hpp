#pragma once

// Shared builders for the unit tests.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "clockst/render.hpp"

namespace testing_support {

using namespace clockst;

inline Stroke line_stroke(Vec2 a, Vec2 b, int points, std::int64_t t0, std::int64_t dt = 10) {
  Stroke s;
  for (int i = 0; i < points; ++i) {
    const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    s.points.push_back({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), t0 + i * dt});
  }
  return s;
}

/// Arc from `from` to `to` radians (0 = +x), sampled uniformly.
inline Stroke arc_stroke(Vec2 c, double r, double from, double to, int points, std::int64_t t0, std::int64_t dt = 10) {
  Stroke s;
  for (int i = 0; i < points; ++i) {
    const double th = from + (to - from) * i / (points - 1);
    s.points.push_back({c.x + r * std::cos(th), c.y + r * std::sin(th), t0 + i * dt});
  }
  return s;
}

inline Stroke circle_stroke(Vec2 c, double r, int points, std::int64_t t0) {
  return arc_stroke(c, r, 0.0, 2.0 * kPi, points, t0);
}

/// Small square of ink centred at `p`, as one stroke.
inline Stroke blob(Vec2 p, double half, std::int64_t t0) {
  Stroke s;
  s.points = {{p.x - half, p.y - half, t0},
              {p.x + half, p.y - half, t0 + 10},
              {p.x + half, p.y + half, t0 + 20},
              {p.x - half, p.y + half, t0 + 30}};
  return s;
}

/// Point at clock bearing `deg` and distance `r` from `c` (y down).
inline Vec2 at_bearing(Vec2 c, double deg, double r) {
  const double rad = deg * kPi / 180.0;
  return {c.x + r * std::sin(rad), c.y - r * std::cos(rad)};
}

inline ClockGeometry geometry_at(Vec2 c, double radius = 100.0) {
  ClockGeometry g;
  g.center = c;
  g.clock_radius = radius;
  g.bbox_diagonal = 2.0 * std::sqrt(2.0) * radius;
  g.ellipse = Ellipse{c, radius, radius, 0.0};
  g.source = GeometrySource::ellipse_fit;
  return g;
}

inline std::vector<LabeledDrawing> corpus(const std::string& preset, int n, std::uint64_t seed) {
  auto cfg = synth_preset(preset);
  cfg.seed = seed;
  std::vector<LabeledDrawing> out;
  for (auto& c : generate_clocks(cfg, n)) out.push_back({std::move(c.drawing), std::move(c.truth)});
  return out;
}

/// Settings that keep model training in the sub-second range.
inline PipelineConfig fast_config() {
  PipelineConfig pc;
  pc.crf_features.downsample = true;
  pc.crf_train.epochs = 60;
  pc.recognizer_per_class = 15;
  return pc;
}

/// Models trained once per process on 40 healthy clocks.
inline const Models& small_models() {
  static const Models m = [] {
    const auto data = corpus("healthy", 40, 3);
    return train_models(data, fast_config());
  }();
  return m;
}

/// Recognizer exemplars drawn straight from the digit templates.
inline const RecognizerModel& template_recognizer() {
  static const RecognizerModel r = [] {
    auto cfg = synth_preset("healthy");
    std::vector<RecognizerExample> ex;
    for (auto& s : sample_numerals(cfg, 10, 17)) ex.push_back({std::move(s.strokes), s.label});
    return train_recognizer(std::move(ex));
  }();
  return r;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("clockst_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
