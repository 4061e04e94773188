#pragma once

// Seeded synthetic clock drawings with ground truth. A clock is a circle, the
// numerals 1..12 built from the glyph templates at bearings 30n, and two
// hands. Optional per-numeral events model the behaviour seen in real tests:
// missing numerals, badly drawn (ambiguous) digits, delayed and immediate
// overwriting, serifs added to a "1" later on, cross-outs with a rewrite
// beside, and numerals whose parts drift apart.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <cstdio>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "clockst/digit_templates.hpp"
#include "clockst/error.hpp"
#include "clockst/geometry.hpp"
#include "clockst/model.hpp"

namespace clockst {

/// mt19937_64 with hand-rolled uniform/normal draws so files are identical
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  double normal(double mean = 0.0, double sd = 1.0) {
    const double u1 = std::max(uniform(), 1e-300), u2 = uniform();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double lognormal(double median, double sigma) { return median * std::exp(normal(0.0, sigma)); }

 private:
  std::mt19937_64 eng_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct GapDist {
  double median_ms = 200.0;
  double sigma = 0.4;  // log-space spread
  friend bool operator==(const GapDist&, const GapDist&) = default;
};

struct SynthConfig {
  std::string preset = "custom";
  std::uint64_t seed = 1;
  Cohort cohort = Cohort::unknown;

  double radius = 100.0;
  double radius_sd = 0.1;        // relative
  double center_jitter = 20.0;   // drawing units
  double jitter_sigma = 0.004;   // glyph vertex noise, fraction of radius
  double point_noise = 0.0015;   // per-sample noise, fraction of radius
  double angle_noise_deg = 2.0;
  double radial_frac = 0.78;
  double radial_sd = 0.02;       // fraction of radius
  double digit_scale = 0.16;     // numeral height / radius
  double digit_scale_sd = 0.06;  // relative
  double tilt_deg = 4.0;
  double pen_speed = 0.1;        // drawing units per ms
  double sample_ms = 13.0;

  GapDist intra_gap{220.0, 0.45};
  GapDist inter_gap{650.0, 0.45};
  GapDist delay_gap{2500.0, 0.3};

  double p_missing = 0.0;
  double p_distort = 0.0;
  double distort_strength = 0.5;  // blend weight toward the confusable glyph
  int distort_run = 1;            // a distortion spreads over up to this many consecutive numerals
  double p_delayed_overwrite = 0.0;
  double p_immediate_overwrite = 0.0;
  double p_augment = 0.0;
  double p_crossout = 0.0;
  double p_split = 0.0;
  double split_drift = 0.6;  // tangential shift of a split numeral's remainder, in numeral heights

  double p_twelve_first = 0.5;  // numeral order 12,1..11 instead of 1..12
  std::vector<std::string> order{"circle", "digits", "hands"};

  void validate() const {
    for (double p : {p_missing, p_distort, p_delayed_overwrite, p_immediate_overwrite, p_augment, p_crossout, p_split,
                     p_twelve_first, distort_strength})
      if (!(p >= 0.0 && p <= 1.0)) throw Error("synth probabilities must lie in [0, 1]");
    for (double s : {radius_sd, center_jitter, jitter_sigma, point_noise, angle_noise_deg, radial_sd, digit_scale_sd,
                     tilt_deg, intra_gap.sigma, inter_gap.sigma, delay_gap.sigma})
      if (!(s >= 0.0)) throw Error("synth noise parameters must be non-negative");
    if (!(split_drift >= 0.0)) throw Error("synth split_drift must be non-negative");
    if (distort_run < 1) throw Error("synth distort_run must be at least 1");
    if (!(radius > 0.0 && digit_scale > 0.0 && pen_speed > 0.0 && sample_ms > 0.0))
      throw Error("synth radius, digit scale, pen speed and sampling interval must be positive");
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != std::vector<std::string>{"circle", "digits", "hands"})
      throw Error("synth order must be a permutation of circle, digits, hands");
  }

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

// ---------------------------------------------------------------------------
// Presets

inline SynthConfig synth_preset(const std::string& name) {
  SynthConfig c;
  c.preset = name;
  if (name == "healthy") {
    c.cohort = Cohort::healthy;
  } else if (name == "impaired") {
    c.cohort = Cohort::impaired;
    c.jitter_sigma = 0.007;
    c.point_noise = 0.002;
    c.angle_noise_deg = 4.0;
    c.radial_sd = 0.03;
    c.digit_scale_sd = 0.12;
    c.tilt_deg = 8.0;
    c.pen_speed = 0.07;
    c.intra_gap = {300.0, 0.55};
    c.inter_gap = {900.0, 0.6};
    c.p_missing = 0.02;
    c.p_distort = 0.2;
    c.distort_run = 2;
    c.p_delayed_overwrite = 0.03;
    c.p_immediate_overwrite = 0.02;
    c.p_augment = 0.03;
    c.p_crossout = 0.01;
    c.p_split = 0.03;
  } else if (name == "overwrite") {
    c.cohort = Cohort::impaired;
    c.jitter_sigma = 0.005;
    c.angle_noise_deg = 3.0;
    c.intra_gap = {260.0, 0.5};
    c.inter_gap = {520.0, 0.5};
    c.p_delayed_overwrite = 0.15;
    c.p_augment = 0.05;
  } else if (name == "repair") {
    c.cohort = Cohort::impaired;
    c.jitter_sigma = 0.005;
    c.angle_noise_deg = 3.0;
    c.p_split = 0.12;
    c.p_immediate_overwrite = 0.02;
  } else {
    throw Error("unknown synth preset '" + name + "' (expected healthy|impaired|overwrite|repair)");
  }
  return c;
}

inline const std::vector<std::string>& synth_preset_names() {
  static const std::vector<std::string> names{"healthy", "impaired", "overwrite", "repair"};
  return names;
}

inline json synth_config_to_json(const SynthConfig& c) {
  auto gap = [](const GapDist& g) { return json{{"median_ms", g.median_ms}, {"sigma", g.sigma}}; };
  return {{"format", kFileFormat},
          {"preset", c.preset},
          {"seed", c.seed},
          {"cohort", to_string(c.cohort)},
          {"radius", c.radius},
          {"radius_sd", c.radius_sd},
          {"center_jitter", c.center_jitter},
          {"jitter_sigma", c.jitter_sigma},
          {"point_noise", c.point_noise},
          {"angle_noise_deg", c.angle_noise_deg},
          {"radial_frac", c.radial_frac},
          {"radial_sd", c.radial_sd},
          {"digit_scale", c.digit_scale},
          {"digit_scale_sd", c.digit_scale_sd},
          {"tilt_deg", c.tilt_deg},
          {"pen_speed", c.pen_speed},
          {"sample_ms", c.sample_ms},
          {"intra_gap", gap(c.intra_gap)},
          {"inter_gap", gap(c.inter_gap)},
          {"delay_gap", gap(c.delay_gap)},
          {"p_missing", c.p_missing},
          {"p_distort", c.p_distort},
          {"distort_strength", c.distort_strength},
          {"distort_run", c.distort_run},
          {"split_drift", c.split_drift},
          {"p_delayed_overwrite", c.p_delayed_overwrite},
          {"p_immediate_overwrite", c.p_immediate_overwrite},
          {"p_augment", c.p_augment},
          {"p_crossout", c.p_crossout},
          {"p_split", c.p_split},
          {"p_twelve_first", c.p_twelve_first},
          {"order", c.order}};
}

/// Missing keys keep the value of `base` (a preset when "preset" names one).
inline SynthConfig synth_config_from_json(const json& j) {
  detail::check_format(j, "synth config");
  SynthConfig c;
  try {
    const std::string preset = j.value("preset", "custom");
    if (preset != "custom") c = synth_preset(preset);
    c.preset = preset;
    auto num = [&](const char* key, double& v) {
      if (j.contains(key)) v = j.at(key).get<double>();
    };
    auto gap = [&](const char* key, GapDist& g) {
      if (!j.contains(key)) return;
      g.median_ms = j.at(key).value("median_ms", g.median_ms);
      g.sigma = j.at(key).value("sigma", g.sigma);
    };
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("cohort")) c.cohort = cohort_from_string(j.at("cohort").get<std::string>());
    num("radius", c.radius);
    num("radius_sd", c.radius_sd);
    num("center_jitter", c.center_jitter);
    num("jitter_sigma", c.jitter_sigma);
    num("point_noise", c.point_noise);
    num("angle_noise_deg", c.angle_noise_deg);
    num("radial_frac", c.radial_frac);
    num("radial_sd", c.radial_sd);
    num("digit_scale", c.digit_scale);
    num("digit_scale_sd", c.digit_scale_sd);
    num("tilt_deg", c.tilt_deg);
    num("pen_speed", c.pen_speed);
    num("sample_ms", c.sample_ms);
    gap("intra_gap", c.intra_gap);
    gap("inter_gap", c.inter_gap);
    gap("delay_gap", c.delay_gap);
    num("p_missing", c.p_missing);
    num("p_distort", c.p_distort);
    num("distort_strength", c.distort_strength);
    num("split_drift", c.split_drift);
    if (j.contains("distort_run")) c.distort_run = j.at("distort_run").get<int>();
    num("p_delayed_overwrite", c.p_delayed_overwrite);
    num("p_immediate_overwrite", c.p_immediate_overwrite);
    num("p_augment", c.p_augment);
    num("p_crossout", c.p_crossout);
    num("p_split", c.p_split);
    num("p_twelve_first", c.p_twelve_first);
    if (j.contains("order")) c.order = j.at("order").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Generation

struct SynthClock {
  Drawing drawing;
  GroundTruth truth;
};

namespace detail {

inline Polyline resample(const Polyline& line, int count) {
  std::vector<double> acc{0.0};
  for (std::size_t i = 1; i < line.size(); ++i) acc.push_back(acc.back() + norm(line[i] - line[i - 1]));
  Polyline out;
  const double total = acc.back();
  for (int k = 0; k < count; ++k) {
    const double s = count == 1 ? 0.0 : total * k / (count - 1);
    std::size_t seg = 1;
    while (seg + 1 < line.size() && acc[seg] < s) ++seg;
    const double len = acc[seg] - acc[seg - 1];
    const double u = len > 0.0 ? (s - acc[seg - 1]) / len : 0.0;
    out.push_back(line[seg - 1] + (line[seg] - line[seg - 1]) * std::clamp(u, 0.0, 1.0));
  }
  return out;
}

inline Glyph blend_glyph(const Glyph& a, const Glyph& b, double w) {
  if (a.size() != b.size()) return a;
  Glyph out;
  for (std::size_t s = 0; s < a.size(); ++s) {
    const auto ra = resample(a[s], 24), rb = resample(b[s], 24);
    Polyline p;
    for (std::size_t k = 0; k < ra.size(); ++k) p.push_back(ra[k] * (1.0 - w) + rb[k] * w);
    out.push_back(std::move(p));
  }
  return out;
}

struct PendingStroke {
  std::vector<PenPoint> points;
  StrokeRole role = StrokeRole::digit;
  int group = -1;  // ground-truth slice index for digit strokes
};

/// Accumulates strokes on a single timeline.
class ClockBuilder {
 public:
  ClockBuilder(const SynthConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {
    radius_ = cfg.radius * std::max(0.3, 1.0 + rng.normal(0.0, cfg.radius_sd));
    center_ = {150.0 + rng.uniform(-cfg.center_jitter, cfg.center_jitter),
               150.0 + rng.uniform(-cfg.center_jitter, cfg.center_jitter)};
  }

  double radius() const { return radius_; }
  Vec2 center() const { return center_; }
  double now() const { return t_; }
  void wait(double ms) { t_ += std::max(0.0, ms); }

  Vec2 at_bearing(double deg, double r) const {
    const double a = deg * kPi / 180.0;
    return center_ + Vec2{std::sin(a), -std::cos(a)} * r;
  }

  /// Samples a world-space polyline at the pen speed; returns the stroke index.
  int draw(const Polyline& world, StrokeRole role, int group, double speed_scale = 1.0) {
    double len = 0.0;
    for (std::size_t i = 1; i < world.size(); ++i) len += norm(world[i] - world[i - 1]);
    const double step = cfg_.pen_speed * speed_scale * cfg_.sample_ms;
    const int count = std::max(2, static_cast<int>(std::ceil(len / step)) + 1);
    const auto pts = resample(world, count);
    PendingStroke s;
    s.role = role;
    s.group = group;
    const double noise = cfg_.point_noise * radius_;
    for (int k = 0; k < count; ++k) {
      const auto& p = pts[static_cast<std::size_t>(k)];
      const auto t = static_cast<std::int64_t>(std::llround(t_ + k * cfg_.sample_ms));
      s.points.push_back({round3(p.x + rng_.normal(0.0, noise)), round3(p.y + rng_.normal(0.0, noise)), t});
    }
    t_ = static_cast<double>(s.points.back().t);
    strokes_.push_back(std::move(s));
    return static_cast<int>(strokes_.size()) - 1;
  }

  std::vector<PendingStroke>& strokes() { return strokes_; }

 private:
  static double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

  const SynthConfig& cfg_;
  Rng& rng_;
  double radius_ = 100.0;
  Vec2 center_;
  double t_ = 0.0;
  std::vector<PendingStroke> strokes_;
};

/// Where and how large one numeral is drawn.
struct Placement {
  Vec2 pos;        // centre of the numeral
  double height = 16.0;
  double tilt = 0.0;   // radians
  Vec2 tangent;    // clockwise unit tangent at the numeral
  Vec2 inward;     // unit vector toward the clock centre
};

/// Glyph strokes of a numeral in world space. `spread` widens the gap between
/// the digits of a two-digit numeral (in numeral heights); `glyph_override`
/// replaces the glyph of one digit position.
inline std::vector<Polyline> numeral_strokes(const std::string& text, const Placement& pl, double jitter, Rng& rng,
                                             double spread = 0.0, int override_pos = -1, const Glyph* glyph_override = nullptr,
                                             std::vector<int>* digit_of_stroke = nullptr) {
  const double gap = 0.15 + spread;
  const double width = static_cast<double>(text.size()) * kGlyphWidth + static_cast<double>(text.size() - 1) * gap;
  const double c = std::cos(pl.tilt), s = std::sin(pl.tilt);
  std::vector<Polyline> out;
  for (std::size_t d = 0; d < text.size(); ++d) {
    const Glyph& g = (static_cast<int>(d) == override_pos && glyph_override) ? *glyph_override : digit_glyph(text[d]);
    const double x0 = static_cast<double>(d) * (kGlyphWidth + gap) - 0.5 * width;
    for (const auto& line : g) {
      Polyline w;
      for (const auto& u : line) {
        const double lx = (x0 + u.x) * pl.height + rng.normal(0.0, jitter);
        const double ly = (u.y - 0.5) * pl.height + rng.normal(0.0, jitter);
        w.push_back(pl.pos + Vec2{c * lx - s * ly, s * lx + c * ly});
      }
      out.push_back(std::move(w));
      if (digit_of_stroke) digit_of_stroke->push_back(static_cast<int>(d));
    }
  }
  return out;
}

inline double path_length(const Polyline& line) {
  double len = 0.0;
  for (std::size_t k = 1; k < line.size(); ++k) len += norm(line[k] - line[k - 1]);
  return len;
}

/// Cuts a polyline at fraction `frac` of its arc length; both halves share the cut point.
inline std::pair<Polyline, Polyline> split_polyline(const Polyline& line, double frac) {
  const double target = frac * path_length(line);
  double run = 0.0;
  for (std::size_t k = 1; k < line.size(); ++k) {
    const double seg = norm(line[k] - line[k - 1]);
    if (run + seg >= target && seg > 0.0) {
      const Vec2 cut = line[k - 1] + (line[k] - line[k - 1]) * ((target - run) / seg);
      Polyline head(line.begin(), line.begin() + static_cast<std::ptrdiff_t>(k));
      head.push_back(cut);
      Polyline tail{cut};
      tail.insert(tail.end(), line.begin() + static_cast<std::ptrdiff_t>(k), line.end());
      return {std::move(head), std::move(tail)};
    }
    run += seg;
  }
  return {line, Polyline{line.back()}};
}

/// Local glyph-space polyline mapped onto one digit position of a numeral.
inline Polyline place_local(const Polyline& line, const std::string& text, int digit, const Placement& pl) {
  const double gap = 0.15;
  const double width = static_cast<double>(text.size()) * kGlyphWidth + static_cast<double>(text.size() - 1) * gap;
  const double x0 = static_cast<double>(digit) * (kGlyphWidth + gap) - 0.5 * width;
  const double c = std::cos(pl.tilt), s = std::sin(pl.tilt);
  Polyline w;
  for (const auto& u : line) {
    const double lx = (x0 + u.x) * pl.height, ly = (u.y - 0.5) * pl.height;
    w.push_back(pl.pos + Vec2{c * lx - s * ly, s * lx + c * ly});
  }
  return w;
}

inline Polyline scratch_over(const std::vector<Polyline>& ink) {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const auto& l : ink)
    for (const auto& p : l) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  Polyline z;
  for (int k = 0; k <= 6; ++k) z.push_back({k % 2 == 0 ? x0 : x1, y0 + (y1 - y0) * k / 6.0});
  return z;
}

}  // namespace detail

enum class SynthEvent { none, missing, distort, delayed_overwrite, immediate_overwrite, augment, crossout, split };

inline std::string to_string(SynthEvent e) {
  switch (e) {
    case SynthEvent::none: return "none";
    case SynthEvent::missing: return "missing";
    case SynthEvent::distort: return "distort";
    case SynthEvent::delayed_overwrite: return "delayed_overwrite";
    case SynthEvent::immediate_overwrite: return "immediate_overwrite";
    case SynthEvent::augment: return "augment";
    case SynthEvent::crossout: return "crossout";
    case SynthEvent::split: return "split";
  }
  return "none";
}

inline SynthClock generate_clock(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  detail::ClockBuilder b(cfg, rng);
  const double R = b.radius();
  const double jitter = cfg.jitter_sigma * R;
  GroundTruth gt;

  auto draw_circle = [&] {
    const double ecc = rng.uniform(0.0, 0.05);
    const double rot = rng.uniform(0.0, kPi);
    const double start = rng.uniform(-30.0, 30.0);
    const double sweep = 360.0 + rng.uniform(0.0, 15.0);
    const double dir = rng.bernoulli(0.5) ? 1.0 : -1.0;
    Polyline line;
    for (int k = 0; k <= 72; ++k) {
      const double deg = start + dir * sweep * k / 72.0;
      const double a = deg * kPi / 180.0;
      const Vec2 local{R * std::sin(a), -R * (1.0 - ecc) * std::cos(a)};
      line.push_back(b.center() + Vec2{std::cos(rot) * local.x - std::sin(rot) * local.y,
                                       std::sin(rot) * local.x + std::cos(rot) * local.y});
    }
    b.draw(line, StrokeRole::circle, -1, 3.5);
  };

  auto draw_hands = [&] {
    const double hour = 330.0 + rng.normal(0.0, 3.0), minute = 60.0 + rng.normal(0.0, 3.0);
    b.draw({b.center(), b.at_bearing(hour, 0.45 * R)}, StrokeRole::hand, -1);
    b.wait(rng.lognormal(cfg.inter_gap.median_ms, cfg.inter_gap.sigma));
    b.draw({b.center(), b.at_bearing(minute, 0.65 * R)}, StrokeRole::hand, -1);
  };

  auto draw_digits = [&] {
    std::vector<int> numerals;
    if (rng.bernoulli(cfg.p_twelve_first)) numerals.push_back(12);
    for (int n = 1; n <= 11; ++n) numerals.push_back(n);
    if (numerals.front() != 12) numerals.push_back(12);

    // Deferred strokes: drawn after the next numeral (corrections, serifs).
    struct Deferred {
      std::vector<Polyline> lines;
      StrokeRole role;
      int group;
    };
    std::vector<Deferred> deferred;
    auto flush = [&] {
      for (auto& d : deferred) {
        b.wait(rng.lognormal(cfg.inter_gap.median_ms, cfg.inter_gap.sigma));
        for (std::size_t k = 0; k < d.lines.size(); ++k) {
          if (k > 0) b.wait(rng.lognormal(cfg.intra_gap.median_ms, cfg.intra_gap.sigma));
          b.draw(d.lines[k], d.role, d.group);
        }
      }
      deferred.clear();
    };

    bool first = true;
    int distort_left = 0;
    for (int n : numerals) {
      const std::string text = numeral_text(n);
      detail::Placement pl;
      const double bearing_deg = 30.0 * (n % 12) + rng.normal(0.0, cfg.angle_noise_deg);
      pl.pos = b.at_bearing(bearing_deg, R * (cfg.radial_frac + rng.normal(0.0, cfg.radial_sd)));
      pl.height = cfg.digit_scale * R * std::max(0.5, 1.0 + rng.normal(0.0, cfg.digit_scale_sd));
      pl.tilt = rng.normal(0.0, cfg.tilt_deg) * kPi / 180.0;
      const double a = bearing_deg * kPi / 180.0;
      pl.tangent = {std::cos(a), std::sin(a)};
      pl.inward = {-std::sin(a), std::cos(a)};

      // Pick at most one event for this numeral.
      const bool has_one = text.find('1') != std::string::npos;
      const int last = static_cast<int>(text.size()) - 1;
      const bool confusable = confusable_digit(text[static_cast<std::size_t>(last)]) != 0;
      SynthEvent ev = SynthEvent::none;
      {
        const std::pair<SynthEvent, double> table[] = {{SynthEvent::missing, cfg.p_missing},
                                                       {SynthEvent::distort, cfg.p_distort},
                                                       {SynthEvent::delayed_overwrite, cfg.p_delayed_overwrite},
                                                       {SynthEvent::immediate_overwrite, cfg.p_immediate_overwrite},
                                                       {SynthEvent::augment, cfg.p_augment},
                                                       {SynthEvent::crossout, cfg.p_crossout},
                                                       {SynthEvent::split, cfg.p_split}};
        double u = rng.uniform();
        for (const auto& [kind, p] : table) {
          if (u < p) {
            ev = kind;
            break;
          }
          u -= p;
        }
        if (distort_left > 0) {
          --distort_left;
          if (ev == SynthEvent::none) ev = SynthEvent::distort;
        } else if (ev == SynthEvent::distort && cfg.distort_run > 1) {
          distort_left = static_cast<int>(rng.index(static_cast<std::size_t>(cfg.distort_run)));
        }
        if (ev == SynthEvent::distort && !confusable) ev = SynthEvent::none;
        if (ev == SynthEvent::augment && !has_one) ev = SynthEvent::none;
      }
      if (ev == SynthEvent::missing) {
        gt.events.push_back({"missing", n, n, {}});
        continue;
      }

      if (!first) b.wait(rng.lognormal(cfg.inter_gap.median_ms, cfg.inter_gap.sigma));
      first = false;
      const int group = static_cast<int>(gt.slices.size());
      gt.slices.push_back({n, {}});

      auto draw_lines = [&](const std::vector<Polyline>& lines, StrokeRole role, int grp) {
        std::vector<int> ids;
        for (std::size_t k = 0; k < lines.size(); ++k) {
          if (k > 0) b.wait(rng.lognormal(cfg.intra_gap.median_ms, cfg.intra_gap.sigma));
          ids.push_back(b.draw(lines[k], role, grp));
        }
        return ids;
      };
      auto wrong_numeral = [&] {
        int w = n;
        while (w == n || w == 1 || w > 9) w = 2 + static_cast<int>(rng.index(8));
        return w;
      };

      switch (ev) {
        case SynthEvent::distort: {
          const char d = text[static_cast<std::size_t>(last)];
          const Glyph g = detail::blend_glyph(digit_glyph(d), digit_glyph(confusable_digit(d)),
                                              cfg.distort_strength * rng.uniform(0.8, 1.0));
          draw_lines(detail::numeral_strokes(text, pl, jitter, rng, 0.0, last, &g), StrokeRole::digit, group);
          gt.events.push_back({"distort", n, n, {}});
          break;
        }
        case SynthEvent::delayed_overwrite:
        case SynthEvent::immediate_overwrite: {
          const int w = wrong_numeral();
          auto ids = draw_lines(detail::numeral_strokes(numeral_text(w), pl, jitter, rng), StrokeRole::overwritten, -1);
          const auto fix = detail::numeral_strokes(text, pl, jitter, rng);
          if (ev == SynthEvent::immediate_overwrite) {
            b.wait(rng.lognormal(cfg.intra_gap.median_ms, cfg.intra_gap.sigma));
            draw_lines(fix, StrokeRole::digit, group);
          } else if (rng.bernoulli(0.5)) {
            b.wait(rng.lognormal(cfg.delay_gap.median_ms, cfg.delay_gap.sigma));
            draw_lines(fix, StrokeRole::digit, group);
          } else {
            deferred.push_back({fix, StrokeRole::digit, group});
          }
          gt.events.push_back({to_string(ev), n, w, ids});
          break;
        }
        case SynthEvent::augment: {
          draw_lines(detail::numeral_strokes(text, pl, jitter, rng), StrokeRole::digit, group);
          const int pos = static_cast<int>(text.find('1'));
          const Polyline extra = detail::place_local(rng.bernoulli(0.5) ? one_hat() : one_foot(), text, pos, pl);
          b.wait(rng.lognormal(cfg.delay_gap.median_ms, cfg.delay_gap.sigma));
          gt.events.push_back({"augment", n, n, {b.draw(extra, StrokeRole::digit, group)}});
          break;
        }
        case SynthEvent::crossout: {
          const auto crossed = detail::numeral_strokes(text, pl, jitter, rng);
          auto ids = draw_lines(crossed, StrokeRole::overwritten, -1);
          b.wait(rng.lognormal(cfg.intra_gap.median_ms, cfg.intra_gap.sigma));
          const int scratch = b.draw(detail::scratch_over(crossed), StrokeRole::noise, -1, 1.5);
          b.wait(rng.lognormal(cfg.inter_gap.median_ms, cfg.inter_gap.sigma));
          detail::Placement beside = pl;
          beside.pos = pl.pos + pl.inward * (1.1 * pl.height);
          draw_lines(detail::numeral_strokes(text, beside, jitter, rng), StrokeRole::digit, group);
          gt.events.push_back({"crossout", n, n, ids});
          gt.events.push_back({"scratch", n, 0, {scratch}});
          break;
        }
        case SynthEvent::split: {
          // The pen lifts partway through the longest stroke; the rest of the
          // numeral follows after a pause, drifted clockwise.
          auto lines = detail::numeral_strokes(text, pl, jitter, rng);
          std::size_t cut = 0;
          for (std::size_t k = 1; k < lines.size(); ++k)
            if (detail::path_length(lines[k]) > detail::path_length(lines[cut])) cut = k;
          auto [head, tail] = detail::split_polyline(lines[cut], rng.uniform(0.4, 0.6));
          lines[cut] = std::move(head);
          lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(cut) + 1, std::move(tail));
          const Vec2 shift = pl.tangent * (cfg.split_drift * pl.height);
          std::vector<int> moved;
          for (std::size_t k = 0; k < lines.size(); ++k) {
            if (k == cut + 1) {
              b.wait(rng.lognormal(cfg.delay_gap.median_ms, cfg.delay_gap.sigma));
            } else if (k > 0) {
              b.wait(rng.lognormal(cfg.intra_gap.median_ms, cfg.intra_gap.sigma));
            }
            auto line = lines[k];
            if (k > cut)
              for (auto& p : line) p = p + shift;
            const int id = b.draw(line, StrokeRole::digit, group);
            if (k > cut) moved.push_back(id);
          }
          gt.events.push_back({"split", n, n, moved});
          break;
        }
        default:
          draw_lines(detail::numeral_strokes(text, pl, jitter, rng), StrokeRole::digit, group);
          break;
      }
      if (ev != SynthEvent::delayed_overwrite) flush();
    }
    flush();
  };

  bool first_part = true;
  for (const auto& part : cfg.order) {
    if (!first_part) b.wait(rng.lognormal(1500.0, 0.3));
    first_part = false;
    if (part == "circle") draw_circle();
    if (part == "digits") draw_digits();
    if (part == "hands") draw_hands();
  }

  auto& pending = b.strokes();
  std::vector<Stroke> strokes;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    strokes.push_back({static_cast<int>(i), pending[i].points});
    gt.roles[static_cast<int>(i)] = pending[i].role;
    if (pending[i].role == StrokeRole::digit) gt.slices[static_cast<std::size_t>(pending[i].group)].strokes.push_back(static_cast<int>(i));
  }
  DrawingMeta meta;
  meta.subject = cfg.preset + "-" + std::to_string(cfg.seed);
  meta.cohort = cfg.cohort;
  SynthClock out{Drawing::from_strokes(std::move(strokes), meta), std::move(gt)};
  out.truth.validate();
  return out;
}

/// Drawing i uses configs[i % k] with seed splitmix64(base seed + i).
inline std::vector<SynthClock> generate_clocks(std::span<const SynthConfig> configs, int n) {
  if (configs.empty()) throw Error("no synth configuration given");
  std::vector<SynthClock> out;
  for (int i = 0; i < n; ++i) {
    SynthConfig c = configs[static_cast<std::size_t>(i) % configs.size()];
    c.seed = splitmix64(configs.front().seed + static_cast<std::uint64_t>(i));
    out.push_back(generate_clock(c));
  }
  return out;
}

inline std::vector<SynthClock> generate_clocks(const SynthConfig& cfg, int n) {
  return generate_clocks(std::span<const SynthConfig>(&cfg, 1), n);
}

inline std::string corpus_file_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clock_%05d.json", i);
  return buf;
}

/// Writes stroke files, ground-truth sidecars and manifest.json.
inline std::vector<std::filesystem::path> generate_corpus(std::span<const SynthConfig> configs, int n,
                                                          const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw IoError("cannot create corpus directory " + out_dir.string());
  const auto clocks = generate_clocks(configs, n);
  std::vector<std::filesystem::path> files;
  json manifest;
  manifest["format"] = kFileFormat;
  manifest["kind"] = "synth-corpus";
  manifest["seed"] = configs.front().seed;
  manifest["count"] = n;
  manifest["configs"] = json::array();
  for (const auto& c : configs) manifest["configs"].push_back(synth_config_to_json(c));
  manifest["files"] = json::array();
  for (int i = 0; i < n; ++i) {
    const auto path = out_dir / corpus_file_name(i);
    save_drawing(clocks[static_cast<std::size_t>(i)].drawing, path);
    save_ground_truth(clocks[static_cast<std::size_t>(i)].truth, ground_truth_path(path));
    manifest["files"].push_back(path.filename().string());
    files.push_back(path);
  }
  detail::write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return files;
}

// ---------------------------------------------------------------------------
// Isolated numerals for recognizer training

struct NumeralSample {
  std::vector<Stroke> strokes;
  int label = 0;
};

/// Clean numerals drawn with the noise model of `cfg` (no events).
inline std::vector<NumeralSample> sample_numerals(const SynthConfig& cfg, int per_class, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  std::vector<NumeralSample> out;
  for (int rep = 0; rep < per_class; ++rep)
    for (int n = 1; n <= kNumNumerals; ++n) {
      detail::ClockBuilder b(cfg, rng);
      const double R = b.radius();
      detail::Placement pl;
      const double bearing_deg = 30.0 * (n % 12) + rng.normal(0.0, cfg.angle_noise_deg);
      pl.pos = b.at_bearing(bearing_deg, R * cfg.radial_frac);
      pl.height = cfg.digit_scale * R * std::max(0.5, 1.0 + rng.normal(0.0, cfg.digit_scale_sd));
      pl.tilt = rng.normal(0.0, cfg.tilt_deg) * kPi / 180.0;
      const auto lines = detail::numeral_strokes(numeral_text(n), pl, cfg.jitter_sigma * R, rng);
      for (std::size_t k = 0; k < lines.size(); ++k) {
        if (k > 0) b.wait(rng.lognormal(cfg.intra_gap.median_ms, cfg.intra_gap.sigma));
        b.draw(lines[k], StrokeRole::digit, 0);
      }
      NumeralSample s;
      s.label = n;
      int id = 0;
      for (auto& p : b.strokes()) s.strokes.push_back({id++, std::move(p.points)});
      out.push_back(std::move(s));
    }
  return out;
}

}  // namespace clockst
