#pragma once

// Core value types for pen-stroke drawings: points, strokes, drawings,
// clock bearings and ground-truth annotations, plus the JSON stroke-file
// and ground-truth sidecar formats.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clockst/error.hpp"

namespace clockst {

using json = nlohmann::json;

inline constexpr int kFileFormat = 1;
inline constexpr int kNumNumerals = 12;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// One pen sample. x rightward, y downward, t in milliseconds since test start.
struct PenPoint {
  double x = 0.0;
  double y = 0.0;
  std::int64_t t = 0;

  Vec2 pos() const { return {x, y}; }
  friend bool operator==(const PenPoint&, const PenPoint&) = default;
};

struct Stroke {
  int id = 0;
  std::vector<PenPoint> points;

  std::int64_t start_time() const { return points.front().t; }
  std::int64_t end_time() const { return points.back().t; }

  double path_length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) len += norm(points[i].pos() - points[i - 1].pos());
    return len;
  }

  Vec2 centroid() const {
    Vec2 c;
    for (const auto& p : points) c = c + p.pos();
    return c * (1.0 / static_cast<double>(points.size()));
  }

  friend bool operator==(const Stroke&, const Stroke&) = default;
};

enum class Cohort { healthy, impaired, unknown };

inline std::string to_string(Cohort c) {
  switch (c) {
    case Cohort::healthy: return "healthy";
    case Cohort::impaired: return "impaired";
    default: return "unknown";
  }
}

inline Cohort cohort_from_string(const std::string& s) {
  if (s == "healthy") return Cohort::healthy;
  if (s == "impaired") return Cohort::impaired;
  if (s == "unknown" || s.empty()) return Cohort::unknown;
  throw ParseError("unknown cohort tag '" + s + "'");
}

struct DrawingMeta {
  std::optional<std::string> subject;
  Cohort cohort = Cohort::unknown;
  friend bool operator==(const DrawingMeta&, const DrawingMeta&) = default;
};

/// A validated drawing. Strokes are ordered by start time; equal start times
/// keep input order. Stroke ids are the input (file) positions.
class Drawing {
 public:
  Drawing() = default;

  /// Validates and sorts. Ids are reassigned to input positions.
  static Drawing from_strokes(std::vector<Stroke> strokes, DrawingMeta meta = {}) {
    if (strokes.empty()) throw EmptyInputError("drawing has no strokes");
    for (std::size_t i = 0; i < strokes.size(); ++i) {
      auto& s = strokes[i];
      s.id = static_cast<int>(i);
      if (s.points.empty()) throw ParseError("stroke " + std::to_string(i) + " has no points");
      for (std::size_t k = 0; k < s.points.size(); ++k) {
        const auto& p = s.points[k];
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
          throw ParseError("stroke " + std::to_string(i) + " has a non-finite coordinate");
        if (p.t < 0) throw ParseError("stroke " + std::to_string(i) + " has a negative timestamp");
        if (k > 0 && p.t < s.points[k - 1].t)
          throw ParseError("stroke " + std::to_string(i) + " has decreasing timestamps");
      }
    }
    std::stable_sort(strokes.begin(), strokes.end(),
                     [](const Stroke& a, const Stroke& b) { return a.start_time() < b.start_time(); });
    Drawing d;
    d.strokes_ = std::move(strokes);
    d.meta_ = std::move(meta);
    d.index_.assign(d.strokes_.size(), 0);
    for (std::size_t i = 0; i < d.strokes_.size(); ++i) d.index_[d.strokes_[i].id] = i;
    return d;
  }

  const std::vector<Stroke>& strokes() const { return strokes_; }
  const DrawingMeta& meta() const { return meta_; }
  std::size_t size() const { return strokes_.size(); }
  bool empty() const { return strokes_.empty(); }

  const Stroke& stroke_by_id(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= index_.size())
      throw Error("unknown stroke id " + std::to_string(id));
    return strokes_[index_[id]];
  }

  std::vector<PenPoint> all_points() const {
    std::vector<PenPoint> out;
    for (const auto& s : strokes_) out.insert(out.end(), s.points.begin(), s.points.end());
    return out;
  }

  friend bool operator==(const Drawing& a, const Drawing& b) {
    return a.strokes_ == b.strokes_ && a.meta_ == b.meta_;
  }

 private:
  std::vector<Stroke> strokes_;
  DrawingMeta meta_;
  std::vector<std::size_t> index_;
};

/// Clock-face bearing in degrees: 0 at 12 o'clock, increasing clockwise.
class ClockBearing {
 public:
  ClockBearing() = default;
  explicit ClockBearing(double degrees) : deg_(wrap(degrees)) {}

  double degrees() const { return deg_; }

  static double wrap(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w < 0.0) w += 360.0;
    if (w >= 360.0) w = 0.0;
    return w;
  }

  friend bool operator==(ClockBearing a, ClockBearing b) { return a.deg_ == b.deg_; }

 private:
  double deg_ = 0.0;
};

/// Bearing of `p` around `center` in the y-down frame.
inline ClockBearing bearing(Vec2 p, Vec2 center) {
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  if (dx == 0.0 && dy == 0.0) throw DegenerateBearingError("bearing of the center point is undefined");
  constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;
  return ClockBearing(std::atan2(dx, -dy) * kRadToDeg);
}

inline ClockBearing bearing(const PenPoint& p, Vec2 center) { return bearing(p.pos(), center); }

/// Minimal circular distance, in [0, 180].
inline double bearing_diff(ClockBearing a, ClockBearing b) {
  const double d = std::fabs(a.degrees() - b.degrees());
  return d > 180.0 ? 360.0 - d : d;
}

// ---------------------------------------------------------------------------
// Ground truth

enum class StrokeRole { digit, circle, hand, noise, overwritten };

inline std::string to_string(StrokeRole r) {
  switch (r) {
    case StrokeRole::digit: return "digit";
    case StrokeRole::circle: return "circle";
    case StrokeRole::hand: return "hand";
    case StrokeRole::noise: return "noise";
    case StrokeRole::overwritten: return "overwritten";
  }
  return "noise";
}

inline StrokeRole role_from_string(const std::string& s) {
  if (s == "digit") return StrokeRole::digit;
  if (s == "circle") return StrokeRole::circle;
  if (s == "hand") return StrokeRole::hand;
  if (s == "noise") return StrokeRole::noise;
  if (s == "overwritten") return StrokeRole::overwritten;
  throw ParseError("unknown stroke role '" + s + "'");
}

struct GtSlice {
  int label = 0;  // 1..12
  std::vector<int> strokes;
  friend bool operator==(const GtSlice&, const GtSlice&) = default;
};

/// Record of a synthetic event. `strokes` are the strokes the event added or
/// that it made obsolete; `label` is the numeral the affected ink depicts.
struct GtEvent {
  std::string kind;  // delayed_overwrite | immediate_overwrite | crossout | augment | split | distort | missing
  int numeral = 0;
  int label = 0;
  std::vector<int> strokes;
  friend bool operator==(const GtEvent&, const GtEvent&) = default;
};

struct GroundTruth {
  std::vector<GtSlice> slices;
  std::map<int, StrokeRole> roles;
  std::vector<GtEvent> events;

  /// Checks labels and that every digit stroke sits in exactly one slice.
  void validate() const {
    std::map<int, int> seen;
    for (const auto& s : slices) {
      if (s.label < 1 || s.label > kNumNumerals)
        throw ParseError("ground-truth label " + std::to_string(s.label) + " outside 1..12");
      if (s.strokes.empty()) throw ParseError("ground-truth slice without strokes");
      for (int id : s.strokes) ++seen[id];
    }
    for (const auto& [id, n] : seen)
      if (n != 1) throw ParseError("stroke " + std::to_string(id) + " appears in several ground-truth slices");
    for (const auto& [id, role] : roles)
      if (role == StrokeRole::digit && !seen.count(id))
        throw ParseError("digit stroke " + std::to_string(id) + " belongs to no ground-truth slice");
  }

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

// ---------------------------------------------------------------------------
// JSON encoding

namespace detail {

inline std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

inline json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what(), line_of_offset(text, e.byte));
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline void check_format(const json& j, const std::string& what) {
  if (!j.is_object()) throw ParseError(what + ": top level must be an object");
  if (j.contains("format") && j.at("format") != kFileFormat)
    throw ParseError(what + ": unsupported format version " + j.at("format").dump());
}

}  // namespace detail

inline json stroke_points_to_json(const Stroke& s) {
  json pts = json::array();
  for (const auto& p : s.points) pts.push_back(json::array({p.x, p.y, p.t}));
  return pts;
}

inline std::vector<PenPoint> stroke_points_from_json(const json& pts, std::size_t stroke_index) {
  const std::string where = "stroke " + std::to_string(stroke_index);
  if (!pts.is_array()) throw ParseError(where + ": points must be an array");
  std::vector<PenPoint> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number())
      throw ParseError(where + ": each point must be [x, y, t]");
    if (!p[2].is_number_integer()) throw ParseError(where + ": timestamps must be integer milliseconds");
    out.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<std::int64_t>()});
  }
  return out;
}

/// Strokes are emitted in id order so that ids survive a round trip.
inline json drawing_to_json(const Drawing& d) {
  json j;
  j["format"] = kFileFormat;
  json meta = json::object();
  if (d.meta().subject) meta["subject"] = *d.meta().subject;
  meta["cohort"] = to_string(d.meta().cohort);
  j["meta"] = meta;
  std::vector<const Stroke*> by_id;
  for (const auto& s : d.strokes()) by_id.push_back(&s);
  std::sort(by_id.begin(), by_id.end(), [](auto* a, auto* b) { return a->id < b->id; });
  json strokes = json::array();
  for (const auto* s : by_id) strokes.push_back({{"points", stroke_points_to_json(*s)}});
  j["strokes"] = std::move(strokes);
  return j;
}

inline Drawing drawing_from_json(const json& j) {
  detail::check_format(j, "stroke file");
  if (!j.contains("strokes") || !j.at("strokes").is_array()) throw ParseError("stroke file: missing 'strokes' array");
  DrawingMeta meta;
  if (j.contains("meta")) {
    const auto& m = j.at("meta");
    if (!m.is_object()) throw ParseError("stroke file: 'meta' must be an object");
    if (m.contains("subject")) meta.subject = m.at("subject").get<std::string>();
    if (m.contains("cohort")) meta.cohort = cohort_from_string(m.at("cohort").get<std::string>());
  }
  std::vector<Stroke> strokes;
  const auto& arr = j.at("strokes");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& s = arr[i];
    if (!s.is_object() || !s.contains("points")) throw ParseError("stroke " + std::to_string(i) + ": missing 'points'");
    strokes.push_back({static_cast<int>(i), stroke_points_from_json(s.at("points"), i)});
  }
  if (strokes.empty()) throw EmptyInputError("stroke file contains no strokes");
  return Drawing::from_strokes(std::move(strokes), std::move(meta));
}

inline std::string serialize_drawing(const Drawing& d) { return drawing_to_json(d).dump() + "\n"; }

inline Drawing parse_drawing(const std::string& text) {
  return drawing_from_json(detail::parse_text(text, "stroke file"));
}

inline Drawing load_drawing(const std::filesystem::path& path) {
  try {
    return parse_drawing(detail::read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void save_drawing(const Drawing& d, const std::filesystem::path& path) {
  detail::write_file(path, serialize_drawing(d));
}

/// `clock_0001.json` -> `clock_0001.gt.json`
inline std::filesystem::path ground_truth_path(const std::filesystem::path& drawing_path) {
  auto p = drawing_path;
  p.replace_extension(".gt.json");
  return p;
}

inline bool is_ground_truth_file(const std::filesystem::path& p) {
  const auto name = p.filename().string();
  return name.size() > 8 && name.compare(name.size() - 8, 8, ".gt.json") == 0;
}

inline json ground_truth_to_json(const GroundTruth& gt) {
  json j;
  j["format"] = kFileFormat;
  json slices = json::array();
  for (const auto& s : gt.slices) slices.push_back({{"label", s.label}, {"strokes", s.strokes}});
  j["slices"] = std::move(slices);
  json roles = json::object();
  for (const auto& [id, r] : gt.roles) roles[std::to_string(id)] = to_string(r);
  j["roles"] = std::move(roles);
  if (!gt.events.empty()) {
    json ev = json::array();
    for (const auto& e : gt.events)
      ev.push_back({{"kind", e.kind}, {"numeral", e.numeral}, {"label", e.label}, {"strokes", e.strokes}});
    j["events"] = std::move(ev);
  }
  return j;
}

inline GroundTruth ground_truth_from_json(const json& j) {
  detail::check_format(j, "ground truth");
  GroundTruth gt;
  try {
    for (const auto& s : j.at("slices")) gt.slices.push_back({s.at("label").get<int>(), s.at("strokes").get<std::vector<int>>()});
    if (j.contains("roles"))
      for (const auto& [k, v] : j.at("roles").items()) gt.roles[std::stoi(k)] = role_from_string(v.get<std::string>());
    if (j.contains("events"))
      for (const auto& e : j.at("events"))
        gt.events.push_back({e.at("kind").get<std::string>(), e.value("numeral", 0), e.value("label", 0),
                             e.value("strokes", std::vector<int>{})});
  } catch (const json::exception& e) {
    throw ParseError(std::string("ground truth: ") + e.what());
  }
  gt.validate();
  return gt;
}

inline GroundTruth load_ground_truth(const std::filesystem::path& path) {
  return ground_truth_from_json(detail::parse_text(detail::read_file(path), path.string()));
}

inline void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  detail::write_file(path, ground_truth_to_json(gt).dump() + "\n");
}

}  // namespace clockst
