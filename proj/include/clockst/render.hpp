#pragma once

// Static SVG views of a drawing and of its pipeline report. Output depends
// only on the inputs; coordinates are printed with fixed precision.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "clockst/report.hpp"

namespace clockst {

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Box {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -std::numeric_limits<double>::infinity(), y1 = x1;

  void add(Vec2 p) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  bool empty() const { return !(x1 >= x0); }
  double w() const { return x1 - x0; }
  double h() const { return y1 - y0; }
  Box padded(double m) const { return {x0 - m, y0 - m, x1 + m, y1 + m}; }
};

inline Box stroke_box(const Drawing& d, const std::vector<int>& ids) {
  Box b;
  for (int id : ids)
    for (const auto& p : d.stroke_by_id(id).points) b.add(p.pos());
  return b;
}

inline std::string polyline(const Stroke& s, const std::string& color, double width, double opacity = 1.0) {
  std::string pts;
  for (const auto& p : s.points) {
    if (!pts.empty()) pts += ' ';
    pts += fmt(p.x) + "," + fmt(p.y);
  }
  if (s.points.size() == 1) pts += ' ' + fmt(s.points[0].x) + "," + fmt(s.points[0].y);
  std::string out = "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
                    fmt(width) + "\" stroke-linecap=\"round\" stroke-linejoin=\"round\"";
  if (opacity < 1.0) out += " stroke-opacity=\"" + fmt(opacity) + "\"";
  return out + "/>\n";
}

inline std::string text(double x, double y, double size, const std::string& color, const std::string& s) {
  return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-family=\"sans-serif\" font-size=\"" + fmt(size) +
         "\" fill=\"" + color + "\">" + xml_escape(s) + "</text>\n";
}

inline std::string svg_open(double width, double height, const Box& view) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
         "\" height=\"" + fmt(height) + "\" viewBox=\"" + fmt(view.x0) + " " + fmt(view.y0) + " " + fmt(view.w()) +
         " " + fmt(view.h()) + "\">\n<rect x=\"" + fmt(view.x0) + "\" y=\"" + fmt(view.y0) + "\" width=\"" +
         fmt(view.w()) + "\" height=\"" + fmt(view.h()) + "\" fill=\"white\"/>\n";
}

inline constexpr const char* kGreen = "#1a9850";
inline constexpr const char* kRed = "#d73027";
inline constexpr const char* kBlue = "#4575b4";
inline constexpr const char* kGrey = "#9e9e9e";

}  // namespace detail

/// Whole drawing. With a report, digit slices get labeled boxes: green when
/// correct, red when wrong, blue when no ground truth was available; ink
/// removed as overwritten is drawn faint.
inline std::string render_drawing(const Drawing& d, const Report* report = nullptr) {
  using namespace detail;
  Box all;
  for (const auto& s : d.strokes())
    for (const auto& p : s.points) all.add(p.pos());
  const double span = std::max({all.w(), all.h(), 1e-6});
  const double pen = span / 250.0;
  const Box view = all.padded(0.08 * span);
  const double scale = 600.0 / std::max(view.w(), view.h());
  std::string out = svg_open(view.w() * scale, view.h() * scale, view);

  std::map<int, std::string> color;
  if (report) {
    for (int id : report->partition.circle_strokes) color[id] = "#555555";
    for (int id : report->partition.hand_strokes) color[id] = "#555555";
    for (const auto& l : report->removed)
      for (int id : l.strokes) color[id] = kGrey;
  }
  out += "<g id=\"ink\">\n";
  for (const auto& s : d.strokes()) {
    const auto it = color.find(s.id);
    const bool faint = it != color.end() && it->second == kGrey;
    out += polyline(s, it == color.end() ? "black" : it->second, pen, faint ? 0.6 : 1.0);
  }
  out += "</g>\n";

  if (report) {
    out += "<g id=\"slices\">\n";
    for (const auto& s : report->slices) {
      const Box b = stroke_box(d, s.strokes).padded(2.0 * pen);
      const char* c = !s.correct ? kBlue : (*s.correct ? kGreen : kRed);
      out += "<rect x=\"" + fmt(b.x0) + "\" y=\"" + fmt(b.y0) + "\" width=\"" + fmt(b.w()) + "\" height=\"" +
             fmt(b.h()) + "\" fill=\"none\" stroke=\"" + c + "\" stroke-width=\"" + fmt(0.6 * pen) + "\"/>\n";
      out += text(b.x0, b.y0 - pen, 6.0 * pen, c, std::to_string(s.label));
    }
    out += "</g>\n";
  }
  return out + "</svg>\n";
}

/// Unpeeled view of overwrite sites. Every removed layer is attached to the
/// final slice that superseded it; each site becomes one row of panels in time
/// order, earlier layers ghosted, the final slice last. Without removed ink
/// the result is a single panel of the digit layer.
inline std::string render_layers(const Report& r) {
  using namespace detail;
  const Drawing& d = r.drawing;
  struct Panel {
    std::vector<int> strokes;
    std::string caption;
  };
  std::vector<std::vector<Panel>> rows;

  if (r.removed.empty()) {
    std::vector<int> ids = r.partition.digit_strokes;
    if (ids.empty())
      for (const auto& s : d.strokes()) ids.push_back(s.id);
    rows.push_back({{ids, std::to_string(r.slices.size()) + " slices, no overwritten ink"}});
  } else {
    // Resolve each removed layer to the final slice that replaced it.
    std::map<int, std::size_t> removed_by_layer;
    for (std::size_t k = 0; k < r.removed.size(); ++k)
      if (r.removed[k].source == "overwrite") removed_by_layer[r.removed[k].layer] = k;
    auto nearest_slice = [&](double deg) {
      std::size_t best = 0;
      double bd = 1e300;
      for (std::size_t i = 0; i < r.slices.size(); ++i) {
        const double dd = bearing_diff(ClockBearing(deg), ClockBearing(r.slices[i].angular_mid));
        if (dd < bd) {
          bd = dd;
          best = i;
        }
      }
      return best;
    };
    std::map<std::size_t, std::vector<std::size_t>> sites;  // final slice -> removed layers
    std::vector<std::size_t> orphans;
    for (std::size_t k = 0; k < r.removed.size(); ++k) {
      if (r.slices.empty()) {
        orphans.push_back(k);
        continue;
      }
      const ReportLayer* cur = &r.removed[k];
      std::size_t guard = 0;
      while (cur->source == "overwrite" && removed_by_layer.count(cur->by_layer) && guard++ < r.removed.size())
        cur = &r.removed[removed_by_layer.at(cur->by_layer)];
      std::optional<std::size_t> target;
      if (cur->source == "overwrite")
        for (std::size_t i = 0; i < r.slices.size(); ++i)
          if (r.slices[i].layer == cur->by_layer) target = i;
      sites[target.value_or(nearest_slice(cur->angular_mid))].push_back(k);
    }
    for (auto& [slice, layers] : sites) {
      std::stable_sort(layers.begin(), layers.end(),
                       [&](std::size_t a, std::size_t b) { return r.removed[a].t_begin < r.removed[b].t_begin; });
      std::vector<Panel> row;
      for (std::size_t k : layers) {
        const auto& l = r.removed[k];
        char cap[96];
        std::snprintf(cap, sizeof cap, "%s: %d (%.2f)", l.source == "overwrite" ? "overwritten" : "split off", l.label,
                      l.score);
        row.push_back({l.strokes, cap});
      }
      const auto& s = r.slices[slice];
      char cap[96];
      std::snprintf(cap, sizeof cap, "final: %d (%.2f)", s.label, s.posterior);
      row.push_back({s.strokes, cap});
      rows.push_back(std::move(row));
    }
    if (!orphans.empty()) {
      std::vector<Panel> row;
      for (std::size_t k : orphans) row.push_back({r.removed[k].strokes, "removed: " + std::to_string(r.removed[k].label)});
      rows.push_back(std::move(row));
    }
  }

  constexpr double kPanel = 160.0, kGap = 10.0, kCaption = 18.0;
  std::size_t cols = 0;
  for (const auto& row : rows) cols = std::max(cols, row.size());
  const double width = static_cast<double>(cols) * (kPanel + kGap) + kGap;
  const double height = static_cast<double>(rows.size()) * (kPanel + kCaption + kGap) + kGap;
  std::string out = svg_open(width, height, Box{0.0, 0.0, width, height});
  for (std::size_t ri = 0; ri < rows.size(); ++ri) {
    const auto& row = rows[ri];
    Box site;
    for (const auto& p : row) {
      const Box b = stroke_box(d, p.strokes);
      if (b.empty()) continue;
      site.add({b.x0, b.y0});
      site.add({b.x1, b.y1});
    }
    const double span = std::max({site.w(), site.h(), 1e-6});
    const Box view = site.padded(0.1 * span);
    const double side = std::max(view.w(), view.h());
    const Box square{view.x0 - 0.5 * (side - view.w()), view.y0 - 0.5 * (side - view.h()),
                     view.x0 - 0.5 * (side - view.w()) + side, view.y0 - 0.5 * (side - view.h()) + side};
    const double y = kGap + static_cast<double>(ri) * (kPanel + kCaption + kGap);
    for (std::size_t ci = 0; ci < row.size(); ++ci) {
      const double x = kGap + static_cast<double>(ci) * (kPanel + kGap);
      out += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(kPanel) + "\" height=\"" + fmt(kPanel) +
             "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
      out += "<svg x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(kPanel) + "\" height=\"" + fmt(kPanel) +
             "\" viewBox=\"" + fmt(square.x0) + " " + fmt(square.y0) + " " + fmt(square.w()) + " " + fmt(square.h()) +
             "\">\n";
      const double pen = span / 60.0;
      for (std::size_t prev = 0; prev < ci; ++prev)
        for (int id : row[prev].strokes) out += polyline(d.stroke_by_id(id), kGrey, pen, 0.35);
      for (int id : row[ci].strokes) out += polyline(d.stroke_by_id(id), "black", pen);
      out += "</svg>\n";
      out += text(x + 2.0, y + kPanel + 13.0, 11.0, "black", row[ci].caption);
    }
  }
  return out + "</svg>\n";
}

inline void write_svg(const std::string& svg, const std::filesystem::path& path) { detail::write_file(path, svg); }

}  // namespace clockst
