#pragma once

// Hand-authored digit glyphs. Each glyph is a list of polyline strokes in a
// box 0.6 wide and 1 tall, y pointing down, in canonical writing order.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "clockst/model.hpp"

namespace clockst {

using Polyline = std::vector<Vec2>;
using Glyph = std::vector<Polyline>;

inline constexpr double kGlyphWidth = 0.6;

inline const Glyph& digit_glyph(char d) {
  static const std::array<Glyph, 10> glyphs = [] {
    std::array<Glyph, 10> g;
    Polyline zero;
    for (int k = 0; k <= 20; ++k) {
      const double a = 2.0 * 3.14159265358979323846 * k / 20.0;
      zero.push_back({0.3 - 0.28 * std::sin(a), 0.5 - 0.5 * std::cos(a)});
    }
    g[0] = {zero};
    g[1] = {{{0.3, 0.0}, {0.3, 1.0}}};
    g[2] = {{{0.05, 0.25}, {0.15, 0.06}, {0.3, 0.0}, {0.46, 0.05}, {0.55, 0.2}, {0.5, 0.4},
             {0.3, 0.65}, {0.05, 1.0}, {0.6, 1.0}}};
    g[3] = {{{0.05, 0.1}, {0.25, 0.0}, {0.45, 0.05}, {0.55, 0.2}, {0.45, 0.4}, {0.25, 0.48},
             {0.45, 0.55}, {0.58, 0.72}, {0.5, 0.92}, {0.3, 1.0}, {0.05, 0.92}}};
    g[4] = {{{0.38, 0.0}, {0.0, 0.65}, {0.6, 0.65}}, {{0.45, 0.25}, {0.45, 1.0}}};
    g[5] = {{{0.1, 0.0}, {0.06, 0.45}, {0.3, 0.4}, {0.5, 0.5}, {0.58, 0.7}, {0.5, 0.9}, {0.3, 1.0},
             {0.05, 0.92}},
            {{0.1, 0.0}, {0.56, 0.0}}};
    g[6] = {{{0.5, 0.05}, {0.3, 0.0}, {0.12, 0.15}, {0.03, 0.45}, {0.05, 0.8}, {0.2, 0.98}, {0.4, 0.98},
             {0.55, 0.8}, {0.5, 0.6}, {0.3, 0.52}, {0.1, 0.6}, {0.04, 0.75}}};
    g[7] = {{{0.0, 0.0}, {0.6, 0.0}, {0.2, 1.0}}};
    g[8] = {{{0.5, 0.12}, {0.3, 0.0}, {0.1, 0.12}, {0.15, 0.35}, {0.45, 0.6}, {0.55, 0.82}, {0.3, 1.0},
             {0.05, 0.82}, {0.15, 0.6}, {0.45, 0.35}, {0.5, 0.12}}};
    g[9] = {{{0.55, 0.25}, {0.45, 0.06}, {0.28, 0.0}, {0.08, 0.1}, {0.05, 0.3}, {0.2, 0.45}, {0.45, 0.4},
             {0.55, 0.25}, {0.55, 0.6}, {0.45, 1.0}}};
    return g;
  }();
  return glyphs.at(static_cast<std::size_t>(d - '0'));
}

/// A glyph resembling `d` closely enough to blend toward, or 0 if none.
inline char confusable_digit(char d) {
  switch (d) {
    case '0': return '6';
    case '1': return '7';
    case '2': return '7';
    case '3': return '8';
    case '6': return '0';
    case '7': return '1';
    case '8': return '3';
    case '9': return '0';
    default: return 0;
  }
}

inline std::string numeral_text(int numeral) { return std::to_string(numeral); }

/// Extra strokes for a "1": serif at the top or a base line.
inline Polyline one_hat() { return {{0.1, 0.28}, {0.28, 0.04}}; }
inline Polyline one_foot() { return {{0.05, 1.0}, {0.55, 1.0}}; }

}  // namespace clockst
