#pragma once

// Planar geometry used by the pipeline: direct least-squares ellipse fitting,
// convex hulls with a degenerate-hull buffer, convex clipping, and the
// hull-overlap measure that drives overwrite detection.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clockst/error.hpp"
#include "clockst/model.hpp"

namespace clockst {

inline constexpr double kPi = 3.14159265358979323846;

/// Geometric ellipse; `rotation` is the angle of the major axis from +x
/// towards +y, in radians, within [0, pi).
struct Ellipse {
  Vec2 center;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double rotation = 0.0;
};

/// Fits an ellipse by constrained algebraic least squares (4ac - b^2 = 1),
/// solved through the reduced 3x3 eigenproblem. Points are centred and scaled
/// before fitting.
inline Ellipse fit_ellipse(std::span<const Vec2> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 6) throw FitError("ellipse fit needs at least 6 points");

  Vec2 mean;
  for (const auto& p : points) mean = mean + p;
  mean = mean * (1.0 / static_cast<double>(n));
  double scale = 0.0;
  for (const auto& p : points) scale = std::max(scale, norm(p - mean));
  if (!(scale > 0.0) || !std::isfinite(scale)) throw FitError("ellipse fit on coincident points");

  Eigen::MatrixXd quad(n, 3), lin(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = (points[static_cast<std::size_t>(i)].x - mean.x) / scale;
    const double y = (points[static_cast<std::size_t>(i)].y - mean.y) / scale;
    quad.row(i) << x * x, x * y, y * y;
    lin.row(i) << x, y, 1.0;
  }
  const Eigen::Matrix3d s1 = quad.transpose() * quad;
  const Eigen::Matrix3d s2 = quad.transpose() * lin;
  const Eigen::Matrix3d s3 = lin.transpose() * lin;

  Eigen::JacobiSVD<Eigen::Matrix3d> svd3(s3);
  const auto sv = svd3.singularValues();
  if (sv(2) <= 1e-12 * sv(0)) throw FitError("ellipse fit on collinear points");

  const Eigen::Matrix3d t = -s3.ldlt().solve(s2.transpose());
  Eigen::Matrix3d m = s1 + s2 * t;
  // Premultiply by the inverse of the constraint block [[0,0,2],[0,-1,0],[2,0,0]].
  Eigen::Matrix3d reduced;
  reduced.row(0) = m.row(2) / 2.0;
  reduced.row(1) = -m.row(1);
  reduced.row(2) = m.row(0) / 2.0;

  Eigen::EigenSolver<Eigen::Matrix3d> es(reduced);
  int best = -1;
  double best_cond = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (std::fabs(es.eigenvalues()(k).imag()) > 1e-9 * (1.0 + std::fabs(es.eigenvalues()(k).real()))) continue;
    const Eigen::Vector3d v = es.eigenvectors().col(k).real();
    const double cond = 4.0 * v(0) * v(2) - v(1) * v(1);
    if (cond > best_cond) {
      best_cond = cond;
      best = k;
    }
  }
  if (best < 0) throw FitError("no elliptical solution for the point set");

  const Eigen::Vector3d a1 = es.eigenvectors().col(best).real();
  const Eigen::Vector3d a2 = t * a1;
  const double A = a1(0), B = a1(1), C = a1(2), D = a2(0), E = a2(1), F = a2(2);

  const double den = B * B - 4.0 * A * C;
  if (!(den < 0.0)) throw FitError("fitted conic is not an ellipse");
  const double cx = (2.0 * C * D - B * E) / den;
  const double cy = (2.0 * A * E - B * D) / den;
  const double common = 2.0 * (A * E * E + C * D * D - B * D * E + den * F);
  const double root = std::sqrt((A - C) * (A - C) + B * B);
  const double qa = common * ((A + C) + root);
  const double qb = common * ((A + C) - root);
  if (!(qa > 0.0) || !(qb > 0.0)) throw FitError("fitted conic is imaginary");
  double a = -std::sqrt(qa) / den;
  double b = -std::sqrt(qb) / den;
  if (!(a > 0.0 && b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) throw FitError("degenerate ellipse fit");

  double phi = 0.5 * std::atan2(-B, C - A);
  if (b > a) {
    std::swap(a, b);
    phi += kPi / 2.0;
  }
  phi = std::fmod(phi, kPi);
  if (phi < 0.0) phi += kPi;

  return Ellipse{{cx * scale + mean.x, cy * scale + mean.y}, a * scale, b * scale, phi};
}

/// Normalized radial coordinate of `p` in the ellipse frame (1 on the curve).
inline double ellipse_radial(const Ellipse& e, Vec2 p) {
  const Vec2 d = p - e.center;
  const double c = std::cos(e.rotation), s = std::sin(e.rotation);
  const double u = c * d.x + s * d.y;
  const double v = -s * d.x + c * d.y;
  return std::hypot(u / e.semi_major, v / e.semi_minor);
}

inline std::vector<Vec2> ellipse_points(const Ellipse& e, int count) {
  std::vector<Vec2> out;
  const double c = std::cos(e.rotation), s = std::sin(e.rotation);
  for (int i = 0; i < count; ++i) {
    const double th = 2.0 * kPi * i / count;
    const double u = e.semi_major * std::cos(th), v = e.semi_minor * std::sin(th);
    out.push_back({e.center.x + c * u - s * v, e.center.y + s * u + c * v});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convex polygons

inline double signed_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

/// Convex polygon with positive shoelace orientation and positive area.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;

  /// Vertices must already be convex and positively oriented.
  explicit ConvexPolygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3) throw Error("convex polygon needs at least 3 vertices");
    area_ = signed_area(vertices_);
    if (!(area_ > 0.0)) throw Error("convex polygon must have positive orientation and area");
  }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  double area() const { return area_; }

  bool contains(Vec2 p) const {
    for (std::size_t i = 0, n = vertices_.size(); i < n; ++i)
      if (cross(vertices_[(i + 1) % n] - vertices_[i], p - vertices_[i]) < 0.0) return false;
    return true;
  }

 private:
  std::vector<Vec2> vertices_;
  double area_ = 0.0;
};

namespace detail {

// Andrew's monotone chain; returns positively oriented hull without
// collinear vertices (may have < 3 vertices for degenerate input).
inline std::vector<Vec2> monotone_chain(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const auto& p = pts[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace detail

/// Hull area below which the points are inflated before hulling.
inline double degenerate_hull_area(double buffer) { return 4.0 * buffer * buffer; }

/// Convex hull. When the plain hull has area below (2*buffer)^2 every point is
/// inflated to an axis-aligned square of side 2*buffer first, so thin or
/// single-point ink still yields a usable polygon.
inline ConvexPolygon convex_hull(std::span<const Vec2> points, double buffer) {
  if (points.empty()) throw EmptyInputError("convex hull of no points");
  if (!(buffer > 0.0)) throw Error("hull buffer must be positive");
  auto hull = detail::monotone_chain({points.begin(), points.end()});
  if (hull.size() >= 3 && signed_area(hull) >= degenerate_hull_area(buffer)) return ConvexPolygon(std::move(hull));
  std::vector<Vec2> inflated;
  inflated.reserve(points.size() * 4);
  for (const auto& p : points) {
    inflated.push_back({p.x - buffer, p.y - buffer});
    inflated.push_back({p.x + buffer, p.y - buffer});
    inflated.push_back({p.x + buffer, p.y + buffer});
    inflated.push_back({p.x - buffer, p.y + buffer});
  }
  return ConvexPolygon(detail::monotone_chain(std::move(inflated)));
}

/// Area of the intersection of two convex polygons (Sutherland-Hodgman).
inline double intersection_area(const ConvexPolygon& subject, const ConvexPolygon& clip) {
  std::vector<Vec2> out = subject.vertices();
  const auto& cv = clip.vertices();
  std::vector<Vec2> input;
  for (std::size_t e = 0, m = cv.size(); e < m && !out.empty(); ++e) {
    const Vec2 a = cv[e], b = cv[(e + 1) % m];
    const Vec2 dir = b - a;
    input.swap(out);
    out.clear();
    for (std::size_t i = 0, n = input.size(); i < n; ++i) {
      const Vec2 cur = input[i], prev = input[(i + n - 1) % n];
      const double dc = cross(dir, cur - a), dp = cross(dir, prev - a);
      if (dc >= 0.0) {
        if (dp < 0.0) out.push_back(prev + (cur - prev) * (dp / (dp - dc)));
        out.push_back(cur);
      } else if (dp >= 0.0) {
        out.push_back(prev + (cur - prev) * (dp / (dp - dc)));
      }
    }
  }
  if (out.size() < 3) return 0.0;
  return std::max(0.0, signed_area(out));
}

/// Symmetric hull overlap. Containment (intersection equal to the smaller
/// hull) yields smaller/larger area; otherwise the larger of the two
/// directional coverage fractions.
inline double hull_overlap(const ConvexPolygon& a, const ConvexPolygon& b) {
  const double aa = a.area(), ab = b.area();
  const double inter = std::min(intersection_area(a, b), std::min(aa, ab));
  const double lo = std::min(aa, ab), hi = std::max(aa, ab);
  if (inter >= lo - 1e-9 * hi) return lo / hi;
  return std::clamp(std::max(inter / aa, inter / ab), 0.0, 1.0);
}

// ---------------------------------------------------------------------------

inline std::vector<Vec2> positions(std::span<const PenPoint> pts) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(p.pos());
  return out;
}

/// Closure times ellipse-fit quality, both clamped to [0, 1].
inline double circularity(const Stroke& s) {
  if (s.points.size() < 6) return 0.0;
  const double len = s.path_length();
  if (!(len > 0.0)) return 0.0;
  const double gap = norm(s.points.back().pos() - s.points.front().pos());
  const double closure = std::clamp(1.0 - gap / len, 0.0, 1.0);
  const auto pts = positions(s.points);
  double fit = 0.0;
  try {
    const Ellipse e = fit_ellipse(pts);
    double ss = 0.0;
    for (const auto& p : pts) {
      const double r = ellipse_radial(e, p) - 1.0;
      ss += r * r;
    }
    fit = std::clamp(1.0 - std::sqrt(ss / static_cast<double>(pts.size())), 0.0, 1.0);
  } catch (const FitError&) {
    fit = 0.0;
  }
  return closure * fit;
}

}  // namespace clockst
