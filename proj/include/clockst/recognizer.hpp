#pragma once

// Isolated numeral recognizer. Ink is rendered into five 24x24 feature
// images (four soft-binned stroke orientations plus stroke endpoints) and
// scored against stored exemplars by nearest-exemplar distance.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clockst/error.hpp"
#include "clockst/model.hpp"

namespace clockst {

inline constexpr int kGrid = 24;
inline constexpr int kChannels = 5;
inline constexpr int kFeatureLength = kChannels * kGrid * kGrid;  // 2880

/// Flattened as [channel][row][col]. Channels: 0, 45, 90, 135 degrees, endpoints.
struct FeatureImages {
  std::vector<double> values = std::vector<double>(kFeatureLength, 0.0);

  double at(int channel, int row, int col) const { return values[index(channel, row, col)]; }
  double& at(int channel, int row, int col) { return values[index(channel, row, col)]; }
  static std::size_t index(int channel, int row, int col) {
    return static_cast<std::size_t>((channel * kGrid + row) * kGrid + col);
  }
  double channel_sum(int channel) const {
    double s = 0.0;
    for (int r = 0; r < kGrid; ++r)
      for (int c = 0; c < kGrid; ++c) s += at(channel, r, c);
    return s;
  }

  /// 2x2 average pooling of every channel: 5 x 12 x 12 = 720 values.
  std::vector<double> downsampled() const {
    constexpr int h = kGrid / 2;
    std::vector<double> out(static_cast<std::size_t>(kChannels * h * h));
    for (int ch = 0; ch < kChannels; ++ch)
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < h; ++c)
          out[static_cast<std::size_t>((ch * h + r) * h + c)] =
              0.25 * (at(ch, 2 * r, 2 * c) + at(ch, 2 * r + 1, 2 * c) + at(ch, 2 * r, 2 * c + 1) + at(ch, 2 * r + 1, 2 * c + 1));
    return out;
  }
};

namespace detail {

inline void splat(FeatureImages& img, int channel, double u, double v, double amount) {
  // (u, v) are continuous cell coordinates; cell centres sit at integer + 0.5.
  const double fu = u - 0.5, fv = v - 0.5;
  const int c0 = static_cast<int>(std::floor(fu)), r0 = static_cast<int>(std::floor(fv));
  const double ac = fu - c0, ar = fv - r0;
  for (int dr = 0; dr < 2; ++dr)
    for (int dc = 0; dc < 2; ++dc) {
      const int r = r0 + dr, c = c0 + dc;
      if (r < 0 || r >= kGrid || c < 0 || c >= kGrid) continue;
      const double wgt = (dr ? ar : 1.0 - ar) * (dc ? ac : 1.0 - ac);
      img.at(channel, r, c) += amount * wgt;
    }
}

inline std::array<double, 7> gaussian_kernel() {
  std::array<double, 7> k{};
  double s = 0.0;
  for (int i = -3; i <= 3; ++i) {
    k[static_cast<std::size_t>(i + 3)] = std::exp(-0.5 * i * i);
    s += k[static_cast<std::size_t>(i + 3)];
  }
  for (auto& v : k) v /= s;
  return k;
}

inline void smooth_channel(FeatureImages& img, int ch) {
  static const auto k = gaussian_kernel();
  std::array<double, kGrid * kGrid> tmp{};
  for (int r = 0; r < kGrid; ++r)
    for (int c = 0; c < kGrid; ++c) {
      double s = 0.0;
      for (int d = -3; d <= 3; ++d) {
        const int cc = c + d;
        if (cc >= 0 && cc < kGrid) s += k[static_cast<std::size_t>(d + 3)] * img.at(ch, r, cc);
      }
      tmp[static_cast<std::size_t>(r * kGrid + c)] = s;
    }
  for (int r = 0; r < kGrid; ++r)
    for (int c = 0; c < kGrid; ++c) {
      double s = 0.0;
      for (int d = -3; d <= 3; ++d) {
        const int rr = r + d;
        if (rr >= 0 && rr < kGrid) s += k[static_cast<std::size_t>(d + 3)] * tmp[static_cast<std::size_t>(rr * kGrid + c)];
      }
      img.at(ch, r, c) = s;
    }
}

}  // namespace detail

/// Renders ink into feature images. The bounding box's longer side maps to
/// 20 cells, centred in the 24x24 grid; orientation is soft-binned between
/// the two nearest of 0/45/90/135 degrees; each channel is smoothed
/// (sigma = 1 cell) and rescaled to a maximum of 1.
inline FeatureImages extract_features(std::span<const Stroke> strokes) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  std::size_t npts = 0;
  for (const auto& s : strokes)
    for (const auto& p : s.points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
      ++npts;
    }
  if (npts == 0) throw EmptyInputError("cannot extract features from empty ink");

  const double extent = std::max(x1 - x0, y1 - y0);
  const double scale = extent > 0.0 ? 20.0 / extent : 1.0;
  const double off_u = 2.0 + 0.5 * (20.0 - (x1 - x0) * scale);
  const double off_v = 2.0 + 0.5 * (20.0 - (y1 - y0) * scale);
  auto to_grid = [&](const PenPoint& p) { return Vec2{off_u + (p.x - x0) * scale, off_v + (p.y - y0) * scale}; };

  FeatureImages img;
  for (const auto& s : strokes) {
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      const Vec2 a = to_grid(s.points[i - 1]), b = to_grid(s.points[i]);
      const Vec2 d = b - a;
      const double len = norm(d);
      if (len <= 1e-12) continue;
      double theta = std::atan2(d.y, d.x) * 180.0 / 3.14159265358979323846;
      theta = std::fmod(theta + 360.0, 180.0);  // undirected orientation
      const double bin = theta / 45.0;
      const int lo = static_cast<int>(std::floor(bin)) % 4;
      const int hi = (lo + 1) % 4;
      const double frac = bin - std::floor(bin);
      const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
      const double amount = len / steps;
      for (int k = 0; k < steps; ++k) {
        const Vec2 q = a + d * ((k + 0.5) / steps);
        detail::splat(img, lo, q.x, q.y, amount * (1.0 - frac));
        detail::splat(img, hi, q.x, q.y, amount * frac);
      }
    }
    const Vec2 first = to_grid(s.points.front()), last = to_grid(s.points.back());
    detail::splat(img, 4, first.x, first.y, 1.0);
    detail::splat(img, 4, last.x, last.y, 1.0);
  }
  for (int ch = 0; ch < kChannels; ++ch) {
    detail::smooth_channel(img, ch);
    double mx = 0.0;
    for (int r = 0; r < kGrid; ++r)
      for (int c = 0; c < kGrid; ++c) mx = std::max(mx, img.at(ch, r, c));
    if (mx > 1e-12) {
      for (int r = 0; r < kGrid; ++r)
        for (int c = 0; c < kGrid; ++c) img.at(ch, r, c) = std::clamp(img.at(ch, r, c) / mx, 0.0, 1.0);
    } else {
      for (int r = 0; r < kGrid; ++r)
        for (int c = 0; c < kGrid; ++c) img.at(ch, r, c) = 0.0;
    }
  }
  return img;
}

// ---------------------------------------------------------------------------

struct ScoreVector {
  std::array<double, kNumNumerals> scores{};
  int best_label = 1;
  double best_score = 0.0;
};

struct RecognizerConfig {
  double tau_scale = 0.1;  // tau = tau_scale * mean nearest-neighbour distance
};

struct RecognizerExample {
  std::vector<Stroke> strokes;
  int label = 0;
};

class RecognizerModel {
 public:
  RecognizerModel() = default;

  std::size_t size() const { return labels_.size(); }
  double tau() const { return tau_; }
  double tau_scale() const { return tau_scale_; }
  double mean_nn_distance() const { return mean_nn_; }
  const std::vector<RecognizerExample>& examples() const { return examples_; }

  /// Class distance = nearest exemplar; scores = softmax(-distance / tau).
  ScoreVector recognize(std::span<const Stroke> strokes) const {
    if (labels_.empty()) throw Error("recognizer is not trained");
    const auto f = extract_features(strokes);
    return recognize_features(f);
  }

  /// Distance from `f` to the nearest exemplar of each class.
  std::array<double, kNumNumerals> class_distances(const FeatureImages& f) const {
    const Eigen::Map<const Eigen::VectorXd> x(f.values.data(), kFeatureLength);
    const Eigen::VectorXd d2 = (sq_norms_.array() - 2.0 * (exemplars_ * x).array() + x.squaredNorm()).max(0.0);
    std::array<double, kNumNumerals> dist;
    dist.fill(std::numeric_limits<double>::infinity());
    for (Eigen::Index i = 0; i < d2.size(); ++i) {
      auto& slot = dist[static_cast<std::size_t>(labels_[static_cast<std::size_t>(i)] - 1)];
      slot = std::min(slot, std::sqrt(d2(i)));
    }
    return dist;
  }

  ScoreVector recognize_features(const FeatureImages& f) const {
    const auto dist = class_distances(f);
    const double dmin = *std::min_element(dist.begin(), dist.end());
    ScoreVector out;
    double z = 0.0;
    for (std::size_t c = 0; c < dist.size(); ++c) {
      out.scores[c] = std::exp(-(dist[c] - dmin) / tau_);
      z += out.scores[c];
    }
    for (auto& v : out.scores) v /= z;
    out.best_label = 1;
    out.best_score = out.scores[0];
    for (std::size_t c = 1; c < out.scores.size(); ++c)
      if (out.scores[c] > out.best_score) {
        out.best_score = out.scores[c];
        out.best_label = static_cast<int>(c) + 1;
      }
    return out;
  }

  friend RecognizerModel train_recognizer(std::vector<RecognizerExample> examples, const RecognizerConfig& cfg);

 private:
  std::vector<RecognizerExample> examples_;
  std::vector<int> labels_;
  Eigen::MatrixXd exemplars_;
  Eigen::VectorXd sq_norms_;
  double tau_ = 1.0;
  double tau_scale_ = 0.1;
  double mean_nn_ = 0.0;
};

inline RecognizerModel train_recognizer(std::vector<RecognizerExample> examples, const RecognizerConfig& cfg = {}) {
  std::set<int> present;
  for (const auto& e : examples) {
    if (e.label < 1 || e.label > kNumNumerals) throw TrainingError("recognizer label out of range: " + std::to_string(e.label));
    present.insert(e.label);
  }
  std::string missing;
  for (int c = 1; c <= kNumNumerals; ++c)
    if (!present.count(c)) missing += (missing.empty() ? "" : ", ") + std::to_string(c);
  if (!missing.empty()) throw TrainingError("recognizer training data lacks class(es): " + missing);
  if (!(cfg.tau_scale > 0.0)) throw TrainingError("tau_scale must be positive");

  RecognizerModel m;
  const auto n = static_cast<Eigen::Index>(examples.size());
  m.exemplars_.resize(n, kFeatureLength);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto f = extract_features(examples[static_cast<std::size_t>(i)].strokes);
    m.exemplars_.row(i) = Eigen::Map<const Eigen::RowVectorXd>(f.values.data(), kFeatureLength);
    m.labels_.push_back(examples[static_cast<std::size_t>(i)].label);
  }
  m.sq_norms_ = m.exemplars_.rowwise().squaredNorm();

  double sum = 0.0;
  if (n > 1) {
    const Eigen::MatrixXd gram = m.exemplars_ * m.exemplars_.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        best = std::min(best, m.sq_norms_(i) + m.sq_norms_(j) - 2.0 * gram(i, j));
      }
      sum += std::sqrt(std::max(best, 0.0));
    }
    m.mean_nn_ = sum / static_cast<double>(n);
  }
  m.tau_scale_ = cfg.tau_scale;
  m.tau_ = m.mean_nn_ > 1e-9 ? cfg.tau_scale * m.mean_nn_ : cfg.tau_scale;
  m.examples_ = std::move(examples);
  return m;
}

/// The exemplar strokes are stored; feature images are recomputed on load.
inline json recognizer_to_json(const RecognizerModel& m) {
  json j;
  j["format"] = kFileFormat;
  j["kind"] = "recognizer";
  j["tau_scale"] = m.tau_scale();
  json ex = json::array();
  for (const auto& e : m.examples()) {
    json strokes = json::array();
    for (const auto& s : e.strokes) strokes.push_back(stroke_points_to_json(s));
    ex.push_back({{"label", e.label}, {"strokes", std::move(strokes)}});
  }
  j["exemplars"] = std::move(ex);
  return j;
}

inline RecognizerModel recognizer_from_json(const json& j) {
  detail::check_format(j, "recognizer model");
  if (j.value("kind", "") != "recognizer") throw ParseError("not a recognizer model");
  std::vector<RecognizerExample> ex;
  RecognizerConfig cfg;
  try {
    cfg.tau_scale = j.at("tau_scale").get<double>();
    for (const auto& e : j.at("exemplars")) {
      RecognizerExample r;
      r.label = e.at("label").get<int>();
      int id = 0;
      for (const auto& s : e.at("strokes")) r.strokes.push_back({id++, stroke_points_from_json(s, static_cast<std::size_t>(id))});
      ex.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("recognizer model: ") + e.what());
  }
  return train_recognizer(std::move(ex), cfg);
}

}  // namespace clockst
