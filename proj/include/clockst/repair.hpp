#pragma once

// Segmentation repair driven by dips ("valleys") in the CRF's per-slice MAP
// posterior. Wide, stroke-heavy single valleys are split (under-segmentation);
// low pairs of neighbours are merged (over-segmentation). A repair is kept
// only if the CRF's mean MAP posterior over the revised slices goes up.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clockst/crf.hpp"
#include "clockst/geometry.hpp"
#include "clockst/recognizer.hpp"
#include "clockst/stslice.hpp"

namespace clockst {

enum class ValleyKind { under, over };
enum class ValleyMode { both, any };

inline std::string to_string(ValleyKind k) { return k == ValleyKind::under ? "under" : "over"; }
inline std::string to_string(ValleyMode m) { return m == ValleyMode::both ? "both" : "any"; }

inline ValleyMode valley_mode_from_string(const std::string& s) {
  if (s == "both") return ValleyMode::both;
  if (s == "any") return ValleyMode::any;
  throw Error("unknown valley mode '" + s + "' (expected both|any)");
}

/// Positions refer to the circular order the scores were given in.
struct Valley {
  std::vector<int> site;        // one position (under) or two consecutive positions (over)
  std::vector<double> scores;   // trigger scores at the site
  double neighbor_score = 0.0;  // best score adjacent to the site; drives ordering
  ValleyKind kind = ValleyKind::over;
};

struct SliceStats {
  double angular_width = 0.0;
  std::size_t strokes = 0;
};

struct ValleyScan {
  std::vector<Valley> valleys;
  std::vector<int> skipped;  // single valleys that could not be given a repair
};

namespace detail {

inline std::pair<double, double> mean_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / n)};
}

}  // namespace detail

/// `scores` and `stats` are in circular (angular) order. Valleys come back
/// sorted by neighbour score, highest first.
inline ValleyScan find_valleys(std::span<const double> scores, std::span<const SliceStats> stats,
                               ValleyMode mode = ValleyMode::both, double ratio = 0.7) {
  ValleyScan out;
  const int n = static_cast<int>(scores.size());
  if (n < 3) return out;
  if (stats.size() != scores.size()) throw DimensionError("valley stats and scores differ in length");
  auto at = [&](int i) { return scores[static_cast<std::size_t>(((i % n) + n) % n)]; };
  auto wrap = [&](int i) { return ((i % n) + n) % n; };
  auto low = [&](double s, double a, double b) {
    const bool la = s <= ratio * a, lb = s <= ratio * b;
    return mode == ValleyMode::both ? (la && lb) : (la || lb);
  };

  std::vector<double> widths, counts;
  for (const auto& s : stats) {
    widths.push_back(s.angular_width);
    counts.push_back(static_cast<double>(s.strokes));
  }
  const auto [wm, wsd] = detail::mean_sd(widths);
  const auto [cm, csd] = detail::mean_sd(counts);

  std::vector<std::pair<int, int>> pairs;
  auto add_pair = [&](int i) {
    const int a = wrap(i), b = wrap(i + 1);
    for (const auto& p : pairs)
      if (p.first == a) return false;
    pairs.push_back({a, b});
    out.valleys.push_back({{a, b}, {at(a), at(b)}, std::max(at(a - 1), at(b + 1)), ValleyKind::over});
    return true;
  };

  if (n >= 4)
    for (int i = 0; i < n; ++i) {
      const double outer_l = at(i - 1), outer_r = at(i + 2);
      if (low(at(i), outer_l, outer_r) && low(at(i + 1), outer_l, outer_r)) add_pair(i);
    }

  for (int i = 0; i < n; ++i) {
    if (!low(at(i), at(i - 1), at(i + 1))) continue;
    const auto& st = stats[static_cast<std::size_t>(i)];
    const bool wide = st.angular_width > wm + wsd && static_cast<double>(st.strokes) > cm + csd;
    if (wide && st.strokes >= 2) {
      out.valleys.push_back({{i}, {at(i)}, std::max(at(i - 1), at(i + 1)), ValleyKind::under});
      continue;
    }
    // Pair with the weaker neighbour; ties go to the preceding one.
    const int partner_start = at(i - 1) <= at(i + 1) ? i - 1 : i;
    bool covered = false;
    for (const auto& p : pairs)
      covered = covered || p.first == wrap(i) || p.second == wrap(i);
    if (covered || !add_pair(partner_start)) out.skipped.push_back(i);
  }

  std::stable_sort(out.valleys.begin(), out.valleys.end(),
                   [](const Valley& a, const Valley& b) { return a.neighbor_score > b.neighbor_score; });
  return out;
}

// ---------------------------------------------------------------------------
// Under-segmentation: best chronological partition of one slice

struct UndersegOutcome {
  bool changed = false;
  std::vector<STSlice> slices;   // full revised list (unchanged copy when !changed)
  std::vector<STSlice> dropped;  // parts removed as overwritten
  double whole_score = 0.0;
  double best_partition_score = 0.0;
};

namespace detail {

/// Cut positions k mean "cut between stroke k and k+1".
inline std::vector<int> candidate_cuts(const STSlice& s, int max_strokes) {
  const int m = static_cast<int>(s.size());
  std::vector<int> cuts(static_cast<std::size_t>(m - 1));
  std::iota(cuts.begin(), cuts.end(), 0);
  if (m <= max_strokes) return cuts;
  auto gap = [&](int k) {
    return s.strokes[static_cast<std::size_t>(k + 1)].start_time() - s.strokes[static_cast<std::size_t>(k)].end_time();
  };
  std::stable_sort(cuts.begin(), cuts.end(), [&](int a, int b) { return gap(a) > gap(b); });
  cuts.resize(static_cast<std::size_t>(max_strokes - 1));
  std::sort(cuts.begin(), cuts.end());
  return cuts;
}

}  // namespace detail

inline UndersegOutcome repair_underseg(const std::vector<STSlice>& slices, std::size_t index, const ClockGeometry& g,
                                       const RecognizerModel& recognizer, double theta1 = 0.60, int max_strokes = 12) {
  UndersegOutcome out;
  out.slices = slices;
  const STSlice& s = slices.at(index);
  const int m = static_cast<int>(s.size());
  if (m < 2) return out;
  out.whole_score = recognizer.recognize(s.strokes).best_score;

  std::map<std::pair<int, int>, double> memo;  // [a, b) stroke range -> best_score
  auto part_score = [&](int a, int b) {
    auto it = memo.find({a, b});
    if (it != memo.end()) return it->second;
    std::span<const Stroke> part(s.strokes.data() + a, static_cast<std::size_t>(b - a));
    const double v = recognizer.recognize(part).best_score;
    memo[{a, b}] = v;
    return v;
  };

  const auto cuts = detail::candidate_cuts(s, max_strokes);
  const int c = static_cast<int>(cuts.size());
  double best = -1.0;
  std::vector<std::pair<int, int>> best_parts;
  for (std::uint32_t mask = 1; mask < (1u << c); ++mask) {
    std::vector<std::pair<int, int>> parts;
    int start = 0;
    for (int k = 0; k < c; ++k)
      if (mask & (1u << k)) {
        parts.push_back({start, cuts[static_cast<std::size_t>(k)] + 1});
        start = cuts[static_cast<std::size_t>(k)] + 1;
      }
    parts.push_back({start, m});
    double sum = 0.0;
    for (const auto& [a, b] : parts) sum += part_score(a, b);
    const double mean = sum / static_cast<double>(parts.size());
    if (mean > best) {
      best = mean;
      best_parts = std::move(parts);
    }
  }
  out.best_partition_score = best;
  if (!(best > out.whole_score)) return out;

  std::vector<STSlice> parts;
  for (const auto& [a, b] : best_parts)
    parts.push_back(make_slice(std::vector<Stroke>(s.strokes.begin() + a, s.strokes.begin() + b), g, s.layer));
  const double buf = g.hull_buffer();
  std::vector<bool> alive(parts.size(), true);
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (std::size_t j = i + 1; j < parts.size() && alive[i]; ++j)
      if (overlap(parts[i], parts[j], buf) > theta1) alive[i] = false;

  std::vector<STSlice> kept;
  for (std::size_t i = 0; i < parts.size(); ++i) (alive[i] ? kept : out.dropped).push_back(parts[i]);
  out.slices.erase(out.slices.begin() + static_cast<std::ptrdiff_t>(index));
  out.slices.insert(out.slices.begin() + static_cast<std::ptrdiff_t>(index), kept.begin(), kept.end());
  out.changed = true;
  return out;
}

// ---------------------------------------------------------------------------
// Over-segmentation: merge two neighbouring slices

struct OversegOutcome {
  bool changed = false;
  std::vector<STSlice> slices;
  double separate_score = 0.0;  // mean of the two best_scores
  double merged_score = 0.0;
};

inline OversegOutcome repair_overseg(const std::vector<STSlice>& slices, std::size_t i, std::size_t j,
                                     const ClockGeometry& g, const RecognizerModel& recognizer) {
  OversegOutcome out;
  out.slices = slices;
  if (i == j) return out;
  const auto& a = slices.at(i);
  const auto& b = slices.at(j);
  out.separate_score = 0.5 * (recognizer.recognize(a.strokes).best_score + recognizer.recognize(b.strokes).best_score);
  STSlice merged = merge(a, b, g);
  out.merged_score = recognizer.recognize(merged.strokes).best_score;
  if (!(out.merged_score > out.separate_score)) return out;
  const std::size_t lo = std::min(i, j), hi = std::max(i, j);
  out.slices[lo] = std::move(merged);
  out.slices.erase(out.slices.begin() + static_cast<std::ptrdiff_t>(hi));
  out.changed = true;
  return out;
}

// ---------------------------------------------------------------------------
// Loop

struct RepairRecord {
  int iteration = 0;
  ValleyKind kind = ValleyKind::over;
  std::vector<std::vector<int>> site;  // stroke ids of each slice at the site
  double before = 0.0;                 // mean MAP posterior before
  double after = 0.0;                  // mean MAP posterior with the repair applied
  bool accepted = false;
  std::string note;
};

struct RepairConfig {
  bool enabled = true;
  ValleyMode valley_mode = ValleyMode::both;
  double valley_ratio = 0.7;
  double epsilon = 1e-6;
  int max_partition_strokes = 12;
  double theta1 = 0.60;
};

struct RepairResult {
  std::vector<STSlice> slices;
  SliceLabeling labeling;
  std::vector<RepairRecord> log;
  std::vector<STSlice> dropped;  // overwritten parts removed while splitting
  int iterations = 0;
};

inline RepairResult repair_loop(std::vector<STSlice> slices, const ClockGeometry& g, const CrfModel& crf,
                                const RecognizerModel& recognizer, const RepairConfig& cfg = {}) {
  RepairResult res;
  res.labeling = label_slices(crf, slices);
  res.slices = std::move(slices);
  if (!cfg.enabled || res.slices.size() < 3) return res;
  const int cap = 2 * static_cast<int>(res.slices.size());

  while (res.iterations < cap) {
    const auto& order = res.labeling.chain_order;
    std::vector<double> scores;
    std::vector<SliceStats> stats;
    for (int k : order) {
      scores.push_back(res.labeling.map_posterior[static_cast<std::size_t>(k)]);
      const auto& s = res.slices[static_cast<std::size_t>(k)];
      stats.push_back({s.angular_width, s.size()});
    }
    const auto scan = find_valleys(scores, stats, cfg.valley_mode, cfg.valley_ratio);
    if (scan.valleys.empty()) break;

    const double before = res.labeling.mean_map_posterior();
    bool accepted = false;
    for (const auto& v : scan.valleys) {
      if (res.iterations >= cap) break;
      ++res.iterations;
      RepairRecord rec;
      rec.iteration = res.iterations;
      rec.kind = v.kind;
      rec.before = before;
      rec.after = before;
      std::vector<std::size_t> idx;
      for (int p : v.site) {
        idx.push_back(static_cast<std::size_t>(order[static_cast<std::size_t>(p)]));
        rec.site.push_back(res.slices[idx.back()].stroke_ids());
      }

      std::vector<STSlice> candidate;
      std::vector<STSlice> dropped;
      if (v.kind == ValleyKind::under) {
        auto o = repair_underseg(res.slices, idx[0], g, recognizer, cfg.theta1, cfg.max_partition_strokes);
        if (!o.changed) {
          rec.note = "no partition beats the whole slice";
          res.log.push_back(std::move(rec));
          continue;
        }
        candidate = std::move(o.slices);
        dropped = std::move(o.dropped);
      } else {
        auto o = repair_overseg(res.slices, idx[0], idx[1], g, recognizer);
        if (!o.changed) {
          rec.note = "merged slice scores below the separate slices";
          res.log.push_back(std::move(rec));
          continue;
        }
        candidate = std::move(o.slices);
      }
      if (candidate.empty()) {
        rec.note = "repair would leave no slices";
        res.log.push_back(std::move(rec));
        continue;
      }
      auto labeling = label_slices(crf, candidate);
      rec.after = labeling.mean_map_posterior();
      if (rec.after > before + cfg.epsilon) {
        rec.accepted = true;
        res.slices = std::move(candidate);
        res.labeling = std::move(labeling);
        res.dropped.insert(res.dropped.end(), dropped.begin(), dropped.end());
        res.log.push_back(std::move(rec));
        accepted = true;
        break;
      }
      rec.note = "CRF mean posterior did not improve";
      res.log.push_back(std::move(rec));
    }
    if (!accepted) break;
  }
  return res;
}

}  // namespace clockst
