#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace clockst;
using namespace testing_support;

namespace {

const ClockGeometry kGeom = geometry_at({0, 0});

std::vector<SliceStats> flat_stats(std::size_t n) { return std::vector<SliceStats>(n, SliceStats{20.0, 1}); }

Vec2 ink_mean(const std::vector<Stroke>& ss) {
  double x = 0, y = 0;
  int n = 0;
  for (const auto& s : ss)
    for (const auto& p : s.points) {
      x += p.x;
      y += p.y;
      ++n;
    }
  return {x / n, y / n};
}

// Numeral ink recentred on `to`, shifted in time, ids renumbered from id0.
std::vector<Stroke> placed(std::vector<Stroke> ss, Vec2 to, std::int64_t dt, int id0) {
  const Vec2 c = ink_mean(ss);
  for (auto& s : ss) {
    s.id = id0++;
    for (auto& p : s.points) {
      p.x += to.x - c.x;
      p.y += to.y - c.y;
      p.t += dt;
    }
  }
  return ss;
}

const std::vector<NumeralSample>& numerals() {
  static const auto s = sample_numerals(synth_preset("healthy"), 1, 555);
  return s;
}

std::vector<Stroke> numeral(int label, Vec2 to, std::int64_t dt, int id0) {
  return placed(numerals()[static_cast<std::size_t>(label - 1)].strokes, to, dt, id0);
}

std::multiset<int> ids_of(const std::vector<STSlice>& slices) {
  std::multiset<int> out;
  for (const auto& s : slices)
    for (int id : s.stroke_ids()) out.insert(id);
  return out;
}

}  // namespace

TEST(FindValleys, SingleDipPairsWithWeakerNeighbour) {
  const std::vector<double> scores{0.9, 0.5, 0.9};
  const auto scan = find_valleys(scores, flat_stats(3));
  ASSERT_EQ(scan.valleys.size(), 1u);
  EXPECT_EQ(scan.valleys[0].kind, ValleyKind::over);
  // equal neighbours: the preceding one wins
  EXPECT_EQ(scan.valleys[0].site, (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(scan.valleys[0].neighbor_score, 0.9);
}

TEST(FindValleys, ShallowDipIsNotAValley) {
  const std::vector<double> scores{0.9, 0.8, 0.9};
  EXPECT_TRUE(find_valleys(scores, flat_stats(3)).valleys.empty());
  // 0.63 is exactly 0.7 x 0.9
  const std::vector<double> edge{0.9, 0.63, 0.9};
  EXPECT_EQ(find_valleys(edge, flat_stats(3)).valleys.size(), 1u);
}

TEST(FindValleys, TooFewSlices) {
  const std::vector<double> two{0.9, 0.1};
  EXPECT_TRUE(find_valleys(two, flat_stats(2)).valleys.empty());
  EXPECT_TRUE(find_valleys(std::vector<double>{}, flat_stats(0)).valleys.empty());
}

TEST(FindValleys, LowPairBetweenHighNeighbours) {
  const std::vector<double> scores{0.9, 0.4, 0.4, 0.9, 0.9};
  const auto scan = find_valleys(scores, flat_stats(5));
  ASSERT_EQ(scan.valleys.size(), 1u);
  EXPECT_EQ(scan.valleys[0].kind, ValleyKind::over);
  EXPECT_EQ(scan.valleys[0].site, (std::vector<int>{1, 2}));
  // a pair needs two outer neighbours distinct from itself
  const std::vector<double> three{0.9, 0.4, 0.4};
  for (const auto& v : find_valleys(three, flat_stats(3)).valleys) EXPECT_NE(v.site, (std::vector<int>{1, 2}));
}

TEST(FindValleys, WideStrokeHeavySliceIsUnderSegmented) {
  const std::vector<double> scores{0.9, 0.3, 0.9, 0.9, 0.9, 0.9};
  auto stats = flat_stats(6);
  stats[1] = {60.0, 5};
  const auto scan = find_valleys(scores, stats);
  ASSERT_EQ(scan.valleys.size(), 1u);
  EXPECT_EQ(scan.valleys[0].kind, ValleyKind::under);
  EXPECT_EQ(scan.valleys[0].site, std::vector<int>{1});
}

TEST(FindValleys, AnyModeNeedsOnlyOneLowSide) {
  // 0.6 is below 0.7 x 0.9 but not below 0.7 x 0.8
  const std::vector<double> scores{0.9, 0.6, 0.8};
  EXPECT_TRUE(find_valleys(scores, flat_stats(3), ValleyMode::both).valleys.empty());
  EXPECT_EQ(find_valleys(scores, flat_stats(3), ValleyMode::any).valleys.size(), 1u);
  EXPECT_THROW(valley_mode_from_string("some"), Error);
}

TEST(FindValleys, SortedByNeighbourScoreAndSitesInRange) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 3 + trial % 12;
    std::vector<double> scores;
    std::vector<SliceStats> stats;
    for (std::size_t i = 0; i < n; ++i) {
      scores.push_back(u(rng));
      stats.push_back({5.0 + 40.0 * u(rng), static_cast<std::size_t>(1 + 4 * u(rng))});
    }
    const auto scan = find_valleys(scores, stats);
    for (std::size_t k = 1; k < scan.valleys.size(); ++k)
      ASSERT_GE(scan.valleys[k - 1].neighbor_score, scan.valleys[k].neighbor_score);
    for (const auto& v : scan.valleys) {
      ASSERT_EQ(v.site.size(), v.kind == ValleyKind::under ? 1u : 2u);
      for (int p : v.site) ASSERT_LT(static_cast<std::size_t>(p), n);
      if (v.site.size() == 2) {
        ASSERT_EQ(static_cast<std::size_t>(v.site[1]), (v.site[0] + 1) % n);
      }
    }
  }
}

TEST(RepairUnderseg, TwoOverwrittenByFour) {
  // A "2", then a "4" written on top of it 20 s later, in one slice.
  const Vec2 p = at_bearing({0, 0}, 60, 78);
  auto strokes = numeral(2, p, 0, 0);
  const auto four = numeral(4, p, 20000, static_cast<int>(strokes.size()));
  strokes.insert(strokes.end(), four.begin(), four.end());
  const std::vector<STSlice> slices{make_slice(strokes, kGeom, 0)};
  const auto r = repair_underseg(slices, 0, kGeom, template_recognizer());
  ASSERT_TRUE(r.changed);
  EXPECT_GT(r.best_partition_score, r.whole_score);
  ASSERT_EQ(r.slices.size(), 1u);
  EXPECT_EQ(r.slices[0].stroke_ids(), (std::vector<int>{1, 2}));
  EXPECT_EQ(template_recognizer().recognize(r.slices[0].strokes).best_label, 4);
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].stroke_ids(), std::vector<int>{0});
}

TEST(RepairUnderseg, CleanNumeralIsLeftAlone) {
  const std::vector<STSlice> four{make_slice(numeral(4, at_bearing({0, 0}, 120, 78), 0, 0), kGeom, 0)};
  ASSERT_EQ(four[0].size(), 2u);
  const auto r = repair_underseg(four, 0, kGeom, template_recognizer());
  EXPECT_FALSE(r.changed);
  EXPECT_EQ(r.slices[0].stroke_ids(), four[0].stroke_ids());
  // single strokes cannot be split
  const std::vector<STSlice> seven{make_slice(numeral(7, at_bearing({0, 0}, 210, 78), 0, 0), kGeom, 0)};
  EXPECT_FALSE(repair_underseg(seven, 0, kGeom, template_recognizer()).changed);
}

TEST(RepairOverseg, SplitFiveIsMerged) {
  const auto five = numeral(5, at_bearing({0, 0}, 150, 78), 0, 0);
  ASSERT_EQ(five.size(), 2u);
  const std::vector<STSlice> slices{make_slice({five[0]}, kGeom, 0), make_slice({five[1]}, kGeom, 1)};
  const auto r = repair_overseg(slices, 0, 1, kGeom, template_recognizer());
  ASSERT_TRUE(r.changed);
  EXPECT_GT(r.merged_score, r.separate_score);
  ASSERT_EQ(r.slices.size(), 1u);
  EXPECT_EQ(template_recognizer().recognize(r.slices[0].strokes).best_label, 5);
}

TEST(RepairOverseg, DistinctNumeralsStaySeparate) {
  const std::vector<STSlice> slices{make_slice(numeral(1, at_bearing({0, 0}, 30, 78), 0, 0), kGeom, 0),
                                    make_slice(numeral(2, at_bearing({0, 0}, 60, 78), 5000, 10), kGeom, 1)};
  const auto r = repair_overseg(slices, 0, 1, kGeom, template_recognizer());
  EXPECT_FALSE(r.changed);
  EXPECT_EQ(r.slices.size(), 2u);
  EXPECT_FALSE(repair_overseg(slices, 1, 1, kGeom, template_recognizer()).changed);
}

TEST(RepairLoop, CleanClocksAreNotChanged) {
  const auto& m = small_models();
  for (const auto& ld : corpus("healthy", 15, 71)) {
    const auto g = estimate_geometry(ld.drawing);
    const auto [slices, labels] = gold_slices(ld, g);
    const auto r = repair_loop(slices, g, m.crf, m.recognizer);
    for (const auto& rec : r.log) EXPECT_FALSE(rec.accepted);
    EXPECT_EQ(r.slices.size(), slices.size());
    EXPECT_TRUE(r.dropped.empty());
  }
}

TEST(RepairLoop, DisabledOrTinyInputsPassThrough) {
  const auto& m = small_models();
  const auto ld = corpus("repair", 1, 72)[0];
  const auto g = estimate_geometry(ld.drawing);
  const auto [slices, labels] = gold_slices(ld, g);
  RepairConfig off;
  off.enabled = false;
  const auto r = repair_loop(slices, g, m.crf, m.recognizer, off);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.slices.size(), slices.size());
  const std::vector<STSlice> two(slices.begin(), slices.begin() + 2);
  EXPECT_EQ(repair_loop(two, g, m.crf, m.recognizer).iterations, 0);
}

TEST(RepairLoop, TerminatesImprovesAndConservesStrokes) {
  const auto& m = small_models();
  int accepted = 0;
  for (const char* preset : {"repair", "impaired", "overwrite"})
    for (const auto& ld : corpus(preset, 15, 73)) {
      const auto g = estimate_geometry(ld.drawing);
      const auto part = extract_digit_cluster(ld.drawing, g);
      const auto slices = segment(strokes_by_id(ld.drawing, part.digit_strokes), m.segmenter, g);
      const auto r = repair_loop(slices, g, m.crf, m.recognizer);
      EXPECT_LE(r.iterations, 2 * static_cast<int>(slices.size()));
      double last = label_slices(m.crf, slices).mean_map_posterior();
      for (const auto& rec : r.log)
        if (rec.accepted) {
          ++accepted;
          EXPECT_GT(rec.after, rec.before + 1e-6);
          EXPECT_NEAR(rec.before, last, 1e-12);
          last = rec.after;
        }
      EXPECT_NEAR(r.labeling.mean_map_posterior(), last, 1e-12);
      auto all = ids_of(r.slices);
      for (int id : ids_of(r.dropped)) all.insert(id);
      EXPECT_EQ(all, ids_of(slices));
      ASSERT_EQ(r.labeling.labels.size(), r.slices.size());
    }
  EXPECT_GT(accepted, 0);
}
