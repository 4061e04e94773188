#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace clockst;
using namespace testing_support;

namespace {

const ClockGeometry kGeom = geometry_at({0, 0});

STSlice square_slice(int id, Vec2 corner, double side, std::int64_t t, int layer) {
  Stroke s;
  s.id = id;
  s.points = {{corner.x, corner.y, t},
              {corner.x + side, corner.y, t + 10},
              {corner.x + side, corner.y + side, t + 20},
              {corner.x, corner.y + side, t + 30}};
  return make_slice({s}, kGeom, layer);
}

std::multiset<int> ids_of(const std::vector<STSlice>& slices) {
  std::multiset<int> out;
  for (const auto& s : slices)
    for (int id : s.stroke_ids()) out.insert(id);
  return out;
}

}  // namespace

TEST(DetectOverwrites, FullOverlapRemovesTheEarlierSlice) {
  const std::vector<STSlice> in{square_slice(0, {50, 0}, 10, 0, 0), square_slice(1, {50, 0}, 10, 9000, 1)};
  const auto r = detect_overwrites(in, kGeom, template_recognizer());
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].stroke_ids(), std::vector<int>{1});
  ASSERT_EQ(r.overwrites.size(), 1u);
  EXPECT_EQ(r.overwrites[0].removed.stroke_ids(), std::vector<int>{0});
  EXPECT_EQ(r.overwrites[0].by_layer, 1);
  EXPECT_DOUBLE_EQ(r.overwrites[0].overlap, 1.0);
  EXPECT_TRUE(r.augmentations.empty());
}

TEST(DetectOverwrites, SmallOverlapMerges) {
  // 2 x 10 shared out of 10 x 10: overlap 0.2, between theta2 and theta1.
  const std::vector<STSlice> in{square_slice(0, {50, 0}, 10, 0, 0), square_slice(1, {58, 0}, 10, 500, 1)};
  EXPECT_NEAR(overlap(in[0], in[1], kGeom.hull_buffer()), 0.2, 1e-12);
  const auto r = detect_overwrites(in, kGeom, template_recognizer());
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].stroke_ids(), (std::vector<int>{0, 1}));
  EXPECT_EQ(r.kept[0].layer, 0);
  ASSERT_EQ(r.augmentations.size(), 1u);
  EXPECT_EQ(r.augmentations[0].absorbed_strokes, std::vector<int>{1});
  EXPECT_TRUE(r.overwrites.empty());
}

TEST(DetectOverwrites, OneWithHatAndFootAbsorbsBoth) {
  // The merged slice keeps being compared with later slices.
  const Vec2 p{0, -78};
  Stroke body = line_stroke({p.x, p.y - 8}, {p.x, p.y + 8}, 10, 0);
  body.id = 0;
  Stroke hat = line_stroke({p.x - 4, p.y - 4}, {p.x + 0.5, p.y - 8}, 5, 400);
  hat.id = 1;
  Stroke foot = line_stroke({p.x - 4, p.y + 5}, {p.x + 4, p.y + 5}, 5, 800);
  foot.id = 2;
  std::vector<STSlice> in{make_slice({body}, kGeom, 0), make_slice({hat}, kGeom, 1), make_slice({foot}, kGeom, 2)};
  const double buf = kGeom.hull_buffer();
  ASSERT_GT(overlap(in[0], in[1], buf), 0.05);
  ASSERT_LE(overlap(in[0], in[1], buf), 0.60);
  const auto r = detect_overwrites(in, kGeom, template_recognizer());
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].stroke_ids(), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(r.augmentations.size(), 2u);
}

TEST(DetectOverwrites, EightThenTenThenScratchOut) {
  const std::vector<STSlice> in{square_slice(0, {60, 0}, 10, 0, 0),        // the 8
                                square_slice(1, {59, -1}, 12, 20000, 1),   // the 10 over it
                                square_slice(2, {58, -2}, 14, 40000, 2)};  // scratch over both
  const auto r = detect_overwrites(in, kGeom, template_recognizer());
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].stroke_ids(), std::vector<int>{2});
  ASSERT_EQ(r.overwrites.size(), 2u);
  EXPECT_EQ(r.overwrites[0].removed.stroke_ids(), std::vector<int>{0});
  EXPECT_EQ(r.overwrites[1].removed.stroke_ids(), std::vector<int>{1});
  EXPECT_EQ(r.overwrites[1].by_layer, 2);
}

TEST(DetectOverwrites, ThresholdPreconditions) {
  const std::vector<STSlice> in{square_slice(0, {50, 0}, 10, 0, 0), square_slice(1, {50, 0}, 10, 9000, 1)};
  // theta1 above 1 disables overwrite detection; the pair merges instead
  const auto r = detect_overwrites(in, kGeom, template_recognizer(), {1.0 + 1e-9, 0.05});
  EXPECT_TRUE(r.overwrites.empty());
  EXPECT_EQ(r.kept.size(), 1u);
  EXPECT_THROW(detect_overwrites(in, kGeom, template_recognizer(), {0.3, 0.3}), Error);
  EXPECT_THROW(detect_overwrites(in, kGeom, template_recognizer(), {0.3, 0.5}), Error);
  EXPECT_THROW(detect_overwrites(in, kGeom, template_recognizer(), {0.6, -0.1}), Error);
}

TEST(DetectOverwrites, ConservesStrokesOnSyntheticCorpora) {
  const auto& m = small_models();
  for (const char* preset : {"overwrite", "impaired", "repair"})
    for (const auto& ld : corpus(preset, 20, 61)) {
      const auto g = estimate_geometry(ld.drawing);
      const auto part = extract_digit_cluster(ld.drawing, g);
      const auto slices = segment(strokes_by_id(ld.drawing, part.digit_strokes), m.segmenter, g);
      const auto r = detect_overwrites(slices, g, m.recognizer);
      auto seen = ids_of(r.kept);
      for (const auto& e : r.overwrites) {
        for (int id : e.removed.stroke_ids()) seen.insert(id);
        EXPECT_LT(e.removed.layer, e.by_layer);
      }
      EXPECT_EQ(seen, std::multiset<int>(part.digit_strokes.begin(), part.digit_strokes.end()));
      for (std::size_t k = 1; k < r.kept.size(); ++k) EXPECT_LT(r.kept[k - 1].layer, r.kept[k].layer);
      for (const auto& a : r.augmentations) EXPECT_LT(a.base_layer, a.absorbed_layer);
    }
}

TEST(DetectOverwrites, IdempotentOnCleanClocks) {
  const auto& m = small_models();
  for (const auto& ld : corpus("healthy", 20, 62)) {
    const auto g = estimate_geometry(ld.drawing);
    const auto part = extract_digit_cluster(ld.drawing, g);
    const auto slices = segment(strokes_by_id(ld.drawing, part.digit_strokes), m.segmenter, g);
    const auto first = detect_overwrites(slices, g, m.recognizer);
    const auto second = detect_overwrites(first.kept, g, m.recognizer);
    EXPECT_TRUE(second.overwrites.empty());
    EXPECT_TRUE(second.augmentations.empty());
    EXPECT_EQ(second.kept.size(), first.kept.size());
  }
}
