#include <gtest/gtest.h>

#include "support.hpp"

using namespace clockst;
using namespace testing_support;

namespace {

// Trained on clocks with overwriting so long pauses at one position count.
const SegmenterModel& overwrite_segmenter() {
  static const SegmenterModel m = train_segmenter(segmenter_training_pairs(corpus("overwrite", 40, 4)));
  return m;
}

std::vector<Stroke> digit_strokes(const LabeledDrawing& ld) {
  const auto g = estimate_geometry(ld.drawing);
  const auto part = extract_digit_cluster(ld.drawing, g);
  return strokes_by_id(ld.drawing, part.digit_strokes);
}

void expect_partition(std::span<const Stroke> strokes, const std::vector<STSlice>& slices) {
  std::vector<int> concat;
  for (std::size_t k = 0; k < slices.size(); ++k) {
    ASSERT_EQ(slices[k].layer, static_cast<int>(k));
    ASSERT_FALSE(slices[k].strokes.empty());
    for (const auto& s : slices[k].strokes) concat.push_back(s.id);
  }
  std::vector<int> want;
  for (const auto& s : strokes) want.push_back(s.id);
  EXPECT_EQ(concat, want);
}

}  // namespace

TEST(PairFeatures, IdenticalStrokes) {
  const auto g = geometry_at({0, 0});
  const Stroke s = blob(at_bearing({0, 0}, 90, 78), 3, 100);
  const auto f = pair_features(s, s, g);
  EXPECT_EQ(f.d_angle, 0.0);
  EXPECT_EQ(f.d_time, 0.0);  // the gap is clamped at zero
}

TEST(PairFeatures, NeighbouringNumeralsAndOverwrite) {
  const Vec2 c{10, 20};
  const auto g = geometry_at(c);
  const Stroke three = blob(at_bearing(c, 90, 78), 3, 1000);   // ends at 1030
  const Stroke four = blob(at_bearing(c, 120, 78), 3, 1830);
  auto f = pair_features(three, four, g);
  EXPECT_NEAR(f.d_angle, 30.0, 1e-9);
  EXPECT_EQ(f.d_time, 800.0);
  const Stroke over = blob(at_bearing(c, 90, 78), 3, 21030);
  f = pair_features(three, over, g);
  EXPECT_NEAR(f.d_angle, 0.0, 1e-9);
  EXPECT_EQ(f.d_time, 20000.0);
}

TEST(Slice, DerivedFieldsAndMerge) {
  const Vec2 c{0, 0};
  const auto g = geometry_at(c);
  Stroke a = line_stroke(at_bearing(c, 80, 70), at_bearing(c, 100, 70), 5, 0, 250);  // [0, 1000]
  a.id = 0;
  Stroke b = blob(at_bearing(c, 95, 70), 2, 5000);
  b.points.back().t = 6000;  // [5000, 6000]
  b.id = 1;
  const auto sa = make_slice({a}, g, 3);
  const auto sb = make_slice({b}, g, 1);
  EXPECT_NEAR(sa.angular_mid.degrees(), 90.0, 1e-9);
  EXPECT_NEAR(sa.angular_width, 20.0, 1e-9);
  const auto m = merge(sa, sb, g);
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.t_begin, 0);
  EXPECT_EQ(m.t_end, 6000);
  EXPECT_EQ(m.layer, 1);
  EXPECT_EQ(m.strokes[0].id, 0);
  EXPECT_THROW(merge(sa, sa, g), ConsistencyError);
  EXPECT_THROW(make_slice({}, g, 0), EmptyInputError);
}

TEST(Slice, MergedOverlapFollowsContainmentRule) {
  // The merged hull contains a's hull, so the overlap is area(a)/area(merged).
  const Vec2 c{0, 0};
  const auto g = geometry_at(c);
  Stroke a = blob({50, 0}, 5, 0);
  a.id = 0;
  Stroke b = blob({62, 0}, 5, 100);
  b.id = 1;
  const auto sa = make_slice({a}, g, 0), sb = make_slice({b}, g, 1);
  const auto m = merge(sa, sb, g);
  const double buf = g.hull_buffer();
  const double expected = slice_hull(sa, buf).area() / slice_hull(m, buf).area();
  EXPECT_NEAR(overlap(m, sa, buf), expected, 1e-12);
  EXPECT_NEAR(expected, 100.0 / (10.0 * 22.0), 1e-12);
}

TEST(TrainSegmenter, SeparableDataIsLearnedExactly) {
  std::vector<LabeledPair> data;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ang(0.0, 180.0), tm(0.0, 3000.0);
  for (int i = 0; i < 400; ++i) {
    PairFeatures f{ang(rng), tm(rng)};
    data.push_back({f, f.d_angle > 15.0});
  }
  const auto m = train_segmenter(data);
  EXPECT_EQ(m.rounds.size(), 50u);
  for (const auto& d : data) ASSERT_EQ(m.boundary(d.features), d.boundary) << d.features.d_angle;
}

TEST(TrainSegmenter, SingleClassIsAnError) {
  std::vector<LabeledPair> data{{{1, 1}, false}, {{2, 2}, false}};
  EXPECT_THROW(train_segmenter(data), TrainingError);
  data = {{{1, 1}, true}};
  EXPECT_THROW(train_segmenter(data), TrainingError);
}

TEST(TrainSegmenter, DeterministicAndSerializable) {
  const auto data = corpus("overwrite", 20, 6);
  const auto pairs = segmenter_training_pairs(data);
  const auto a = train_segmenter(pairs), b = train_segmenter(pairs);
  EXPECT_EQ(segmenter_to_json(a), segmenter_to_json(b));
  const auto back = segmenter_from_json(segmenter_to_json(a));
  for (const auto& p : pairs) ASSERT_DOUBLE_EQ(back.probability(p.features), a.probability(p.features));
}

TEST(Segment, SingleStrokeIsOneSlice) {
  const auto g = geometry_at({0, 0});
  const std::vector<Stroke> one{blob({0, -78}, 3, 0)};
  EXPECT_EQ(segment(one, small_models().segmenter, g).size(), 1u);
  EXPECT_EQ(threshold_segment(one, g).size(), 1u);
}

TEST(ThresholdSegment, Extremes) {
  const auto data = corpus("healthy", 3, 2);
  for (const auto& ld : data) {
    const auto strokes = digit_strokes(ld);
    const auto g = estimate_geometry(ld.drawing);
    EXPECT_EQ(threshold_segment(strokes, g, 180.0, std::numeric_limits<double>::infinity()).size(), 1u);
    EXPECT_EQ(threshold_segment(strokes, g, 0.0, 0.0).size(), strokes.size());
    EXPECT_EQ(threshold_segment(strokes, g).size(), 12u);
  }
}

TEST(Segment, OutputIsAChronologicalPartition) {
  for (const char* preset : {"healthy", "impaired", "overwrite", "repair"})
    for (const auto& ld : corpus(preset, 10, 9)) {
      const auto strokes = digit_strokes(ld);
      const auto g = estimate_geometry(ld.drawing);
      expect_partition(strokes, segment(strokes, small_models().segmenter, g));
      expect_partition(strokes, threshold_segment(strokes, g));
    }
}

TEST(Segment, HealthyClocksSegmentLikeAngularSlicing) {
  // Without overwriting the learned segmenter reduces to plain angular slicing.
  const auto& model = small_models().segmenter;
  int same = 0, total = 0;
  for (const auto& ld : corpus("healthy", 50, 101)) {
    const auto strokes = digit_strokes(ld);
    const auto g = estimate_geometry(ld.drawing);
    const auto a = segment(strokes, model, g), b = threshold_segment(strokes, g);
    bool eq = a.size() == b.size();
    for (std::size_t k = 0; eq && k < a.size(); ++k) eq = a[k].stroke_ids() == b[k].stroke_ids();
    same += eq;
    ++total;
  }
  EXPECT_EQ(same, total);
}

TEST(Segment, OverwriteSequenceGivesThreeLayersAtOnePosition) {
  // An 8, a 10 written over it 20 s later, then a scratch-out over both.
  const Vec2 c{0, 0};
  const auto g = geometry_at(c);
  const Vec2 p = at_bearing(c, 240, 78);
  std::vector<Stroke> s{arc_stroke({p.x, p.y - 4}, 4, 0, 2 * kPi, 20, 0),
                        arc_stroke({p.x, p.y + 4}, 4, 0, 2 * kPi, 20, 400),
                        line_stroke({p.x - 5, p.y - 8}, {p.x - 5, p.y + 8}, 10, 20000),
                        arc_stroke({p.x + 3, p.y}, 5, 0, 2 * kPi, 20, 20500),
                        line_stroke({p.x - 9, p.y - 9}, {p.x + 9, p.y + 9}, 12, 40000)};
  for (std::size_t i = 0; i < s.size(); ++i) s[i].id = static_cast<int>(i);
  const auto slices = segment(s, overwrite_segmenter(), g);
  ASSERT_EQ(slices.size(), 3u);
  EXPECT_EQ(slices[0].stroke_ids(), (std::vector<int>{0, 1}));
  EXPECT_EQ(slices[1].stroke_ids(), (std::vector<int>{2, 3}));
  EXPECT_EQ(slices[2].stroke_ids(), (std::vector<int>{4}));
  for (const auto& sl : slices) EXPECT_LT(bearing_diff(sl.angular_mid, ClockBearing(240)), 5.0);
}
