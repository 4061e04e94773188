#include <gtest/gtest.h>

#include "support.hpp"

using namespace clockst;
using namespace testing_support;

namespace {

const char* kTwoStrokes = R"({"format": 1, "meta": {"cohort": "healthy"}, "strokes": [
  {"points": [[0, 0, 500], [1, 1, 510], [2, 2, 520]]},
  {"points": [[5, 5, 100], [6, 6, 110], [7, 7, 120]]}
]})";

}  // namespace

TEST(LoadDrawing, ResortsByStartTime) {
  const Drawing d = parse_drawing(kTwoStrokes);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.strokes()[0].start_time(), 100);
  EXPECT_EQ(d.strokes()[1].start_time(), 500);
  // ids are file positions
  EXPECT_EQ(d.strokes()[0].id, 1);
  EXPECT_EQ(d.stroke_by_id(0).points[2].x, 2.0);
  EXPECT_EQ(d.meta().cohort, Cohort::healthy);
}

TEST(LoadDrawing, EqualStartTimesKeepFileOrder) {
  const Drawing d = parse_drawing(R"({"strokes": [
    {"points": [[0, 0, 7]]}, {"points": [[1, 0, 7]]}, {"points": [[2, 0, 3]]}]})");
  EXPECT_EQ(d.strokes()[0].id, 2);
  EXPECT_EQ(d.strokes()[1].id, 0);
  EXPECT_EQ(d.strokes()[2].id, 1);
}

TEST(LoadDrawing, DecreasingTimestampsNameTheStroke) {
  try {
    parse_drawing(R"({"strokes": [{"points": [[0, 0, 1]]}, {"points": [[0, 0, 9], [1, 1, 4]]}]})");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("stroke 1"), std::string::npos) << e.what();
  }
}

TEST(LoadDrawing, SyntaxErrorReportsLine) {
  try {
    parse_drawing("{\n\"strokes\": [\n  {\"points\": [[0, 0, 1],]}\n]}");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u) << e.what();
  }
}

TEST(LoadDrawing, EmptyStrokeListIsEmptyInput) {
  EXPECT_THROW(parse_drawing(R"({"strokes": []})"), EmptyInputError);
}

TEST(LoadDrawing, RejectsNegativeTimeAndNonIntegerTime) {
  EXPECT_THROW(parse_drawing(R"({"strokes": [{"points": [[0, 0, -1]]}]})"), ParseError);
  EXPECT_THROW(parse_drawing(R"({"strokes": [{"points": [[0, 0, 1.5]]}]})"), ParseError);
  EXPECT_THROW(parse_drawing(R"({"strokes": [{"points": []}]})"), ParseError);
  EXPECT_THROW(parse_drawing(R"({"format": 2, "strokes": [{"points": [[0, 0, 1]]}]})"), ParseError);
}

TEST(LoadDrawing, FileRoundTrip) {
  const auto dir = scratch_dir("model_roundtrip");
  const Drawing d = parse_drawing(kTwoStrokes);
  save_drawing(d, dir / "d.json");
  const Drawing back = load_drawing(dir / "d.json");
  EXPECT_EQ(back, d);
  EXPECT_EQ(serialize_drawing(back), serialize_drawing(d));
  EXPECT_THROW(load_drawing(dir / "missing.json"), IoError);
}

TEST(LoadDrawing, SynthRoundTripPreservesIds) {
  for (const auto& ld : corpus("overwrite", 5, 4)) {
    const Drawing back = parse_drawing(serialize_drawing(ld.drawing));
    EXPECT_EQ(back, ld.drawing);
  }
}

TEST(Bearing, CardinalDirections) {
  const Vec2 c{50, 50};
  EXPECT_DOUBLE_EQ(bearing(Vec2{50, 10}, c).degrees(), 0.0);
  EXPECT_DOUBLE_EQ(bearing(Vec2{90, 50}, c).degrees(), 90.0);
  EXPECT_DOUBLE_EQ(bearing(Vec2{50, 90}, c).degrees(), 180.0);
  EXPECT_DOUBLE_EQ(bearing(Vec2{10, 50}, c).degrees(), 270.0);
  EXPECT_THROW(bearing(c, c), DegenerateBearingError);
}

TEST(Bearing, NumeralPositionsAreThirtyDegreeMultiples) {
  const Vec2 c{0, 0};
  for (int n = 1; n <= 12; ++n)
    EXPECT_NEAR(bearing(at_bearing(c, 30.0 * n, 80.0), c).degrees(), std::fmod(30.0 * n, 360.0), 1e-9);
}

TEST(BearingDiff, Examples) {
  EXPECT_DOUBLE_EQ(bearing_diff(ClockBearing(10), ClockBearing(350)), 20.0);
  EXPECT_DOUBLE_EQ(bearing_diff(ClockBearing(0), ClockBearing(180)), 180.0);
  EXPECT_DOUBLE_EQ(bearing_diff(ClockBearing(123.4), ClockBearing(123.4)), 0.0);
  EXPECT_DOUBLE_EQ(ClockBearing(-30).degrees(), 330.0);
  EXPECT_DOUBLE_EQ(ClockBearing(720).degrees(), 0.0);
}

TEST(BearingDiff, IsAMetricOnTheCircle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-720.0, 720.0);
  for (int k = 0; k < 5000; ++k) {
    const ClockBearing a(u(rng)), b(u(rng)), c(u(rng));
    const double ab = bearing_diff(a, b);
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, 180.0);
    ASSERT_EQ(ab, bearing_diff(b, a));
    ASSERT_LE(bearing_diff(a, c), ab + bearing_diff(b, c) + 1e-9);
  }
}

TEST(GroundTruth, ValidateRejectsBadLabelsAndDuplicates) {
  GroundTruth gt;
  gt.slices = {{13, {0}}};
  EXPECT_THROW(gt.validate(), ParseError);
  gt.slices = {{1, {0}}, {2, {0}}};
  EXPECT_THROW(gt.validate(), ParseError);
  gt.slices = {{1, {0}}};
  gt.roles = {{0, StrokeRole::digit}, {1, StrokeRole::digit}};
  EXPECT_THROW(gt.validate(), ParseError);
  gt.slices = {{1, {0}}, {2, {1}}};
  EXPECT_NO_THROW(gt.validate());
}

TEST(GroundTruth, JsonRoundTrip) {
  for (const auto& ld : corpus("repair", 6, 8)) {
    const auto back = ground_truth_from_json(ground_truth_to_json(ld.truth));
    EXPECT_EQ(back, ld.truth);
  }
  EXPECT_EQ(ground_truth_path("a/clock_0001.json"), std::filesystem::path("a/clock_0001.gt.json"));
  EXPECT_TRUE(is_ground_truth_file("clock_0001.gt.json"));
  EXPECT_FALSE(is_ground_truth_file("clock_0001.json"));
}
