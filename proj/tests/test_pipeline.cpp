#include <gtest/gtest.h>

#include "support.hpp"

using namespace clockst;
using namespace testing_support;

namespace {

std::vector<std::vector<int>> slice_ids(const PipelineResult& r) {
  std::vector<std::vector<int>> out;
  for (const auto& s : r.slices) out.push_back(s.stroke_ids());
  return out;
}

}  // namespace

TEST(Run, HealthyClocksAreReadCorrectly) {
  const auto& m = small_models();
  EvalCounts total;
  for (const auto& ld : corpus("healthy", 20, 81)) {
    const auto r = run(ld.drawing, m);
    EXPECT_TRUE(r.conserves_strokes());
    total += score_result(r, ld.truth);
  }
  EXPECT_GE(total.combined(), 0.98);
}

TEST(Run, DeterministicAcrossCalls) {
  const auto& m = small_models();
  for (const auto& ld : corpus("impaired", 10, 82)) {
    const auto a = run(ld.drawing, m), b = run(ld.drawing, m);
    EXPECT_EQ(slice_ids(a), slice_ids(b));
    EXPECT_EQ(a.labeling.labels, b.labeling.labels);
    EXPECT_EQ(a.labeling.map_posterior, b.labeling.map_posterior);
    EXPECT_EQ(a.repair_iterations, b.repair_iterations);
  }
}

TEST(Run, DegenerateDrawingsDegradeGracefully) {
  const auto& m = small_models();
  const Drawing one = Drawing::from_strokes({blob({0, 0}, 3, 0)});
  const auto r = run(one, m);
  ASSERT_EQ(r.slices.size(), 1u);
  EXPECT_TRUE(r.conserves_strokes());
  EXPECT_GE(r.labeling.labels[0], 1);
  EXPECT_LE(r.labeling.labels[0], 12);

  const Drawing two = Drawing::from_strokes({blob({0, 0}, 3, 0), blob({50, 0}, 3, 500)});
  EXPECT_TRUE(run(two, m).conserves_strokes());
  EXPECT_THROW(run(Drawing{}, m), EmptyInputError);
}

TEST(Run, PosteriorsAndLabelsAreConsistent) {
  const auto& m = small_models();
  for (const char* preset : {"impaired", "overwrite", "repair"})
    for (const auto& ld : corpus(preset, 8, 83)) {
      const auto r = run(ld.drawing, m);
      ASSERT_TRUE(r.conserves_strokes());
      ASSERT_EQ(r.labeling.labels.size(), r.slices.size());
      for (std::size_t i = 0; i < r.slices.size(); ++i) {
        const auto& p = r.labeling.posteriors[i];
        double sum = 0.0;
        for (double v : p) sum += v;
        ASSERT_NEAR(sum, 1.0, 1e-9);
        ASSERT_LE(r.labeling.map_posterior[i], 1.0 + 1e-12);
        ASSERT_GE(r.labeling.labels[i], 1);
      }
    }
}

TEST(Models, SaveAndLoadGiveIdenticalResults) {
  const auto& m = small_models();
  const auto dir = scratch_dir("models_roundtrip");
  save_models(m, dir);
  for (const char* f : {"segmenter.json", "recognizer.json", "crf.json"}) EXPECT_TRUE(std::filesystem::exists(dir / f));
  const auto back = load_models(dir);
  for (const auto& ld : corpus("impaired", 5, 84)) {
    const auto a = run(ld.drawing, m), b = run(ld.drawing, back);
    EXPECT_EQ(slice_ids(a), slice_ids(b));
    EXPECT_EQ(a.labeling.labels, b.labeling.labels);
  }
  EXPECT_THROW(load_models(dir / "missing"), IoError);
}

TEST(Training, CorpusOrderDoesNotChangeTheModels) {
  auto data = corpus("healthy", 12, 85);
  auto cfg = fast_config();
  cfg.crf_train.epochs = 10;
  const auto a = train_models(data, cfg);
  std::reverse(data.begin(), data.end());
  const auto b = train_models(data, cfg);
  EXPECT_EQ(a.recognizer.size(), b.recognizer.size());
  EXPECT_NEAR(a.recognizer.tau(), b.recognizer.tau(), 1e-12);
  EXPECT_LT((a.crf.W - b.crf.W).cwiseAbs().maxCoeff(), 1e-9);
  for (const auto& p : segmenter_training_pairs(data))
    ASSERT_NEAR(a.segmenter.probability(p.features), b.segmenter.probability(p.features), 1e-9);
}

TEST(Training, RecognizerExamplesCoverEveryLabel) {
  const auto data = corpus("impaired", 10, 86);
  const auto ex = recognizer_examples(data, 5);
  std::array<int, 12> count{};
  for (const auto& e : ex) ++count[static_cast<std::size_t>(e.label - 1)];
  for (int c : count) {
    EXPECT_GT(c, 0);
    EXPECT_LE(c, 5);
  }
}

TEST(Training, SegmenterPairsComeFromConsecutiveNumeralInk) {
  const auto data = corpus("overwrite", 5, 87);
  const auto pairs = segmenter_training_pairs(data);
  std::size_t want = 0;
  for (const auto& ld : data) {
    std::size_t digits = 0;
    for (const auto& [id, role] : ld.truth.roles) digits += numeral_layer(role);
    want += digits > 0 ? digits - 1 : 0;
  }
  EXPECT_EQ(pairs.size(), want);
  bool any_boundary = false, any_join = false;
  for (const auto& p : pairs) (p.boundary ? any_boundary : any_join) = true;
  EXPECT_TRUE(any_boundary);
  EXPECT_TRUE(any_join);
}

TEST(Eval, ScoringCountsExactStrokeSetMatches) {
  GroundTruth gt;
  gt.slices = {{3, {0, 1}}, {4, {2}}, {5, {3}}};
  const auto g = geometry_at({0, 0});
  auto mk = [&](std::vector<int> ids) {
    std::vector<Stroke> ss;
    for (int id : ids) {
      Stroke s = blob({10.0 * id, 0}, 1, 100 * id);
      s.id = id;
      ss.push_back(s);
    }
    return make_slice(ss, g, ids.front());
  };
  const std::vector<STSlice> pred{mk({1, 0}), mk({2, 3})};
  const std::vector<int> labels{3, 4};
  const auto c = score_slices(pred, labels, gt);
  EXPECT_EQ(c.truth, 3);
  EXPECT_EQ(c.matched, 1);
  EXPECT_EQ(c.correct, 1);
  EXPECT_NEAR(c.segmentation(), 1.0 / 3, 1e-12);
  EXPECT_NEAR(c.identification(), 1.0, 1e-12);
  EXPECT_NEAR(c.combined(), 1.0 / 3, 1e-12);
  EXPECT_EQ(match_slices(pred, gt), (std::vector<int>{3, 0}));
}

TEST(Eval, FoldsAreBalancedAndSeeded) {
  const auto f = fold_assignment(23, 5, 1);
  std::array<int, 5> n{};
  for (int k : f) ++n[static_cast<std::size_t>(k)];
  for (int c : n) EXPECT_TRUE(c == 4 || c == 5);
  EXPECT_EQ(f, fold_assignment(23, 5, 1));
  EXPECT_NE(f, fold_assignment(23, 5, 2));
  EXPECT_THROW(fold_assignment(3, 5, 1), Error);
  EXPECT_THROW(fold_assignment(10, 1, 1), Error);
  const std::vector<double> v{1.0, 2.0, 3.0};
  EXPECT_NEAR(mean_sd(v).mean, 2.0, 1e-12);
  EXPECT_NEAR(mean_sd(v).sd, 1.0, 1e-12);
}

TEST(Eval, CrossValidationOnGoldSlices) {
  const auto data = corpus("healthy", 20, 88);
  auto cfg = fast_config();
  const auto cv = cross_validate(data, cfg, 4, 3, true);
  ASSERT_EQ(cv.folds.size(), 4u);
  int drawings = 0;
  for (const auto& f : cv.folds) drawings += f.drawings;
  EXPECT_EQ(drawings, 20);
  EXPECT_NEAR(cv.segmentation.mean, 1.0, 1e-12);  // gold slices always match
  EXPECT_GT(cv.combined.mean, 0.9);
}

TEST(Config, JsonRoundTrip) {
  auto cfg = fast_config();
  cfg.repair.valley_mode = ValleyMode::any;
  cfg.overwrite.overwrite = 0.7;
  const auto back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));
  EXPECT_EQ(back.repair.valley_mode, ValleyMode::any);
  EXPECT_DOUBLE_EQ(back.overwrite.overwrite, 0.7);
}
