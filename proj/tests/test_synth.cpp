#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace clockst;
using namespace testing_support;

TEST(Synth, SameSeedSameClock) {
  for (const auto& name : synth_preset_names()) {
    auto cfg = synth_preset(name);
    cfg.seed = 99;
    const auto a = generate_clock(cfg), b = generate_clock(cfg);
    EXPECT_EQ(serialize_drawing(a.drawing), serialize_drawing(b.drawing)) << name;
    EXPECT_EQ(a.truth, b.truth);
    cfg.seed = 100;
    EXPECT_NE(serialize_drawing(generate_clock(cfg).drawing), serialize_drawing(a.drawing));
  }
}

TEST(Synth, ClocksAreWellFormed) {
  for (const auto& name : synth_preset_names())
    for (const auto& c : generate_clocks(synth_preset(name), 20)) {
      EXPECT_NO_THROW(c.truth.validate());
      const auto& strokes = c.drawing.strokes();
      for (std::size_t k = 0; k < strokes.size(); ++k) {
        ASSERT_FALSE(strokes[k].points.empty());
        for (std::size_t i = 1; i < strokes[k].points.size(); ++i)
          ASSERT_LE(strokes[k].points[i - 1].t, strokes[k].points[i].t);
        if (k > 0) {
          ASSERT_LE(strokes[k - 1].start_time(), strokes[k].start_time());
        }
        ASSERT_TRUE(c.truth.roles.count(strokes[k].id)) << "stroke " << strokes[k].id << " has no role";
      }
    }
}

TEST(Synth, HealthyClocksHaveTwelveDistinctNumerals) {
  for (const auto& c : generate_clocks(synth_preset("healthy"), 30)) {
    std::set<int> labels;
    for (const auto& s : c.truth.slices) labels.insert(s.label);
    EXPECT_EQ(c.truth.slices.size(), 12u);
    EXPECT_EQ(labels.size(), 12u);
    EXPECT_TRUE(c.truth.events.empty());
  }
}

TEST(Synth, OverwritePresetRecordsDelayedOverwrites) {
  int delayed = 0;
  for (const auto& c : generate_clocks(synth_preset("overwrite"), 40))
    for (const auto& e : c.truth.events)
      if (e.kind == "delayed_overwrite") {
        ++delayed;
        EXPECT_FALSE(e.strokes.empty());
        EXPECT_GE(e.label, 1);
        EXPECT_LE(e.label, 12);
      }
  // 0.15 per numeral over 480 numerals
  EXPECT_GT(delayed, 40);
}

TEST(Synth, SplitPresetRecordsSplits) {
  int splits = 0;
  for (const auto& c : generate_clocks(synth_preset("repair"), 40))
    for (const auto& e : c.truth.events) splits += e.kind == "split";
  EXPECT_GT(splits, 20);
}

TEST(SynthConfig, PresetsValidateAndRoundTrip) {
  for (const auto& name : synth_preset_names()) {
    const auto cfg = synth_preset(name);
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(synth_config_from_json(synth_config_to_json(cfg)), cfg) << name;
  }
  EXPECT_THROW(synth_preset("sketchy"), Error);
}

TEST(SynthConfig, ShippedPresetFilesMatchBuiltIns) {
  const std::filesystem::path dir = std::filesystem::path(CLOCKST_SOURCE_DIR) / "data" / "presets";
  for (const auto& name : synth_preset_names()) {
    const auto j = json::parse(detail::read_file(dir / (name + ".json")));
    EXPECT_EQ(synth_config_from_json(j), synth_preset(name)) << name;
  }
}

TEST(SynthConfig, InvalidValuesAreRejected) {
  auto cfg = synth_preset("healthy");
  cfg.p_split = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = synth_preset("healthy");
  cfg.order = {"circle", "digits", "digits"};
  EXPECT_THROW(generate_clock(cfg), Error);
  cfg = synth_preset("healthy");
  cfg.distort_run = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = synth_preset("healthy");
  cfg.jitter_sigma = -0.1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(SynthCorpus, FilesSidecarsAndManifest) {
  const auto dir = scratch_dir("synth_corpus");
  const std::vector<SynthConfig> cfgs{synth_preset("healthy"), synth_preset("impaired")};
  const auto files = generate_corpus(cfgs, 6, dir);
  ASSERT_EQ(files.size(), 6u);
  for (const auto& f : files) {
    EXPECT_TRUE(std::filesystem::exists(f));
    EXPECT_TRUE(std::filesystem::exists(ground_truth_path(f)));
  }
  const auto manifest = json::parse(detail::read_file(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("count"), 6);
  EXPECT_EQ(manifest.at("files").size(), 6u);
  EXPECT_EQ(manifest.at("configs").size(), 2u);

  const auto loaded = load_corpus(dir);
  const auto direct = generate_clocks(cfgs, 6);
  ASSERT_EQ(loaded.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(loaded[i].truth, direct[i].truth);
    EXPECT_EQ(loaded[i].drawing.size(), direct[i].drawing.size());
    // alternating configurations: healthy, impaired, ...
    EXPECT_EQ(loaded[i].drawing.meta().cohort, i % 2 == 0 ? Cohort::healthy : Cohort::impaired);
  }
}

TEST(SampleNumerals, CyclesThroughTheTwelveLabels) {
  const auto s = sample_numerals(synth_preset("impaired"), 3, 8);
  ASSERT_EQ(s.size(), 36u);
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_EQ(s[k].label, static_cast<int>(k % 12) + 1);
    EXPECT_FALSE(s[k].strokes.empty());
  }
  EXPECT_EQ(s[9].strokes.size(), 2u);  // "10" has two digits
}
