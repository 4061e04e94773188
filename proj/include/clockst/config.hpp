#pragma once

// Aggregate configuration for training and running the pipeline, with a JSON
// form whose keys mirror the stage names (kmeans.seed, crf.lambda, ...).

#include <string>

#include "clockst/crf.hpp"
#include "clockst/overwrite.hpp"
#include "clockst/preprocess.hpp"
#include "clockst/recognizer.hpp"
#include "clockst/repair.hpp"
#include "clockst/stslice.hpp"

namespace clockst {

struct PipelineConfig {
  GeometryConfig geometry;
  ClusterConfig cluster;
  SegmenterTrainConfig segmenter;
  RecognizerConfig recognizer;
  int recognizer_per_class = 30;  // exemplars kept per numeral
  OverwriteThresholds overwrite;
  CrfFeatureConfig crf_features;
  CrfTrainConfig crf_train;
  RepairConfig repair;
};

inline json config_to_json(const PipelineConfig& c) {
  json segf = json::array();
  if (c.segmenter.features[0]) segf.push_back("d_angle");
  if (c.segmenter.features[1]) segf.push_back("d_time");
  return {{"format", kFileFormat},
          {"circle", {{"circularity_min", c.geometry.circularity_min}, {"length_frac_min", c.geometry.length_frac_min}}},
          {"kmeans",
           {{"seed", c.cluster.seed},
            {"restarts", c.cluster.restarts},
            {"max_iterations", c.cluster.max_iterations},
            {"time_weight", c.cluster.time_weight},
            {"refine", c.cluster.refine}}},
          {"segmenter", {{"rounds", c.segmenter.rounds}, {"features", segf}, {"max_response", c.segmenter.max_response}}},
          {"recognizer", {{"tau_scale", c.recognizer.tau_scale}, {"per_class", c.recognizer_per_class}}},
          {"overwrite", {{"theta1", c.overwrite.overwrite}, {"theta2", c.overwrite.augment}}},
          {"crf",
           {{"concat", c.crf_features.concat},
            {"context", c.crf_features.context},
            {"wrap_features", c.crf_features.wrap},
            {"downsample", c.crf_features.downsample},
            {"lambda", c.crf_train.lambda},
            {"learning_rate", c.crf_train.learning_rate},
            {"epochs", c.crf_train.epochs},
            {"step_halving", c.crf_train.step_halving},
            {"seed", c.crf_train.seed}}},
          {"repair",
           {{"enabled", c.repair.enabled},
            {"valley_mode", to_string(c.repair.valley_mode)},
            {"valley_ratio", c.repair.valley_ratio},
            {"epsilon", c.repair.epsilon},
            {"max_partition_strokes", c.repair.max_partition_strokes}}}};
}

/// Keys that are absent keep their defaults.
inline PipelineConfig config_from_json(const json& j) {
  if (j.contains("format")) detail::check_format(j, "config");
  PipelineConfig c;
  try {
    auto get = [&](const char* section, const char* key, auto& v) {
      if (j.contains(section) && j.at(section).contains(key)) v = j.at(section).at(key).get<std::decay_t<decltype(v)>>();
    };
    get("circle", "circularity_min", c.geometry.circularity_min);
    get("circle", "length_frac_min", c.geometry.length_frac_min);
    get("kmeans", "seed", c.cluster.seed);
    get("kmeans", "restarts", c.cluster.restarts);
    get("kmeans", "max_iterations", c.cluster.max_iterations);
    get("kmeans", "time_weight", c.cluster.time_weight);
    get("kmeans", "refine", c.cluster.refine);
    get("segmenter", "rounds", c.segmenter.rounds);
    get("segmenter", "max_response", c.segmenter.max_response);
    if (j.contains("segmenter") && j.at("segmenter").contains("features")) {
      const auto f = j.at("segmenter").at("features").get<std::vector<std::string>>();
      c.segmenter.features = {false, false};
      for (const auto& name : f) {
        if (name == "d_angle") c.segmenter.features[0] = true;
        else if (name == "d_time") c.segmenter.features[1] = true;
        else throw ParseError("config: unknown segmenter feature '" + name + "'");
      }
    }
    get("recognizer", "tau_scale", c.recognizer.tau_scale);
    get("recognizer", "per_class", c.recognizer_per_class);
    get("overwrite", "theta1", c.overwrite.overwrite);
    get("overwrite", "theta2", c.overwrite.augment);
    get("crf", "concat", c.crf_features.concat);
    get("crf", "context", c.crf_features.context);
    get("crf", "wrap_features", c.crf_features.wrap);
    get("crf", "downsample", c.crf_features.downsample);
    get("crf", "lambda", c.crf_train.lambda);
    get("crf", "learning_rate", c.crf_train.learning_rate);
    get("crf", "epochs", c.crf_train.epochs);
    get("crf", "step_halving", c.crf_train.step_halving);
    get("crf", "seed", c.crf_train.seed);
    get("repair", "enabled", c.repair.enabled);
    std::string mode = to_string(c.repair.valley_mode);
    get("repair", "valley_mode", mode);
    c.repair.valley_mode = valley_mode_from_string(mode);
    get("repair", "valley_ratio", c.repair.valley_ratio);
    get("repair", "epsilon", c.repair.epsilon);
    get("repair", "max_partition_strokes", c.repair.max_partition_strokes);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  c.repair.theta1 = c.overwrite.overwrite;
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  return config_from_json(detail::parse_text(detail::read_file(path), path.string()));
}

}  // namespace clockst
