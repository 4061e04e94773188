#pragma once

// End-to-end interpretation of one drawing, plus the helpers that turn a
// labeled corpus into training data for the three learned components.

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "clockst/config.hpp"
#include "clockst/crf.hpp"
#include "clockst/overwrite.hpp"
#include "clockst/preprocess.hpp"
#include "clockst/recognizer.hpp"
#include "clockst/repair.hpp"
#include "clockst/stslice.hpp"

namespace clockst {

struct Models {
  SegmenterModel segmenter;
  RecognizerModel recognizer;
  CrfModel crf;
};

inline void save_models(const Models& m, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  detail::write_file(dir / "segmenter.json", segmenter_to_json(m.segmenter).dump(1) + "\n");
  detail::write_file(dir / "recognizer.json", recognizer_to_json(m.recognizer).dump() + "\n");
  detail::write_file(dir / "crf.json", crf_to_json(m.crf).dump() + "\n");
}

inline Models load_models(const std::filesystem::path& dir) {
  auto read = [&](const char* name) {
    const auto p = dir / name;
    return detail::parse_text(detail::read_file(p), p.string());
  };
  return {segmenter_from_json(read("segmenter.json")), recognizer_from_json(read("recognizer.json")),
          crf_from_json(read("crf.json"))};
}

// ---------------------------------------------------------------------------

struct PipelineResult {
  Drawing drawing;
  ClockGeometry geometry;
  StrokePartition partition;
  std::vector<STSlice> initial_slices;        // segmenter output, chronological
  std::vector<OverwriteEvent> overwrites;
  std::vector<AugmentationEvent> augmentations;
  std::vector<STSlice> slices;                // final, chronological
  SliceLabeling labeling;                     // parallel to `slices`
  std::vector<RepairRecord> repair_log;
  std::vector<STSlice> repair_dropped;        // overwritten parts found while splitting
  int repair_iterations = 0;

  /// Every digit stroke ends up in exactly one final slice or removed layer.
  bool conserves_strokes() const {
    std::multiset<int> seen;
    auto add = [&](const STSlice& s) {
      for (int id : s.stroke_ids()) seen.insert(id);
    };
    for (const auto& s : slices) add(s);
    for (const auto& e : overwrites) add(e.removed);
    for (const auto& s : repair_dropped) add(s);
    const std::multiset<int> want(partition.digit_strokes.begin(), partition.digit_strokes.end());
    return seen == want;
  }
};

/// Runs all stages in order. Degenerate inputs degrade instead of failing:
/// too few strokes to cluster means every stroke is treated as digit ink.
inline PipelineResult run(const Drawing& d, const Models& models, const PipelineConfig& cfg = {}) {
  if (d.empty()) throw EmptyInputError("cannot interpret an empty drawing");
  PipelineResult r;
  r.drawing = d;
  r.geometry = estimate_geometry(d, cfg.geometry);
  if (d.size() >= 3) {
    try {
      r.partition = extract_digit_cluster(d, r.geometry, cfg.cluster, cfg.geometry);
    } catch (const ClusteringError&) {
      r.partition = {};
    }
  }
  if (r.partition.digit_strokes.empty()) {
    r.partition = {};
    for (const auto& s : d.strokes()) r.partition.digit_strokes.push_back(s.id);
    std::sort(r.partition.digit_strokes.begin(), r.partition.digit_strokes.end());
  }

  const std::set<int> digit_ids(r.partition.digit_strokes.begin(), r.partition.digit_strokes.end());
  std::vector<Stroke> digits;
  for (const auto& s : d.strokes())
    if (digit_ids.count(s.id)) digits.push_back(s);

  r.initial_slices = segment(digits, models.segmenter, r.geometry);
  auto ow = detect_overwrites(r.initial_slices, r.geometry, models.recognizer, cfg.overwrite);
  r.overwrites = std::move(ow.overwrites);
  r.augmentations = std::move(ow.augmentations);

  RepairConfig rc = cfg.repair;
  rc.theta1 = cfg.overwrite.overwrite;
  auto rep = repair_loop(std::move(ow.kept), r.geometry, models.crf, models.recognizer, rc);
  r.slices = std::move(rep.slices);
  r.labeling = std::move(rep.labeling);
  r.repair_log = std::move(rep.log);
  r.repair_dropped = std::move(rep.dropped);
  r.repair_iterations = rep.iterations;
  return r;
}

// ---------------------------------------------------------------------------
// Training data

struct LabeledDrawing {
  Drawing drawing;
  GroundTruth truth;
};

/// Loads every stroke file in `dir` that has a ground-truth sidecar, sorted by
/// file name so results do not depend on directory order.
inline std::vector<LabeledDrawing> load_corpus(const std::filesystem::path& dir, bool require_truth = true) {
  if (!std::filesystem::is_directory(dir)) throw IoError("corpus directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto& p = e.path();
    if (!e.is_regular_file() || p.extension() != ".json" || is_ground_truth_file(p)) continue;
    if (p.filename() == "manifest.json") continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  std::vector<LabeledDrawing> out;
  for (const auto& p : files) {
    const auto gt = ground_truth_path(p);
    if (!std::filesystem::exists(gt)) {
      if (require_truth) throw IoError("missing ground-truth sidecar for " + p.string());
      continue;
    }
    out.push_back({load_drawing(p), load_ground_truth(gt)});
  }
  if (out.empty()) throw EmptyInputError("no labeled drawings in " + dir.string());
  return out;
}

/// Strokes that belong to the numeral layer according to the ground truth.
inline bool numeral_layer(StrokeRole r) {
  return r == StrokeRole::digit || r == StrokeRole::overwritten || r == StrokeRole::noise;
}

/// Consecutive numeral-layer strokes (chronological); a pair is a boundary
/// when the strokes belong to different ground-truth groups (numeral slices,
/// or the stroke sets of overwrite / cross-out / scratch events).
inline std::vector<LabeledPair> segmenter_training_pairs(std::span<const LabeledDrawing> corpus,
                                                         const GeometryConfig& gcfg = {}) {
  std::vector<LabeledPair> out;
  for (const auto& ld : corpus) {
    const auto g = estimate_geometry(ld.drawing, gcfg);
    std::map<int, int> group;
    for (std::size_t k = 0; k < ld.truth.slices.size(); ++k)
      for (int id : ld.truth.slices[k].strokes) group[id] = static_cast<int>(k);
    for (std::size_t k = 0; k < ld.truth.events.size(); ++k)
      for (int id : ld.truth.events[k].strokes)
        if (!group.count(id)) group[id] = 1000 + static_cast<int>(k);
    int fresh = 100000;
    const Stroke* prev = nullptr;
    for (const auto& s : ld.drawing.strokes()) {
      const auto it = ld.truth.roles.find(s.id);
      if (it == ld.truth.roles.end() || !numeral_layer(it->second)) continue;
      if (!group.count(s.id)) group[s.id] = fresh++;
      if (prev) out.push_back({pair_features(*prev, s, g), group[prev->id] != group[s.id]});
      prev = &s;
    }
  }
  return out;
}

inline std::vector<Stroke> strokes_by_id(const Drawing& d, std::span<const int> ids) {
  std::vector<Stroke> out;
  for (int id : ids) out.push_back(d.stroke_by_id(id));
  std::stable_sort(out.begin(), out.end(), detail::chrono_less);
  return out;
}

/// Ground-truth numerals plus the ink of overwrite events (labeled with the
/// numeral that was actually written), at most `per_class` per label.
inline std::vector<RecognizerExample> recognizer_examples(std::span<const LabeledDrawing> corpus, int per_class) {
  std::map<int, int> count;
  std::vector<RecognizerExample> out;
  auto add = [&](const Drawing& d, std::span<const int> ids, int label) {
    if (label < 1 || label > kNumNumerals || ids.empty() || count[label] >= per_class) return;
    ++count[label];
    out.push_back({strokes_by_id(d, ids), label});
  };
  for (const auto& ld : corpus) {
    std::set<int> distorted;
    for (const auto& e : ld.truth.events)
      if (e.kind == "distort") distorted.insert(e.numeral);
    for (const auto& s : ld.truth.slices)
      if (!distorted.count(s.label)) add(ld.drawing, s.strokes, s.label);
    for (const auto& e : ld.truth.events)
      if (e.kind == "delayed_overwrite" || e.kind == "immediate_overwrite") add(ld.drawing, e.strokes, e.label);
  }
  return out;
}

/// Gold-segmented slices of one drawing with their labels, chronological.
inline std::pair<std::vector<STSlice>, std::vector<int>> gold_slices(const LabeledDrawing& ld, const ClockGeometry& g) {
  std::vector<std::pair<std::int64_t, std::size_t>> order;
  for (std::size_t k = 0; k < ld.truth.slices.size(); ++k) {
    std::int64_t t0 = std::numeric_limits<std::int64_t>::max();
    for (int id : ld.truth.slices[k].strokes) t0 = std::min(t0, ld.drawing.stroke_by_id(id).start_time());
    order.push_back({t0, k});
  }
  std::sort(order.begin(), order.end());
  std::vector<STSlice> slices;
  std::vector<int> labels;
  for (const auto& [t0, k] : order) {
    const auto& gs = ld.truth.slices[k];
    slices.push_back(make_slice(strokes_by_id(ld.drawing, gs.strokes), g, static_cast<int>(slices.size())));
    labels.push_back(gs.label);
  }
  return {std::move(slices), std::move(labels)};
}

inline ChainInstance gold_chain(const LabeledDrawing& ld, const CrfFeatureConfig& features, const GeometryConfig& gcfg = {}) {
  const auto g = estimate_geometry(ld.drawing, gcfg);
  const auto [slices, labels] = gold_slices(ld, g);
  return build_chain(slices, features, labels);
}

inline std::vector<ChainInstance> gold_chains(std::span<const LabeledDrawing> corpus, const CrfFeatureConfig& features,
                                              const GeometryConfig& gcfg = {}) {
  std::vector<ChainInstance> out;
  for (const auto& ld : corpus)
    if (!ld.truth.slices.empty()) out.push_back(gold_chain(ld, features, gcfg));
  return out;
}

inline SegmenterModel train_segmenter_on(std::span<const LabeledDrawing> corpus, const PipelineConfig& cfg) {
  const auto pairs = segmenter_training_pairs(corpus, cfg.geometry);
  return train_segmenter(pairs, cfg.segmenter);
}

inline RecognizerModel train_recognizer_on(std::span<const LabeledDrawing> corpus, const PipelineConfig& cfg) {
  return train_recognizer(recognizer_examples(corpus, cfg.recognizer_per_class), cfg.recognizer);
}

inline CrfModel train_crf_on(std::span<const LabeledDrawing> corpus, const PipelineConfig& cfg) {
  const auto chains = gold_chains(corpus, cfg.crf_features, cfg.geometry);
  return train_crf(chains, cfg.crf_features, cfg.crf_train).model;
}

inline Models train_models(std::span<const LabeledDrawing> corpus, const PipelineConfig& cfg = {}) {
  return {train_segmenter_on(corpus, cfg), train_recognizer_on(corpus, cfg), train_crf_on(corpus, cfg)};
}

}  // namespace clockst
