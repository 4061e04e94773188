#pragma once

// Per-drawing JSON report. The report embeds the drawing so it can be
// rendered without the original file.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clockst/eval.hpp"

namespace clockst {

struct ReportSlice {
  std::vector<int> strokes;
  int layer = 0;
  double angular_mid = 0.0;
  double angular_width = 0.0;
  std::int64_t t_begin = 0;
  std::int64_t t_end = 0;
  int label = 0;
  double posterior = 0.0;
  std::vector<double> posteriors;
  std::optional<int> truth_label;  // set when a ground-truth slice has the same strokes
  std::optional<bool> correct;     // set when ground truth is available
};

/// Ink removed from the final interpretation: overwritten layers found by
/// overwrite analysis ("overwrite") or while splitting a slice ("repair").
struct ReportLayer {
  std::string source;
  std::vector<int> strokes;
  int layer = 0;
  int by_layer = -1;
  std::int64_t t_begin = 0;
  double angular_mid = 0.0;
  double overlap = 0.0;
  int label = 0;
  double score = 0.0;
};

struct Report {
  Drawing drawing;
  ClockGeometry geometry;
  StrokePartition partition;
  std::vector<ReportSlice> slices;
  std::vector<ReportLayer> removed;
  std::vector<AugmentationEvent> augmentations;
  std::vector<RepairRecord> repair_log;
  int repair_iterations = 0;
  std::optional<EvalCounts> counts;
};

inline Report build_report(const PipelineResult& r, const RecognizerModel& recognizer,
                           const GroundTruth* truth = nullptr) {
  Report rep;
  rep.drawing = r.drawing;
  rep.geometry = r.geometry;
  rep.partition = r.partition;
  std::vector<int> gold;
  if (truth) gold = match_slices(r.slices, *truth);
  for (std::size_t i = 0; i < r.slices.size(); ++i) {
    const auto& s = r.slices[i];
    ReportSlice rs{s.stroke_ids(), s.layer, s.angular_mid.degrees(), s.angular_width, s.t_begin, s.t_end,
                   r.labeling.labels[i], r.labeling.map_posterior[i], r.labeling.posteriors[i], std::nullopt,
                   std::nullopt};
    if (truth) {
      if (gold[i] != 0) rs.truth_label = gold[i];
      rs.correct = gold[i] != 0 && gold[i] == rs.label;
    }
    rep.slices.push_back(std::move(rs));
  }
  for (const auto& e : r.overwrites)
    rep.removed.push_back({"overwrite", e.removed.stroke_ids(), e.removed.layer, e.by_layer, e.removed.t_begin,
                           e.removed.angular_mid.degrees(), e.overlap, e.classification.best_label,
                           e.classification.best_score});
  for (const auto& s : r.repair_dropped) {
    const auto sv = recognizer.recognize(s.strokes);
    rep.removed.push_back({"repair", s.stroke_ids(), s.layer, -1, s.t_begin, s.angular_mid.degrees(), 0.0,
                           sv.best_label, sv.best_score});
  }
  rep.augmentations = r.augmentations;
  rep.repair_log = r.repair_log;
  rep.repair_iterations = r.repair_iterations;
  if (truth) rep.counts = score_result(r, *truth);
  return rep;
}

namespace detail {

inline json vec_to_json(Vec2 v) { return json::array({v.x, v.y}); }
inline Vec2 vec_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace detail

inline json report_to_json(const Report& r) {
  json geom{{"center", detail::vec_to_json(r.geometry.center)},
            {"source", to_string(r.geometry.source)},
            {"clock_radius", r.geometry.clock_radius},
            {"bbox_diagonal", r.geometry.bbox_diagonal}};
  if (r.geometry.ellipse) {
    const auto& e = *r.geometry.ellipse;
    geom["ellipse"] = {{"center", detail::vec_to_json(e.center)},
                       {"semi_major", e.semi_major},
                       {"semi_minor", e.semi_minor},
                       {"rotation", e.rotation}};
  }
  json slices = json::array();
  for (const auto& s : r.slices) {
    json j{{"strokes", s.strokes},         {"layer", s.layer},   {"angular_mid", s.angular_mid},
           {"angular_width", s.angular_width}, {"t_begin", s.t_begin}, {"t_end", s.t_end},
           {"label", s.label},             {"posterior", s.posterior}, {"posteriors", s.posteriors}};
    if (s.truth_label) j["truth_label"] = *s.truth_label;
    if (s.correct) j["correct"] = *s.correct;
    slices.push_back(std::move(j));
  }
  json removed = json::array();
  for (const auto& l : r.removed)
    removed.push_back({{"source", l.source},
                       {"strokes", l.strokes},
                       {"layer", l.layer},
                       {"by_layer", l.by_layer},
                       {"t_begin", l.t_begin},
                       {"angular_mid", l.angular_mid},
                       {"overlap", l.overlap},
                       {"label", l.label},
                       {"score", l.score}});
  json aug = json::array();
  for (const auto& a : r.augmentations)
    aug.push_back({{"base_layer", a.base_layer},
                   {"absorbed_layer", a.absorbed_layer},
                   {"absorbed_strokes", a.absorbed_strokes},
                   {"overlap", a.overlap}});
  json log = json::array();
  for (const auto& e : r.repair_log)
    log.push_back({{"iteration", e.iteration},
                   {"kind", to_string(e.kind)},
                   {"site", e.site},
                   {"before", e.before},
                   {"after", e.after},
                   {"accepted", e.accepted},
                   {"note", e.note}});
  json j{{"format", kFileFormat},
         {"kind", "report"},
         {"drawing", drawing_to_json(r.drawing)},
         {"geometry", std::move(geom)},
         {"partition",
          {{"digits", r.partition.digit_strokes},
           {"circle", r.partition.circle_strokes},
           {"hands", r.partition.hand_strokes}}},
         {"slices", std::move(slices)},
         {"removed", std::move(removed)},
         {"augmentations", std::move(aug)},
         {"repair", {{"iterations", r.repair_iterations}, {"log", std::move(log)}}}};
  if (r.counts) j["accuracy"] = counts_to_json(*r.counts);
  return j;
}

inline Report report_from_json(const json& j) {
  detail::check_format(j, "report");
  if (j.value("kind", std::string()) != "report") throw ParseError("report: not a pipeline report");
  Report r;
  try {
    r.drawing = drawing_from_json(j.at("drawing"));
    const auto& g = j.at("geometry");
    r.geometry.center = detail::vec_from_json(g.at("center"));
    r.geometry.source = g.at("source").get<std::string>() == "ellipse-fit" ? GeometrySource::ellipse_fit
                                                                          : GeometrySource::centroid_fallback;
    r.geometry.clock_radius = g.at("clock_radius").get<double>();
    r.geometry.bbox_diagonal = g.at("bbox_diagonal").get<double>();
    if (g.contains("ellipse")) {
      const auto& e = g.at("ellipse");
      r.geometry.ellipse = Ellipse{detail::vec_from_json(e.at("center")), e.at("semi_major").get<double>(),
                                   e.at("semi_minor").get<double>(), e.at("rotation").get<double>()};
    }
    const auto& p = j.at("partition");
    r.partition = {p.at("digits").get<std::vector<int>>(), p.at("circle").get<std::vector<int>>(),
                   p.at("hands").get<std::vector<int>>()};
    for (const auto& s : j.at("slices")) {
      ReportSlice rs;
      rs.strokes = s.at("strokes").get<std::vector<int>>();
      rs.layer = s.at("layer").get<int>();
      rs.angular_mid = s.at("angular_mid").get<double>();
      rs.angular_width = s.at("angular_width").get<double>();
      rs.t_begin = s.at("t_begin").get<std::int64_t>();
      rs.t_end = s.at("t_end").get<std::int64_t>();
      rs.label = s.at("label").get<int>();
      rs.posterior = s.at("posterior").get<double>();
      rs.posteriors = s.at("posteriors").get<std::vector<double>>();
      if (s.contains("truth_label")) rs.truth_label = s.at("truth_label").get<int>();
      if (s.contains("correct")) rs.correct = s.at("correct").get<bool>();
      r.slices.push_back(std::move(rs));
    }
    for (const auto& l : j.at("removed"))
      r.removed.push_back({l.at("source").get<std::string>(), l.at("strokes").get<std::vector<int>>(),
                           l.at("layer").get<int>(), l.at("by_layer").get<int>(), l.at("t_begin").get<std::int64_t>(),
                           l.at("angular_mid").get<double>(), l.at("overlap").get<double>(), l.at("label").get<int>(),
                           l.at("score").get<double>()});
    for (const auto& a : j.at("augmentations"))
      r.augmentations.push_back({a.at("base_layer").get<int>(), a.at("absorbed_layer").get<int>(),
                                 a.at("absorbed_strokes").get<std::vector<int>>(), a.at("overlap").get<double>()});
    const auto& rep = j.at("repair");
    r.repair_iterations = rep.at("iterations").get<int>();
    for (const auto& e : rep.at("log")) {
      RepairRecord rr;
      rr.iteration = e.at("iteration").get<int>();
      rr.kind = e.at("kind").get<std::string>() == "under" ? ValleyKind::under : ValleyKind::over;
      rr.site = e.at("site").get<std::vector<std::vector<int>>>();
      rr.before = e.at("before").get<double>();
      rr.after = e.at("after").get<double>();
      rr.accepted = e.at("accepted").get<bool>();
      rr.note = e.at("note").get<std::string>();
      r.repair_log.push_back(std::move(rr));
    }
    if (j.contains("accuracy")) {
      const auto& a = j.at("accuracy");
      r.counts = EvalCounts{a.at("truth_slices").get<long>(), a.at("matched").get<long>(), a.at("correct").get<long>()};
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  for (int id : r.partition.digit_strokes) r.drawing.stroke_by_id(id);
  return r;
}

inline void save_report(const Report& r, const std::filesystem::path& path) {
  detail::write_file(path, report_to_json(r).dump(1) + "\n");
}

inline Report load_report(const std::filesystem::path& path) {
  return report_from_json(detail::parse_text(detail::read_file(path), path.string()));
}

}  // namespace clockst
