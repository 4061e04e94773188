#pragma once

// Corpus-level scoring. A predicted slice matches a ground-truth slice only
// when their stroke sets are identical.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "clockst/pipeline.hpp"
#include "clockst/synth.hpp"

namespace clockst {

struct EvalCounts {
  long truth = 0;    // ground-truth slices
  long matched = 0;  // exactly segmented
  long correct = 0;  // exactly segmented and correctly labeled

  EvalCounts& operator+=(const EvalCounts& o) {
    truth += o.truth;
    matched += o.matched;
    correct += o.correct;
    return *this;
  }
  double segmentation() const { return truth ? static_cast<double>(matched) / static_cast<double>(truth) : 1.0; }
  double identification() const { return matched ? static_cast<double>(correct) / static_cast<double>(matched) : 1.0; }
  double combined() const { return truth ? static_cast<double>(correct) / static_cast<double>(truth) : 1.0; }
};

/// Per-slice correctness of a prediction: label of the ground-truth slice with
/// the identical stroke set, or 0 when none matches.
inline std::vector<int> match_slices(std::span<const STSlice> slices, const GroundTruth& truth) {
  std::map<std::vector<int>, int> gold;
  for (const auto& s : truth.slices) {
    auto ids = s.strokes;
    std::sort(ids.begin(), ids.end());
    gold[ids] = s.label;
  }
  std::vector<int> out;
  for (const auto& s : slices) {
    auto ids = s.stroke_ids();
    std::sort(ids.begin(), ids.end());
    const auto it = gold.find(ids);
    out.push_back(it == gold.end() ? 0 : it->second);
  }
  return out;
}

inline EvalCounts score_slices(std::span<const STSlice> slices, std::span<const int> labels, const GroundTruth& truth) {
  EvalCounts c;
  c.truth = static_cast<long>(truth.slices.size());
  const auto gold = match_slices(slices, truth);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == 0) continue;
    ++c.matched;
    if (labels[i] == gold[i]) ++c.correct;
  }
  return c;
}

inline EvalCounts score_result(const PipelineResult& r, const GroundTruth& truth) {
  return score_slices(r.slices, r.labeling.labels, truth);
}

struct EvalReport {
  EvalCounts overall;
  std::map<std::string, EvalCounts> by_cohort;
  int drawings = 0;

  void add(const EvalCounts& c, Cohort cohort) {
    overall += c;
    by_cohort[to_string(cohort)] += c;
    ++drawings;
  }
};

inline json counts_to_json(const EvalCounts& c) {
  return {{"truth_slices", c.truth},
          {"matched", c.matched},
          {"correct", c.correct},
          {"segmentation", c.segmentation()},
          {"identification", c.identification()},
          {"combined", c.combined()}};
}

inline json eval_to_json(const EvalReport& r) {
  json j{{"drawings", r.drawings}, {"overall", counts_to_json(r.overall)}, {"by_cohort", json::object()}};
  for (const auto& [k, v] : r.by_cohort) j["by_cohort"][k] = counts_to_json(v);
  return j;
}

/// Full pipeline on every drawing, or CRF labels over ground-truth slices when
/// `gold_segmentation` is set.
inline EvalReport evaluate(std::span<const LabeledDrawing> corpus, const Models& models, const PipelineConfig& cfg,
                           bool gold_segmentation = false) {
  EvalReport rep;
  for (const auto& ld : corpus) {
    if (gold_segmentation) {
      if (ld.truth.slices.empty()) continue;
      const auto g = estimate_geometry(ld.drawing, cfg.geometry);
      const auto [slices, labels] = gold_slices(ld, g);
      const auto lab = label_slices(models.crf, slices);
      rep.add(score_slices(slices, lab.labels, ld.truth), ld.drawing.meta().cohort);
    } else {
      rep.add(score_result(run(ld.drawing, models, cfg), ld.truth), ld.drawing.meta().cohort);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

inline MeanSd mean_sd(std::span<const double> v) {
  if (v.empty()) return {};
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0};
}

/// Drawing-level fold assignment from a seeded shuffle.
inline std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error("cross-validation needs at least 2 folds");
  if (n < static_cast<std::size_t>(folds)) throw Error("fewer drawings than folds");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  std::vector<int> fold(n);
  for (std::size_t k = 0; k < n; ++k) fold[idx[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  return fold;
}

struct CvReport {
  std::vector<EvalReport> folds;
  MeanSd segmentation, identification, combined;
};

inline CvReport cross_validate(std::span<const LabeledDrawing> corpus, const PipelineConfig& cfg, int folds,
                               std::uint64_t seed, bool gold_segmentation = false) {
  const auto fold = fold_assignment(corpus.size(), folds, seed);
  CvReport cv;
  std::vector<double> seg, id, comb;
  for (int f = 0; f < folds; ++f) {
    std::vector<LabeledDrawing> train, test;
    for (std::size_t i = 0; i < corpus.size(); ++i) (fold[i] == f ? test : train).push_back(corpus[i]);
    Models m;
    if (gold_segmentation) {
      m.crf = train_crf_on(train, cfg);
    } else {
      m = train_models(train, cfg);
    }
    cv.folds.push_back(evaluate(test, m, cfg, gold_segmentation));
    seg.push_back(cv.folds.back().overall.segmentation());
    id.push_back(cv.folds.back().overall.identification());
    comb.push_back(cv.folds.back().overall.combined());
  }
  cv.segmentation = mean_sd(seg);
  cv.identification = mean_sd(id);
  cv.combined = mean_sd(comb);
  return cv;
}

// ---------------------------------------------------------------------------
// Context ablation (gold segmentation, CRF only)

struct AblationRow {
  std::string training;  // healthy | impaired | both
  bool concat = false;
  bool context = false;
  MeanSd overall, healthy, impaired;
};

/// 3 training cohorts x concatenation x context features, each scored by
/// k-fold CV over the whole corpus. The training side of every fold is
/// restricted to the row's cohort; the test side always holds all cohorts.
inline std::vector<AblationRow> ablation_grid(std::span<const LabeledDrawing> corpus, const PipelineConfig& cfg,
                                              int folds, std::uint64_t seed) {
  const auto fold = fold_assignment(corpus.size(), folds, seed);
  std::vector<AblationRow> rows;
  for (bool context : {false, true}) {
    CrfFeatureConfig base = cfg.crf_features;
    base.context = context;
    base.concat = true;
    std::vector<ChainInstance> chains;
    std::vector<std::size_t> owner;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus[i].truth.slices.empty()) continue;
      chains.push_back(gold_chain(corpus[i], base, cfg.geometry));
      owner.push_back(i);
    }
    for (const std::string training : {"healthy", "impaired", "both"})
      for (bool concat : {false, true}) {
        CrfFeatureConfig fc = base;
        fc.concat = concat;
        std::vector<double> all, healthy, impaired;
        for (int f = 0; f < folds; ++f) {
          std::vector<ChainInstance> train, test;
          std::vector<Cohort> test_cohort;
          for (std::size_t k = 0; k < chains.size(); ++k) {
            ChainInstance c = chains[k];
            c.concat = concat;
            const Cohort co = corpus[owner[k]].drawing.meta().cohort;
            if (fold[owner[k]] == f) {
              test.push_back(std::move(c));
              test_cohort.push_back(co);
            } else if (training == "both" || to_string(co) == training) {
              train.push_back(std::move(c));
            }
          }
          if (train.empty() || test.empty()) continue;
          const auto model = train_crf(train, fc, cfg.crf_train).model;
          long n_all = 0, ok_all = 0, n_h = 0, ok_h = 0, n_i = 0, ok_i = 0;
          for (std::size_t k = 0; k < test.size(); ++k) {
            const auto y = map_decode(model, test[k]);
            for (std::size_t i = 0; i < y.size(); ++i) {
              const bool ok = y[i] == test[k].labels[i];
              ++n_all;
              ok_all += ok;
              if (test_cohort[k] == Cohort::healthy) {
                ++n_h;
                ok_h += ok;
              } else if (test_cohort[k] == Cohort::impaired) {
                ++n_i;
                ok_i += ok;
              }
            }
          }
          auto rate = [](long ok, long n) { return n ? static_cast<double>(ok) / static_cast<double>(n) : 0.0; };
          all.push_back(rate(ok_all, n_all));
          if (n_h) healthy.push_back(rate(ok_h, n_h));
          if (n_i) impaired.push_back(rate(ok_i, n_i));
        }
        rows.push_back({training, concat, context, mean_sd(all), mean_sd(healthy), mean_sd(impaired)});
      }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const AblationRow& a, const AblationRow& b) {
    static const std::map<std::string, int> rank{{"healthy", 0}, {"impaired", 1}, {"both", 2}};
    if (a.training != b.training) return rank.at(a.training) < rank.at(b.training);
    if (a.concat != b.concat) return !a.concat;
    return !a.context && b.context;
  });
  return rows;
}

inline std::string format_ablation(std::span<const AblationRow> rows) {
  std::string out = "training  features  ang+stk  overall (sd)        healthy (sd)        impaired (sd)\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-9s %-9s %-8s %6.2f%% (%.4f)    %6.2f%% (%.4f)    %6.2f%% (%.4f)\n", r.training.c_str(),
                  r.concat ? "concat" : "single", r.context ? "Y" : "", 100.0 * r.overall.mean, r.overall.sd,
                  100.0 * r.healthy.mean, r.healthy.sd, 100.0 * r.impaired.mean, r.impaired.sd);
    out += buf;
  }
  return out;
}

inline json ablation_to_json(std::span<const AblationRow> rows) {
  json j = json::array();
  auto ms = [](const MeanSd& m) { return json{{"mean", m.mean}, {"sd", m.sd}}; };
  for (const auto& r : rows)
    j.push_back({{"training", r.training},
                 {"concat", r.concat},
                 {"context", r.context},
                 {"overall", ms(r.overall)},
                 {"healthy", ms(r.healthy)},
                 {"impaired", ms(r.impaired)}});
  return j;
}

}  // namespace clockst
