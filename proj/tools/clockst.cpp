// clockst: command-line front end for the clock-drawing pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "clockst/render.hpp"

namespace fs = std::filesystem;
using namespace clockst;

namespace {

struct Common {
  std::string config;
  PipelineConfig load() const { return config.empty() ? PipelineConfig{} : load_config(config); }
};

/// A preset name, "mixed" (healthy and impaired alternating), or a JSON file.
std::vector<SynthConfig> resolve_preset(const std::string& preset, std::uint64_t seed) {
  std::vector<SynthConfig> out;
  if (preset == "mixed") {
    out = {synth_preset("healthy"), synth_preset("impaired")};
  } else if (fs::path(preset).extension() == ".json") {
    out = {synth_config_from_json(detail::parse_text(detail::read_file(preset), preset))};
  } else {
    out = {synth_preset(preset)};
  }
  for (auto& c : out) c.seed = seed;
  return out;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

std::vector<fs::path> drawing_inputs(const fs::path& in) {
  std::vector<fs::path> files;
  if (fs::is_directory(in)) {
    for (const auto& e : fs::directory_iterator(in)) {
      const auto& p = e.path();
      if (e.is_regular_file() && p.extension() == ".json" && !is_ground_truth_file(p) && p.filename() != "manifest.json")
        files.push_back(p);
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(in)) {
    files.push_back(in);
  } else {
    throw IoError("input not found: " + in.string());
  }
  if (files.empty()) throw EmptyInputError("no drawings in " + in.string());
  return files;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clock-drawing interpretation: segmentation, overwrite analysis, CRF labeling and repair"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "pipeline configuration JSON");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  std::string preset = "healthy";
  int n = 100;
  std::uint64_t seed = 1;
  std::string out;
  synth->add_option("--preset", preset, "healthy|impaired|overwrite|repair|mixed or a config file")->capture_default_str();
  synth->add_option("--n", n, "number of drawings")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "base seed")->capture_default_str();
  synth->add_option("--out", out, "output directory")->required();

  // training
  std::string corpus;
  auto* tseg = app.add_subcommand("train-segmenter", "train the stroke-pair boundary classifier");
  tseg->add_option("--corpus", corpus, "labeled corpus directory")->required();
  tseg->add_option("--out", out, "model file")->required();
  std::vector<std::string> seg_features;
  tseg->add_option("--features", seg_features, "d_angle and/or d_time (default both)")->delimiter(',');

  auto* trec = app.add_subcommand("train-recognizer", "build the numeral recognizer");
  trec->add_option("--corpus", corpus, "labeled corpus directory")->required();
  trec->add_option("--out", out, "model file")->required();
  int per_class = -1;
  trec->add_option("--per-class", per_class, "exemplars kept per numeral");

  auto* tcrf = app.add_subcommand("train-crf", "train the slice-labeling CRF on gold segmentation");
  tcrf->add_option("--corpus", corpus, "labeled corpus directory")->required();
  tcrf->add_option("--out", out, "model file")->required();
  std::string crf_features = "img", crf_concat = "on";
  tcrf->add_option("--features", crf_features, "img|img+ctx")->check(CLI::IsMember({"img", "img+ctx"}))->capture_default_str();
  tcrf->add_option("--concat", crf_concat, "on|off")->check(CLI::IsMember({"on", "off"}))->capture_default_str();

  auto* tall = app.add_subcommand("train", "train all three models into a model directory");
  tall->add_option("--corpus", corpus, "labeled corpus directory")->required();
  tall->add_option("--out", out, "model directory")->required();

  // run
  auto* runc = app.add_subcommand("run", "interpret drawings and write per-drawing reports");
  std::string model_dir, in, report_dir;
  runc->add_option("--model-dir", model_dir, "directory with segmenter.json, recognizer.json, crf.json")->required();
  runc->add_option("--in", in, "drawing file or directory")->required();
  runc->add_option("--report", report_dir, "report directory")->required();

  // eval
  auto* evalc = app.add_subcommand("eval", "score the pipeline against ground truth");
  int cv = 0;
  bool gold = false;
  std::string ablation, eval_out;
  std::uint64_t fold_seed = 1;
  evalc->add_option("--corpus", corpus, "labeled corpus directory")->required();
  evalc->add_option("--model-dir", model_dir, "trained models (not needed with --cv or --ablation)");
  evalc->add_option("--cv", cv, "k-fold cross-validation, training per fold")->check(CLI::Range(2, 1000));
  evalc->add_flag("--gold-segmentation", gold, "label ground-truth slices with the CRF only");
  evalc->add_option("--ablation", ablation, "grid: 3 training cohorts x concat x context features")
      ->check(CLI::IsMember({"grid"}));
  evalc->add_option("--folds-seed", fold_seed, "seed of the fold assignment")->capture_default_str();
  evalc->add_option("--out", eval_out, "also write the JSON summary here");

  // render
  auto* rend = app.add_subcommand("render", "draw a report as SVG");
  std::string report_file;
  bool layers = false;
  rend->add_option("--report", report_file, "report JSON")->required();
  rend->add_flag("--layers", layers, "unpeeled overwrite layers instead of the whole drawing");
  rend->add_option("--out", out, "SVG file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig cfg = common.load();
    if (*synth) {
      const auto files = generate_corpus(resolve_preset(preset, seed), n, out);
      std::cout << "wrote " << files.size() << " drawings to " << out << "\n";
    } else if (*tseg) {
      PipelineConfig c = cfg;
      if (!seg_features.empty()) {
        c.segmenter.features = {false, false};
        for (const auto& f : seg_features) {
          if (f == "d_angle") c.segmenter.features[0] = true;
          else if (f == "d_time") c.segmenter.features[1] = true;
          else throw Error("unknown segmenter feature '" + f + "'");
        }
      }
      const auto data = load_corpus(corpus);
      detail::write_file(out, segmenter_to_json(train_segmenter_on(data, c)).dump(1) + "\n");
    } else if (*trec) {
      PipelineConfig c = cfg;
      if (per_class > 0) c.recognizer_per_class = per_class;
      const auto data = load_corpus(corpus);
      detail::write_file(out, recognizer_to_json(train_recognizer_on(data, c)).dump() + "\n");
    } else if (*tcrf) {
      PipelineConfig c = cfg;
      c.crf_features.context = crf_features == "img+ctx";
      c.crf_features.concat = crf_concat == "on";
      const auto data = load_corpus(corpus);
      const auto chains = gold_chains(data, c.crf_features, c.geometry);
      const auto res = train_crf(chains, c.crf_features, c.crf_train);
      std::fprintf(stderr, "crf: %zu chains, loss %.6f -> %.6f\n", chains.size(), res.loss_curve.front(),
                   res.loss_curve.back());
      detail::write_file(out, crf_to_json(res.model).dump() + "\n");
    } else if (*tall) {
      save_models(train_models(load_corpus(corpus), cfg), out);
      std::cout << "models written to " << out << "\n";
    } else if (*runc) {
      const Models models = load_models(model_dir);
      fs::create_directories(report_dir);
      int failed = 0;
      for (const auto& p : drawing_inputs(in)) {
        try {
          const Drawing d = load_drawing(p);
          std::optional<GroundTruth> truth;
          if (fs::exists(ground_truth_path(p))) truth = load_ground_truth(ground_truth_path(p));
          const auto r = run(d, models, cfg);
          save_report(build_report(r, models.recognizer, truth ? &*truth : nullptr),
                      fs::path(report_dir) / (p.stem().string() + ".report.json"));
        } catch (const Error& e) {
          ++failed;
          std::cerr << p.string() << ": " << e.what() << "\n";
        }
      }
      if (failed) return 1;
    } else if (*evalc) {
      const auto data = load_corpus(corpus);
      json summary;
      if (!ablation.empty()) {
        const auto rows = ablation_grid(data, cfg, cv ? cv : 10, fold_seed);
        std::cout << format_ablation(rows);
        summary = {{"ablation", ablation_to_json(rows)}, {"folds", cv ? cv : 10}};
      } else if (cv) {
        const auto rep = cross_validate(data, cfg, cv, fold_seed, gold);
        auto ms = [](const MeanSd& m) { return json{{"mean", m.mean}, {"sd", m.sd}}; };
        summary = {{"folds", cv},
                   {"gold_segmentation", gold},
                   {"segmentation", ms(rep.segmentation)},
                   {"identification", ms(rep.identification)},
                   {"combined", ms(rep.combined)},
                   {"per_fold", json::array()}};
        for (const auto& f : rep.folds) summary["per_fold"].push_back(eval_to_json(f));
        print_json(summary);
      } else {
        if (model_dir.empty()) throw Error("eval needs --model-dir unless --cv or --ablation is given");
        summary = eval_to_json(evaluate(data, load_models(model_dir), cfg, gold));
        summary["gold_segmentation"] = gold;
        print_json(summary);
      }
      if (!eval_out.empty()) detail::write_file(eval_out, summary.dump(2) + "\n");
    } else if (*rend) {
      const Report r = load_report(report_file);
      write_svg(layers ? render_layers(r) : render_drawing(r.drawing, &r), out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
