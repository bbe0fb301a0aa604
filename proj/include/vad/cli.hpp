#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vad/checkpoint.hpp"
#include "vad/dataset.hpp"
#include "vad/experiments.hpp"
#include "vad/localize.hpp"
#include "vad/runconfig.hpp"
#include "vad/series.hpp"
#include "vad/streaming.hpp"

namespace vad {

// Score curve rendered as an image: blue raw curve over [min,max], frames
// labeled anomalous shaded red. Meant for quick visual checks, not figures.
inline Tensor<float> plot_score_curve(const std::vector<double>& values,
                                      const std::vector<int>& labels, int h = 160, int w = 640) {
  Tensor<float> img({3, h, w});
  img.fill(1.0f);
  if (values.empty()) return img;

  for (int x = 0; x < w; ++x) {
    const size_t i = values.size() == 1
                         ? 0
                         : static_cast<size_t>(static_cast<double>(x) / (w - 1) * (values.size() - 1));
    if (i < labels.size() && labels[i] != 0)
      for (int y = 0; y < h; ++y) {
        img.at(0, y, x) = 1.0f;
        img.at(1, y, x) = 0.85f;
        img.at(2, y, x) = 0.85f;
      }
  }

  double mn = values[0], mx = values[0];
  for (double v : values) mn = std::min(mn, v), mx = std::max(mx, v);
  const double span = mx > mn ? mx - mn : 1.0;
  auto px = [&](size_t i) {
    return values.size() == 1 ? 0.0 : static_cast<double>(i) / (values.size() - 1) * (w - 1);
  };
  auto py = [&](double v) { return (1.0 - (v - mn) / span) * (h - 1); };
  for (size_t i = 1; i < values.size(); ++i)
    draw_line_set(img, px(i - 1), py(values[i - 1]), px(i), py(values[i]), 0.1f, 0.2f, 0.8f);
  return img;
}

namespace cli_detail {

// Common flags shared across subcommands. Precedence: defaults, then preset,
// then config file, then explicit command-line flags.
struct CommonFlags {
  std::string config_path, preset, out_dir, checkpoint_path, metric, distortion;
  std::string train_dir, test_dir;
  uint64_t seed = 1;
  int window = 0;
  bool localize = false;
  int max_videos = 0, max_frames = 0;

  CLI::Option *o_config = nullptr, *o_preset = nullptr, *o_out = nullptr, *o_ckpt = nullptr,
              *o_metric = nullptr, *o_seed = nullptr, *o_window = nullptr, *o_localize = nullptr,
              *o_train = nullptr, *o_test = nullptr, *o_distort = nullptr, *o_maxv = nullptr,
              *o_maxf = nullptr;

  void attach(CLI::App* app) {
    o_config = app->add_option("--config", config_path, "JSON config file");
    o_preset = app->add_option("--preset", preset, "named dataset recipe");
    o_out = app->add_option("--out", out_dir, "output directory");
    o_ckpt = app->add_option("--checkpoint", checkpoint_path, "model checkpoint to load");
    o_metric = app->add_option(
        "--metric", metric, "latent_mse | latent_cosine | pixel_prediction | pixel_reconstruction");
    o_seed = app->add_option("--seed", seed, "RNG seed");
    o_window = app->add_option("--window", window, "normalization window (0 = whole series)");
    o_localize = app->add_flag("--localize", localize, "emit anomalous-region boxes");
    o_train = app->add_option("--train-dir", train_dir, "training dataset root");
    o_test = app->add_option("--test-dir", test_dir, "test dataset root");
    o_distort = app->add_option("--distort", distortion,
                                "test-time distortion, e.g. brightness=0.5,rain=heavy");
    o_maxv = app->add_option("--max-videos", max_videos, "cap videos loaded per dataset");
    o_maxf = app->add_option("--max-frames", max_frames, "cap frames loaded per video");
  }

  RunConfig build() const {
    RunConfig cfg;
    try {
      if (o_preset->count()) apply_preset(cfg, preset);
      if (o_config->count()) cfg = load_run_config(config_path, std::move(cfg));
      if (o_out->count()) cfg.out_dir = out_dir;
      if (o_ckpt->count()) cfg.checkpoint = checkpoint_path;
      if (o_seed->count()) cfg.schedule.seed = seed;
      if (o_window->count()) cfg.window = window;
      if (o_localize->count()) cfg.localize = localize;
      if (o_train->count()) cfg.train_dir = train_dir;
      if (o_test->count()) cfg.test_dir = test_dir;
      if (o_maxv->count()) cfg.max_videos = max_videos;
      if (o_maxf->count()) cfg.max_frames = max_frames;
      if (o_metric->count()) cfg.metric = parse_metric(metric);
      if (o_distort->count()) cfg.distortion = parse_distortion(distortion);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    cfg.validate();
    return cfg;
  }
};

inline std::vector<Video> load_dataset(const RunConfig& cfg, const std::string& dir,
                                       const char* which, bool distorted) {
  if (dir.empty()) throw ConfigError(std::string(which) + " dataset directory not set");
  LoadOptions opt;
  opt.height = cfg.model.height;
  opt.width = cfg.model.width;
  if (distorted) opt.distortion = cfg.distortion;
  opt.max_videos = cfg.max_videos;
  opt.max_frames = cfg.max_frames;
  return load_videos(dir, opt);
}

inline Checkpoint<float> load_model_or_fail(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw ConfigError("--checkpoint is required for this command");
  return load_checkpoint<float>(cfg.checkpoint);
}

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

// ----------------------------------------------------------------------------
// Subcommand bodies. Each returns the list of files it wrote (relative to the
// output directory) for the manifest.
// ----------------------------------------------------------------------------
inline std::vector<std::string> cmd_train(const RunConfig& cfg, std::ostream& log) {
  std::vector<Video> raw = load_dataset(cfg, cfg.train_dir, "training", /*distorted=*/false);
  BackgroundModel bg = build_background(raw, cfg.model.height, cfg.model.width);
  Model<float> model(cfg.model, cfg.schedule.seed);
  TrainResult result = train_model(model, bg, residualize(raw, bg), cfg.schedule, cfg.out_dir, &log);
  if (result.diverged) log << "warning: training diverged; final checkpoint is the last good epoch\n";
  log << "best epoch " << result.best_epoch << " total loss " << fmt_float(result.best_total) << "\n";
  std::vector<std::string> outputs = {"loss.csv", "model_final.ckpt"};
  if (!result.best_checkpoint.empty()) outputs.push_back("model_best.ckpt");
  return outputs;
}

inline std::vector<std::string> cmd_score(const RunConfig& cfg, std::ostream& log) {
  Checkpoint<float> ckpt = load_model_or_fail(cfg);
  std::vector<Video> raw = load_dataset(cfg, cfg.test_dir, "test", /*distorted=*/true);
  std::vector<std::string> outputs;

  std::vector<AnomalyScoreSeries> all;
  std::vector<std::pair<std::pair<std::string, int>, Region>> region_rows;
  for (const Video& rv : raw) {
    Video res;
    res.id = rv.id;
    res.labels = rv.labels;
    for (const Tensor<float>& f : rv.frames) res.frames.push_back(preprocess_frame(f, ckpt.bg));
    all.push_back(score_video(*ckpt.model, res, cfg.metric, 1, cfg.window_opt()));

    if (cfg.localize) {
      // Boxes come from the pixel prediction error regardless of the scoring
      // metric; latent codes carry no spatial detail at full resolution.
      const int k = ckpt.cfg.k, t_off = ckpt.cfg.t_offset;
      const int n = sample_count(static_cast<int>(res.frames.size()), k, t_off, 1);
      std::vector<typename Model<float>::Encoded> enc;
      for (const Tensor<float>& f : res.frames) enc.push_back(ckpt.model->encode(f));
      for (int s = 0; s < n; ++s) {
        std::vector<const Tensor<float>*> codes;
        for (int j = 0; j < k; ++j) codes.push_back(&enc[static_cast<size_t>(s + j)].latent());
        Tensor<float> zhat = ckpt.model->predict_latent(codes);
        Tensor<float> pred = ckpt.model->decode(zhat, enc[static_cast<size_t>(s + k - 1)].pyramid);
        const int target = s + k - 1 + t_off;
        Tensor<float> err = squared_error_map(pred, res.frames[static_cast<size_t>(target)]);
        std::vector<double> flat(err.data.begin(), err.data.end());
        const double thr = quantile(flat, cfg.localize_quantile);
        for (const Region& r : localize(err, thr, cfg.localize_min_area))
          region_rows.push_back({{rv.id, target}, r});
      }
    }
    log << rv.id << ": " << all.back().raw.size() << " scores\n";
  }
  write_score_csv(out_path(cfg, "scores.csv"), all);
  outputs.push_back("scores.csv");
  if (cfg.localize) {
    write_region_csv(out_path(cfg, "regions.csv"), region_rows);
    outputs.push_back("regions.csv");
  }
  return outputs;
}

inline std::vector<std::string> cmd_eval(const RunConfig& cfg, bool plot, std::ostream& log) {
  Checkpoint<float> ckpt = load_model_or_fail(cfg);
  std::vector<Video> raw = load_dataset(cfg, cfg.test_dir, "test", /*distorted=*/true);
  std::vector<Video> residual = residualize(raw, ckpt.bg);
  std::vector<std::string> outputs;

  std::vector<AnomalyScoreSeries> all;
  std::vector<double> pooled_norm, pooled_raw, video_aucs;
  std::vector<int> pooled_labels;
  nlohmann::json per_video = nlohmann::json::array();
  for (const Video& v : residual) {
    AnomalyScoreSeries s = score_video(*ckpt.model, v, cfg.metric, 1, cfg.window_opt());
    std::vector<int> labels = series_labels(s, v);
    pooled_norm.insert(pooled_norm.end(), s.normalized.begin(), s.normalized.end());
    pooled_raw.insert(pooled_raw.end(), s.raw.begin(), s.raw.end());
    pooled_labels.insert(pooled_labels.end(), labels.begin(), labels.end());

    nlohmann::json row{{"video_id", v.id}, {"frames", s.raw.size()}};
    const bool mixed = std::count(labels.begin(), labels.end(), 1) > 0 &&
                       std::count(labels.begin(), labels.end(), 0) > 0;
    if (mixed) {
      const double a = frame_auc(s.normalized, labels);
      video_aucs.push_back(a);
      row["auc"] = a;
    }
    per_video.push_back(std::move(row));

    if (plot) {
      const std::string name = "curve_" + v.id + ".ppm";
      save_ppm(out_path(cfg, name), plot_score_curve(s.normalized, labels));
      outputs.push_back(name);
    }
    all.push_back(std::move(s));
  }
  write_score_csv(out_path(cfg, "scores.csv"), all);
  outputs.push_back("scores.csv");

  nlohmann::json summary{{"metric", metric_name(cfg.metric)},
                         {"frames", pooled_labels.size()},
                         {"per_video", std::move(per_video)}};
  summary["pooled_auc_normalized"] = frame_auc(pooled_norm, pooled_labels);
  summary["pooled_auc_raw"] = frame_auc(pooled_raw, pooled_labels);
  if (!video_aucs.empty()) {
    AucResult agg = multi_run_auc(video_aucs);
    summary["mean_video_auc"] = agg.auc;
    summary["mean_video_auc_ci95"] = agg.ci95_halfwidth;
    summary["videos_with_both_classes"] = agg.n_runs;
  }
  {
    std::ofstream out(out_path(cfg, "eval.json"));
    out << summary.dump(2) << "\n";
  }
  outputs.push_back("eval.json");
  log << "pooled AUC (normalized scores): " << fmt_float(summary["pooled_auc_normalized"].get<double>())
      << "\n";
  return outputs;
}

inline std::vector<std::string> cmd_sweep(const RunConfig& cfg, const std::vector<double>& brightness,
                                          const std::vector<std::string>& rain, double blur,
                                          const std::vector<std::string>& metric_names,
                                          std::ostream& log) {
  Checkpoint<float> ckpt = load_model_or_fail(cfg);
  std::vector<Video> raw = load_dataset(cfg, cfg.test_dir, "test", /*distorted=*/false);
  std::vector<Metric> metrics;
  for (const std::string& m : metric_names) metrics.push_back(parse_metric(m));

  SweepResult sweep = robustness_sweep(*ckpt.model, ckpt.bg, raw, brightness, rain, metrics, blur, &log);
  write_sweep_csv(out_path(cfg, "sweep.csv"), sweep);
  for (const SweepRow& row : sweep.rows)
    if (row.error.empty())
      log << row.condition[0].second << " rain=" << row.condition[1].second << " " << row.metric
          << ": AUC " << fmt_float(row.result.auc) << "\n";
  return {"sweep.csv"};
}

inline std::vector<std::string> cmd_lowfps(const RunConfig& cfg, const std::vector<int>& d_values,
                                           const std::vector<std::string>& metric_names,
                                           std::ostream& log) {
  std::vector<Video> raw_train = load_dataset(cfg, cfg.train_dir, "training", /*distorted=*/false);
  std::vector<Video> raw_test = load_dataset(cfg, cfg.test_dir, "test", /*distorted=*/true);
  std::vector<Metric> metrics;
  for (const std::string& m : metric_names) metrics.push_back(parse_metric(m));

  SweepResult sweep =
      lowfps_experiment(raw_train, raw_test, d_values, cfg.model, cfg.schedule, metrics, &log);
  write_sweep_csv(out_path(cfg, "lowfps.csv"), sweep);
  for (const SweepRow& row : sweep.rows)
    if (row.error.empty())
      log << "d=" << row.condition[0].second << " " << row.metric << ": AUC "
          << fmt_float(row.result.auc) << "\n";
  return {"lowfps.csv"};
}

inline std::vector<std::string> cmd_bench(const RunConfig& cfg, int warmup, int video_index,
                                          std::ostream& log) {
  Checkpoint<float> ckpt = load_model_or_fail(cfg);
  std::vector<Video> raw = load_dataset(cfg, cfg.test_dir, "test", /*distorted=*/true);
  if (video_index < 0 || video_index >= static_cast<int>(raw.size()))
    throw ConfigError("--video index out of range (dataset has " + std::to_string(raw.size()) +
                      " videos)");
  const Video& v = raw[static_cast<size_t>(video_index)];
  BenchmarkResult r = benchmark_stream(*ckpt.model, ckpt.bg, v, cfg.metric, warmup);

  auto report_json = [](const ThroughputReport& t) {
    return nlohmann::json{{"frames", t.frames},
                          {"wall_seconds", t.wall_seconds},
                          {"fps", t.fps},
                          {"mean_preprocess_ms", t.mean_preprocess_ms},
                          {"mean_encode_ms", t.mean_encode_ms},
                          {"mean_predict_ms", t.mean_predict_ms},
                          {"mean_score_ms", t.mean_score_ms},
                          {"encode_count", t.encode_count}};
  };
  nlohmann::json j{{"video_id", v.id},
                   {"warmup_frames", warmup},
                   {"cached", report_json(r.cached)},
                   {"naive", report_json(r.naive)},
                   {"speedup", r.speedup}};
  {
    std::ofstream out(out_path(cfg, "bench.json"));
    out << j.dump(2) << "\n";
  }
  log << "cached " << fmt_float(r.cached.fps) << " fps, naive " << fmt_float(r.naive.fps)
      << " fps, speedup " << fmt_float(r.speedup) << "x\n";
  return {"bench.json"};
}

struct SynthFlags {
  std::vector<std::string> objects = {"4", "7", "circle"};
  std::vector<double> speeds = {2.0};
  std::vector<std::string> normal_objects = {"4", "7"};
  std::vector<double> normal_speeds = {2.0};
  int videos = 8, frames = 40, size = 64, glyph = 28;
};

inline std::vector<std::string> cmd_synth(const RunConfig& cfg, const SynthFlags& f,
                                          std::ostream& log) {
  SyntheticSpec spec;
  spec.width = f.size;
  spec.height = f.size;
  spec.frames = f.frames;
  spec.videos = f.videos;
  spec.glyph_size = f.glyph;
  spec.objects = f.objects;
  spec.speeds = f.speeds;
  spec.normal_objects = f.normal_objects;
  spec.normal_speeds = f.normal_speeds;
  spec.seed = cfg.schedule.seed;
  std::vector<Video> videos = generate_synthetic(spec);
  save_videos(cfg.out_dir, videos);
  log << "wrote " << videos.size() << " videos under " << cfg.out_dir << "\n";
  std::vector<std::string> outputs = {"labels.csv"};
  for (const Video& v : videos) outputs.push_back(v.id + "/");
  return outputs;
}

struct MnistFlags {
  int epochs = 0;  // 0 keeps the experiment default
  int train_videos = 0, test_videos = 0, frames = 0;
};

inline std::vector<std::string> cmd_mnist_exp(const RunConfig& cfg, const MnistFlags& f,
                                              std::ostream& log) {
  MovingObjectExperimentConfig exp = MovingObjectExperimentConfig::make_default();
  exp.seed = cfg.schedule.seed;
  exp.schedule.seed = cfg.schedule.seed;
  if (f.epochs > 0) {
    exp.schedule.total_epochs = f.epochs;
    exp.schedule.phase_switch_epoch = std::max(1, f.epochs / 2);
  }
  if (f.train_videos > 0) exp.train_videos = f.train_videos;
  if (f.test_videos > 0) exp.test_videos_per_group = f.test_videos;
  if (f.frames > 0) {
    exp.train_frames = f.frames;
    exp.test_frames = f.frames;
  }

  MovingObjectSetup setup = run_moving_object_training(exp, cfg.out_dir, &log);
  MovingObjectResult r = evaluate_moving_object(setup, cfg.metric);
  log << "unseen shape AUC " << fmt_float(r.auc_unseen_shape) << ", unseen speed AUC "
      << fmt_float(r.auc_unseen_speed) << "\n";

  nlohmann::json j{{"metric", metric_name(cfg.metric)},
                   {"auc_unseen_shape", r.auc_unseen_shape},
                   {"auc_unseen_speed", r.auc_unseen_speed},
                   {"mean_raw_normal", r.mean_raw_normal},
                   {"mean_raw_shape", r.mean_raw_shape},
                   {"mean_raw_speed", r.mean_raw_speed}};
  {
    std::ofstream out(out_path(cfg, "mnist_exp.json"));
    out << j.dump(2) << "\n";
  }

  std::vector<const Video*> panel;
  for (size_t i = 0; i < setup.test_normal.size() && i < 1; ++i) panel.push_back(&setup.test_normal[i]);
  for (size_t i = 0; i < setup.test_shape.size() && i < 1; ++i) panel.push_back(&setup.test_shape[i]);
  for (size_t i = 0; i < setup.test_speed.size() && i < 1; ++i) panel.push_back(&setup.test_speed[i]);
  save_ppm(out_path(cfg, "qualitative.ppm"), qualitative_grid(*setup.model, setup.bg, panel));

  return {"mnist_exp.json", "qualitative.ppm", "loss.csv", "model_final.ckpt"};
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
  using namespace cli_detail;
  CLI::App app{"decoupled appearance/motion video anomaly detector"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    CommonFlags flags;
    std::function<std::vector<std::string>(const RunConfig&, std::ostream&)> run;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  auto add_sub = [&](const std::string& name, const std::string& desc) -> Sub& {
    auto sub = std::make_unique<Sub>();
    sub->app = app.add_subcommand(name, desc);
    sub->flags.attach(sub->app);
    subs.push_back(std::move(sub));
    return *subs.back();
  };

  {
    Sub& s = add_sub("train", "train a model on a directory of videos");
    s.run = [](const RunConfig& cfg, std::ostream& log) { return cmd_train(cfg, log); };
  }
  {
    Sub& s = add_sub("score", "score videos with a trained model");
    s.run = [](const RunConfig& cfg, std::ostream& log) { return cmd_score(cfg, log); };
  }
  {
    Sub& s = add_sub("eval", "score labeled videos and report frame-level AUC");
    auto plot = std::make_shared<bool>(false);
    s.app->add_flag("--plot", *plot, "write per-video score curve images");
    s.run = [plot](const RunConfig& cfg, std::ostream& log) { return cmd_eval(cfg, *plot, log); };
  }
  {
    Sub& s = add_sub("sweep", "robustness sweep over input distortions");
    auto brightness = std::make_shared<std::vector<double>>(std::vector<double>{0.5, 0.75, 1.0, 1.25, 1.5});
    auto rain = std::make_shared<std::vector<std::string>>(std::vector<std::string>{"none", "heavy", "torrential"});
    auto blur = std::make_shared<double>(0.0);
    auto metrics = std::make_shared<std::vector<std::string>>(
        std::vector<std::string>{"latent_mse", "pixel_prediction"});
    s.app->add_option("--brightness", *brightness, "brightness factors")->delimiter(',');
    s.app->add_option("--rain", *rain, "rain levels: none | heavy | torrential")->delimiter(',');
    s.app->add_option("--blur", *blur, "Gaussian blur sigma applied in every condition");
    s.app->add_option("--metrics", *metrics, "metrics to evaluate per condition")->delimiter(',');
    s.run = [=](const RunConfig& cfg, std::ostream& log) {
      return cmd_sweep(cfg, *brightness, *rain, *blur, *metrics, log);
    };
  }
  {
    Sub& s = add_sub("lowfps", "train and evaluate at reduced frame rates");
    auto d_values = std::make_shared<std::vector<int>>(std::vector<int>{1, 2, 4});
    auto metrics = std::make_shared<std::vector<std::string>>(
        std::vector<std::string>{"latent_mse", "pixel_prediction"});
    s.app->add_option("--d", *d_values, "temporal subsampling factors")->delimiter(',');
    s.app->add_option("--metrics", *metrics, "metrics to evaluate per factor")->delimiter(',');
    s.run = [=](const RunConfig& cfg, std::ostream& log) {
      return cmd_lowfps(cfg, *d_values, *metrics, log);
    };
  }
  {
    Sub& s = add_sub("bench", "compare cached streaming against naive re-encoding");
    auto warmup = std::make_shared<int>(16);
    auto video = std::make_shared<int>(0);
    s.app->add_option("--warmup", *warmup, "frames excluded from timing");
    s.app->add_option("--video", *video, "index of the video to stream");
    s.run = [=](const RunConfig& cfg, std::ostream& log) {
      return cmd_bench(cfg, *warmup, *video, log);
    };
  }
  {
    Sub& s = add_sub("synth", "generate a synthetic moving-object dataset");
    auto f = std::make_shared<SynthFlags>();
    s.app->add_option("--objects", f->objects, "classes to draw: digits 0-9, circle, square")
        ->delimiter(',');
    s.app->add_option("--speeds", f->speeds, "speeds to draw, pixels per frame")->delimiter(',');
    s.app->add_option("--normal-objects", f->normal_objects, "classes labeled normal")->delimiter(',');
    s.app->add_option("--normal-speeds", f->normal_speeds, "speeds labeled normal")->delimiter(',');
    s.app->add_option("--videos", f->videos, "number of videos");
    s.app->add_option("--frames", f->frames, "frames per video");
    s.app->add_option("--size", f->size, "canvas size in pixels");
    s.app->add_option("--glyph", f->glyph, "glyph size in pixels");
    s.run = [f](const RunConfig& cfg, std::ostream& log) { return cmd_synth(cfg, *f, log); };
  }
  {
    Sub& s = add_sub("mnist-exp", "moving-object experiment: unseen shapes and speeds");
    auto f = std::make_shared<MnistFlags>();
    s.app->add_option("--epochs", f->epochs, "override training epochs");
    s.app->add_option("--train-videos", f->train_videos, "override training video count");
    s.app->add_option("--test-videos", f->test_videos, "override per-group test video count");
    s.app->add_option("--frames", f->frames, "override frames per video");
    s.run = [f](const RunConfig& cfg, std::ostream& log) { return cmd_mnist_exp(cfg, *f, log); };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Sub* chosen = nullptr;
  for (auto& sub : subs)
    if (sub->app->parsed()) chosen = sub.get();
  if (!chosen) {
    std::cerr << "no subcommand chosen\n";
    return 2;
  }

  try {
    RunConfig cfg = chosen->flags.build();
    RunManifest manifest;
    manifest.begin(chosen->app->get_name(), cfg);
    std::filesystem::create_directories(cfg.out_dir);
    manifest.outputs.push_back("config.json");
    write_config_snapshot(cfg.out_dir, cfg);

    std::vector<std::string> outputs = chosen->run(cfg, std::cout);
    manifest.outputs.insert(manifest.outputs.end(), outputs.begin(), outputs.end());
    manifest.outputs.push_back("manifest.json");
    write_manifest(cfg.out_dir, manifest);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace vad
