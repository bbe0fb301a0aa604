#pragma once

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vad/auc.hpp"
#include "vad/background.hpp"
#include "vad/distort.hpp"
#include "vad/network.hpp"
#include "vad/scoring.hpp"
#include "vad/synthetic.hpp"
#include "vad/textio.hpp"
#include "vad/trainer.hpp"

namespace vad {

// ----------------------------------------------------------------------------
// Dataset plumbing shared by the experiment drivers.
// ----------------------------------------------------------------------------
inline BackgroundModel build_background(const std::vector<Video>& raw_videos, int height, int width) {
  BackgroundAccumulator acc(height, width);
  for (const Video& v : raw_videos)
    for (const Tensor<float>& f : v.frames) acc.add(bilinear_resize(f, height, width));
  return acc.finish();
}

inline std::vector<Video> residualize(const std::vector<Video>& raw_videos, const BackgroundModel& bg) {
  std::vector<Video> out;
  out.reserve(raw_videos.size());
  for (const Video& v : raw_videos) {
    Video r;
    r.id = v.id;
    r.labels = v.labels;
    r.frames.reserve(v.frames.size());
    for (const Tensor<float>& f : v.frames) r.frames.push_back(preprocess_frame(f, bg));
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<Video> distort_videos(const std::vector<Video>& raw_videos,
                                         const DistortionSpec& spec) {
  std::vector<Video> out;
  out.reserve(raw_videos.size());
  for (const Video& v : raw_videos) {
    Video d;
    d.id = v.id;
    d.labels = v.labels;
    d.frames.reserve(v.frames.size());
    for (size_t f = 0; f < v.frames.size(); ++f)
      d.frames.push_back(apply_distortion(v.frames[f], spec, static_cast<int>(f)));
    out.push_back(std::move(d));
  }
  return out;
}

// Keep every d-th frame (and its label).
inline Video subsample_video(const Video& v, int d) {
  if (d < 1) throw std::invalid_argument("subsample_video: d must be >= 1");
  Video out;
  out.id = v.id;
  for (size_t i = 0; i < v.frames.size(); i += static_cast<size_t>(d)) {
    out.frames.push_back(v.frames[i]);
    if (!v.labels.empty()) out.labels.push_back(v.labels[i]);
  }
  return out;
}

inline std::vector<Video> subsample_videos(const std::vector<Video>& vs, int d) {
  std::vector<Video> out;
  out.reserve(vs.size());
  for (const Video& v : vs) out.push_back(subsample_video(v, d));
  return out;
}

// Scores every video and pools frames into a single AUC. Raw scores are
// pooled by default: per-video min-max rescaling is only meaningful when each
// video mixes both classes, and synthetic sets are single-class per video.
template <typename T>
double pooled_auc(Model<T>& model, const std::vector<Video>& residual_videos, Metric metric,
                  bool pool_normalized = false, std::optional<int> window = std::nullopt) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const Video& v : residual_videos) {
    AnomalyScoreSeries s = score_video(model, v, metric, 1, window);
    const std::vector<int> l = series_labels(s, v);
    const std::vector<double>& src = pool_normalized ? s.normalized : s.raw;
    scores.insert(scores.end(), src.begin(), src.end());
    labels.insert(labels.end(), l.begin(), l.end());
  }
  return frame_auc(scores, labels);
}

// ----------------------------------------------------------------------------
// Sweeps. Rows carry their condition as ordered key/value pairs so one CSV
// writer serves both the distortion and the frame-rate sweeps.
// ----------------------------------------------------------------------------
struct SweepRow {
  std::vector<std::pair<std::string, std::string>> condition;
  std::string metric;
  AucResult result;
  std::string error;  // non-empty when this condition failed
};

struct SweepResult {
  std::vector<std::string> condition_keys;
  std::vector<SweepRow> rows;
};

inline void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sweep file: " + path);
  for (const std::string& k : sweep.condition_keys) out << k << ",";
  out << "metric,auc,ci95\n";
  for (const SweepRow& row : sweep.rows) {
    if (!row.error.empty()) continue;
    for (const auto& [key, value] : row.condition) out << value << ",";
    out << row.metric << "," << fmt_float(row.result.auc) << "," << fmt_float(row.result.ci95_halfwidth)
        << "\n";
  }
}

// Distortion robustness: the model and its background stay fixed (trained on
// clean data); only the test frames are degraded, then re-preprocessed against
// the clean background. Per-condition failures are recorded, not fatal.
template <typename T>
SweepResult robustness_sweep(Model<T>& model, const BackgroundModel& bg,
                             const std::vector<Video>& raw_test, const std::vector<double>& brightness,
                             const std::vector<std::string>& rain, const std::vector<Metric>& metrics,
                             double blur_sigma = 0.0, std::ostream* log = nullptr) {
  SweepResult sweep;
  sweep.condition_keys = {"brightness", "rain", "blur"};
  for (double b : brightness)
    for (const std::string& r : rain) {
      DistortionSpec spec;
      spec.brightness = b;
      spec.rain = r;
      spec.blur_sigma = blur_sigma;
      std::vector<Video> residual = residualize(distort_videos(raw_test, spec), bg);
      for (Metric m : metrics) {
        SweepRow row;
        row.condition = {{"brightness", fmt_float(b)}, {"rain", r}, {"blur", fmt_float(blur_sigma)}};
        row.metric = metric_name(m);
        try {
          row.result.auc = pooled_auc(model, residual, m);
          row.result.n_runs = 1;
        } catch (const std::exception& e) {
          row.error = e.what();
          if (log) *log << "condition " << spec.label() << " metric " << row.metric
                        << " failed: " << e.what() << "\n";
        }
        sweep.rows.push_back(std::move(row));
      }
    }
  return sweep;
}

// Frame-rate sweep: for each d, train a fresh model on the d-subsampled
// training set and evaluate on the d-subsampled test set with both latent and
// pixel prediction metrics. Conditions whose videos become too short are
// skipped with a warning.
inline SweepResult lowfps_experiment(const std::vector<Video>& raw_train,
                                     const std::vector<Video>& raw_test, const std::vector<int>& d_values,
                                     const ModelConfig& cfg, const TrainSchedule& sched,
                                     const std::vector<Metric>& metrics, std::ostream* log = nullptr) {
  SweepResult sweep;
  sweep.condition_keys = {"d"};
  for (int d : d_values) {
    std::vector<Video> train_d = subsample_videos(raw_train, d);
    std::vector<Video> test_d = subsample_videos(raw_test, d);

    bool trainable = false;
    for (const Video& v : train_d)
      trainable = trainable ||
                  sample_count(static_cast<int>(v.frames.size()), cfg.k, cfg.t_offset, 1) > 0;
    if (!trainable) {
      if (log) *log << "warning: d=" << d << " leaves no trainable samples, skipping\n";
      continue;
    }

    BackgroundModel bg = build_background(train_d, cfg.height, cfg.width);
    Model<float> model(cfg, derive_seed(sched.seed, static_cast<uint64_t>(d)));
    train_model(model, bg, residualize(train_d, bg), sched, "", log);

    std::vector<Video> residual_test = residualize(test_d, bg);
    for (Metric m : metrics) {
      SweepRow row;
      row.condition = {{"d", std::to_string(d)}};
      row.metric = metric_name(m);
      try {
        row.result.auc = pooled_auc(model, residual_test, m);
        row.result.n_runs = 1;
      } catch (const std::exception& e) {
        row.error = e.what();
        if (log) *log << "d=" << d << " metric " << row.metric << " failed: " << e.what() << "\n";
      }
      sweep.rows.push_back(std::move(row));
    }
  }
  return sweep;
}

// ----------------------------------------------------------------------------
// Moving-object end-to-end experiment: train on the declared normal object
// classes and speeds, test against unseen shapes and unseen speeds.
// ----------------------------------------------------------------------------
struct MovingObjectExperimentConfig {
  ModelConfig model;              // defaults set in make_default below
  TrainSchedule schedule;
  std::vector<std::string> normal_objects = {"4", "7"};
  std::vector<double> normal_speeds = {2.0};
  std::vector<std::string> anomaly_objects = {"circle", "square"};
  std::vector<double> anomaly_speeds = {4.0};
  int train_videos = 12, test_videos_per_group = 4;
  int train_frames = 48, test_frames = 48;
  int canvas = 64, glyph = 28;
  uint64_t seed = 1;

  static MovingObjectExperimentConfig make_default() {
    MovingObjectExperimentConfig c;
    c.model.height = 64;
    c.model.width = 64;
    c.model.k = 6;
    c.model.encoder_blocks = 3;
    c.model.base_channels = 16;
    c.model.latent_channels = 64;
    c.model.t_offset = 6;
    c.schedule.total_epochs = 20;
    c.schedule.phase_switch_epoch = 10;
    c.schedule.lr = 2e-4;
    c.schedule.lr_decay_every = 8;
    c.schedule.batch_size = 8;
    return c;
  }

  SyntheticSpec train_spec() const {
    SyntheticSpec s;
    s.width = canvas;
    s.height = canvas;
    s.glyph_size = glyph;
    s.frames = train_frames;
    s.videos = train_videos;
    s.objects = normal_objects;
    s.speeds = normal_speeds;
    s.normal_objects = normal_objects;
    s.normal_speeds = normal_speeds;
    s.seed = derive_seed(seed, 101);
    return s;
  }

  SyntheticSpec test_spec(const std::vector<std::string>& objects, const std::vector<double>& speeds,
                          uint64_t stream) const {
    SyntheticSpec s;
    s.width = canvas;
    s.height = canvas;
    s.glyph_size = glyph;
    s.frames = test_frames;
    s.videos = test_videos_per_group;
    s.objects = objects;
    s.speeds = speeds;
    s.normal_objects = normal_objects;
    s.normal_speeds = normal_speeds;
    s.seed = derive_seed(seed, stream);
    return s;
  }
};

// Trained model plus the raw test groups, kept separate so downstream checks
// (AUC per anomaly axis, robustness distortions) can recombine them.
struct MovingObjectSetup {
  std::unique_ptr<Model<float>> model;
  BackgroundModel bg;
  std::vector<Video> test_normal, test_shape, test_speed;  // raw [0,1] frames
  TrainResult train_result;
};

inline MovingObjectSetup run_moving_object_training(const MovingObjectExperimentConfig& cfg,
                                                    const std::string& out_dir = "",
                                                    std::ostream* log = nullptr) {
  MovingObjectSetup setup;
  std::vector<Video> train_raw = generate_synthetic(cfg.train_spec());
  setup.test_normal = generate_synthetic(cfg.test_spec(cfg.normal_objects, cfg.normal_speeds, 202));
  setup.test_shape = generate_synthetic(cfg.test_spec(cfg.anomaly_objects, cfg.normal_speeds, 303));
  setup.test_speed = generate_synthetic(cfg.test_spec(cfg.normal_objects, cfg.anomaly_speeds, 404));

  setup.bg = build_background(train_raw, cfg.model.height, cfg.model.width);
  setup.model = std::make_unique<Model<float>>(cfg.model, derive_seed(cfg.seed, 7));
  setup.train_result =
      train_model(*setup.model, setup.bg, residualize(train_raw, setup.bg), cfg.schedule, out_dir, log);
  return setup;
}

struct MovingObjectResult {
  double auc_unseen_shape = 0.0;
  double auc_unseen_speed = 0.0;
  double mean_raw_normal = 0.0, mean_raw_shape = 0.0, mean_raw_speed = 0.0;
};

template <typename T>
inline double mean_raw_score(Model<T>& model, const std::vector<Video>& residual, Metric metric) {
  double sum = 0.0;
  long n = 0;
  for (const Video& v : residual) {
    AnomalyScoreSeries s = score_video(model, v, metric);
    for (double r : s.raw) sum += r;
    n += static_cast<long>(s.raw.size());
  }
  return n > 0 ? sum / n : 0.0;
}

inline MovingObjectResult evaluate_moving_object(MovingObjectSetup& setup, Metric metric) {
  MovingObjectResult r;
  std::vector<Video> res_normal = residualize(setup.test_normal, setup.bg);
  std::vector<Video> res_shape = residualize(setup.test_shape, setup.bg);
  std::vector<Video> res_speed = residualize(setup.test_speed, setup.bg);

  auto mixed_auc = [&](const std::vector<Video>& anomalous) {
    std::vector<Video> mixed = res_normal;
    mixed.insert(mixed.end(), anomalous.begin(), anomalous.end());
    return pooled_auc(*setup.model, mixed, metric);
  };
  r.auc_unseen_shape = mixed_auc(res_shape);
  r.auc_unseen_speed = mixed_auc(res_speed);
  r.mean_raw_normal = mean_raw_score(*setup.model, res_normal, metric);
  r.mean_raw_shape = mean_raw_score(*setup.model, res_shape, metric);
  r.mean_raw_speed = mean_raw_score(*setup.model, res_speed, metric);
  return r;
}

// Qualitative panel: rows of input / reconstruction / prediction / error for
// the first sample of each given video.
inline Tensor<float> qualitative_grid(Model<float>& model, const BackgroundModel& bg,
                                      const std::vector<const Video*>& raw_videos) {
  std::vector<Tensor<float>> tiles;
  const int k = model.cfg.k, t_off = model.cfg.t_offset;
  for (const Video* rv : raw_videos) {
    Video res;
    res.id = rv->id;
    for (const Tensor<float>& f : rv->frames) res.frames.push_back(preprocess_frame(f, bg));
    if (sample_count(static_cast<int>(res.frames.size()), k, t_off, 1) <= 0) continue;

    std::vector<typename Model<float>::Encoded> enc;
    for (int j = 0; j < k; ++j) enc.push_back(model.encode(res.frames[static_cast<size_t>(j)]));
    std::vector<const Tensor<float>*> codes;
    for (auto& e : enc) codes.push_back(&e.latent());
    Tensor<float> zhat = model.predict_latent(codes);
    Tensor<float> pred = model.decode(zhat, enc.back().pyramid);
    Tensor<float> rec = model.decode(enc.back().latent(), enc[static_cast<size_t>(k - 2)].pyramid);
    const Tensor<float>& target = res.frames[static_cast<size_t>(k - 1 + t_off)];

    tiles.push_back(rv->frames[static_cast<size_t>(k - 1 + t_off)]);  // input frame at t
    tiles.push_back(recompose_frame(rec, bg));                        // reconstruction of frame k
    tiles.push_back(recompose_frame(pred, bg));                       // prediction of frame t
    Tensor<float> err = squared_error_map(pred, target);
    float mx = 0.0f;
    for (float v : err.data) mx = std::max(mx, v);
    Tensor<float> err_rgb({3, err.dim(0), err.dim(1)});
    for (int y = 0; y < err.dim(0); ++y)
      for (int x = 0; x < err.dim(1); ++x)
        for (int c = 0; c < 3; ++c)
          err_rgb.at(c, y, x) = mx > 0.0f ? err.at2(y, x) / mx : 0.0f;
    tiles.push_back(std::move(err_rgb));
  }
  if (tiles.empty()) throw std::runtime_error("qualitative_grid: no video long enough for a sample");
  return tile_images(tiles, 4);
}

}  // namespace vad
