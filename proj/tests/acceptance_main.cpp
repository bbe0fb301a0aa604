// Acceptance gate: one line per criterion, [PASS]/[FAIL], pinned tolerances.
// Runs standalone (no test framework) so the output reads as a checklist.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vad/checkpoint.hpp"
#include "vad/cli.hpp"
#include "vad/experiments.hpp"
#include "vad/streaming.hpp"

using namespace vad;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
  if (!pass) ++g_failures;
  std::printf("[%s] criterion %2d %-34s %s (%.1fs)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str(), seconds);
  std::fflush(stdout);
}

template <typename F>
void run_criterion(int id, const std::string& name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, name, pass, detail, secs);
}

std::string fmt(double v) { return fmt_float(v); }

// --------------------------------------------------------------------------
// shared tiny model configs
// --------------------------------------------------------------------------
ModelConfig grad_check_config() {
  ModelConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  cfg.k = 4;
  cfg.encoder_blocks = 2;
  cfg.base_channels = 4;
  cfg.latent_channels = 8;
  cfg.t_offset = 1;
  cfg.motion_blocks = 2;
  return cfg;
}

template <typename T>
std::vector<Tensor<T>> random_frames(int n, int h, int w, uint64_t seed, double lo, double hi) {
  std::vector<Tensor<T>> out;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    Tensor<T> f({3, h, w});
    for (T& v : f.data) v = static_cast<T>(rng.uniform(lo, hi));
    out.push_back(std::move(f));
  }
  return out;
}

// ==========================================================================
// 1. metric units: closed-form values reproduced to 1e-12
// ==========================================================================
bool criterion1(std::string& detail) {
  Tensor<double> p({4});
  Tensor<double> a({4});
  p.data = {1.0, 2.0, 2.0, 0.0};
  a.data = {0.0, 2.0, 4.0, 0.0};
  const double mse = latent_mse(p, a);  // (1 + 0 + 4 + 0) / 4
  const double e1 = std::abs(mse - 1.25);

  Tensor<double> u({2}), v({2});
  u.data = {1.0, 0.0};
  v.data = {1.0, 1.0};
  const double cos = latent_cosine(u, v);  // 1 - 1/sqrt(2)
  const double e2 = std::abs(cos - (1.0 - 1.0 / std::sqrt(2.0)));

  Tensor<double> w = u;
  for (double& x : w.data) x *= -3.0;
  const double e3 = std::abs(latent_cosine(u, w) - 2.0);  // anti-parallel
  const double e4 = std::abs(latent_mse(a, a));
  const double e5 = std::abs(latent_cosine(v, v));

  const double worst = std::max({e1, e2, e3, e4, e5});
  detail = "max deviation from closed form " + fmt(worst) + " (tol 1e-12)";
  return worst <= 1e-12;
}

// ==========================================================================
// 2. normalization: affine invariance + degenerate/window behavior, 1,000 series
// ==========================================================================
bool criterion2(std::string& detail) {
  Rng rng(7101);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + rng.uniform_int(0, 99);
    std::vector<double> raw(static_cast<size_t>(n));
    for (double& v : raw) v = rng.uniform(-10.0, 10.0);
    if (trial % 11 == 0) std::fill(raw.begin(), raw.end(), rng.uniform(-1.0, 1.0));

    std::optional<int> window;
    if (trial % 3 == 1) window = 1 + rng.uniform_int(0, n - 1);
    if (trial % 3 == 2) window = n + rng.uniform_int(0, 10);  // >= n: whole series

    // affine invariance for a > 0
    const double sa = rng.uniform(0.1, 9.0), sb = rng.uniform(-40.0, 40.0);
    std::vector<double> mapped = raw;
    for (double& v : mapped) v = sa * v + sb;
    const auto base = normalize_scores(raw, window);
    const auto moved = normalize_scores(mapped, window);
    const auto want = window ? oracle::windowed_minmax(raw, *window)
                             : oracle::windowed_minmax(raw, static_cast<int>(raw.size()));
    for (size_t i = 0; i < base.size(); ++i) {
      worst = std::max(worst, std::abs(base[i] - moved[i]));
      worst = std::max(worst, std::abs(base[i] - want[i]));
      if (base[i] < 0.0 || base[i] > 1.0) worst = std::max(worst, 1.0);
    }

    if (window && *window >= n) {
      const auto whole = normalize_scores(raw);
      for (size_t i = 0; i < whole.size(); ++i)
        worst = std::max(worst, std::abs(base[i] - whole[i]));
    }
  }
  detail = "1000 series, max |deviation| " + fmt(worst) + " (tol 1e-9)";
  return worst <= 1e-9;
}

// ==========================================================================
// 3. AUC against the O(n^2) pairwise oracle, 1,000 series with ties
// ==========================================================================
bool criterion3(std::string& detail) {
  Rng rng(7301);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + rng.uniform_int(0, 198);
    std::vector<double> scores(static_cast<size_t>(n));
    std::vector<int> labels(static_cast<size_t>(n));
    const int levels = 1 + rng.uniform_int(0, 11);  // few levels -> many ties
    for (double& s : scores) s = rng.uniform_int(0, levels) / static_cast<double>(levels);
    int ones = 0;
    for (int& l : labels) ones += (l = rng.uniform_int(0, 1));
    if (ones == 0) labels[0] = 1;
    if (ones == n) labels[0] = 0;
    worst = std::max(worst, std::abs(frame_auc(scores, labels) - oracle::pairwise_auc(scores, labels)));
  }
  detail = "1000 series (n<=200, ties), max |diff| " + fmt(worst) + " (tol 1e-9)";
  return worst <= 1e-9;
}

// ==========================================================================
// 4. analytic gradients vs central finite differences on >= 50 parameters
// ==========================================================================
bool criterion4(std::string& detail) {
  Model<double> model(grad_check_config(), 7401);
  auto frames = random_frames<double>(5, 16, 16, 7402, -0.5, 0.5);
  SampleView<double> sample;
  for (int j = 0; j < 4; ++j) sample.inputs.push_back(&frames[static_cast<size_t>(j)]);
  sample.target = &frames[4];

  // hold the prediction target fixed so FD matches the stop-gradient objective
  const Tensor<double> fixed = model.encode(*sample.target, true).latent();
  const LossWeights w{0.7, 0.5, 0.3};
  auto loss_at = [&]() {
    return compute_loss<double>(model, sample, w, nullptr, 1.0, false, &fixed).total;
  };

  GradStore<double> grads(model.reg);
  compute_loss<double>(model, sample, w, &grads, 1.0, false, &fixed);

  Rng rng(7403);
  double worst = 0.0;
  int checked = 0;
  while (checked < 60) {
    const int p = rng.uniform_int(0, model.reg.num_params() - 1);
    const int64_t i = rng.uniform_int(0, static_cast<int>(model.reg.param(p).numel()) - 1);
    double& slot = model.reg.param(p)[i];
    const double keep = slot;
    const double h = 1e-5 * std::max(1.0, std::abs(keep));
    slot = keep + h;
    const double up = loss_at();
    slot = keep - h;
    const double dn = loss_at();
    slot = keep;
    const double fd = (up - dn) / (2.0 * h);
    const double ana = grads.grad(p)[i];
    const double rel = std::abs(ana - fd) / std::max({std::abs(ana), std::abs(fd), 1e-8});
    worst = std::max(worst, rel);
    ++checked;
  }
  detail = std::to_string(checked) + " probed params, max rel err " + fmt(worst) + " (tol 1e-3)";
  return worst <= 1e-3;
}

// ==========================================================================
// 5. latent geometry: published grid sizes and temporal collapse
// ==========================================================================
bool criterion5(std::string& detail) {
  struct Case {
    int h, w, blocks, k;
    std::vector<int> want;
  };
  const std::vector<Case> cases = {
      {128, 192, 4, 8, {128, 8, 12}},
      {128, 192, 5, 8, {128, 4, 6}},
      {128, 224, 4, 6, {128, 8, 14}},
  };
  std::ostringstream got;
  bool ok = true;
  for (const Case& c : cases) {
    ModelConfig cfg;
    cfg.height = c.h;
    cfg.width = c.w;
    cfg.encoder_blocks = c.blocks;
    cfg.k = c.k;
    Model<float> model(cfg, 7501);
    Tensor<float> frame = Tensor<float>::zeros({3, c.h, c.w});
    auto enc = model.encode(frame);
    ok = ok && enc.latent().shape == c.want;
    ok = ok && cfg.motion_temporal_out() == 1;

    std::vector<const Tensor<float>*> codes(static_cast<size_t>(c.k), &enc.latent());
    Tensor<float> zhat = model.predict_latent(codes);
    ok = ok && zhat.shape == c.want;  // temporal axis fully collapsed
    got << c.h << "x" << c.w << "/B" << c.blocks << "->" << enc.latent().dim(0) << "x"
        << enc.latent().dim(1) << "x" << enc.latent().dim(2) << " ";
  }
  detail = got.str() + "(temporal extent 1 in all cases)";
  return ok;
}

// ==========================================================================
// 6. optimization sanity: one batch overfits 10x in 200 steps
// ==========================================================================
bool criterion6(std::string& detail) {
  ModelConfig cfg = grad_check_config();
  Model<float> model(cfg, 7601);

  // structured frames (a glyph drifting over a static background), the
  // workload the reconstruction path exists for; noise would only measure
  // memorization capacity
  SyntheticSpec spec;
  spec.width = 16;
  spec.height = 16;
  spec.glyph_size = 8;
  spec.frames = 8;
  spec.videos = 1;
  spec.objects = {"4"};
  spec.speeds = {1.0};
  spec.normal_objects = {"4"};
  spec.normal_speeds = {1.0};
  spec.seed = 7602;
  std::vector<Video> raw = generate_synthetic(spec);
  BackgroundModel bg = build_background(raw, 16, 16);
  std::vector<Video> videos = residualize(raw, bg);

  auto samples = make_samples(videos, cfg.k, cfg.t_offset);
  samples.resize(4);  // one fixed batch

  const LossWeights w{1.0, 0.001, 0.001};
  GradStore<float> grads(model.reg);
  Adam<float> opt(model.reg, 3e-3);

  double first = 0.0, last = 0.0;
  for (int step = 0; step < 200; ++step) {
    grads.zero();
    double recon = 0.0;
    for (const auto& s : samples) {
      SampleView<float> view = view_sample(videos, s);
      recon += compute_loss(model, view, w, &grads, 1.0f / samples.size(), true).recon;
    }
    recon /= static_cast<double>(samples.size());
    if (step == 0) first = recon;
    last = recon;
    opt.step(model.reg, grads);
  }
  const double drop = first / std::max(last, 1e-300);
  detail = "recon " + fmt(first) + " -> " + fmt(last) + ", drop " + fmt(drop) + "x (need >= 10x)";
  return drop >= 10.0;
}

// ==========================================================================
// 7. streaming: matches batch scoring, one encode per frame, cache wins
// ==========================================================================
bool criterion7(std::string& detail) {
  ModelConfig cfg;
  cfg.height = 64;
  cfg.width = 64;
  cfg.k = 6;
  cfg.encoder_blocks = 3;
  cfg.base_channels = 16;
  cfg.latent_channels = 64;
  cfg.t_offset = 2;
  Model<float> model(cfg, 7701);

  Video video;
  video.id = "stream";
  video.frames = random_frames<float>(64, 64, 64, 7702, 0.0, 1.0);
  BackgroundModel bg = build_background({video}, 64, 64);

  Video residual = residualize({video}, bg)[0];
  AnomalyScoreSeries batch = score_video(model, residual, Metric::latent_mse);

  StreamScorer<float> scorer(model, bg, Metric::latent_mse);
  std::vector<StreamEvent> events;
  for (const auto& f : video.frames)
    if (auto ev = scorer.push_frame(f)) events.push_back(*ev);

  bool ok = events.size() == batch.raw.size();
  double worst = 0.0;
  if (ok)
    for (size_t i = 0; i < events.size(); ++i) {
      worst = std::max(worst, std::abs(events[i].raw_score - batch.raw[i]));
      ok = ok && events[i].frame_index == batch.raw_frame_index(static_cast<int>(i));
    }
  ok = ok && worst <= 1e-5;
  ok = ok && scorer.encode_count() == static_cast<long>(video.frames.size());

  BenchmarkResult bench = benchmark_stream(model, bg, video, Metric::latent_mse, 16);
  ok = ok && bench.cached.fps > bench.naive.fps;
  detail = "max |stream-batch| " + fmt(worst) + " (tol 1e-5), encodes " +
           std::to_string(scorer.encode_count()) + "/" + std::to_string(video.frames.size()) +
           ", cached " + fmt(bench.cached.fps) + " fps vs naive " + fmt(bench.naive.fps) +
           " fps (" + fmt(bench.speedup) + "x)";
  return ok;
}

// ==========================================================================
// 8 + 9 share one trained moving-object model
// ==========================================================================
struct MovingOutcome {
  bool trained = false;
  MovingObjectSetup setup;
  MovingObjectResult result;
  std::string error;
};

MovingOutcome g_moving;

void train_moving_model() {
  MovingObjectExperimentConfig cfg = MovingObjectExperimentConfig::make_default();
  cfg.seed = 606;  // pinned; calibrated on the committed configuration
  cfg.schedule.seed = 606;
  try {
    g_moving.setup = run_moving_object_training(cfg);
    g_moving.result = evaluate_moving_object(g_moving.setup, Metric::latent_mse);
    g_moving.trained = true;
  } catch (const std::exception& e) {
    g_moving.error = e.what();
  }
}

bool criterion8(std::string& detail) {
  if (!g_moving.trained) {
    detail = "training failed: " + g_moving.error;
    return false;
  }
  const auto& r = g_moving.result;
  detail = "AUC unseen-shape " + fmt(r.auc_unseen_shape) + ", unseen-speed " +
           fmt(r.auc_unseen_speed) + " (both need >= 0.80)";
  return r.auc_unseen_shape >= 0.80 && r.auc_unseen_speed >= 0.80;
}

bool criterion9(std::string& detail) {
  if (!g_moving.trained) {
    detail = "training failed: " + g_moving.error;
    return false;
  }
  DistortionSpec harsh;
  harsh.brightness = 0.5;
  harsh.rain = "heavy";
  harsh.seed = 909;  // pinned

  std::vector<Video> mixed = g_moving.setup.test_normal;
  mixed.insert(mixed.end(), g_moving.setup.test_shape.begin(), g_moving.setup.test_shape.end());
  std::vector<Video> residual = residualize(distort_videos(mixed, harsh), g_moving.setup.bg);

  const double latent = pooled_auc(*g_moving.setup.model, residual, Metric::latent_mse);
  const double pixel = pooled_auc(*g_moving.setup.model, residual, Metric::pixel_prediction);
  detail = "brightness 0.5 + heavy rain: latent AUC " + fmt(latent) + " vs pixel-prediction AUC " +
           fmt(pixel);
  return latent >= pixel;
}

// ==========================================================================
// 10. published-table ingestion: layout only, absolute numbers out of reach
// ==========================================================================
bool criterion10(std::string& detail) {
  // The published robustness and frame-rate tables were measured on benchmark
  // recordings that are not redistributable with this repository, so their
  // absolute numbers cannot be reproduced here. What is verified instead: the
  // sweep machinery emits the same condition grid and column layout those
  // tables use, on synthetic stand-in data.
  ModelConfig cfg = grad_check_config();
  Model<float> model(cfg, 7901);

  SyntheticSpec spec;
  spec.width = 16;
  spec.height = 16;
  spec.glyph_size = 8;
  spec.frames = 10;
  spec.videos = 4;
  spec.objects = {"4", "circle"};
  spec.speeds = {2.0};
  spec.normal_objects = {"4"};
  spec.normal_speeds = {2.0};
  spec.seed = 71001;
  std::vector<Video> raw = generate_synthetic(spec);
  bool both = false, any0 = false, any1 = false;
  for (const auto& v : raw) {
    if (!v.labels.empty() && v.labels[0] == 1) any1 = true;
    if (!v.labels.empty() && v.labels[0] == 0) any0 = true;
  }
  both = any0 && any1;
  if (!both) {
    detail = "synthetic stand-in set came out single-class";
    return false;
  }
  BackgroundModel bg = build_background(raw, 16, 16);

  SweepResult sweep =
      robustness_sweep(model, bg, raw, {0.5, 0.75, 1.0, 1.25, 1.5}, {"none", "heavy", "torrential"},
                       {Metric::latent_mse, Metric::pixel_prediction});
  const fs::path dir = fs::temp_directory_path() / "vad_acceptance";
  fs::create_directories(dir);
  const fs::path csv = dir / "sweep_layout.csv";
  write_sweep_csv(csv.string(), sweep);

  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  fs::remove_all(dir);

  const bool layout_ok = header == "brightness,rain,blur,metric,auc,ci95";
  const bool grid_ok = sweep.rows.size() == 5u * 3u * 2u && rows == 30;
  bool all_evaluated = true;
  for (const auto& row : sweep.rows) all_evaluated = all_evaluated && row.error.empty();

  detail = "5x3 condition grid x 2 metrics -> " + std::to_string(rows) +
           " rows, header ok; absolute published values not reproducible (source recordings "
           "not included), layout verified only";
  return layout_ok && grid_ok && all_evaluated;
}

}  // namespace

int main(int argc, char** argv) {
  // optional args restrict the run to the listed criterion ids
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto want = [&](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };

  std::printf("acceptance checklist\n");
  if (want(1)) run_criterion(1, "metric-units", criterion1);
  if (want(2)) run_criterion(2, "score-normalization", criterion2);
  if (want(3)) run_criterion(3, "auc-vs-pairwise-oracle", criterion3);
  if (want(4)) run_criterion(4, "gradient-check", criterion4);
  if (want(5)) run_criterion(5, "latent-geometry", criterion5);
  if (want(6)) run_criterion(6, "overfit-one-batch", criterion6);
  if (want(7)) run_criterion(7, "streaming-equivalence", criterion7);

  if (want(8) || want(9)) {
    const auto t0 = std::chrono::steady_clock::now();
    train_moving_model();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("       (moving-object training for criteria 8-9 took %.1fs)\n", secs);
  }
  if (want(8)) run_criterion(8, "unseen-shape-and-speed-auc", criterion8);
  if (want(9)) run_criterion(9, "latent-beats-pixel-under-noise", criterion9);
  if (want(10)) run_criterion(10, "table-layout-ingestion", criterion10);

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criteria failed\n", g_failures);
  return 1;
}
