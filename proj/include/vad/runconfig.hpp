#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vad/config.hpp"
#include "vad/distort.hpp"
#include "vad/scoring.hpp"
#include "vad/textio.hpp"
#include "vad/trainer.hpp"
#include "vad/version.hpp"

namespace vad {

// Raised for malformed or invalid configuration. The CLI maps this to exit
// code 2; every other exception maps to 3.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RunConfig {
  ModelConfig model;
  TrainSchedule schedule;
  std::string train_dir, test_dir;
  std::string out_dir = "out";
  std::string checkpoint;  // model to load for score/eval/bench
  Metric metric = Metric::latent_mse;
  int window = 0;  // normalization window; 0 means whole-series
  DistortionSpec distortion;
  bool localize = false;
  double localize_quantile = 0.99;
  int localize_min_area = 25;
  int max_videos = 0, max_frames = 0;  // 0 means unlimited

  std::optional<int> window_opt() const {
    return window > 0 ? std::optional<int>(window) : std::nullopt;
  }

  void validate() const {
    std::string problems;
    try {
      model.validate();
    } catch (const std::exception& e) {
      problems += std::string(e.what()) + "; ";
    }
    try {
      schedule.validate();
    } catch (const std::exception& e) {
      problems += std::string(e.what()) + "; ";
    }
    if (window < 0) problems += "window must be >= 0; ";
    if (!(localize_quantile > 0.0 && localize_quantile < 1.0))
      problems += "localize_quantile must be in (0,1); ";
    if (localize_min_area < 1) problems += "localize_min_area must be >= 1; ";
    if (max_videos < 0 || max_frames < 0) problems += "max_videos/max_frames must be >= 0; ";
    if (!problems.empty()) throw ConfigError(problems);
  }
};

// ----------------------------------------------------------------------------
// Presets: named dataset recipes layered over the defaults. A config file or
// command-line flag can still override individual fields afterwards.
// ----------------------------------------------------------------------------
inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"ucsd_ped1", "ucsd_ped2", "avenue", "shanghaitech",
                                                 "moving_mnist"};
  return names;
}

inline void apply_preset(RunConfig& cfg, const std::string& name) {
  ModelConfig& m = cfg.model;
  if (name == "ucsd_ped1") {
    m.height = 128, m.width = 192, m.k = 8, m.encoder_blocks = 5;
    cfg.metric = Metric::latent_mse;
  } else if (name == "ucsd_ped2") {
    m.height = 128, m.width = 192, m.k = 8, m.encoder_blocks = 4;
    cfg.metric = Metric::latent_mse;
  } else if (name == "avenue") {
    m.height = 128, m.width = 224, m.k = 6, m.encoder_blocks = 4;
    cfg.metric = Metric::latent_mse;
  } else if (name == "shanghaitech") {
    m.height = 128, m.width = 224, m.k = 6, m.encoder_blocks = 4;
    cfg.metric = Metric::latent_cosine;
    cfg.window = 64;
  } else if (name == "moving_mnist") {
    m.height = 64, m.width = 64, m.k = 6, m.encoder_blocks = 3;
    m.base_channels = 16, m.latent_channels = 64, m.t_offset = 6;
    cfg.metric = Metric::latent_mse;
    cfg.schedule.total_epochs = 20;
    cfg.schedule.phase_switch_epoch = 10;
    cfg.schedule.lr_decay_every = 8;
  } else {
    std::string valid;
    for (const std::string& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (valid: " + valid + ")");
  }
}

// ----------------------------------------------------------------------------
// JSON round-trip. Parsing collects every problem it can find (unknown keys,
// wrong types, invalid values) into one ConfigError so a bad file is fixed in
// a single pass.
// ----------------------------------------------------------------------------
namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& known,
                       const std::string& scope, std::string& problems) {
  for (const auto& item : j.items())
    if (!known.count(item.key())) problems += scope + ": unknown key '" + item.key() + "'; ";
}

template <typename T>
inline void read_field(const nlohmann::json& j, const char* key, T& target, const std::string& scope,
                       std::string& problems) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    problems += scope + "." + key + ": wrong type; ";
  }
}

}  // namespace detail

inline nlohmann::json to_json(const TrainSchedule& s) {
  auto weights = [](const LossWeights& w) {
    return nlohmann::json{{"lambda_r", w.lambda_r}, {"lambda_p", w.lambda_p}, {"gamma", w.gamma}};
  };
  return nlohmann::json{{"total_epochs", s.total_epochs},
                        {"lr", s.lr},
                        {"lr_decay", s.lr_decay},
                        {"lr_decay_every", s.lr_decay_every},
                        {"phase_switch_epoch", s.phase_switch_epoch},
                        {"plateau_switch", s.plateau_switch},
                        {"plateau_rel_improvement", s.plateau_rel_improvement},
                        {"plateau_patience", s.plateau_patience},
                        {"phase1", weights(s.phase1)},
                        {"phase2", weights(s.phase2)},
                        {"batch_size", s.batch_size},
                        {"seed", s.seed},
                        {"checkpoint_every", s.checkpoint_every}};
}

inline nlohmann::json to_json(const DistortionSpec& d) {
  return nlohmann::json{
      {"brightness", d.brightness}, {"rain", d.rain}, {"blur", d.blur_sigma}, {"seed", d.seed}};
}

inline nlohmann::json to_json(const RunConfig& c) {
  return nlohmann::json{{"model", to_json(c.model)},
                        {"schedule", to_json(c.schedule)},
                        {"train_dir", c.train_dir},
                        {"test_dir", c.test_dir},
                        {"out_dir", c.out_dir},
                        {"checkpoint", c.checkpoint},
                        {"metric", metric_name(c.metric)},
                        {"window", c.window},
                        {"distortion", to_json(c.distortion)},
                        {"localize", c.localize},
                        {"localize_quantile", c.localize_quantile},
                        {"localize_min_area", c.localize_min_area},
                        {"max_videos", c.max_videos},
                        {"max_frames", c.max_frames}};
}

// Parses on top of `base` so presets and file contents compose: fields absent
// from the JSON keep their current values.
inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = RunConfig()) {
  using detail::check_keys;
  using detail::read_field;
  RunConfig c = std::move(base);
  std::string problems;

  check_keys(j,
             {"model", "schedule", "train_dir", "test_dir", "out_dir", "checkpoint", "metric", "window",
              "distortion", "localize", "localize_quantile", "localize_min_area", "max_videos",
              "max_frames", "preset"},
             "config", problems);

  if (j.contains("preset")) {
    try {
      apply_preset(c, j.at("preset").get<std::string>());
    } catch (const std::exception& e) {
      problems += std::string(e.what()) + "; ";
    }
  }

  if (j.contains("model")) {
    const nlohmann::json& m = j.at("model");
    if (!m.is_object()) {
      problems += "model: expected an object; ";
    } else {
      check_keys(m,
                 {"height", "width", "k", "encoder_blocks", "base_channels", "latent_channels",
                  "t_offset", "motion_blocks", "leaky_slope"},
                 "model", problems);
      read_field(m, "height", c.model.height, "model", problems);
      read_field(m, "width", c.model.width, "model", problems);
      read_field(m, "k", c.model.k, "model", problems);
      read_field(m, "encoder_blocks", c.model.encoder_blocks, "model", problems);
      read_field(m, "base_channels", c.model.base_channels, "model", problems);
      read_field(m, "latent_channels", c.model.latent_channels, "model", problems);
      read_field(m, "t_offset", c.model.t_offset, "model", problems);
      read_field(m, "motion_blocks", c.model.motion_blocks, "model", problems);
      read_field(m, "leaky_slope", c.model.leaky_slope, "model", problems);
    }
  }

  if (j.contains("schedule")) {
    const nlohmann::json& s = j.at("schedule");
    if (!s.is_object()) {
      problems += "schedule: expected an object; ";
    } else {
      check_keys(s,
                 {"total_epochs", "lr", "lr_decay", "lr_decay_every", "phase_switch_epoch",
                  "plateau_switch", "plateau_rel_improvement", "plateau_patience", "phase1", "phase2",
                  "batch_size", "seed", "checkpoint_every"},
                 "schedule", problems);
      read_field(s, "total_epochs", c.schedule.total_epochs, "schedule", problems);
      read_field(s, "lr", c.schedule.lr, "schedule", problems);
      read_field(s, "lr_decay", c.schedule.lr_decay, "schedule", problems);
      read_field(s, "lr_decay_every", c.schedule.lr_decay_every, "schedule", problems);
      read_field(s, "phase_switch_epoch", c.schedule.phase_switch_epoch, "schedule", problems);
      read_field(s, "plateau_switch", c.schedule.plateau_switch, "schedule", problems);
      read_field(s, "plateau_rel_improvement", c.schedule.plateau_rel_improvement, "schedule",
                 problems);
      read_field(s, "plateau_patience", c.schedule.plateau_patience, "schedule", problems);
      read_field(s, "batch_size", c.schedule.batch_size, "schedule", problems);
      read_field(s, "seed", c.schedule.seed, "schedule", problems);
      read_field(s, "checkpoint_every", c.schedule.checkpoint_every, "schedule", problems);
      auto read_weights = [&](const char* key, LossWeights& w) {
        if (!s.contains(key)) return;
        const nlohmann::json& p = s.at(key);
        if (!p.is_object()) {
          problems += std::string("schedule.") + key + ": expected an object; ";
          return;
        }
        check_keys(p, {"lambda_r", "lambda_p", "gamma"}, std::string("schedule.") + key, problems);
        read_field(p, "lambda_r", w.lambda_r, std::string("schedule.") + key, problems);
        read_field(p, "lambda_p", w.lambda_p, std::string("schedule.") + key, problems);
        read_field(p, "gamma", w.gamma, std::string("schedule.") + key, problems);
      };
      read_weights("phase1", c.schedule.phase1);
      read_weights("phase2", c.schedule.phase2);
    }
  }

  if (j.contains("distortion")) {
    const nlohmann::json& d = j.at("distortion");
    if (!d.is_object()) {
      problems += "distortion: expected an object; ";
    } else {
      check_keys(d, {"brightness", "rain", "blur", "seed"}, "distortion", problems);
      read_field(d, "brightness", c.distortion.brightness, "distortion", problems);
      read_field(d, "rain", c.distortion.rain, "distortion", problems);
      read_field(d, "blur", c.distortion.blur_sigma, "distortion", problems);
      read_field(d, "seed", c.distortion.seed, "distortion", problems);
    }
  }

  read_field(j, "train_dir", c.train_dir, "config", problems);
  read_field(j, "test_dir", c.test_dir, "config", problems);
  read_field(j, "out_dir", c.out_dir, "config", problems);
  read_field(j, "checkpoint", c.checkpoint, "config", problems);
  read_field(j, "window", c.window, "config", problems);
  read_field(j, "localize", c.localize, "config", problems);
  read_field(j, "localize_quantile", c.localize_quantile, "config", problems);
  read_field(j, "localize_min_area", c.localize_min_area, "config", problems);
  read_field(j, "max_videos", c.max_videos, "config", problems);
  read_field(j, "max_frames", c.max_frames, "config", problems);

  if (j.contains("metric")) {
    try {
      c.metric = parse_metric(j.at("metric").get<std::string>());
    } catch (const std::exception& e) {
      problems += std::string("metric: ") + e.what() + "; ";
    }
  }

  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

inline RunConfig load_run_config(const std::string& path, RunConfig base = RunConfig()) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
  return run_config_from_json(j, std::move(base));
}

// ----------------------------------------------------------------------------
// Run manifest: a receipt tying outputs back to the exact configuration. It
// is written after every other artifact so its presence marks a finished run.
// ----------------------------------------------------------------------------
inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string code_version = kVersion;
  std::string started_at, finished_at;
  std::vector<std::string> outputs;

  void begin(const std::string& cmd, const RunConfig& cfg) {
    command = cmd;
    config_hash = hex64(fnv1a64(to_json(cfg).dump()));
    started_at = utc_timestamp();
  }
};

// Snapshot of the effective configuration, written at run start so a crash
// still leaves the inputs reconstructible.
inline std::string write_config_snapshot(const std::string& out_dir, const RunConfig& cfg) {
  std::filesystem::create_directories(out_dir);
  const std::string path = (std::filesystem::path(out_dir) / "config.json").string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config snapshot: " + path);
  out << to_json(cfg).dump(2) << "\n";
  return path;
}

inline std::string write_manifest(const std::string& out_dir, RunManifest& manifest) {
  manifest.finished_at = utc_timestamp();
  std::filesystem::create_directories(out_dir);
  const std::string path = (std::filesystem::path(out_dir) / "manifest.json").string();
  nlohmann::json j{{"command", manifest.command},
                   {"config_hash", manifest.config_hash},
                   {"code_version", manifest.code_version},
                   {"started_at", manifest.started_at},
                   {"finished_at", manifest.finished_at},
                   {"outputs", manifest.outputs}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
  return path;
}

}  // namespace vad
