#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vad/background.hpp"
#include "vad/checkpoint.hpp"
#include "vad/loss.hpp"
#include "vad/network.hpp"
#include "vad/optimizer.hpp"
#include "vad/samples.hpp"
#include "vad/textio.hpp"

namespace vad {

struct TrainSchedule {
  int total_epochs = 50;
  double lr = 1e-4;
  double lr_decay = 0.1;
  int lr_decay_every = 20;
  int phase_switch_epoch = 25;
  bool plateau_switch = false;  // switch early once reconstruction stops improving
  double plateau_rel_improvement = 0.01;
  int plateau_patience = 3;
  LossWeights phase1{1.0, 0.001, 0.001};
  LossWeights phase2{0.001, 1.0, 0.001};
  int batch_size = 8;
  uint64_t seed = 1;
  int checkpoint_every = 0;  // epochs between periodic checkpoints; 0 disables

  double lr_at(int epoch) const {
    return lr * std::pow(lr_decay, static_cast<double>(epoch / lr_decay_every));
  }

  void validate() const {
    std::string problems;
    if (total_epochs < 1) problems += "total_epochs must be >= 1; ";
    if (!(phase_switch_epoch > 0 && phase_switch_epoch < total_epochs))
      problems += "phase_switch_epoch must satisfy 0 < switch < total_epochs; ";
    if (lr <= 0) problems += "lr must be positive; ";
    if (lr_decay <= 0 || lr_decay > 1) problems += "lr_decay must be in (0,1]; ";
    if (lr_decay_every < 1) problems += "lr_decay_every must be >= 1; ";
    if (batch_size < 1) problems += "batch_size must be >= 1; ";
    if (plateau_patience < 1) problems += "plateau_patience must be >= 1; ";
    auto check_w = [&](const LossWeights& w, const char* name) {
      if (w.lambda_r < 0 || w.lambda_p < 0 || w.gamma < 0)
        problems += std::string(name) + " weights must be >= 0; ";
    };
    check_w(phase1, "phase1");
    check_w(phase2, "phase2");
    if (!problems.empty()) throw std::invalid_argument("invalid train schedule: " + problems);
  }
};

struct TrainResult {
  std::vector<LossReport> epoch_reports;  // per-epoch means
  int best_epoch = -1;
  double best_total = 0.0;
  int switch_epoch_used = -1;  // epoch at which phase 2 took over
  bool diverged = false;
  std::string final_checkpoint, best_checkpoint;
};

namespace detail {
template <typename T>
inline std::vector<Tensor<T>> snapshot_params(const ParamRegistry<T>& reg) {
  std::vector<Tensor<T>> out;
  out.reserve(static_cast<size_t>(reg.num_params() + reg.num_buffers()));
  for (int i = 0; i < reg.num_params(); ++i) out.push_back(reg.param(i));
  for (int i = 0; i < reg.num_buffers(); ++i) out.push_back(reg.buffer(i));
  return out;
}

template <typename T>
inline void restore_params(ParamRegistry<T>& reg, const std::vector<Tensor<T>>& snap) {
  size_t j = 0;
  for (int i = 0; i < reg.num_params(); ++i) reg.param(i) = snap[j++];
  for (int i = 0; i < reg.num_buffers(); ++i) reg.buffer(i) = snap[j++];
}
}  // namespace detail

// Trains in place. Videos must already be background-subtracted residuals at
// the model's working resolution. Writes checkpoints and the loss log under
// out_dir when it is non-empty; `bg` rides along into every checkpoint.
//
// Phase 1 weighting favors reconstruction so the autoencoder settles first;
// from phase_switch_epoch on (or earlier, if the plateau detector is enabled
// and the reconstruction term stalls) phase 2 weights hand the objective to
// the prediction task. On a non-finite loss the last completed epoch's
// parameters are restored and saved before returning, so a divergent run
// still leaves a usable artifact.
inline TrainResult train_model(Model<float>& model, const BackgroundModel& bg,
                               const std::vector<Video>& videos, const TrainSchedule& sched,
                               const std::string& out_dir = "", std::ostream* log = nullptr) {
  using T = float;
  sched.validate();
  std::vector<SequenceSample> samples = make_samples(videos, model.cfg.k, model.cfg.t_offset);
  if (samples.empty())
    throw std::invalid_argument("training set yields no samples: videos shorter than k + t_offset");

  namespace fs = std::filesystem;
  std::ofstream loss_csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    loss_csv.open(fs::path(out_dir) / "loss.csv");
    loss_csv << "epoch,step,recon,pred,reg,total,lr,lambda_r,lambda_p\n";
  }

  Adam<T> opt(model.reg, sched.lr);
  GradStore<T> grads(model.reg);
  TrainResult result;
  std::vector<Tensor<T>> last_good = detail::snapshot_params(model.reg);
  std::vector<Tensor<T>> best_params;

  bool in_phase2 = false;
  double plateau_best_recon = std::numeric_limits<double>::infinity();
  int plateau_stall = 0;

  auto save = [&](const std::string& name) -> std::string {
    if (out_dir.empty()) return "";
    const std::string path = (fs::path(out_dir) / name).string();
    save_checkpoint(path, model, bg);
    return path;
  };

  for (int epoch = 0; epoch < sched.total_epochs; ++epoch) {
    if (!in_phase2 && epoch >= sched.phase_switch_epoch) in_phase2 = true;
    const LossWeights weights = in_phase2 ? sched.phase2 : sched.phase1;
    if (in_phase2 && result.switch_epoch_used < 0) result.switch_epoch_used = epoch;
    opt.set_lr(sched.lr_at(epoch));

    std::vector<size_t> order(samples.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(derive_seed(sched.seed, static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);

    LossReport epoch_mean;
    epoch_mean.epoch = epoch;
    long steps = 0;
    try {
      for (size_t start = 0; start < order.size(); start += static_cast<size_t>(sched.batch_size)) {
        const size_t end = std::min(order.size(), start + static_cast<size_t>(sched.batch_size));
        const T scale = static_cast<T>(1.0 / static_cast<double>(end - start));
        grads.zero();
        LossReport step_mean;
        for (size_t i = start; i < end; ++i) {
          SampleView<T> view = view_sample(videos, samples[order[i]]);
          LossReport r = compute_loss(model, view, weights, &grads, scale, true);
          step_mean.recon += r.recon;
          step_mean.pred += r.pred;
          step_mean.reg = r.reg;
          step_mean.total += r.total;
        }
        const double inv = 1.0 / static_cast<double>(end - start);
        step_mean.recon *= inv;
        step_mean.pred *= inv;
        step_mean.total *= inv;
        opt.step(model.reg, grads);

        if (loss_csv.is_open())
          loss_csv << epoch << "," << steps << "," << fmt_float(step_mean.recon) << ","
                   << fmt_float(step_mean.pred) << "," << fmt_float(step_mean.reg) << ","
                   << fmt_float(step_mean.total) << "," << fmt_float(opt.lr()) << ","
                   << fmt_float(weights.lambda_r) << "," << fmt_float(weights.lambda_p) << "\n";
        epoch_mean.recon += step_mean.recon;
        epoch_mean.pred += step_mean.pred;
        epoch_mean.reg = step_mean.reg;
        epoch_mean.total += step_mean.total;
        ++steps;
      }
    } catch (const std::runtime_error& e) {
      // divergence: put the last completed epoch back and persist it
      detail::restore_params(model.reg, last_good);
      result.diverged = true;
      result.final_checkpoint = save("model_final.ckpt");
      if (log) *log << "training aborted at epoch " << epoch << ": " << e.what() << "\n";
      return result;
    }

    epoch_mean.recon /= steps;
    epoch_mean.pred /= steps;
    epoch_mean.total /= steps;
    epoch_mean.step = steps;
    result.epoch_reports.push_back(epoch_mean);
    last_good = detail::snapshot_params(model.reg);

    if (log)
      *log << "epoch " << epoch << (in_phase2 ? " [phase2]" : " [phase1]") << " recon "
           << fmt_float(epoch_mean.recon) << " pred " << fmt_float(epoch_mean.pred) << " total "
           << fmt_float(epoch_mean.total) << " lr " << fmt_float(opt.lr()) << "\n";

    if (result.best_epoch < 0 || epoch_mean.total < result.best_total) {
      result.best_epoch = epoch;
      result.best_total = epoch_mean.total;
      best_params = last_good;
    }

    if (!in_phase2 && sched.plateau_switch) {
      if (epoch_mean.recon < plateau_best_recon * (1.0 - sched.plateau_rel_improvement)) {
        plateau_best_recon = epoch_mean.recon;
        plateau_stall = 0;
      } else if (++plateau_stall >= sched.plateau_patience) {
        in_phase2 = true;
      }
      plateau_best_recon = std::min(plateau_best_recon, epoch_mean.recon);
    }

    if (sched.checkpoint_every > 0 && (epoch + 1) % sched.checkpoint_every == 0) {
      char name[48];
      // numbered by completed epochs, so _002 holds the state after epoch 2
      std::snprintf(name, sizeof(name), "model_epoch_%03d.ckpt", epoch + 1);
      save(name);
    }
  }

  result.final_checkpoint = save("model_final.ckpt");
  if (!best_params.empty() && !out_dir.empty()) {
    std::vector<Tensor<T>> current = detail::snapshot_params(model.reg);
    detail::restore_params(model.reg, best_params);
    result.best_checkpoint = save("model_best.ckpt");
    detail::restore_params(model.reg, current);
  }
  return result;
}

}  // namespace vad
