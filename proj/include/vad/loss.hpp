#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "vad/network.hpp"
#include "vad/samples.hpp"
#include "vad/tensor.hpp"

namespace vad {

struct LossWeights {
  double lambda_r = 1.0;
  double lambda_p = 0.001;
  double gamma = 0.001;
};

struct LossReport {
  double recon = 0.0, pred = 0.0, reg = 0.0, total = 0.0;
  int epoch = 0;
  long step = 0;
};

namespace detail {
template <typename T>
inline void accumulate_level_grad(Tensor<T>& dst, Tensor<T>&& src) {
  if (dst.numel() == 0)
    dst = std::move(src);
  else
    add_inplace(dst, src);
}
}  // namespace detail

// The joint objective over one sample: reconstruction of frames 2..k through
// the previous-frame-shortcut decoder, prediction of the future latent code,
// and an L2 penalty over every learnable parameter. All three terms are means
// (per pixel / per element) so the weights are resolution-independent.
//
// The prediction target is the encoder's code for the future frame, treated
// as a constant: no gradient flows through the target branch, so the encoder
// cannot cheapen the prediction task by collapsing its codes. `fixed_target`
// substitutes a precomputed target code; finite-difference checks need it so
// that the numeric loss optimizes the same objective the analytic gradient
// describes.
//
// When `grads` is given, parameter gradients scaled by `grad_scale` are
// accumulated (callers average over a batch by passing 1/batch_size).
template <typename T>
LossReport compute_loss(Model<T>& model, const SampleView<T>& sample, const LossWeights& w,
                        GradStore<T>* grads = nullptr, T grad_scale = T(1),
                        bool update_running = false, const Tensor<T>* fixed_target = nullptr) {
  const int k = model.cfg.k;
  if (static_cast<int>(sample.inputs.size()) != k)
    throw std::invalid_argument("compute_loss: sample has " + std::to_string(sample.inputs.size()) +
                                " inputs, config expects " + std::to_string(k));
  if (!sample.target) throw std::invalid_argument("compute_loss: sample has no target frame");
  const bool training = true;
  const bool want_grads = grads != nullptr;

  using EncodeCache = typename Model<T>::EncodeCache;
  using DecodeCache = typename Model<T>::DecodeCache;
  using Encoded = typename Model<T>::Encoded;

  // Forward: encode every input frame, reconstruct frames 2..k, predict z_t.
  std::vector<EncodeCache> enc_caches(want_grads ? static_cast<size_t>(k) : 0);
  std::vector<Encoded> enc;
  enc.reserve(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j)
    enc.push_back(model.encode(*sample.inputs[static_cast<size_t>(j)], training, update_running,
                               want_grads ? &enc_caches[static_cast<size_t>(j)] : nullptr));

  std::vector<DecodeCache> dec_caches(want_grads ? static_cast<size_t>(k - 1) : 0);
  std::vector<Tensor<T>> recons;
  recons.reserve(static_cast<size_t>(k - 1));
  for (int q = 1; q < k; ++q)
    recons.push_back(model.decode(enc[static_cast<size_t>(q)].latent(),
                                  enc[static_cast<size_t>(q - 1)].pyramid, training, update_running,
                                  want_grads ? &dec_caches[static_cast<size_t>(q - 1)] : nullptr));

  std::vector<const Tensor<T>*> codes;
  codes.reserve(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) codes.push_back(&enc[static_cast<size_t>(j)].latent());
  typename Model<T>::MotionCache motion_cache;
  Tensor<T> zhat = model.predict_latent(codes, training, update_running,
                                        want_grads ? &motion_cache : nullptr);

  Tensor<T> target_code;
  const Tensor<T>* zt = fixed_target;
  if (!zt) {
    // constant target: forward only, no cache, no gradient path
    target_code = model.encode(*sample.target, training, update_running).latent();
    zt = &target_code;
  }

  // Loss terms.
  LossReport report;
  const double n_pixels = static_cast<double>(sample.inputs[0]->numel());
  for (int q = 1; q < k; ++q) {
    const Tensor<T>& r = recons[static_cast<size_t>(q - 1)];
    const Tensor<T>& t = *sample.inputs[static_cast<size_t>(q)];
    check_same_shape(r, t, "compute_loss reconstruction");
    double sq = 0.0;
    for (int64_t i = 0; i < r.numel(); ++i) {
      const double d = static_cast<double>(r[i]) - t[i];
      sq += d * d;
    }
    report.recon += sq / n_pixels;
  }
  report.recon /= (k - 1);

  check_same_shape(zhat, *zt, "compute_loss prediction");
  const double n_latent = static_cast<double>(zhat.numel());
  {
    double sq = 0.0;
    for (int64_t i = 0; i < zhat.numel(); ++i) {
      const double d = static_cast<double>(zhat[i]) - (*zt)[i];
      sq += d * d;
    }
    report.pred = sq / n_latent;
  }

  for (int p = 0; p < model.reg.num_params(); ++p) {
    const Tensor<T>& pt = model.reg.param(p);
    double sq = 0.0;
    for (int64_t i = 0; i < pt.numel(); ++i) sq += static_cast<double>(pt[i]) * pt[i];
    report.reg += sq;
  }

  report.total = w.lambda_r * report.recon + w.lambda_p * report.pred + w.gamma * report.reg;
  if (!std::isfinite(report.recon)) throw std::runtime_error("non-finite loss: reconstruction term");
  if (!std::isfinite(report.pred)) throw std::runtime_error("non-finite loss: prediction term");
  if (!std::isfinite(report.reg)) throw std::runtime_error("non-finite loss: regularization term");

  if (!want_grads) return report;

  // Backward. Per-frame pyramid-level gradients accumulate from three
  // sources before flowing through each frame's encoder: the frame's own
  // reconstruction (latent input), the next frame's reconstruction (shortcut
  // source), and the motion model (code stack).
  const int B = model.cfg.encoder_blocks;
  std::vector<std::vector<Tensor<T>>> g_levels(static_cast<size_t>(k));
  for (auto& v : g_levels) v.resize(static_cast<size_t>(B));

  for (int q = 1; q < k; ++q) {
    const Tensor<T>& r = recons[static_cast<size_t>(q - 1)];
    const Tensor<T>& t = *sample.inputs[static_cast<size_t>(q)];
    Tensor<T> g_recon(r.shape);
    const T scale = static_cast<T>(grad_scale * w.lambda_r * 2.0 / (n_pixels * (k - 1)));
    for (int64_t i = 0; i < r.numel(); ++i) g_recon[i] = scale * (r[i] - t[i]);
    auto dg = model.decode_backward(dec_caches[static_cast<size_t>(q - 1)], g_recon, *grads);
    detail::accumulate_level_grad(g_levels[static_cast<size_t>(q)][static_cast<size_t>(B - 1)],
                                  std::move(dg.g_latent));
    for (int l = 0; l < B; ++l)
      detail::accumulate_level_grad(g_levels[static_cast<size_t>(q - 1)][static_cast<size_t>(l)],
                                    std::move(dg.g_pyramid[static_cast<size_t>(l)]));
  }

  {
    Tensor<T> g_pred(zhat.shape);
    const T scale = static_cast<T>(grad_scale * w.lambda_p * 2.0 / n_latent);
    for (int64_t i = 0; i < zhat.numel(); ++i) g_pred[i] = scale * (zhat[i] - (*zt)[i]);
    auto code_grads = model.predict_latent_backward(motion_cache, g_pred, *grads);
    for (int j = 0; j < k; ++j)
      detail::accumulate_level_grad(g_levels[static_cast<size_t>(j)][static_cast<size_t>(B - 1)],
                                    std::move(code_grads[static_cast<size_t>(j)]));
  }

  for (int j = 0; j < k; ++j)
    model.encode_backward(enc_caches[static_cast<size_t>(j)], std::move(g_levels[static_cast<size_t>(j)]),
                          *grads);

  const T reg_scale = static_cast<T>(grad_scale * w.gamma * 2.0);
  for (int p = 0; p < model.reg.num_params(); ++p)
    add_scaled_inplace(grads->grad(p), model.reg.param(p), reg_scale);

  return report;
}

}  // namespace vad
