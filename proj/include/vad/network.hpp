#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vad/config.hpp"
#include "vad/layers.hpp"
#include "vad/tensor.hpp"

namespace vad {

// The full network: a per-frame encoder/decoder pair with previous-frame
// shortcut connections, plus a temporal-convolution motion model that maps a
// stack of k latent codes to the code expected t_offset steps ahead.
//
// Encoder block b: Conv3x3 s1 -> BN -> lrelu -> Conv3x3 s2 -> BN -> lrelu,
// widening to level_channels(b). Block outputs form the feature pyramid
// (level b lives at h/2^b) and the last level is the latent code.
//
// Decoder stage at level l: concat the previous frame's pyramid level l
// (exactly doubling the channel count) -> Conv3x3 -> BN -> lrelu -> Conv3x3
// -> BN -> lrelu -> nearest upsample x2, walking l = B..1, then a 3x3 head
// and tanh back to a 3-channel residual frame.
//
// Motion model: codes stacked on a temporal axis, motion_blocks of
// {Conv3D 3x3x3, temporal stride 2, spatial stride 1, pad 1 -> BN -> lrelu}
// (k=8 collapses 4,2,1; k=6 collapses 3,2,1), then a linear (Lt,1,1)
// convolution head that flattens whatever temporal extent remains.
template <typename T>
class Model {
 public:
  explicit Model(const ModelConfig& config, uint64_t seed = 1) : cfg(config) {
    cfg.validate();
    Rng rng(seed);
    const double slope = cfg.leaky_slope;
    const int B = cfg.encoder_blocks;

    int cin = 3;
    for (int b = 1; b <= B; ++b) {
      const int cout = cfg.level_channels(b);
      const std::string base = "enc.b" + std::to_string(b);
      enc_conv1_.emplace_back(reg, base + ".conv1", cin, cout, 3, 1, 1, slope, rng);
      enc_bn1_.emplace_back(reg, base + ".bn1", cout);
      enc_conv2_.emplace_back(reg, base + ".conv2", cout, cout, 3, 2, 1, slope, rng);
      enc_bn2_.emplace_back(reg, base + ".bn2", cout);
      cin = cout;
    }

    for (int l = B; l >= 1; --l) {
      const int xin = cfg.level_channels(l);
      const int out = (l == 1) ? cfg.base_channels : cfg.level_channels(l - 1);
      const std::string base = "dec.s" + std::to_string(l);
      dec_conv1_.emplace_back(reg, base + ".conv1", 2 * xin, xin, 3, 1, 1, slope, rng);
      dec_bn1_.emplace_back(reg, base + ".bn1", xin);
      dec_conv2_.emplace_back(reg, base + ".conv2", xin, out, 3, 1, 1, slope, rng);
      dec_bn2_.emplace_back(reg, base + ".bn2", out);
    }
    dec_head_ = Conv2d<T>(reg, "dec.head", cfg.base_channels, 3, 3, 1, 1, slope, rng);

    const int C = cfg.latent_channels;
    for (int b = 1; b <= cfg.motion_blocks; ++b) {
      const std::string base = "motion.b" + std::to_string(b);
      motion_conv_.emplace_back(reg, base + ".conv", C, C, 3, 3, 3, 2, 1, 1, 1, 1, 1, slope, rng);
      motion_bn_.emplace_back(reg, base + ".bn", C);
    }
    motion_head_ = Conv3d<T>(reg, "motion.head", C, C, cfg.motion_temporal_out(), 1, 1,
                             1, 1, 1, 0, 0, 0, slope, rng);
  }

  // --------------------------------------------------------------------------
  // Encoder. The returned pyramid holds levels 1..B; the last level is the
  // latent code.
  // --------------------------------------------------------------------------
  struct Encoded {
    std::vector<Tensor<T>> pyramid;
    const Tensor<T>& latent() const { return pyramid.back(); }
  };

  struct EncodeCache {
    struct Block {
      typename Conv2d<T>::Cache c1, c2;
      typename BatchNorm<T>::Cache bn1, bn2;
      Tensor<T> pre1, pre2;  // post-BN pre-activation values
    };
    std::vector<Block> blocks;
  };

  Encoded encode(const Tensor<T>& frame, bool training = false, bool update_running = false,
                 EncodeCache* cache = nullptr) {
    if (frame.rank() != 3 || frame.dim(0) != 3 || frame.dim(1) != cfg.height || frame.dim(2) != cfg.width)
      throw std::invalid_argument("encode: frame shape " + frame.shape_str() + " does not match config");
    const int B = cfg.encoder_blocks;
    if (cache) cache->blocks.resize(static_cast<size_t>(B));

    Encoded enc;
    enc.pyramid.reserve(static_cast<size_t>(B));
    const Tensor<T>* x = &frame;
    Tensor<T> cur;
    for (int b = 0; b < B; ++b) {
      typename EncodeCache::Block* cb = cache ? &cache->blocks[static_cast<size_t>(b)] : nullptr;
      Tensor<T> h = enc_conv1_[static_cast<size_t>(b)].forward(reg, *x, cb ? &cb->c1 : nullptr);
      h = enc_bn1_[static_cast<size_t>(b)].forward(reg, h, training, update_running, cb ? &cb->bn1 : nullptr);
      if (cb) cb->pre1 = h;
      h = leaky_relu(h, static_cast<T>(cfg.leaky_slope));
      h = enc_conv2_[static_cast<size_t>(b)].forward(reg, h, cb ? &cb->c2 : nullptr);
      h = enc_bn2_[static_cast<size_t>(b)].forward(reg, h, training, update_running, cb ? &cb->bn2 : nullptr);
      if (cb) cb->pre2 = h;
      cur = leaky_relu(h, static_cast<T>(cfg.leaky_slope));
      enc.pyramid.push_back(cur);
      x = &enc.pyramid.back();
    }
    return enc;
  }

  // g_levels[l-1] is the gradient w.r.t. pyramid level l; empty tensors mean
  // zero. Gradients w.r.t. the input frame are discarded (frames are data).
  void encode_backward(const EncodeCache& cache, std::vector<Tensor<T>> g_levels, GradStore<T>& gs) {
    const int B = cfg.encoder_blocks;
    Tensor<T> g = std::move(g_levels.back());
    for (int b = B - 1; b >= 0; --b) {
      const typename EncodeCache::Block& cb = cache.blocks[static_cast<size_t>(b)];
      g = leaky_relu_backward(cb.pre2, g, static_cast<T>(cfg.leaky_slope));
      g = enc_bn2_[static_cast<size_t>(b)].backward(reg, gs, cb.bn2, g);
      g = enc_conv2_[static_cast<size_t>(b)].backward(reg, gs, cb.c2, g);
      g = leaky_relu_backward(cb.pre1, g, static_cast<T>(cfg.leaky_slope));
      g = enc_bn1_[static_cast<size_t>(b)].backward(reg, gs, cb.bn1, g);
      g = enc_conv1_[static_cast<size_t>(b)].backward(reg, gs, cb.c1, g);
      if (b > 0 && g_levels[static_cast<size_t>(b - 1)].numel() > 0)
        add_inplace(g, g_levels[static_cast<size_t>(b - 1)]);
    }
  }

  // --------------------------------------------------------------------------
  // Decoder.
  // --------------------------------------------------------------------------
  struct DecodeCache {
    struct Stage {
      typename Conv2d<T>::Cache c1, c2;
      typename BatchNorm<T>::Cache bn1, bn2;
      Tensor<T> pre1, pre2;
    };
    std::vector<Stage> stages;
    typename Conv2d<T>::Cache head;
    Tensor<T> out;  // tanh output, reused by the backward pass
  };

  Tensor<T> decode(const Tensor<T>& latent, const std::vector<Tensor<T>>& pyramid_prev,
                   bool training = false, bool update_running = false, DecodeCache* cache = nullptr) {
    const int B = cfg.encoder_blocks;
    if (latent.rank() != 3 || latent.dim(0) != cfg.latent_channels ||
        latent.dim(1) != cfg.latent_h() || latent.dim(2) != cfg.latent_w())
      throw std::invalid_argument("decode: latent shape " + latent.shape_str() + " does not match config");
    if (static_cast<int>(pyramid_prev.size()) != B)
      throw std::invalid_argument("decode: pyramid must have one level per encoder block");
    if (cache) cache->stages.resize(static_cast<size_t>(B));

    Tensor<T> x = latent;
    for (int i = 0; i < B; ++i) {
      const int l = B - i;
      const Tensor<T>& skip = pyramid_prev[static_cast<size_t>(l - 1)];
      if (!skip.same_shape(x))
        throw std::invalid_argument("decode: pyramid level " + std::to_string(l) + " shape " +
                                    skip.shape_str() + " does not match " + x.shape_str());
      typename DecodeCache::Stage* cs = cache ? &cache->stages[static_cast<size_t>(i)] : nullptr;
      Tensor<T> h = concat_channels(x, skip);
      h = dec_conv1_[static_cast<size_t>(i)].forward(reg, h, cs ? &cs->c1 : nullptr);
      h = dec_bn1_[static_cast<size_t>(i)].forward(reg, h, training, update_running, cs ? &cs->bn1 : nullptr);
      if (cs) cs->pre1 = h;
      h = leaky_relu(h, static_cast<T>(cfg.leaky_slope));
      h = dec_conv2_[static_cast<size_t>(i)].forward(reg, h, cs ? &cs->c2 : nullptr);
      h = dec_bn2_[static_cast<size_t>(i)].forward(reg, h, training, update_running, cs ? &cs->bn2 : nullptr);
      if (cs) cs->pre2 = h;
      h = leaky_relu(h, static_cast<T>(cfg.leaky_slope));
      x = upsample2x(h);
    }
    Tensor<T> y = dec_head_.forward(reg, x, cache ? &cache->head : nullptr);
    y = tanh_forward(y);
    if (cache) cache->out = y;
    return y;
  }

  struct DecodeGrads {
    Tensor<T> g_latent;
    std::vector<Tensor<T>> g_pyramid;  // one entry per level 1..B
  };

  DecodeGrads decode_backward(const DecodeCache& cache, const Tensor<T>& g_recon, GradStore<T>& gs) {
    const int B = cfg.encoder_blocks;
    DecodeGrads out;
    out.g_pyramid.resize(static_cast<size_t>(B));

    Tensor<T> g = tanh_backward(cache.out, g_recon);
    g = dec_head_.backward(reg, gs, cache.head, g);
    for (int i = B - 1; i >= 0; --i) {
      const int l = B - i;
      const typename DecodeCache::Stage& cs = cache.stages[static_cast<size_t>(i)];
      g = upsample2x_backward(g);
      g = leaky_relu_backward(cs.pre2, g, static_cast<T>(cfg.leaky_slope));
      g = dec_bn2_[static_cast<size_t>(i)].backward(reg, gs, cs.bn2, g);
      g = dec_conv2_[static_cast<size_t>(i)].backward(reg, gs, cs.c2, g);
      g = leaky_relu_backward(cs.pre1, g, static_cast<T>(cfg.leaky_slope));
      g = dec_bn1_[static_cast<size_t>(i)].backward(reg, gs, cs.bn1, g);
      g = dec_conv1_[static_cast<size_t>(i)].backward(reg, gs, cs.c1, g);
      Tensor<T> gx, gskip;
      split_channels_backward(g, cfg.level_channels(l), gx, gskip);
      out.g_pyramid[static_cast<size_t>(l - 1)] = std::move(gskip);
      g = std::move(gx);
    }
    out.g_latent = std::move(g);
    return out;
  }

  // --------------------------------------------------------------------------
  // Motion model.
  // --------------------------------------------------------------------------
  struct MotionCache {
    struct Block {
      typename Conv3d<T>::Cache conv;
      typename BatchNorm<T>::Cache bn;
      Tensor<T> pre;
    };
    std::vector<Block> blocks;
    typename Conv3d<T>::Cache head;
  };

  Tensor<T> predict_latent(const std::vector<const Tensor<T>*>& codes, bool training = false,
                           bool update_running = false, MotionCache* cache = nullptr) {
    if (static_cast<int>(codes.size()) != cfg.k)
      throw std::invalid_argument("predict_latent: expected " + std::to_string(cfg.k) + " codes, got " +
                                  std::to_string(codes.size()));
    for (const Tensor<T>* c : codes)
      if (c->rank() != 3 || c->dim(0) != cfg.latent_channels || c->dim(1) != cfg.latent_h() ||
          c->dim(2) != cfg.latent_w())
        throw std::invalid_argument("predict_latent: code shape " + c->shape_str() + " does not match config");
    if (cache) cache->blocks.resize(static_cast<size_t>(cfg.motion_blocks));

    Tensor<T> x = stack_temporal(codes);
    for (int b = 0; b < cfg.motion_blocks; ++b) {
      typename MotionCache::Block* cb = cache ? &cache->blocks[static_cast<size_t>(b)] : nullptr;
      x = motion_conv_[static_cast<size_t>(b)].forward(reg, x, cb ? &cb->conv : nullptr);
      x = motion_bn_[static_cast<size_t>(b)].forward(reg, x, training, update_running, cb ? &cb->bn : nullptr);
      if (cb) cb->pre = x;
      x = leaky_relu(x, static_cast<T>(cfg.leaky_slope));
    }
    Tensor<T> y = motion_head_.forward(reg, x, cache ? &cache->head : nullptr);
    // [C,1,Hz,Wz] -> [C,Hz,Wz]; the head consumed the whole temporal extent
    Tensor<T> code;
    code.shape = {cfg.latent_channels, cfg.latent_h(), cfg.latent_w()};
    code.data = std::move(y.data);
    return code;
  }

  std::vector<Tensor<T>> predict_latent_backward(const MotionCache& cache, const Tensor<T>& g_pred,
                                                 GradStore<T>& gs) {
    Tensor<T> g;
    g.shape = {cfg.latent_channels, 1, cfg.latent_h(), cfg.latent_w()};
    g.data = g_pred.data;
    g = motion_head_.backward(reg, gs, cache.head, g);
    for (int b = cfg.motion_blocks - 1; b >= 0; --b) {
      const typename MotionCache::Block& cb = cache.blocks[static_cast<size_t>(b)];
      g = leaky_relu_backward(cb.pre, g, static_cast<T>(cfg.leaky_slope));
      g = motion_bn_[static_cast<size_t>(b)].backward(reg, gs, cb.bn, g);
      g = motion_conv_[static_cast<size_t>(b)].backward(reg, gs, cb.conv, g);
    }
    return unstack_temporal(g);
  }

  ModelConfig cfg;
  ParamRegistry<T> reg;

 private:
  std::vector<Conv2d<T>> enc_conv1_, enc_conv2_;
  std::vector<BatchNorm<T>> enc_bn1_, enc_bn2_;
  std::vector<Conv2d<T>> dec_conv1_, dec_conv2_;  // index 0 handles level B
  std::vector<BatchNorm<T>> dec_bn1_, dec_bn2_;
  Conv2d<T> dec_head_;
  std::vector<Conv3d<T>> motion_conv_;
  std::vector<BatchNorm<T>> motion_bn_;
  Conv3d<T> motion_head_;
};

}  // namespace vad
