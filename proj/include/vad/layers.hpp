#pragma once

#include <Eigen/Core>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vad/tensor.hpp"

namespace vad {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ----------------------------------------------------------------------------
// Parameter storage. Layers own integer handles into a registry, so the whole
// model is serializable and gradients live in a parallel store with identical
// shapes. Registration order is construction order and therefore stable.
// ----------------------------------------------------------------------------
template <typename T>
class ParamRegistry {
 public:
  int add_param(const std::string& name, Tensor<T> t) {
    if (param_index_.count(name)) throw std::invalid_argument("duplicate param name: " + name);
    param_index_[name] = static_cast<int>(params_.size());
    param_names_.push_back(name);
    params_.push_back(std::move(t));
    return static_cast<int>(params_.size()) - 1;
  }
  int add_buffer(const std::string& name, Tensor<T> t) {
    if (buffer_index_.count(name)) throw std::invalid_argument("duplicate buffer name: " + name);
    buffer_index_[name] = static_cast<int>(buffers_.size());
    buffer_names_.push_back(name);
    buffers_.push_back(std::move(t));
    return static_cast<int>(buffers_.size()) - 1;
  }

  Tensor<T>& param(int id) { return params_.at(static_cast<size_t>(id)); }
  const Tensor<T>& param(int id) const { return params_.at(static_cast<size_t>(id)); }
  Tensor<T>& buffer(int id) { return buffers_.at(static_cast<size_t>(id)); }
  const Tensor<T>& buffer(int id) const { return buffers_.at(static_cast<size_t>(id)); }

  int num_params() const { return static_cast<int>(params_.size()); }
  int num_buffers() const { return static_cast<int>(buffers_.size()); }
  const std::string& param_name(int id) const { return param_names_.at(static_cast<size_t>(id)); }
  const std::string& buffer_name(int id) const { return buffer_names_.at(static_cast<size_t>(id)); }

  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& p : params_) n += p.data.size();
    return n;
  }

 private:
  std::vector<Tensor<T>> params_, buffers_;
  std::vector<std::string> param_names_, buffer_names_;
  std::map<std::string, int> param_index_, buffer_index_;
};

template <typename T>
class GradStore {
 public:
  explicit GradStore(const ParamRegistry<T>& reg) {
    grads_.reserve(static_cast<size_t>(reg.num_params()));
    for (int i = 0; i < reg.num_params(); ++i) grads_.push_back(Tensor<T>::zeros(reg.param(i).shape));
  }
  void zero() {
    for (auto& g : grads_) g.fill(T(0));
  }
  Tensor<T>& grad(int id) { return grads_.at(static_cast<size_t>(id)); }
  const Tensor<T>& grad(int id) const { return grads_.at(static_cast<size_t>(id)); }
  int size() const { return static_cast<int>(grads_.size()); }

 private:
  std::vector<Tensor<T>> grads_;
};

// Kaiming-style init scaled for the leaky slope used everywhere downstream.
template <typename T>
inline void kaiming_fill(Tensor<T>& w, long fan_in, double slope, Rng& rng) {
  const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
  const double std = gain / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : w.data) v = static_cast<T>(rng.normal() * std);
}

// ----------------------------------------------------------------------------
// 2D convolution on [C,H,W] tensors via im2col and one GEMM. The column matrix
// is cached for the backward pass, which reuses it for the weight gradient and
// scatters W^T * gy back through col2im for the input gradient.
// ----------------------------------------------------------------------------
template <typename T>
class Conv2d {
 public:
  struct Cache {
    MatRM<T> cols;  // [cin*k*k, oh*ow]
    int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  };

  Conv2d() = default;
  Conv2d(ParamRegistry<T>& reg, const std::string& name, int cin, int cout, int k, int stride,
         int pad, double slope, Rng& rng)
      : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad) {
    Tensor<T> w({cout, cin, k, k});
    kaiming_fill(w, static_cast<long>(cin) * k * k, slope, rng);
    w_id_ = reg.add_param(name + ".weight", std::move(w));
    b_id_ = reg.add_param(name + ".bias", Tensor<T>::zeros({cout}));
  }

  int out_extent(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }
  int out_channels() const { return cout_; }

  Tensor<T> forward(const ParamRegistry<T>& reg, const Tensor<T>& x, Cache* cache) const {
    if (x.rank() != 3 || x.dim(0) != cin_)
      throw std::invalid_argument("Conv2d: input shape mismatch, got " + x.shape_str());
    const int h = x.dim(1), w = x.dim(2);
    const int oh = out_extent(h), ow = out_extent(w);
    if (oh <= 0 || ow <= 0) throw std::invalid_argument("Conv2d: input too small");

    MatRM<T> cols(cin_ * k_ * k_, oh * ow);
    im2col(x, oh, ow, cols);

    const Tensor<T>& wt = reg.param(w_id_);
    const Tensor<T>& bt = reg.param(b_id_);
    Eigen::Map<const MatRM<T>> W(wt.data.data(), cout_, cin_ * k_ * k_);
    Tensor<T> y({cout_, oh, ow});
    Eigen::Map<MatRM<T>> Y(y.data.data(), cout_, oh * ow);
    Y.noalias() = W * cols;
    for (int c = 0; c < cout_; ++c) Y.row(c).array() += bt.data[static_cast<size_t>(c)];

    if (cache) {
      cache->cols = std::move(cols);
      cache->in_h = h;
      cache->in_w = w;
      cache->out_h = oh;
      cache->out_w = ow;
    }
    return y;
  }

  Tensor<T> backward(const ParamRegistry<T>& reg, GradStore<T>& gs, const Cache& cache,
                     const Tensor<T>& gy) const {
    const int oh = cache.out_h, ow = cache.out_w;
    Eigen::Map<const MatRM<T>> GY(gy.data.data(), cout_, oh * ow);

    Tensor<T>& gw = gs.grad(w_id_);
    Eigen::Map<MatRM<T>> GW(gw.data.data(), cout_, cin_ * k_ * k_);
    GW.noalias() += GY * cache.cols.transpose();

    Tensor<T>& gb = gs.grad(b_id_);
    for (int c = 0; c < cout_; ++c) gb.data[static_cast<size_t>(c)] += GY.row(c).sum();

    const Tensor<T>& wt = reg.param(w_id_);
    Eigen::Map<const MatRM<T>> W(wt.data.data(), cout_, cin_ * k_ * k_);
    MatRM<T> gcols(cin_ * k_ * k_, oh * ow);
    gcols.noalias() = W.transpose() * GY;

    Tensor<T> gx = Tensor<T>::zeros({cin_, cache.in_h, cache.in_w});
    col2im(gcols, oh, ow, gx);
    return gx;
  }

 private:
  void im2col(const Tensor<T>& x, int oh, int ow, MatRM<T>& cols) const {
    const int h = x.dim(1), w = x.dim(2);
    for (int c = 0; c < cin_; ++c)
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx) {
          const int row = (c * k_ + ky) * k_ + kx;
          T* dst = cols.data() + static_cast<size_t>(row) * oh * ow;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= h) {
              for (int ox = 0; ox < ow; ++ox) dst[oy * ow + ox] = T(0);
              continue;
            }
            const T* src = x.data.data() + (static_cast<size_t>(c) * h + iy) * w;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              dst[oy * ow + ox] = (ix < 0 || ix >= w) ? T(0) : src[ix];
            }
          }
        }
  }

  void col2im(const MatRM<T>& gcols, int oh, int ow, Tensor<T>& gx) const {
    const int h = gx.dim(1), w = gx.dim(2);
    for (int c = 0; c < cin_; ++c)
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx) {
          const int row = (c * k_ + ky) * k_ + kx;
          const T* src = gcols.data() + static_cast<size_t>(row) * oh * ow;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= h) continue;
            T* dst = gx.data.data() + (static_cast<size_t>(c) * h + iy) * w;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix >= 0 && ix < w) dst[ix] += src[oy * ow + ox];
            }
          }
        }
  }

  int w_id_ = -1, b_id_ = -1;
  int cin_ = 0, cout_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
};

// ----------------------------------------------------------------------------
// 3D convolution on [C,L,H,W] tensors, same im2col strategy with a temporal
// axis. Kernel extents and strides are independent per axis so the motion
// model's temporal-stride-2 blocks and its (Lt,1,1) head share one type.
// ----------------------------------------------------------------------------
template <typename T>
class Conv3d {
 public:
  struct Cache {
    MatRM<T> cols;
    int in_l = 0, in_h = 0, in_w = 0, out_l = 0, out_h = 0, out_w = 0;
  };

  Conv3d() = default;
  Conv3d(ParamRegistry<T>& reg, const std::string& name, int cin, int cout, int kt, int kh, int kw,
         int st, int sh, int sw, int pt, int ph, int pw, double slope, Rng& rng)
      : cin_(cin), cout_(cout), kt_(kt), kh_(kh), kw_(kw), st_(st), sh_(sh), sw_(sw),
        pt_(pt), ph_(ph), pw_(pw) {
    Tensor<T> w({cout, cin, kt, kh, kw});
    kaiming_fill(w, static_cast<long>(cin) * kt * kh * kw, slope, rng);
    w_id_ = reg.add_param(name + ".weight", std::move(w));
    b_id_ = reg.add_param(name + ".bias", Tensor<T>::zeros({cout}));
  }

  static int extent(int in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

  Tensor<T> forward(const ParamRegistry<T>& reg, const Tensor<T>& x, Cache* cache) const {
    if (x.rank() != 4 || x.dim(0) != cin_)
      throw std::invalid_argument("Conv3d: input shape mismatch, got " + x.shape_str());
    const int l = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int ol = extent(l, kt_, st_, pt_), oh = extent(h, kh_, sh_, ph_), ow = extent(w, kw_, sw_, pw_);
    if (ol <= 0 || oh <= 0 || ow <= 0) throw std::invalid_argument("Conv3d: input too small");

    const int krows = cin_ * kt_ * kh_ * kw_;
    MatRM<T> cols(krows, ol * oh * ow);
    im2col(x, ol, oh, ow, cols);

    const Tensor<T>& wt = reg.param(w_id_);
    const Tensor<T>& bt = reg.param(b_id_);
    Eigen::Map<const MatRM<T>> W(wt.data.data(), cout_, krows);
    Tensor<T> y({cout_, ol, oh, ow});
    Eigen::Map<MatRM<T>> Y(y.data.data(), cout_, ol * oh * ow);
    Y.noalias() = W * cols;
    for (int c = 0; c < cout_; ++c) Y.row(c).array() += bt.data[static_cast<size_t>(c)];

    if (cache) {
      cache->cols = std::move(cols);
      cache->in_l = l;
      cache->in_h = h;
      cache->in_w = w;
      cache->out_l = ol;
      cache->out_h = oh;
      cache->out_w = ow;
    }
    return y;
  }

  Tensor<T> backward(const ParamRegistry<T>& reg, GradStore<T>& gs, const Cache& cache,
                     const Tensor<T>& gy) const {
    const int krows = cin_ * kt_ * kh_ * kw_;
    const int ocols = cache.out_l * cache.out_h * cache.out_w;
    Eigen::Map<const MatRM<T>> GY(gy.data.data(), cout_, ocols);

    Tensor<T>& gw = gs.grad(w_id_);
    Eigen::Map<MatRM<T>> GW(gw.data.data(), cout_, krows);
    GW.noalias() += GY * cache.cols.transpose();

    Tensor<T>& gb = gs.grad(b_id_);
    for (int c = 0; c < cout_; ++c) gb.data[static_cast<size_t>(c)] += GY.row(c).sum();

    const Tensor<T>& wt = reg.param(w_id_);
    Eigen::Map<const MatRM<T>> W(wt.data.data(), cout_, krows);
    MatRM<T> gcols(krows, ocols);
    gcols.noalias() = W.transpose() * GY;

    Tensor<T> gx = Tensor<T>::zeros({cin_, cache.in_l, cache.in_h, cache.in_w});
    col2im(gcols, cache.out_l, cache.out_h, cache.out_w, gx);
    return gx;
  }

 private:
  void im2col(const Tensor<T>& x, int ol, int oh, int ow, MatRM<T>& cols) const {
    const int l = x.dim(1), h = x.dim(2), w = x.dim(3);
    for (int c = 0; c < cin_; ++c)
      for (int kt = 0; kt < kt_; ++kt)
        for (int ky = 0; ky < kh_; ++ky)
          for (int kx = 0; kx < kw_; ++kx) {
            const int row = ((c * kt_ + kt) * kh_ + ky) * kw_ + kx;
            T* dst = cols.data() + static_cast<size_t>(row) * ol * oh * ow;
            for (int ot = 0; ot < ol; ++ot) {
              const int it = ot * st_ - pt_ + kt;
              for (int oy = 0; oy < oh; ++oy) {
                const int iy = oy * sh_ - ph_ + ky;
                T* d = dst + (static_cast<size_t>(ot) * oh + oy) * ow;
                if (it < 0 || it >= l || iy < 0 || iy >= h) {
                  for (int ox = 0; ox < ow; ++ox) d[ox] = T(0);
                  continue;
                }
                const T* src = x.data.data() + ((static_cast<size_t>(c) * l + it) * h + iy) * w;
                for (int ox = 0; ox < ow; ++ox) {
                  const int ix = ox * sw_ - pw_ + kx;
                  d[ox] = (ix < 0 || ix >= w) ? T(0) : src[ix];
                }
              }
            }
          }
  }

  void col2im(const MatRM<T>& gcols, int ol, int oh, int ow, Tensor<T>& gx) const {
    const int l = gx.dim(1), h = gx.dim(2), w = gx.dim(3);
    for (int c = 0; c < cin_; ++c)
      for (int kt = 0; kt < kt_; ++kt)
        for (int ky = 0; ky < kh_; ++ky)
          for (int kx = 0; kx < kw_; ++kx) {
            const int row = ((c * kt_ + kt) * kh_ + ky) * kw_ + kx;
            const T* src = gcols.data() + static_cast<size_t>(row) * ol * oh * ow;
            for (int ot = 0; ot < ol; ++ot) {
              const int it = ot * st_ - pt_ + kt;
              if (it < 0 || it >= l) continue;
              for (int oy = 0; oy < oh; ++oy) {
                const int iy = oy * sh_ - ph_ + ky;
                if (iy < 0 || iy >= h) continue;
                T* dst = gx.data.data() + ((static_cast<size_t>(c) * l + it) * h + iy) * w;
                const T* s = src + (static_cast<size_t>(ot) * oh + oy) * ow;
                for (int ox = 0; ox < ow; ++ox) {
                  const int ix = ox * sw_ - pw_ + kx;
                  if (ix >= 0 && ix < w) dst[ix] += s[ox];
                }
              }
            }
          }
  }

  int w_id_ = -1, b_id_ = -1;
  int cin_ = 0, cout_ = 0;
  int kt_ = 0, kh_ = 0, kw_ = 0, st_ = 1, sh_ = 1, sw_ = 1, pt_ = 0, ph_ = 0, pw_ = 0;
};

// ----------------------------------------------------------------------------
// BatchNorm over all non-channel dims of a [C,...] tensor, covering both the
// 2D [C,H,W] and temporal [C,L,H,W] cases. Training mode normalizes with the
// current invocation's statistics and optionally folds them into the running
// averages; inference mode uses the frozen running statistics only, which is
// what makes streaming scores match batch scores bit for bit.
// ----------------------------------------------------------------------------
template <typename T>
class BatchNorm {
 public:
  struct Cache {
    Tensor<T> xhat;
    std::vector<T> invstd;
    long n = 0;
  };

  BatchNorm() = default;
  BatchNorm(ParamRegistry<T>& reg, const std::string& name, int channels) : channels_(channels) {
    gamma_id_ = reg.add_param(name + ".gamma", Tensor<T>::full({channels}, T(1)));
    beta_id_ = reg.add_param(name + ".beta", Tensor<T>::zeros({channels}));
    rmean_id_ = reg.add_buffer(name + ".running_mean", Tensor<T>::zeros({channels}));
    rvar_id_ = reg.add_buffer(name + ".running_var", Tensor<T>::full({channels}, T(1)));
  }

  Tensor<T> forward(ParamRegistry<T>& reg, const Tensor<T>& x, bool training, bool update_running,
                    Cache* cache) const {
    if (x.dim(0) != channels_)
      throw std::invalid_argument("BatchNorm: channel mismatch, got " + x.shape_str());
    const long n = static_cast<long>(x.numel()) / channels_;
    const Tensor<T>& gamma = reg.param(gamma_id_);
    const Tensor<T>& beta = reg.param(beta_id_);
    Tensor<T> y(x.shape);

    if (!training) {
      const Tensor<T>& rm = reg.buffer(rmean_id_);
      const Tensor<T>& rv = reg.buffer(rvar_id_);
      for (int c = 0; c < channels_; ++c) {
        const T inv = T(1) / std::sqrt(rv.data[static_cast<size_t>(c)] + eps_);
        const T g = gamma.data[static_cast<size_t>(c)], b = beta.data[static_cast<size_t>(c)];
        const T m = rm.data[static_cast<size_t>(c)];
        const T* src = x.data.data() + static_cast<size_t>(c) * n;
        T* dst = y.data.data() + static_cast<size_t>(c) * n;
        for (long i = 0; i < n; ++i) dst[i] = g * ((src[i] - m) * inv) + b;
      }
      return y;
    }

    if (cache) {
      cache->xhat = Tensor<T>(x.shape);
      cache->invstd.assign(static_cast<size_t>(channels_), T(0));
      cache->n = n;
    }
    for (int c = 0; c < channels_; ++c) {
      const T* src = x.data.data() + static_cast<size_t>(c) * n;
      double sum = 0.0, sq = 0.0;
      for (long i = 0; i < n; ++i) sum += src[i];
      const double mean = sum / n;
      for (long i = 0; i < n; ++i) {
        const double d = src[i] - mean;
        sq += d * d;
      }
      const double var = sq / n;
      const T inv = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps_)));
      const T g = gamma.data[static_cast<size_t>(c)], b = beta.data[static_cast<size_t>(c)];
      T* dst = y.data.data() + static_cast<size_t>(c) * n;
      T* xh = cache ? cache->xhat.data.data() + static_cast<size_t>(c) * n : nullptr;
      for (long i = 0; i < n; ++i) {
        const T h = static_cast<T>((src[i] - mean) * inv);
        if (xh) xh[i] = h;
        dst[i] = g * h + b;
      }
      if (cache) cache->invstd[static_cast<size_t>(c)] = inv;
      if (update_running) {
        Tensor<T>& rm = reg.buffer(rmean_id_);
        Tensor<T>& rv = reg.buffer(rvar_id_);
        const double unbiased = n > 1 ? var * n / (n - 1.0) : var;
        rm.data[static_cast<size_t>(c)] =
            static_cast<T>((1.0 - momentum_) * rm.data[static_cast<size_t>(c)] + momentum_ * mean);
        rv.data[static_cast<size_t>(c)] =
            static_cast<T>((1.0 - momentum_) * rv.data[static_cast<size_t>(c)] + momentum_ * unbiased);
      }
    }
    return y;
  }

  // Training-mode backward through the batch statistics.
  Tensor<T> backward(const ParamRegistry<T>& reg, GradStore<T>& gs, const Cache& cache,
                     const Tensor<T>& gy) const {
    const long n = cache.n;
    const Tensor<T>& gamma = reg.param(gamma_id_);
    Tensor<T>& ggamma = gs.grad(gamma_id_);
    Tensor<T>& gbeta = gs.grad(beta_id_);
    Tensor<T> gx(gy.shape);

    for (int c = 0; c < channels_; ++c) {
      const T* gyp = gy.data.data() + static_cast<size_t>(c) * n;
      const T* xh = cache.xhat.data.data() + static_cast<size_t>(c) * n;
      double sum_gy = 0.0, sum_gy_xh = 0.0;
      for (long i = 0; i < n; ++i) {
        sum_gy += gyp[i];
        sum_gy_xh += static_cast<double>(gyp[i]) * xh[i];
      }
      ggamma.data[static_cast<size_t>(c)] += static_cast<T>(sum_gy_xh);
      gbeta.data[static_cast<size_t>(c)] += static_cast<T>(sum_gy);

      const double scale = static_cast<double>(gamma.data[static_cast<size_t>(c)]) *
                           cache.invstd[static_cast<size_t>(c)] / n;
      T* gxp = gx.data.data() + static_cast<size_t>(c) * n;
      for (long i = 0; i < n; ++i)
        gxp[i] = static_cast<T>(scale * (n * gyp[i] - sum_gy - xh[i] * sum_gy_xh));
    }
    return gx;
  }

 private:
  int gamma_id_ = -1, beta_id_ = -1, rmean_id_ = -1, rvar_id_ = -1;
  int channels_ = 0;
  T momentum_ = static_cast<T>(0.1);
  T eps_ = static_cast<T>(1e-5);
};

// ----------------------------------------------------------------------------
// Stateless ops with explicit backward companions.
// ----------------------------------------------------------------------------
template <typename T>
inline Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  Tensor<T> y(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] >= T(0) ? x.data[i] : slope * x.data[i];
  return y;
}

template <typename T>
inline Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& gy, T slope) {
  Tensor<T> gx(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i) gx.data[i] = x.data[i] >= T(0) ? gy.data[i] : slope * gy.data[i];
  return gx;
}

template <typename T>
inline Tensor<T> tanh_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = std::tanh(x.data[i]);
  return y;
}

// Takes the forward output y, since tanh' = 1 - y^2.
template <typename T>
inline Tensor<T> tanh_backward(const Tensor<T>& y, const Tensor<T>& gy) {
  Tensor<T> gx(y.shape);
  for (size_t i = 0; i < y.data.size(); ++i) gx.data[i] = gy.data[i] * (T(1) - y.data[i] * y.data[i]);
  return gx;
}

template <typename T>
inline Tensor<T> upsample2x(const Tensor<T>& x) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor<T> y({c, 2 * h, 2 * w});
  for (int cc = 0; cc < c; ++cc)
    for (int yy = 0; yy < 2 * h; ++yy)
      for (int xx = 0; xx < 2 * w; ++xx) y.at(cc, yy, xx) = x.at(cc, yy / 2, xx / 2);
  return y;
}

template <typename T>
inline Tensor<T> upsample2x_backward(const Tensor<T>& gy) {
  const int c = gy.dim(0), h = gy.dim(1) / 2, w = gy.dim(2) / 2;
  Tensor<T> gx = Tensor<T>::zeros({c, h, w});
  for (int cc = 0; cc < c; ++cc)
    for (int yy = 0; yy < 2 * h; ++yy)
      for (int xx = 0; xx < 2 * w; ++xx) gx.at(cc, yy / 2, xx / 2) += gy.at(cc, yy, xx);
  return gx;
}

template <typename T>
inline Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
    throw std::invalid_argument("concat_channels: spatial shapes differ: " + a.shape_str() + " vs " +
                                b.shape_str());
  Tensor<T> y({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data.begin(), a.data.end(), y.data.begin());
  std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<long>(a.data.size()));
  return y;
}

template <typename T>
inline void split_channels_backward(const Tensor<T>& gy, int ca, Tensor<T>& ga, Tensor<T>& gb) {
  const int cb = gy.dim(0) - ca;
  ga = Tensor<T>({ca, gy.dim(1), gy.dim(2)});
  gb = Tensor<T>({cb, gy.dim(1), gy.dim(2)});
  std::copy(gy.data.begin(), gy.data.begin() + static_cast<long>(ga.data.size()), ga.data.begin());
  std::copy(gy.data.begin() + static_cast<long>(ga.data.size()), gy.data.end(), gb.data.begin());
}

// Stacks k same-shape [C,H,W] codes into a [C,k,H,W] temporal block.
template <typename T>
inline Tensor<T> stack_temporal(const std::vector<const Tensor<T>*>& codes) {
  if (codes.empty()) throw std::invalid_argument("stack_temporal: empty input");
  const int c = codes[0]->dim(0), h = codes[0]->dim(1), w = codes[0]->dim(2);
  const int k = static_cast<int>(codes.size());
  Tensor<T> y({c, k, h, w});
  for (int t = 0; t < k; ++t) {
    check_same_shape(*codes[0], *codes[t], "stack_temporal");
    for (int cc = 0; cc < c; ++cc) {
      const T* src = codes[t]->data.data() + static_cast<size_t>(cc) * h * w;
      T* dst = y.data.data() + (static_cast<size_t>(cc) * k + t) * h * w;
      std::copy(src, src + static_cast<size_t>(h) * w, dst);
    }
  }
  return y;
}

template <typename T>
inline std::vector<Tensor<T>> unstack_temporal(const Tensor<T>& g) {
  const int c = g.dim(0), k = g.dim(1), h = g.dim(2), w = g.dim(3);
  std::vector<Tensor<T>> out(static_cast<size_t>(k), Tensor<T>({c, h, w}));
  for (int t = 0; t < k; ++t)
    for (int cc = 0; cc < c; ++cc) {
      const T* src = g.data.data() + (static_cast<size_t>(cc) * k + t) * h * w;
      T* dst = out[static_cast<size_t>(t)].data.data() + static_cast<size_t>(cc) * h * w;
      std::copy(src, src + static_cast<size_t>(h) * w, dst);
    }
  return out;
}

}  // namespace vad
