#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace vad {

// ============================================================================
// Dense row-major tensor. Rank is dynamic; layouts used in this project are
// [C,H,W] for images/latent codes and [C,D,H,W] for temporal stacks.
// ============================================================================
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(checked_count(shape), T(0)) {}

  static int64_t checked_count(const std::vector<int>& s) {
    if (s.empty()) return 0;
    int64_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("tensor dimension must be positive, got " + std::to_string(d));
      n *= d;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, T v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  template <typename U>
  bool same_shape(const Tensor<U>& o) const { return shape == o.shape; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  // [H,W] access
  T& at2(int h, int w) { return data[static_cast<int64_t>(h) * shape[1] + w]; }
  const T& at2(int h, int w) const { return data[static_cast<int64_t>(h) * shape[1] + w]; }

  // [C,H,W] access
  T& at(int c, int h, int w) {
    return data[(static_cast<int64_t>(c) * shape[1] + h) * shape[2] + w];
  }
  const T& at(int c, int h, int w) const {
    return data[(static_cast<int64_t>(c) * shape[1] + h) * shape[2] + w];
  }

  // [A,B,H,W] access
  T& at4(int a, int b, int h, int w) {
    return data[((static_cast<int64_t>(a) * shape[1] + b) * shape[2] + h) * shape[3] + w];
  }
  const T& at4(int a, int b, int h, int w) const {
    return data[((static_cast<int64_t>(a) * shape[1] + b) * shape[2] + h) * shape[3] + w];
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

template <typename T, typename U>
inline void check_same_shape(const Tensor<T>& a, const Tensor<U>& b, const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

template <typename T>
inline void add_inplace(Tensor<T>& y, const Tensor<T>& x) {
  check_same_shape(y, x, "add_inplace");
  for (int64_t i = 0; i < y.numel(); ++i) y[i] += x[i];
}

template <typename T>
inline void add_scaled_inplace(Tensor<T>& y, const Tensor<T>& x, T alpha) {
  check_same_shape(y, x, "add_scaled_inplace");
  for (int64_t i = 0; i < y.numel(); ++i) y[i] += alpha * x[i];
}

template <typename U, typename T>
inline Tensor<U> cast_tensor(const Tensor<T>& x) {
  Tensor<U> y(x.shape);
  for (int64_t i = 0; i < x.numel(); ++i) y[i] = static_cast<U>(x[i]);
  return y;
}

// ============================================================================
// Seeded RNG. Every stochastic component takes an explicit seed; derive_seed
// gives decorrelated streams (splitmix64 finalizer).
// ============================================================================
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(uint64_t seed) : gen(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
};

inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace vad
