#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vad/samples.hpp"
#include "vad/tensor.hpp"
#include "vad/textio.hpp"

namespace vad {

// Procedurally generated moving-object videos: one bright object per video
// bouncing around a dark canvas with constant speed. Anomalies are object
// classes or speeds outside the declared normal sets, so frame labels are
// known exactly and per-frame ROC analysis needs no manual annotation.

// ----------------------------------------------------------------------------
// Glyph rendering. Digits use a seven-segment layout; "circle" and "square"
// are filled shapes. All glyphs are grayscale [0,1] squares of the given size.
// ----------------------------------------------------------------------------
namespace detail {
// Segment bit order: A top, B top-right, C bottom-right, D bottom,
// E bottom-left, F top-left, G middle.
inline int digit_segments(int digit) {
  static const int seg[10] = {
      0b1111110,  // 0: ABCDEF
      0b0110000,  // 1: BC
      0b1101101,  // 2: ABDEG
      0b1111001,  // 3: ABCDG
      0b0110011,  // 4: BCFG
      0b1011011,  // 5: ACDFG
      0b1011111,  // 6: ACDEFG
      0b1110000,  // 7: ABC
      0b1111111,  // 8
      0b1111011,  // 9: ABCDFG
  };
  return seg[digit];
}
}  // namespace detail

inline Tensor<float> glyph_image(const std::string& cls, int size) {
  Tensor<float> g = Tensor<float>::zeros({size, size});
  const double s = size;
  auto fill_rect = [&](double x0, double y0, double x1, double y1) {
    int ix0 = std::max(0, static_cast<int>(std::floor(x0 * s)));
    int iy0 = std::max(0, static_cast<int>(std::floor(y0 * s)));
    int ix1 = std::min(size, static_cast<int>(std::ceil(x1 * s)));
    int iy1 = std::min(size, static_cast<int>(std::ceil(y1 * s)));
    for (int y = iy0; y < iy1; ++y)
      for (int x = ix0; x < ix1; ++x) g.data[static_cast<size_t>(y) * size + x] = 1.0f;
  };

  if (cls.size() == 1 && cls[0] >= '0' && cls[0] <= '9') {
    const int segs = detail::digit_segments(cls[0] - '0');
    const double t = 0.16;  // segment thickness as a fraction of the cell
    const double l = 0.18, r = 0.82;
    if (segs & 0b1000000) fill_rect(l, 0.02, r, 0.02 + t);          // A
    if (segs & 0b0100000) fill_rect(r - t, 0.02, r, 0.50);          // B
    if (segs & 0b0010000) fill_rect(r - t, 0.50, r, 0.98);          // C
    if (segs & 0b0001000) fill_rect(l, 0.98 - t, r, 0.98);          // D
    if (segs & 0b0000100) fill_rect(l, 0.50, l + t, 0.98);          // E
    if (segs & 0b0000010) fill_rect(l, 0.02, l + t, 0.50);          // F
    if (segs & 0b0000001) fill_rect(l, 0.50 - t / 2, r, 0.50 + t / 2);  // G
    return g;
  }
  if (cls == "square") {
    fill_rect(0.12, 0.12, 0.88, 0.88);
    return g;
  }
  if (cls == "circle") {
    const double cx = 0.5 * (size - 1), cy = 0.5 * (size - 1), rad = 0.40 * size;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= rad * rad)
          g.data[static_cast<size_t>(y) * size + x] = 1.0f;
    return g;
  }
  throw std::invalid_argument("unknown object class: " + cls);
}

// Adds a grayscale glyph at a subpixel position (top-left corner at x,y) into
// all channels of a [3,H,W] canvas, keeping the brighter value per pixel.
inline void blit_glyph(Tensor<float>& canvas, const Tensor<float>& glyph, double x, double y) {
  const int h = canvas.dim(1), w = canvas.dim(2);
  const int gs = glyph.dim(0);
  const int x0 = std::max(0, static_cast<int>(std::floor(x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(y)));
  const int x1 = std::min(w, static_cast<int>(std::ceil(x)) + gs);
  const int y1 = std::min(h, static_cast<int>(std::ceil(y)) + gs);
  for (int py = y0; py < y1; ++py)
    for (int px = x0; px < x1; ++px) {
      const double gx = px - x, gy = py - y;
      const int ix = static_cast<int>(std::floor(gx)), iy = static_cast<int>(std::floor(gy));
      const double fx = gx - ix, fy = gy - iy;
      auto sample = [&](int sy, int sx) -> double {
        if (sx < 0 || sx >= gs || sy < 0 || sy >= gs) return 0.0;
        return glyph.data[static_cast<size_t>(sy) * gs + sx];
      };
      const double v = (1 - fy) * ((1 - fx) * sample(iy, ix) + fx * sample(iy, ix + 1)) +
                       fy * ((1 - fx) * sample(iy + 1, ix) + fx * sample(iy + 1, ix + 1));
      if (v <= 0.0) continue;
      for (int c = 0; c < 3; ++c)
        canvas.at(c, py, px) = std::max(canvas.at(c, py, px), static_cast<float>(v));
    }
}

// ----------------------------------------------------------------------------
// Bouncing motion. Positions are the glyph's top-left corner; reflections keep
// it inside [0, limit] per axis and flip that axis's velocity.
// ----------------------------------------------------------------------------
inline void bounce_step(double& p, double& v, double limit) {
  p += v;
  if (p < 0.0) {
    p = -p;
    v = -v;
  } else if (p > limit) {
    p = 2.0 * limit - p;
    v = -v;
  }
}

struct SyntheticSpec {
  int width = 64, height = 64;
  int frames = 40;
  int videos = 8;
  int glyph_size = 28;
  std::vector<std::string> objects;         // classes drawn uniformly per video
  std::vector<double> speeds;               // pixel-per-frame magnitudes, drawn uniformly
  std::vector<std::string> normal_objects;  // labeling reference set
  std::vector<double> normal_speeds;
  uint64_t seed = 1;
};

inline bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}
inline bool contains_speed(const std::vector<double>& v, double s) {
  for (double x : v)
    if (std::abs(x - s) < 1e-9) return true;
  return false;
}

inline std::vector<Video> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.objects.empty() || spec.speeds.empty())
    throw std::invalid_argument("generate_synthetic: objects and speeds must be non-empty");
  if (spec.glyph_size >= spec.width || spec.glyph_size >= spec.height)
    throw std::invalid_argument("generate_synthetic: glyph does not fit the canvas");

  std::vector<Video> out;
  out.reserve(static_cast<size_t>(spec.videos));
  for (int v = 0; v < spec.videos; ++v) {
    Rng rng(derive_seed(spec.seed, static_cast<uint64_t>(v)));
    const std::string cls = spec.objects[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int>(spec.objects.size()) - 1))];
    const double speed = spec.speeds[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int>(spec.speeds.size()) - 1))];
    const double lim_x = spec.width - spec.glyph_size;
    const double lim_y = spec.height - spec.glyph_size;
    double px = rng.uniform(0.0, lim_x);
    double py = rng.uniform(0.0, lim_y);
    const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    double vx = speed * std::cos(angle);
    double vy = speed * std::sin(angle);

    const Tensor<float> glyph = glyph_image(cls, spec.glyph_size);
    const int anomalous =
        (!contains(spec.normal_objects, cls) || !contains_speed(spec.normal_speeds, speed)) ? 1 : 0;

    Video video;
    std::ostringstream id;
    id << "synth_" << cls << "_s" << fmt_float(speed) << "_" << v;
    video.id = id.str();
    video.frames.reserve(static_cast<size_t>(spec.frames));
    video.labels.assign(static_cast<size_t>(spec.frames), anomalous);
    for (int f = 0; f < spec.frames; ++f) {
      Tensor<float> canvas = Tensor<float>::zeros({3, spec.height, spec.width});
      blit_glyph(canvas, glyph, px, py);
      video.frames.push_back(std::move(canvas));
      bounce_step(px, vx, lim_x);
      bounce_step(py, vy, lim_y);
    }
    out.push_back(std::move(video));
  }
  return out;
}

}  // namespace vad
