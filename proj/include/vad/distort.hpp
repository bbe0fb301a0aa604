#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vad/image.hpp"
#include "vad/tensor.hpp"
#include "vad/textio.hpp"

namespace vad {

// Synthetic capture degradations for robustness experiments. Applied to frames
// in [0,1] before background subtraction, in a fixed order: brightness scaling,
// rain streaks, Gaussian blur. The default spec is an exact no-op.
struct DistortionSpec {
  double brightness = 1.0;    // multiplicative, result clipped to [0,1]
  std::string rain = "none";  // none | heavy | torrential
  double blur_sigma = 0.0;    // Gaussian std dev in pixels, 0 disables
  uint64_t seed = 7;          // rain placement stream

  bool identity() const { return brightness == 1.0 && rain == "none" && blur_sigma == 0.0; }

  std::string label() const {
    std::ostringstream os;
    os << "brightness=" << fmt_float(brightness) << ",rain=" << rain
       << ",blur=" << fmt_float(blur_sigma);
    return os.str();
  }
};

struct RainParams {
  double density = 0.0;  // streaks per pixel
  int min_len = 0, max_len = 0;
};

inline RainParams rain_params(const std::string& kind) {
  if (kind == "none") return {0.0, 0, 0};
  if (kind == "heavy") return {0.0015, 6, 12};
  if (kind == "torrential") return {0.004, 10, 18};
  throw std::invalid_argument("unknown rain kind: " + kind);
}

inline std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double w = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    k[static_cast<size_t>(i + radius)] = static_cast<float>(w);
    sum += w;
  }
  for (float& w : k) w = static_cast<float>(w / sum);
  return k;
}

// Separable Gaussian blur with edge clamping.
inline Tensor<float> gaussian_blur(const Tensor<float>& img, double sigma) {
  if (sigma <= 0.0) return img;
  const std::vector<float> k = gaussian_kernel(sigma);
  const int radius = (static_cast<int>(k.size()) - 1) / 2;
  const int ch = img.dim(0), h = img.dim(1), w = img.dim(2);

  Tensor<float> tmp(img.shape);
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += k[static_cast<size_t>(i + radius)] * img.at(c, y, std::clamp(x + i, 0, w - 1));
        tmp.at(c, y, x) = static_cast<float>(acc);
      }
  Tensor<float> out(img.shape);
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += k[static_cast<size_t>(i + radius)] * tmp.at(c, std::clamp(y + i, 0, h - 1), x);
        out.at(c, y, x) = static_cast<float>(acc);
      }
  return out;
}

// frame_index seeds the per-frame streak placement so videos are reproducible
// end to end while streaks still move between frames.
inline Tensor<float> apply_distortion(const Tensor<float>& frame, const DistortionSpec& spec,
                                      int frame_index) {
  if (spec.identity()) return frame;
  Tensor<float> out = frame;
  const int h = out.dim(1), w = out.dim(2);

  if (spec.brightness != 1.0) {
    for (float& v : out.data) v = clamp01(static_cast<float>(v * spec.brightness));
  }

  const RainParams rp = rain_params(spec.rain);
  if (rp.density > 0.0) {
    Rng rng(derive_seed(spec.seed, static_cast<uint64_t>(frame_index)));
    const int streaks = static_cast<int>(std::lround(rp.density * h * w));
    for (int s = 0; s < streaks; ++s) {
      double x0 = rng.uniform(0.0, w - 1.0);
      double y0 = rng.uniform(0.0, h - 1.0);
      double len = rng.uniform(static_cast<double>(rp.min_len), static_cast<double>(rp.max_len));
      double slant = rng.uniform(-0.25, 0.25) * len;
      float amount = static_cast<float>(rng.uniform(0.25, 0.45));
      draw_line_add(out, x0, y0, x0 + slant, y0 + len, amount);
    }
  }

  if (spec.blur_sigma > 0.0) out = gaussian_blur(out, spec.blur_sigma);
  return out;
}

// Parses "brightness=0.5,rain=heavy,blur=1.0" style condition strings; any
// subset of keys is allowed and unknown keys are an error.
inline DistortionSpec parse_distortion(const std::string& text) {
  DistortionSpec spec;
  if (text.empty() || text == "identity" || text == "none") return spec;
  for (const std::string& part : split(text, ',')) {
    auto eq = part.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad distortion term: " + part);
    std::string key = part.substr(0, eq), val = part.substr(eq + 1);
    if (key == "brightness") spec.brightness = std::stod(val);
    else if (key == "rain") spec.rain = val;
    else if (key == "blur") spec.blur_sigma = std::stod(val);
    else if (key == "seed") spec.seed = std::stoull(val);
    else throw std::invalid_argument("unknown distortion key: " + key);
  }
  rain_params(spec.rain);  // validates the kind
  return spec;
}

}  // namespace vad
