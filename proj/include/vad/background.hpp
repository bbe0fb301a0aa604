#pragma once

#include <stdexcept>

#include "vad/image.hpp"
#include "vad/tensor.hpp"

namespace vad {

// Static-scene model: the per-pixel mean of all training frames at working
// resolution. Subtracting it turns frames in [0,1] into residuals in [-1,1],
// which is what the network consumes and reconstructs.
struct BackgroundModel {
  Tensor<float> mean;  // [3,H,W] in [0,1]

  bool empty() const { return mean.numel() == 0; }
  int height() const { return mean.dim(1); }
  int width() const { return mean.dim(2); }
};

class BackgroundAccumulator {
 public:
  BackgroundAccumulator(int h, int w) : sum_({3, h, w}), count_(0) {}

  // Frames must already be resized to the working resolution and in [0,1].
  void add(const Tensor<float>& frame) {
    check_same_shape(sum_, frame, "BackgroundAccumulator::add");
    for (size_t i = 0; i < sum_.data.size(); ++i) sum_.data[i] += static_cast<double>(frame.data[i]);
    ++count_;
  }

  long count() const { return count_; }

  BackgroundModel finish() const {
    if (count_ == 0) throw std::runtime_error("background model needs at least one frame");
    BackgroundModel bg;
    bg.mean = Tensor<float>(sum_.shape);
    const double inv = 1.0 / static_cast<double>(count_);
    for (size_t i = 0; i < sum_.data.size(); ++i)
      bg.mean.data[i] = static_cast<float>(sum_.data[i] * inv);
    return bg;
  }

 private:
  Tensor<double> sum_;
  long count_;
};

// Resize to working resolution and subtract the background. Input is a [3,H,W]
// frame in [0,1]; output is a residual in [-1,1] at the model's resolution.
inline Tensor<float> preprocess_frame(const Tensor<float>& frame, const BackgroundModel& bg) {
  if (bg.empty()) throw std::invalid_argument("preprocess_frame: background model is empty");
  Tensor<float> resized = bilinear_resize(frame, bg.height(), bg.width());
  Tensor<float> out(resized.shape);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = resized.data[i] - bg.mean.data[i];
  return out;
}

// Inverse of the subtraction step, clamped back into displayable range.
inline Tensor<float> recompose_frame(const Tensor<float>& residual, const BackgroundModel& bg) {
  check_same_shape(residual, bg.mean, "recompose_frame");
  Tensor<float> out(residual.shape);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = clamp01(residual.data[i] + bg.mean.data[i]);
  return out;
}

}  // namespace vad
