#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vad/network.hpp"
#include "vad/normalize.hpp"
#include "vad/samples.hpp"
#include "vad/tensor.hpp"

namespace vad {

enum class Metric { latent_mse, latent_cosine, pixel_prediction, pixel_reconstruction };

inline std::string metric_name(Metric m) {
  switch (m) {
    case Metric::latent_mse: return "latent_mse";
    case Metric::latent_cosine: return "latent_cosine";
    case Metric::pixel_prediction: return "pixel_prediction";
    case Metric::pixel_reconstruction: return "pixel_reconstruction";
  }
  return "unknown";
}

inline Metric parse_metric(const std::string& s) {
  if (s == "latent_mse") return Metric::latent_mse;
  if (s == "latent_cosine") return Metric::latent_cosine;
  if (s == "pixel_prediction") return Metric::pixel_prediction;
  if (s == "pixel_reconstruction") return Metric::pixel_reconstruction;
  throw std::invalid_argument("unknown metric: " + s +
                              " (expected latent_mse|latent_cosine|pixel_prediction|pixel_reconstruction)");
}

inline bool is_latent_metric(Metric m) {
  return m == Metric::latent_mse || m == Metric::latent_cosine;
}

// Mean squared difference over all elements of two equally shaped codes.
template <typename T>
inline double latent_mse(const Tensor<T>& pred, const Tensor<T>& actual) {
  check_same_shape(pred, actual, "latent_mse");
  double sq = 0.0;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred[i]) - actual[i];
    sq += d * d;
  }
  return sq / static_cast<double>(pred.numel());
}

// One minus the cosine similarity of the flattened codes; range [0,2].
template <typename T>
inline double latent_cosine(const Tensor<T>& pred, const Tensor<T>& actual) {
  check_same_shape(pred, actual, "latent_cosine");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    dot += static_cast<double>(pred[i]) * actual[i];
    na += static_cast<double>(pred[i]) * pred[i];
    nb += static_cast<double>(actual[i]) * actual[i];
  }
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("undefined cosine: zero-norm latent code");
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

// Per-pixel squared error averaged over channels; input frames [C,H,W],
// output grid [H,W]. Feeds localization.
template <typename T>
inline Tensor<float> squared_error_map(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "squared_error_map");
  const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  Tensor<float> map({h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double sq = 0.0;
      for (int cc = 0; cc < c; ++cc) {
        const double d = static_cast<double>(a.at(cc, y, x)) - b.at(cc, y, x);
        sq += d * d;
      }
      map.at2(y, x) = static_cast<float>(sq / c);
    }
  return map;
}

template <typename T>
inline double mean_pixel_mse(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mean_pixel_mse");
  double sq = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sq += d * d;
  }
  return sq / static_cast<double>(a.numel());
}

// ----------------------------------------------------------------------------
// Whole-video scoring. Frames must be residuals at the working resolution.
// Every frame is encoded exactly once (inference-mode BatchNorm); latent
// metrics never touch the decoder. Scores come out in sampled-frame order:
// entry i belongs to sampled frame frame_offset + i.
// ----------------------------------------------------------------------------
struct AnomalyScoreSeries {
  std::string video_id;
  std::vector<double> raw;
  std::vector<double> normalized;
  Metric metric = Metric::latent_cosine;
  int frame_offset = 0;  // first scoreable frame, in sampled-frame units
  int stride = 1;        // sampled index * stride = raw frame index

  int raw_frame_index(int i) const { return (frame_offset + i) * stride; }
};

template <typename T>
AnomalyScoreSeries score_video(Model<T>& model, const Video& video, Metric metric, int stride = 1,
                               std::optional<int> window = std::nullopt) {
  const int k = model.cfg.k, t_off = model.cfg.t_offset;
  AnomalyScoreSeries series;
  series.video_id = video.id;
  series.metric = metric;
  series.frame_offset = k - 1 + t_off;
  series.stride = stride;

  const int n_samples = sample_count(static_cast<int>(video.frames.size()), k, t_off, stride);
  if (n_samples <= 0) return series;

  using Encoded = typename Model<T>::Encoded;
  const int ls = sampled_length(static_cast<int>(video.frames.size()), stride);
  const bool pixel = !is_latent_metric(metric);

  // encode pass: one code (plus pyramid for pixel modes) per sampled frame
  std::vector<Encoded> enc;
  enc.reserve(static_cast<size_t>(ls));
  for (int j = 0; j < ls; ++j) {
    Encoded e = model.encode(video.frames[static_cast<size_t>(j) * stride]);
    if (!pixel) e.pyramid.erase(e.pyramid.begin(), e.pyramid.end() - 1);  // keep latent only
    enc.push_back(std::move(e));
  }

  series.raw.reserve(static_cast<size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    std::vector<const Tensor<T>*> codes;
    codes.reserve(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) codes.push_back(&enc[static_cast<size_t>(s + j)].latent());
    const int target = s + k - 1 + t_off;
    Tensor<T> zhat = model.predict_latent(codes);

    double score = 0.0;
    switch (metric) {
      case Metric::latent_mse:
        score = latent_mse(zhat, enc[static_cast<size_t>(target)].latent());
        break;
      case Metric::latent_cosine:
        score = latent_cosine(zhat, enc[static_cast<size_t>(target)].latent());
        break;
      case Metric::pixel_prediction: {
        // decode the predicted code with the last input frame's features as
        // the shortcut source, then compare against the actual future frame
        Tensor<T> pred = model.decode(zhat, enc[static_cast<size_t>(s + k - 1)].pyramid);
        score = mean_pixel_mse(pred, video.frames[static_cast<size_t>(target) * stride]);
        break;
      }
      case Metric::pixel_reconstruction: {
        double sum = 0.0;
        for (int q = 1; q < k; ++q) {
          Tensor<T> rec = model.decode(enc[static_cast<size_t>(s + q)].latent(),
                                       enc[static_cast<size_t>(s + q - 1)].pyramid);
          sum += mean_pixel_mse(rec, video.frames[static_cast<size_t>(s + q) * stride]);
        }
        score = sum / (k - 1);
        break;
      }
    }
    series.raw.push_back(score);
  }
  series.normalized = normalize_scores(series.raw, window);
  return series;
}

// Labels aligned with the scoreable frames of a series (pre-offset frames are
// not scoreable and are excluded).
inline std::vector<int> series_labels(const AnomalyScoreSeries& series, const Video& video) {
  if (video.labels.empty())
    throw std::invalid_argument("video " + video.id + " has no ground-truth labels");
  std::vector<int> out;
  out.reserve(series.raw.size());
  for (size_t i = 0; i < series.raw.size(); ++i)
    out.push_back(video.labels.at(static_cast<size_t>(series.raw_frame_index(static_cast<int>(i)))));
  return out;
}

}  // namespace vad
