#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "vad/tensor.hpp"

namespace vad {

struct Video {
  std::string id;
  std::vector<Tensor<float>> frames;  // [3,H,W]; raw [0,1] or residual [-1,1] by pipeline stage
  std::vector<int> labels;            // per-frame 0/1 ground truth; empty when unknown
};

// A training or scoring sample: k consecutive (possibly temporally subsampled)
// input frames plus the future frame whose latent code is the prediction
// target. Stored as frame indices into the owning video, never as copies.
struct SequenceSample {
  int video = 0;
  std::vector<int> inputs;  // raw frame indices, ascending, size k
  int target = 0;           // raw frame index of the prediction target
};

// Number of frames that survive temporal subsampling with the given stride:
// indices 0, d, 2d, ... while they stay inside the video.
inline int sampled_length(int raw_length, int stride) {
  if (stride <= 0) throw std::invalid_argument("sampled_length: stride must be positive");
  if (raw_length <= 0) return 0;
  return (raw_length - 1) / stride + 1;
}

inline int sample_count(int raw_length, int k, int t_offset, int stride) {
  const int ls = sampled_length(raw_length, stride);
  return std::max(0, ls - (k + t_offset) + 1);
}

inline std::vector<SequenceSample> make_samples_for_video(int video_index, int raw_length,
                                                          int k, int t_offset, int stride) {
  if (k <= 0) throw std::invalid_argument("make_samples: k must be positive");
  if (t_offset <= 0) throw std::invalid_argument("make_samples: t_offset must be positive");
  std::vector<SequenceSample> out;
  const int n = sample_count(raw_length, k, t_offset, stride);
  out.reserve(static_cast<size_t>(std::max(0, n)));
  for (int s = 0; s < n; ++s) {
    SequenceSample smp;
    smp.video = video_index;
    smp.inputs.resize(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) smp.inputs[static_cast<size_t>(j)] = (s + j) * stride;
    smp.target = (s + k - 1 + t_offset) * stride;
    out.push_back(std::move(smp));
  }
  return out;
}

inline std::vector<SequenceSample> make_samples(const std::vector<Video>& videos,
                                                int k, int t_offset, int stride = 1) {
  std::vector<SequenceSample> out;
  for (size_t v = 0; v < videos.size(); ++v) {
    auto vs = make_samples_for_video(static_cast<int>(v), static_cast<int>(videos[v].frames.size()),
                                     k, t_offset, stride);
    out.insert(out.end(), vs.begin(), vs.end());
  }
  return out;
}

// Lightweight pointer view of one sample, shaped for the loss and the scorer.
template <typename T>
struct SampleView {
  std::vector<const Tensor<T>*> inputs;
  const Tensor<T>* target = nullptr;
};

inline SampleView<float> view_sample(const std::vector<Video>& videos, const SequenceSample& s) {
  const Video& v = videos.at(static_cast<size_t>(s.video));
  SampleView<float> view;
  view.inputs.reserve(s.inputs.size());
  for (int idx : s.inputs) view.inputs.push_back(&v.frames.at(static_cast<size_t>(idx)));
  view.target = &v.frames.at(static_cast<size_t>(s.target));
  return view;
}

}  // namespace vad
