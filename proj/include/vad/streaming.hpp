#pragma once

#include <algorithm>
#include <chrono>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vad/background.hpp"
#include "vad/network.hpp"
#include "vad/normalize.hpp"
#include "vad/samples.hpp"
#include "vad/scoring.hpp"
#include "vad/tensor.hpp"

namespace vad {

// FIFO cache of the most recent k latent codes. The counter asserts the
// runtime's core economy claim: exactly one encode per pushed frame.
template <typename T>
class LatentRing {
 public:
  explicit LatentRing(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("LatentRing: capacity must be >= 1");
  }

  void push(Tensor<T> code) {
    if (static_cast<int>(slots_.size()) == capacity_) slots_.pop_front();
    slots_.push_back(std::move(code));
    ++encode_counter_;
  }

  int size() const { return static_cast<int>(slots_.size()); }
  int capacity() const { return capacity_; }
  bool full() const { return size() == capacity_; }
  long encode_counter() const { return encode_counter_; }

  // oldest to newest
  std::vector<const Tensor<T>*> ordered() const {
    std::vector<const Tensor<T>*> out;
    out.reserve(slots_.size());
    for (const auto& s : slots_) out.push_back(&s);
    return out;
  }

 private:
  std::deque<Tensor<T>> slots_;
  int capacity_ = 0;
  long encode_counter_ = 0;
};

struct StreamEvent {
  long frame_index = 0;
  double raw_score = 0.0;
  std::optional<double> normalized;
};

struct StageTimes {
  double preprocess_s = 0.0, encode_s = 0.0, predict_s = 0.0, score_s = 0.0;
};

// Online scorer. Each arriving frame is preprocessed and encoded once; once
// the ring holds k codes a prediction is issued for the frame t_offset steps
// ahead and parked until that frame arrives. Scores therefore appear from
// frame k-1+t_offset (0-based) onward. The decoder never runs, and BatchNorm
// uses frozen running statistics, so emitted raw scores match batch scoring.
template <typename T>
class StreamScorer {
 public:
  StreamScorer(Model<T>& model, const BackgroundModel& bg, Metric metric,
               std::optional<int> norm_window = std::nullopt)
      : model_(model), bg_(bg), metric_(metric), norm_window_(norm_window),
        ring_(model.cfg.k) {
    if (!is_latent_metric(metric))
      throw std::invalid_argument("streaming supports latent metrics only (no decoder in the loop)");
  }

  virtual ~StreamScorer() = default;

  // Raw frame in [0,1], any resolution accepted by the background model.
  virtual std::optional<StreamEvent> push_frame(const Tensor<float>& frame) {
    namespace chrono = std::chrono;
    const auto t0 = chrono::steady_clock::now();
    Tensor<float> residual = preprocess_frame(frame, bg_);
    const auto t1 = chrono::steady_clock::now();
    Tensor<T> code = encode_residual(residual);
    const auto t2 = chrono::steady_clock::now();

    const long index = frames_++;
    ring_.push(std::move(code));

    auto t3 = t2;
    if (ring_.full()) {
      Tensor<T> zhat = model_.predict_latent(ring_.ordered());
      pending_.emplace(index + model_.cfg.t_offset, std::move(zhat));
      t3 = chrono::steady_clock::now();
    }

    std::optional<StreamEvent> event;
    auto it = pending_.find(index);
    if (it != pending_.end()) {
      const Tensor<T>& actual = *ring_.ordered().back();
      const double raw = metric_ == Metric::latent_mse ? latent_mse(it->second, actual)
                                                       : latent_cosine(it->second, actual);
      pending_.erase(it);
      event = StreamEvent{index, raw, std::nullopt};
      if (norm_window_) {
        recent_raw_.push_back(raw);
        if (static_cast<int>(recent_raw_.size()) > *norm_window_) recent_raw_.pop_front();
        double mn = recent_raw_.front(), mx = recent_raw_.front();
        for (double v : recent_raw_) {
          mn = std::min(mn, v);
          mx = std::max(mx, v);
        }
        event->normalized = mx > mn ? (raw - mn) / (mx - mn) : 0.0;
      }
    }
    const auto t4 = chrono::steady_clock::now();

    times_.preprocess_s += chrono::duration<double>(t1 - t0).count();
    times_.encode_s += chrono::duration<double>(t2 - t1).count();
    times_.predict_s += chrono::duration<double>(t3 - t2).count();
    times_.score_s += chrono::duration<double>(t4 - t3).count();
    return event;
  }

  long frames() const { return frames_; }
  long encode_count() const { return ring_.encode_counter(); }
  size_t pending_count() const { return pending_.size(); }
  const LatentRing<T>& ring() const { return ring_; }
  const StageTimes& stage_times() const { return times_; }
  void reset_stage_times() { times_ = StageTimes{}; }

  long external_encodes() const { return external_encodes_; }

 protected:
  Tensor<T> encode_residual(const Tensor<float>& residual) {
    ++external_encodes_;
    if constexpr (std::is_same_v<T, float>) {
      return model_.encode(residual).latent();
    } else {
      return model_.encode(cast_tensor<T>(residual)).latent();
    }
  }

  Model<T>& model_;
  const BackgroundModel& bg_;
  Metric metric_;
  std::optional<int> norm_window_;
  LatentRing<T> ring_;
  std::map<long, Tensor<T>> pending_;  // future frame index -> predicted code
  std::deque<double> recent_raw_;      // trailing window for online normalization
  long frames_ = 0;
  long external_encodes_ = 0;
  StageTimes times_;
};

// Reference point for the benchmark: no latent cache, so every step re-encodes
// all k frames in the current window before predicting.
template <typename T>
class NaiveStreamScorer : public StreamScorer<T> {
 public:
  using StreamScorer<T>::StreamScorer;

  std::optional<StreamEvent> push_frame(const Tensor<float>& frame) override {
    Tensor<float> residual = preprocess_frame(frame, this->bg_);
    window_.push_back(std::move(residual));
    if (static_cast<int>(window_.size()) > this->model_.cfg.k) window_.pop_front();

    const long index = this->frames_++;
    std::vector<Tensor<T>> codes;
    if (static_cast<int>(window_.size()) == this->model_.cfg.k) {
      codes.reserve(window_.size());
      for (const Tensor<float>& r : window_) codes.push_back(this->encode_residual(r));
      std::vector<const Tensor<T>*> ptrs;
      for (const auto& c : codes) ptrs.push_back(&c);
      Tensor<T> zhat = this->model_.predict_latent(ptrs);
      this->pending_.emplace(index + this->model_.cfg.t_offset, std::move(zhat));
    }

    auto it = this->pending_.find(index);
    if (it == this->pending_.end()) return std::nullopt;
    // the current frame's code is the newest one from this step's re-encode
    const Tensor<T>& actual = codes.back();
    const double raw = this->metric_ == Metric::latent_mse ? latent_mse(it->second, actual)
                                                           : latent_cosine(it->second, actual);
    this->pending_.erase(it);
    return StreamEvent{index, raw, std::nullopt};
  }

 private:
  std::deque<Tensor<float>> window_;
};

struct ThroughputReport {
  long frames = 0;
  double wall_seconds = 0.0;
  double fps = 0.0;
  double mean_preprocess_ms = 0.0, mean_encode_ms = 0.0, mean_predict_ms = 0.0, mean_score_ms = 0.0;
  long encode_count = 0;
  std::vector<StreamEvent> events;
};

struct BenchmarkResult {
  ThroughputReport cached, naive;
  double speedup = 0.0;  // cached fps / naive fps
};

// Steady-state throughput: the first warmup_frames are processed but excluded
// from the timed window on both paths.
template <typename T>
ThroughputReport run_stream(StreamScorer<T>& scorer, const std::vector<Tensor<float>>& frames,
                            int warmup) {
  namespace chrono = std::chrono;
  ThroughputReport rep;
  for (int i = 0; i < warmup && i < static_cast<int>(frames.size()); ++i) {
    auto ev = scorer.push_frame(frames[static_cast<size_t>(i)]);
    if (ev) rep.events.push_back(*ev);
  }
  scorer.reset_stage_times();
  const long encodes_before = scorer.external_encodes();
  const auto start = chrono::steady_clock::now();
  for (size_t i = static_cast<size_t>(warmup); i < frames.size(); ++i) {
    auto ev = scorer.push_frame(frames[i]);
    if (ev) rep.events.push_back(*ev);
  }
  const auto end = chrono::steady_clock::now();

  rep.frames = static_cast<long>(frames.size()) - warmup;
  rep.wall_seconds = chrono::duration<double>(end - start).count();
  rep.fps = rep.wall_seconds > 0.0 ? rep.frames / rep.wall_seconds : 0.0;
  rep.encode_count = scorer.external_encodes() - encodes_before;
  const StageTimes& st = scorer.stage_times();
  if (rep.frames > 0) {
    rep.mean_preprocess_ms = 1000.0 * st.preprocess_s / rep.frames;
    rep.mean_encode_ms = 1000.0 * st.encode_s / rep.frames;
    rep.mean_predict_ms = 1000.0 * st.predict_s / rep.frames;
    rep.mean_score_ms = 1000.0 * st.score_s / rep.frames;
  }
  return rep;
}

template <typename T>
BenchmarkResult benchmark_stream(Model<T>& model, const BackgroundModel& bg, const Video& raw_video,
                                 Metric metric, int warmup = 16) {
  if (static_cast<int>(raw_video.frames.size()) <= warmup)
    throw std::invalid_argument("benchmark: video shorter than the warmup window");
  BenchmarkResult result;
  {
    StreamScorer<T> scorer(model, bg, metric);
    result.cached = run_stream(scorer, raw_video.frames, warmup);
  }
  {
    NaiveStreamScorer<T> scorer(model, bg, metric);
    result.naive = run_stream(scorer, raw_video.frames, warmup);
  }
  result.speedup = result.naive.fps > 0.0 ? result.cached.fps / result.naive.fps : 0.0;
  return result;
}

}  // namespace vad
