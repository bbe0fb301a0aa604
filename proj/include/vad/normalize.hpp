#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

namespace vad {

// Min-max normalization of a score series into [0,1]. Without a window the
// whole series is the reference set. With a window, each frame is normalized
// against a window of that size centered on it; near the edges the window
// slides inward so it keeps its full size, which makes window >= length
// identical to whole-series normalization. A flat reference set (max == min)
// normalizes to zero: a constant series carries no anomaly signal.
inline std::vector<double> normalize_scores(const std::vector<double>& raw,
                                            std::optional<int> window = std::nullopt) {
  if (raw.empty()) throw std::invalid_argument("normalize_scores: empty series");
  if (window && *window < 1) throw std::invalid_argument("normalize_scores: window must be >= 1");
  const int n = static_cast<int>(raw.size());
  std::vector<double> out(raw.size(), 0.0);

  if (!window || *window >= n) {
    const auto [mn_it, mx_it] = std::minmax_element(raw.begin(), raw.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx > mn)
      for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = (raw[static_cast<size_t>(i)] - mn) / (mx - mn);
    return out;
  }

  const int w = *window;
  for (int i = 0; i < n; ++i) {
    int lo = std::clamp(i - (w - 1) / 2, 0, n - w);
    int hi = lo + w - 1;
    double mn = raw[static_cast<size_t>(lo)], mx = raw[static_cast<size_t>(lo)];
    for (int j = lo + 1; j <= hi; ++j) {
      mn = std::min(mn, raw[static_cast<size_t>(j)]);
      mx = std::max(mx, raw[static_cast<size_t>(j)]);
    }
    if (mx > mn) out[static_cast<size_t>(i)] = (raw[static_cast<size_t>(i)] - mn) / (mx - mn);
  }
  return out;
}

}  // namespace vad
