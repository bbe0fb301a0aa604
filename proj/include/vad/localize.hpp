#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "vad/tensor.hpp"

namespace vad {

struct Region {
  int x = 0, y = 0, w = 0, h = 0;
  double mean_error = 0.0;
};

// q-th quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q must be in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * (static_cast<double>(values.size()) - 1.0);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

// Connected components (8-connectivity) of {error > threshold}, small blobs
// dropped, bounding boxes returned most-suspicious first.
inline std::vector<Region> localize(const Tensor<float>& error_map, double threshold,
                                    int min_area = 25) {
  if (error_map.rank() != 2) throw std::invalid_argument("localize: expected an [H,W] error map");
  if (threshold < 0.0) throw std::invalid_argument("localize: threshold must be >= 0");
  const int h = error_map.dim(0), w = error_map.dim(1);
  std::vector<char> visited(static_cast<size_t>(h) * w, 0);
  std::vector<Region> regions;
  std::vector<int> stack;

  for (int sy = 0; sy < h; ++sy)
    for (int sx = 0; sx < w; ++sx) {
      const size_t sidx = static_cast<size_t>(sy) * w + sx;
      if (visited[sidx] || error_map.at2(sy, sx) <= threshold) continue;
      int min_x = sx, max_x = sx, min_y = sy, max_y = sy;
      double sum = 0.0;
      int area = 0;
      visited[sidx] = 1;
      stack.assign(1, static_cast<int>(sidx));
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int y = idx / w, x = idx % w;
        ++area;
        sum += error_map.at2(y, x);
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = y + dy, nx = x + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const size_t nidx = static_cast<size_t>(ny) * w + nx;
            if (!visited[nidx] && error_map.at2(ny, nx) > threshold) {
              visited[nidx] = 1;
              stack.push_back(static_cast<int>(nidx));
            }
          }
      }
      if (area >= min_area)
        regions.push_back({min_x, min_y, max_x - min_x + 1, max_y - min_y + 1,
                           sum / static_cast<double>(area)});
    }

  std::sort(regions.begin(), regions.end(),
            [](const Region& a, const Region& b) { return a.mean_error > b.mean_error; });
  return regions;
}

}  // namespace vad
