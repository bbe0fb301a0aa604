#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vad/tensor.hpp"

namespace vad {

// Images are Tensor<float> with shape [C,H,W], values in [0,1] before
// background subtraction and [-1,1] after.

inline float clamp01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

// ----------------------------------------------------------------------------
// Bilinear resize with half-pixel center alignment: a source sample for output
// pixel x lands at (x + 0.5) * scale - 0.5. Same-size resize is the identity.
// ----------------------------------------------------------------------------
inline Tensor<float> bilinear_resize(const Tensor<float>& src, int out_h, int out_w) {
  if (src.rank() != 3) throw std::invalid_argument("bilinear_resize: expected [C,H,W] input");
  if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("bilinear_resize: output size must be positive");
  const int ch = src.dim(0), in_h = src.dim(1), in_w = src.dim(2);
  if (in_h == out_h && in_w == out_w) return src;

  Tensor<float> dst({ch, out_h, out_w});
  const double sy = static_cast<double>(in_h) / out_h;
  const double sx = static_cast<double>(in_w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y0c = std::clamp(y0, 0, in_h - 1);
    int y1c = std::clamp(y0 + 1, 0, in_h - 1);
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x0c = std::clamp(x0, 0, in_w - 1);
      int x1c = std::clamp(x0 + 1, 0, in_w - 1);
      for (int c = 0; c < ch; ++c) {
        double top = (1.0 - wx) * src.at(c, y0c, x0c) + wx * src.at(c, y0c, x1c);
        double bot = (1.0 - wx) * src.at(c, y1c, x0c) + wx * src.at(c, y1c, x1c);
        dst.at(c, y, x) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return dst;
}

// ----------------------------------------------------------------------------
// PPM (P6) / PGM (P5) IO. PGM loads replicate the gray channel to 3 channels.
// ----------------------------------------------------------------------------
namespace detail {
inline int read_pnm_token(std::istream& in) {
  // skips whitespace and '#' comments
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  in >> v;
  return v;
}
}  // namespace detail

inline Tensor<float> load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image: " + path);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P6" && magic != "P5") throw std::runtime_error("unsupported pnm magic in " + path);
  int w = detail::read_pnm_token(in);
  int h = detail::read_pnm_token(in);
  int maxval = detail::read_pnm_token(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw std::runtime_error("bad pnm header in " + path);
  in.get();  // single whitespace after header
  const int ch_in = (magic == "P6") ? 3 : 1;
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * ch_in);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw std::runtime_error("truncated pnm data in " + path);

  Tensor<float> img({3, h, w});
  const float inv = 1.0f / static_cast<float>(maxval);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      size_t base = (static_cast<size_t>(y) * w + x) * ch_in;
      for (int c = 0; c < 3; ++c) {
        unsigned char b = raw[base + (ch_in == 3 ? c : 0)];
        img.at(c, y, x) = b * inv;
      }
    }
  return img;
}

inline void save_ppm(const std::string& path, const Tensor<float>& img) {
  if (img.rank() != 3 || img.dim(0) != 3) throw std::invalid_argument("save_ppm: expected [3,H,W] image");
  const int h = img.dim(1), w = img.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image: " + path);
  out << "P6\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        raw[(static_cast<size_t>(y) * w + x) * 3 + c] =
            static_cast<unsigned char>(std::lround(clamp01(img.at(c, y, x)) * 255.0f));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

// ----------------------------------------------------------------------------
// Drawing primitives (rain streaks, localization boxes, plot curves).
// ----------------------------------------------------------------------------
inline void draw_line_add(Tensor<float>& img, double x0, double y0, double x1, double y1, float amount) {
  const int h = img.dim(1), w = img.dim(2), ch = img.dim(0);
  int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
  for (int i = 0; i < steps; ++i) {
    double t = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    if (x < 0 || x >= w || y < 0 || y >= h) continue;
    for (int c = 0; c < ch; ++c) img.at(c, y, x) = clamp01(img.at(c, y, x) + amount);
  }
}

inline void draw_line_set(Tensor<float>& img, double x0, double y0, double x1, double y1,
                          float r, float g, float b) {
  const int h = img.dim(1), w = img.dim(2);
  int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
  float col[3] = {r, g, b};
  for (int i = 0; i < steps; ++i) {
    double t = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    if (x < 0 || x >= w || y < 0 || y >= h) continue;
    for (int c = 0; c < std::min(3, img.dim(0)); ++c) img.at(c, y, x) = col[c];
  }
}

inline void draw_rect(Tensor<float>& img, int x, int y, int w, int h, float r, float g, float b) {
  draw_line_set(img, x, y, x + w - 1, y, r, g, b);
  draw_line_set(img, x, y + h - 1, x + w - 1, y + h - 1, r, g, b);
  draw_line_set(img, x, y, x, y + h - 1, r, g, b);
  draw_line_set(img, x + w - 1, y, x + w - 1, y + h - 1, r, g, b);
}

// Tile a row-major list of equally sized [3,H,W] images into one image grid.
inline Tensor<float> tile_images(const std::vector<Tensor<float>>& tiles, int cols, int pad = 2) {
  if (tiles.empty()) throw std::invalid_argument("tile_images: no tiles");
  const int h = tiles[0].dim(1), w = tiles[0].dim(2);
  const int rows = (static_cast<int>(tiles.size()) + cols - 1) / cols;
  Tensor<float> canvas = Tensor<float>::full({3, rows * (h + pad) + pad, cols * (w + pad) + pad}, 0.25f);
  for (size_t i = 0; i < tiles.size(); ++i) {
    const int r = static_cast<int>(i) / cols, c = static_cast<int>(i) % cols;
    const int oy = pad + r * (h + pad), ox = pad + c * (w + pad);
    for (int cc = 0; cc < 3; ++cc)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          canvas.at(cc, oy + y, ox + x) = tiles[i].at(std::min(cc, tiles[i].dim(0) - 1), y, x);
  }
  return canvas;
}

}  // namespace vad
