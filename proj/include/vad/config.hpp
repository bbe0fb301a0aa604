#pragma once

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace vad {

struct ModelConfig {
  int height = 128, width = 192;
  int k = 8;               // input frames per sample
  int encoder_blocks = 4;  // B; each block halves the spatial extent
  int base_channels = 32;
  int latent_channels = 128;  // C
  int t_offset = 6;           // predicted frame is t_offset steps past the last input
  int motion_blocks = 3;
  double leaky_slope = 0.2;

  // Encoder block b (1-based) output width; the final block always lands on
  // the latent width so the code shape is config-determined.
  int level_channels(int b) const {
    if (b == encoder_blocks) return latent_channels;
    long doubled = static_cast<long>(base_channels) << (b - 1);
    return static_cast<int>(std::min<long>(doubled, latent_channels));
  }

  int latent_h() const { return height >> encoder_blocks; }
  int latent_w() const { return width >> encoder_blocks; }

  // Temporal extent surviving the motion blocks (kernel 3, stride 2, pad 1).
  int motion_temporal_out() const {
    int l = k;
    for (int b = 0; b < motion_blocks; ++b) l = (l - 1) / 2 + 1;
    return l;
  }

  void validate() const {
    std::ostringstream problems;
    if (height <= 0 || width <= 0) problems << "input size must be positive; ";
    if (encoder_blocks < 1) problems << "encoder_blocks must be >= 1; ";
    if (encoder_blocks >= 1 && height > 0 && (height % (1 << encoder_blocks)) != 0)
      problems << "height " << height << " not divisible by 2^" << encoder_blocks << "; ";
    if (encoder_blocks >= 1 && width > 0 && (width % (1 << encoder_blocks)) != 0)
      problems << "width " << width << " not divisible by 2^" << encoder_blocks << "; ";
    if (k < 1) problems << "k must be >= 1; ";
    if (base_channels < 1 || latent_channels < 1) problems << "channel widths must be >= 1; ";
    if (t_offset < 1) problems << "t_offset must be >= 1; ";
    if (motion_blocks < 1) problems << "motion_blocks must be >= 1; ";
    if (leaky_slope < 0.0 || leaky_slope >= 1.0) problems << "leaky_slope must be in [0,1); ";
    const std::string msg = problems.str();
    if (!msg.empty()) throw std::invalid_argument("invalid model config: " + msg);
  }
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return nlohmann::json{{"height", c.height},
                        {"width", c.width},
                        {"k", c.k},
                        {"encoder_blocks", c.encoder_blocks},
                        {"base_channels", c.base_channels},
                        {"latent_channels", c.latent_channels},
                        {"t_offset", c.t_offset},
                        {"motion_blocks", c.motion_blocks},
                        {"leaky_slope", c.leaky_slope}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.height = j.at("height").get<int>();
  c.width = j.at("width").get<int>();
  c.k = j.at("k").get<int>();
  c.encoder_blocks = j.at("encoder_blocks").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.latent_channels = j.at("latent_channels").get<int>();
  c.t_offset = j.at("t_offset").get<int>();
  c.motion_blocks = j.at("motion_blocks").get<int>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.validate();
  return c;
}

}  // namespace vad
