#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vad/background.hpp"
#include "vad/config.hpp"
#include "vad/network.hpp"
#include "vad/version.hpp"

namespace vad {

// Checkpoint container: an 8-byte magic, a JSON header describing the model
// config and every named tensor by shape and offset, then one contiguous
// float32 payload. The embedded config makes a checkpoint self-describing;
// tensors are matched back by name, so registration-order changes between
// versions stay loadable. The background frame and the BatchNorm running
// statistics travel with the weights because scoring is undefined without
// them.
inline constexpr char kCheckpointMagic[8] = {'V', 'A', 'D', 'C', 'K', 'P', 'T', '1'};

namespace detail {
inline nlohmann::json tensor_entry(const std::string& name, const std::vector<int>& shape,
                                   uint64_t offset) {
  return nlohmann::json{{"name", name}, {"shape", shape}, {"offset", offset}};
}

template <typename T>
inline void append_blob(std::vector<float>& payload, const Tensor<T>& t) {
  payload.reserve(payload.size() + t.data.size());
  for (const T& v : t.data) payload.push_back(static_cast<float>(v));
}
}  // namespace detail

template <typename T>
inline void save_checkpoint(const std::string& path, const Model<T>& model,
                            const BackgroundModel& bg) {
  nlohmann::json header;
  header["version"] = kCheckpointFormatVersion;
  header["tool_version"] = kVersion;
  header["model"] = to_json(model.cfg);

  std::vector<float> payload;
  nlohmann::json params = nlohmann::json::array();
  for (int i = 0; i < model.reg.num_params(); ++i) {
    const Tensor<T>& t = model.reg.param(i);
    params.push_back(detail::tensor_entry(model.reg.param_name(i), t.shape, payload.size()));
    detail::append_blob(payload, t);
  }
  header["params"] = std::move(params);

  nlohmann::json buffers = nlohmann::json::array();
  for (int i = 0; i < model.reg.num_buffers(); ++i) {
    const Tensor<T>& t = model.reg.buffer(i);
    buffers.push_back(detail::tensor_entry(model.reg.buffer_name(i), t.shape, payload.size()));
    detail::append_blob(payload, t);
  }
  header["buffers"] = std::move(buffers);

  if (!bg.empty()) {
    header["background"] = detail::tensor_entry("background.mean", bg.mean.shape, payload.size());
    detail::append_blob(payload, bg.mean);
  } else {
    header["background"] = nullptr;
  }

  const std::string header_text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const uint32_t hlen = static_cast<uint32_t>(header_text.size());
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

template <typename T>
struct Checkpoint {
  ModelConfig cfg;
  std::unique_ptr<Model<T>> model;
  BackgroundModel bg;
};

template <typename T = float>
inline Checkpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string header_text(hlen, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("truncated checkpoint header: " + path);
  const nlohmann::json header = nlohmann::json::parse(header_text);

  const int version = header.at("version").get<int>();
  if (version > kCheckpointFormatVersion)
    throw std::runtime_error("checkpoint format version " + std::to_string(version) +
                             " is newer than this build supports");

  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() % sizeof(float) != 0)
    throw std::runtime_error("checkpoint payload is not a whole number of floats: " + path);
  std::vector<float> payload(raw.size() / sizeof(float));
  if (!payload.empty()) std::memcpy(payload.data(), raw.data(), raw.size());

  auto copy_out = [&](const nlohmann::json& entry, Tensor<T>& dst, const std::string& kind) {
    const auto shape = entry.at("shape").get<std::vector<int>>();
    const uint64_t offset = entry.at("offset").get<uint64_t>();
    if (shape != dst.shape)
      throw std::runtime_error("checkpoint " + kind + " " + entry.at("name").get<std::string>() +
                               " has shape mismatch against the embedded config");
    if (offset + dst.data.size() > payload.size())
      throw std::runtime_error("checkpoint payload too short for " +
                               entry.at("name").get<std::string>());
    for (size_t i = 0; i < dst.data.size(); ++i)
      dst.data[i] = static_cast<T>(payload[offset + i]);
  };

  Checkpoint<T> ck;
  ck.cfg = model_config_from_json(header.at("model"));
  ck.model = std::make_unique<Model<T>>(ck.cfg, 0);

  std::map<std::string, const nlohmann::json*> by_name;
  for (const auto& e : header.at("params")) by_name[e.at("name").get<std::string>()] = &e;
  for (int i = 0; i < ck.model->reg.num_params(); ++i) {
    auto it = by_name.find(ck.model->reg.param_name(i));
    if (it == by_name.end())
      throw std::runtime_error("checkpoint missing parameter " + ck.model->reg.param_name(i));
    copy_out(*it->second, ck.model->reg.param(i), "parameter");
  }

  by_name.clear();
  for (const auto& e : header.at("buffers")) by_name[e.at("name").get<std::string>()] = &e;
  for (int i = 0; i < ck.model->reg.num_buffers(); ++i) {
    auto it = by_name.find(ck.model->reg.buffer_name(i));
    if (it == by_name.end())
      throw std::runtime_error("checkpoint missing buffer " + ck.model->reg.buffer_name(i));
    copy_out(*it->second, ck.model->reg.buffer(i), "buffer");
  }

  if (!header.at("background").is_null()) {
    const auto& e = header.at("background");
    ck.bg.mean = Tensor<float>(e.at("shape").get<std::vector<int>>());
    const uint64_t offset = e.at("offset").get<uint64_t>();
    if (offset + ck.bg.mean.data.size() > payload.size())
      throw std::runtime_error("checkpoint payload too short for background model");
    for (size_t i = 0; i < ck.bg.mean.data.size(); ++i) ck.bg.mean.data[i] = payload[offset + i];
  }
  return ck;
}

}  // namespace vad
