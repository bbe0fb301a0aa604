#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "vad/checkpoint.hpp"
#include "vad/experiments.hpp"
#include "vad/scoring.hpp"

using namespace vad;
namespace fs = std::filesystem;

namespace {

ModelConfig ckpt_config() {
  ModelConfig cfg;
  cfg.height = 8;
  cfg.width = 8;
  cfg.k = 3;
  cfg.encoder_blocks = 2;
  cfg.base_channels = 2;
  cfg.latent_channels = 4;
  cfg.t_offset = 1;
  cfg.motion_blocks = 1;
  return cfg;
}

Video raw_video(int frames, uint64_t seed) {
  Video v;
  v.id = "ckpt";
  Rng rng(seed);
  for (int i = 0; i < frames; ++i) {
    Tensor<float> f({3, 8, 8});
    for (float& x : f.data) x = static_cast<float>(rng.uniform(0.0, 1.0));
    v.frames.push_back(std::move(f));
  }
  return v;
}

fs::path temp_file(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove(p);
  return p;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_all(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(Checkpoint, RoundTripPreservesParametersBuffersConfigAndBackground) {
  Model<float> model(ckpt_config(), 110);
  Video video = raw_video(6, 111);
  BackgroundModel bg = build_background({video}, 8, 8);

  // move the BatchNorm running stats off their init values first
  Video residual = residualize({video}, bg)[0];
  for (int i = 0; i < 3; ++i) model.encode(residual.frames[static_cast<size_t>(i)], true, true);

  fs::path path = temp_file("vad_ckpt_roundtrip.ckpt");
  save_checkpoint(path.string(), model, bg);
  Checkpoint<float> ck = load_checkpoint<float>(path.string());

  EXPECT_EQ(ck.cfg.height, model.cfg.height);
  EXPECT_EQ(ck.cfg.width, model.cfg.width);
  EXPECT_EQ(ck.cfg.k, model.cfg.k);
  EXPECT_EQ(ck.cfg.encoder_blocks, model.cfg.encoder_blocks);
  EXPECT_EQ(ck.cfg.latent_channels, model.cfg.latent_channels);
  EXPECT_EQ(ck.cfg.t_offset, model.cfg.t_offset);

  ASSERT_EQ(ck.model->reg.num_params(), model.reg.num_params());
  for (int i = 0; i < model.reg.num_params(); ++i)
    EXPECT_EQ(ck.model->reg.param(i).data, model.reg.param(i).data) << model.reg.param_name(i);
  ASSERT_EQ(ck.model->reg.num_buffers(), model.reg.num_buffers());
  for (int i = 0; i < model.reg.num_buffers(); ++i)
    EXPECT_EQ(ck.model->reg.buffer(i).data, model.reg.buffer(i).data) << model.reg.buffer_name(i);
  ASSERT_FALSE(ck.bg.empty());
  EXPECT_EQ(ck.bg.mean.data, bg.mean.data);
  fs::remove(path);
}

TEST(Checkpoint, LoadedModelScoresIdentically) {
  Model<float> model(ckpt_config(), 112);
  Video video = raw_video(8, 113);
  BackgroundModel bg = build_background({video}, 8, 8);
  Video residual = residualize({video}, bg)[0];

  fs::path path = temp_file("vad_ckpt_scores.ckpt");
  save_checkpoint(path.string(), model, bg);
  Checkpoint<float> ck = load_checkpoint<float>(path.string());

  AnomalyScoreSeries a = score_video(model, residual, Metric::latent_mse);
  AnomalyScoreSeries b = score_video(*ck.model, residual, Metric::latent_mse);
  ASSERT_EQ(a.raw.size(), b.raw.size());
  for (size_t i = 0; i < a.raw.size(); ++i) EXPECT_DOUBLE_EQ(a.raw[i], b.raw[i]);
  fs::remove(path);
}

TEST(Checkpoint, EmptyBackgroundSurvivesRoundTrip) {
  Model<float> model(ckpt_config(), 114);
  fs::path path = temp_file("vad_ckpt_nobg.ckpt");
  save_checkpoint(path.string(), model, BackgroundModel{});
  Checkpoint<float> ck = load_checkpoint<float>(path.string());
  EXPECT_TRUE(ck.bg.empty());
  fs::remove(path);
}

TEST(Checkpoint, MissingFileAndBadMagicAreRejected) {
  EXPECT_THROW(load_checkpoint<float>("/nonexistent/vad.ckpt"), std::runtime_error);

  fs::path path = temp_file("vad_ckpt_badmagic.ckpt");
  write_all(path, "definitely not a checkpoint");
  try {
    load_checkpoint<float>(path.string());
    FAIL() << "bad magic must throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("not a checkpoint file"), std::string::npos);
  }
  fs::remove(path);
}

TEST(Checkpoint, TruncatedHeaderIsRejected) {
  Model<float> model(ckpt_config(), 115);
  fs::path path = temp_file("vad_ckpt_trunc.ckpt");
  save_checkpoint(path.string(), model, BackgroundModel{});
  const std::string bytes = read_all(path);
  write_all(path, bytes.substr(0, 20));  // magic + length + a sliver of header
  try {
    load_checkpoint<float>(path.string());
    FAIL() << "truncated header must throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("truncated checkpoint header"), std::string::npos);
  }
  fs::remove(path);
}

TEST(Checkpoint, FutureFormatVersionIsRejected) {
  Model<float> model(ckpt_config(), 116);
  fs::path path = temp_file("vad_ckpt_future.ckpt");
  save_checkpoint(path.string(), model, BackgroundModel{});

  std::string bytes = read_all(path);
  uint32_t hlen = 0;
  std::memcpy(&hlen, bytes.data() + 8, sizeof(hlen));
  nlohmann::json header = nlohmann::json::parse(bytes.substr(12, hlen));
  header["version"] = header["version"].get<int>() + 1;
  const std::string new_header = header.dump();
  std::string rewritten = bytes.substr(0, 8);
  const uint32_t new_len = static_cast<uint32_t>(new_header.size());
  rewritten.append(reinterpret_cast<const char*>(&new_len), sizeof(new_len));
  rewritten += new_header;
  rewritten += bytes.substr(12 + hlen);
  write_all(path, rewritten);

  try {
    load_checkpoint<float>(path.string());
    FAIL() << "future version must throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("checkpoint format version"), std::string::npos);
  }
  fs::remove(path);
}

TEST(Checkpoint, MissingParameterEntryIsRejected) {
  Model<float> model(ckpt_config(), 117);
  fs::path path = temp_file("vad_ckpt_missing.ckpt");
  save_checkpoint(path.string(), model, BackgroundModel{});

  std::string bytes = read_all(path);
  uint32_t hlen = 0;
  std::memcpy(&hlen, bytes.data() + 8, sizeof(hlen));
  nlohmann::json header = nlohmann::json::parse(bytes.substr(12, hlen));
  ASSERT_FALSE(header["params"].empty());
  const std::string dropped = header["params"][0]["name"].get<std::string>();
  header["params"].erase(0);
  const std::string new_header = header.dump();
  std::string rewritten = bytes.substr(0, 8);
  const uint32_t new_len = static_cast<uint32_t>(new_header.size());
  rewritten.append(reinterpret_cast<const char*>(&new_len), sizeof(new_len));
  rewritten += new_header;
  rewritten += bytes.substr(12 + hlen);
  write_all(path, rewritten);

  try {
    load_checkpoint<float>(path.string());
    FAIL() << "missing parameter must throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("checkpoint missing parameter"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find(dropped), std::string::npos);
  }
  fs::remove(path);
}
