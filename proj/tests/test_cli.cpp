#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vad/cli.hpp"
#include "vad/textio.hpp"

using namespace vad;
namespace fs = std::filesystem;

namespace {

int run_vad(std::vector<std::string> args) {
  args.insert(args.begin(), "vad");
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// moves the videos of dataset `extra` into `base` and appends their labels
void merge_dataset(const fs::path& base, const fs::path& extra) {
  for (const auto& e : fs::directory_iterator(extra))
    if (e.is_directory()) fs::rename(e.path(), base / e.path().filename());
  std::ofstream out(base / "labels.csv", std::ios::app);
  const auto lines = read_lines(extra / "labels.csv");
  for (size_t i = 1; i < lines.size(); ++i) out << lines[i] << "\n";  // skip header
  fs::remove_all(extra);
}

}  // namespace

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root = fs::temp_directory_path() / "vad_cli_pipeline";
    fs::remove_all(root);
    fs::create_directories(root);

    // training set: one class, one speed, every frame normal
    ASSERT_EQ(run_vad({"synth", "--out", (root / "train").string(), "--videos", "2", "--frames",
                       "12", "--size", "16", "--glyph", "8", "--objects", "4", "--speeds", "2",
                       "--normal-objects", "4", "--normal-speeds", "2", "--seed", "21"}),
              0);
    // test set: two normal videos plus one anomalous-class video
    ASSERT_EQ(run_vad({"synth", "--out", (root / "test").string(), "--videos", "2", "--frames",
                       "12", "--size", "16", "--glyph", "8", "--objects", "4", "--speeds", "2",
                       "--normal-objects", "4", "--normal-speeds", "2", "--seed", "22"}),
              0);
    ASSERT_EQ(run_vad({"synth", "--out", (root / "anom").string(), "--videos", "1", "--frames",
                       "12", "--size", "16", "--glyph", "8", "--objects", "circle", "--speeds",
                       "2", "--normal-objects", "4", "--normal-speeds", "2", "--seed", "23"}),
              0);
    merge_dataset(root / "test", root / "anom");

    nlohmann::json cfg{
        {"model",
         {{"height", 8},
          {"width", 8},
          {"k", 3},
          {"encoder_blocks", 2},
          {"base_channels", 2},
          {"latent_channels", 4},
          {"t_offset", 1},
          {"motion_blocks", 1}}},
        {"schedule",
         {{"total_epochs", 2}, {"phase_switch_epoch", 1}, {"batch_size", 8}, {"seed", 7}}},
        {"train_dir", (root / "train").string()},
        {"test_dir", (root / "test").string()},
        {"metric", "latent_mse"}};
    cfg_path = (root / "cfg.json").string();
    std::ofstream(cfg_path) << cfg.dump(2);

    ASSERT_EQ(run_vad({"train", "--config", cfg_path, "--out", (root / "run").string()}), 0);
    ckpt = (root / "run" / "model_final.ckpt").string();
    ASSERT_TRUE(fs::exists(ckpt));
  }

  static void TearDownTestSuite() { fs::remove_all(root); }

  static fs::path root;
  static std::string cfg_path, ckpt;
};

fs::path CliPipeline::root;
std::string CliPipeline::cfg_path, CliPipeline::ckpt;

TEST_F(CliPipeline, SynthDatasetHasVideosLabelsAndManifest) {
  EXPECT_TRUE(fs::exists(root / "train" / "labels.csv"));
  EXPECT_TRUE(fs::exists(root / "train" / "manifest.json"));
  const nlohmann::json manifest = read_json(root / "train" / "manifest.json");
  EXPECT_EQ(manifest.at("command").get<std::string>(), "synth");
  int video_dirs = 0;
  for (const auto& e : fs::directory_iterator(root / "train"))
    if (e.is_directory()) ++video_dirs;
  EXPECT_EQ(video_dirs, 2);
  // mixed test set: both labels must occur
  const auto lines = read_lines(root / "test" / "labels.csv");
  bool saw0 = false, saw1 = false;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].back() == '0') saw0 = true;
    if (lines[i].back() == '1') saw1 = true;
  }
  EXPECT_TRUE(saw0);
  EXPECT_TRUE(saw1);
}

TEST_F(CliPipeline, TrainWritesArtifactsAndManifestLast) {
  EXPECT_TRUE(fs::exists(root / "run" / "loss.csv"));
  EXPECT_TRUE(fs::exists(root / "run" / "model_best.ckpt"));
  EXPECT_TRUE(fs::exists(root / "run" / "config.json"));

  const nlohmann::json manifest = read_json(root / "run" / "manifest.json");
  EXPECT_EQ(manifest.at("command").get<std::string>(), "train");
  EXPECT_EQ(manifest.at("config_hash").get<std::string>().size(), 16u);
  EXPECT_NE(manifest.at("started_at").get<std::string>().find('T'), std::string::npos);
  EXPECT_NE(manifest.at("finished_at").get<std::string>().find('Z'), std::string::npos);
  const auto outputs = manifest.at("outputs").get<std::vector<std::string>>();
  for (const char* want : {"loss.csv", "model_final.ckpt", "config.json", "manifest.json"})
    EXPECT_NE(std::find(outputs.begin(), outputs.end(), want), outputs.end()) << want;

  // the run's config snapshot reloads to the same effective config
  const nlohmann::json snap = read_json(root / "run" / "config.json");
  EXPECT_EQ(snap.at("model").at("k").get<int>(), 3);
  EXPECT_EQ(snap.at("schedule").at("total_epochs").get<int>(), 2);
}

TEST_F(CliPipeline, ScoreWritesOneRowPerScoreableFrame) {
  const fs::path out = root / "scores";
  ASSERT_EQ(run_vad({"score", "--config", cfg_path, "--checkpoint", ckpt, "--out", out.string()}),
            0);
  const auto lines = read_lines(out / "scores.csv");
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines[0], "video_id,frame_index,raw_score,normalized_score,metric");
  // 3 test videos, 12 frames each, first scoreable frame k-1+t_offset = 3
  EXPECT_EQ(lines.size(), 1u + 3u * 9u);
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto cols = split(lines[i], ',');
    ASSERT_EQ(cols.size(), 5u) << lines[i];
    EXPECT_EQ(cols[4], "latent_mse");
    const double norm = std::stod(cols[3]);
    EXPECT_GE(norm, 0.0);
    EXPECT_LE(norm, 1.0);
  }
}

TEST_F(CliPipeline, ScoreLocalizeEmitsRegionBoxes) {
  // permissive thresholds so the tiny frames produce at least one region
  nlohmann::json cfg = read_json(cfg_path);
  cfg["localize_quantile"] = 0.5;
  cfg["localize_min_area"] = 1;
  const std::string loc_cfg = (root / "cfg_localize.json").string();
  std::ofstream(loc_cfg) << cfg.dump(2);

  const fs::path out = root / "regions";
  ASSERT_EQ(run_vad({"score", "--config", loc_cfg, "--checkpoint", ckpt, "--localize", "--out",
                     out.string()}),
            0);
  const auto lines = read_lines(out / "regions.csv");
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines[0], "video_id,frame_index,x,y,w,h,mean_error");
  EXPECT_GT(lines.size(), 1u);
  const auto cols = split(lines[1], ',');
  ASSERT_EQ(cols.size(), 7u);
  EXPECT_GE(std::stoi(cols[2]), 0);
  EXPECT_GT(std::stoi(cols[4]), 0);
}

TEST_F(CliPipeline, EvalReportsPooledAucBothWays) {
  const fs::path out = root / "eval";
  ASSERT_EQ(run_vad({"eval", "--config", cfg_path, "--checkpoint", ckpt, "--out", out.string()}),
            0);
  const nlohmann::json summary = read_json(out / "eval.json");
  EXPECT_EQ(summary.at("metric").get<std::string>(), "latent_mse");
  EXPECT_EQ(summary.at("per_video").size(), 3u);
  for (const char* key : {"pooled_auc_normalized", "pooled_auc_raw"}) {
    const double auc = summary.at(key).get<double>();
    EXPECT_GE(auc, 0.0) << key;
    EXPECT_LE(auc, 1.0) << key;
  }
  // every synthetic video is single-class, so no per-video AUC aggregate
  EXPECT_FALSE(summary.contains("mean_video_auc"));
  EXPECT_TRUE(fs::exists(out / "scores.csv"));
}

TEST_F(CliPipeline, EvalPlotWritesCurveImages) {
  const fs::path out = root / "evalplot";
  ASSERT_EQ(run_vad({"eval", "--config", cfg_path, "--checkpoint", ckpt, "--plot", "--out",
                     out.string()}),
            0);
  int curves = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("curve_", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".ppm")
      ++curves;
  }
  EXPECT_EQ(curves, 3);
}

TEST_F(CliPipeline, BenchComparesCachedAndNaivePaths) {
  const fs::path out = root / "bench";
  ASSERT_EQ(run_vad({"bench", "--config", cfg_path, "--checkpoint", ckpt, "--warmup", "4",
                     "--video", "0", "--out", out.string()}),
            0);
  const nlohmann::json j = read_json(out / "bench.json");
  EXPECT_EQ(j.at("cached").at("encode_count").get<long>(), 8);  // 12 frames - 4 warmup
  EXPECT_GT(j.at("naive").at("encode_count").get<long>(), j.at("cached").at("encode_count").get<long>());
  EXPECT_GT(j.at("speedup").get<double>(), 0.0);
  EXPECT_EQ(run_vad({"bench", "--config", cfg_path, "--checkpoint", ckpt, "--video", "99",
                     "--out", (root / "bench2").string()}),
            2);
}

// ----------------------------------------------------------------------------
// Exit codes
// ----------------------------------------------------------------------------
TEST(CliExitCodes, HelpSucceedsAndMissingSubcommandFails) {
  EXPECT_EQ(run_vad({"--help"}), 0);
  EXPECT_EQ(run_vad({}), 2);
  EXPECT_EQ(run_vad({"frobnicate"}), 2);
}

TEST(CliExitCodes, ConfigProblemsExitTwo) {
  const fs::path root = fs::temp_directory_path() / "vad_cli_errors";
  fs::remove_all(root);
  fs::create_directories(root);

  EXPECT_EQ(run_vad({"train", "--preset", "nosuch_dataset", "--out", (root / "a").string()}), 2);
  EXPECT_EQ(run_vad({"score", "--out", (root / "b").string()}), 2);  // no checkpoint given

  const std::string broken = (root / "broken.json").string();
  std::ofstream(broken) << "{ this is not json";
  EXPECT_EQ(run_vad({"train", "--config", broken, "--out", (root / "c").string()}), 2);

  const std::string unknown = (root / "unknown.json").string();
  std::ofstream(unknown) << R"({"totally_unknown_key": 1})";
  EXPECT_EQ(run_vad({"train", "--config", unknown, "--out", (root / "d").string()}), 2);

  EXPECT_EQ(run_vad({"score", "--window", "notanumber", "--out", (root / "e").string()}), 2);
  EXPECT_EQ(run_vad({"score", "--metric", "bogus", "--checkpoint", "x.ckpt", "--out",
                     (root / "f").string()}),
            2);
  fs::remove_all(root);
}

TEST(CliExitCodes, RuntimeFailuresExitThree) {
  const fs::path root = fs::temp_directory_path() / "vad_cli_runtime";
  fs::remove_all(root);
  fs::create_directories(root);

  nlohmann::json cfg{{"model",
                      {{"height", 8},
                       {"width", 8},
                       {"k", 3},
                       {"encoder_blocks", 2},
                       {"base_channels", 2},
                       {"latent_channels", 4},
                       {"t_offset", 1},
                       {"motion_blocks", 1}}},
                     {"schedule", {{"total_epochs", 2}, {"phase_switch_epoch", 1}}},
                     {"train_dir", (root / "does_not_exist").string()},
                     {"test_dir", (root / "does_not_exist").string()}};
  const std::string cfg_path = (root / "cfg.json").string();
  std::ofstream(cfg_path) << cfg.dump();

  EXPECT_EQ(run_vad({"train", "--config", cfg_path, "--out", (root / "run").string()}), 3);
  fs::remove_all(root);
}
