#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "vad/loss.hpp"
#include "vad/optimizer.hpp"
#include "vad/textio.hpp"
#include "vad/trainer.hpp"

using namespace vad;
namespace fs = std::filesystem;

namespace {

ModelConfig micro_config() {
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

template <typename T>
std::vector<Tensor<T>> random_frames(int n, int h, int w, uint64_t seed) {
  std::vector<Tensor<T>> out;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    Tensor<T> f({3, h, w});
    for (T& v : f.data) v = static_cast<T>(rng.uniform(-0.5, 0.5));
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Video> residual_videos(int n_videos, int frames, int h, int w, uint64_t seed) {
  std::vector<Video> out;
  for (int v = 0; v < n_videos; ++v) {
    Video video;
    video.id = "v" + std::to_string(v);
    video.frames = random_frames<float>(frames, h, w, seed + static_cast<uint64_t>(v));
    out.push_back(std::move(video));
  }
  return out;
}

BackgroundModel flat_background(int h, int w) {
  BackgroundAccumulator acc(h, w);
  acc.add(Tensor<float>::full({3, h, w}, 0.5f));
  return acc.finish();
}

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("vad_train_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

// ----------------------------------------------------------------------------
// Loss terms against direct recomputation
// ----------------------------------------------------------------------------
TEST(Loss, TermsMatchDirectRecomputation) {
  ModelConfig cfg = micro_config();
  Model<double> model(cfg, 11);
  auto frames = random_frames<double>(4, 8, 8, 200);
  SampleView<double> sample;
  for (int j = 0; j < 3; ++j) sample.inputs.push_back(&frames[static_cast<size_t>(j)]);
  sample.target = &frames[3];

  LossWeights w{0.9, 0.15, 0.015};
  LossReport report = compute_loss<double>(model, sample, w);

  // recompute with separate forward passes (training-mode BN is a pure
  // function of its input, so the numbers must agree exactly)
  std::vector<typename Model<double>::Encoded> enc;
  for (int j = 0; j < 3; ++j) enc.push_back(model.encode(*sample.inputs[static_cast<size_t>(j)], true));
  double recon = 0.0;
  for (int q = 1; q < 3; ++q) {
    Tensor<double> rec = model.decode(enc[static_cast<size_t>(q)].latent(),
                                      enc[static_cast<size_t>(q - 1)].pyramid, true);
    recon += oracle::scalar_mse(rec, *sample.inputs[static_cast<size_t>(q)]);
  }
  recon /= 2.0;

  std::vector<const Tensor<double>*> codes;
  for (auto& e : enc) codes.push_back(&e.latent());
  Tensor<double> zhat = model.predict_latent(codes, true);
  Tensor<double> zt = model.encode(*sample.target, true).latent();
  const double pred = oracle::scalar_mse(zhat, zt);

  long double reg = 0.0L;
  for (int p = 0; p < model.reg.num_params(); ++p)
    for (double v : model.reg.param(p).data) reg += static_cast<long double>(v) * v;

  EXPECT_NEAR(report.recon, recon, 1e-12);
  EXPECT_NEAR(report.pred, pred, 1e-12);
  EXPECT_NEAR(report.reg, static_cast<double>(reg), 1e-9);
  EXPECT_NEAR(report.total, w.lambda_r * recon + w.lambda_p * pred + w.gamma * report.reg, 1e-12);
}

TEST(Loss, RegularizerGradientIsExactlyTwoGammaTimesWeights) {
  Model<double> model(micro_config(), 12);
  auto frames = random_frames<double>(4, 8, 8, 210);
  SampleView<double> sample;
  for (int j = 0; j < 3; ++j) sample.inputs.push_back(&frames[static_cast<size_t>(j)]);
  sample.target = &frames[3];

  LossWeights w{0.0, 0.0, 0.7};
  GradStore<double> gs(model.reg);
  compute_loss<double>(model, sample, w, &gs);

  for (int p = 0; p < model.reg.num_params(); ++p)
    for (int64_t i = 0; i < model.reg.param(p).numel(); ++i)
      ASSERT_NEAR(gs.grad(p)[i], 2.0 * 0.7 * model.reg.param(p)[i], 1e-12)
          << model.reg.param_name(p);
}

TEST(Loss, FixedTargetOverridesTargetEncode) {
  Model<double> model(micro_config(), 13);
  auto frames = random_frames<double>(4, 8, 8, 220);
  SampleView<double> sample;
  for (int j = 0; j < 3; ++j) sample.inputs.push_back(&frames[static_cast<size_t>(j)]);
  sample.target = &frames[3];

  std::vector<typename Model<double>::Encoded> enc;
  for (int j = 0; j < 3; ++j) enc.push_back(model.encode(*sample.inputs[static_cast<size_t>(j)], true));
  std::vector<const Tensor<double>*> codes;
  for (auto& e : enc) codes.push_back(&e.latent());
  Tensor<double> zhat = model.predict_latent(codes, true);

  Tensor<double> fixed = Tensor<double>::zeros(zhat.shape);
  LossWeights w{0.0, 1.0, 0.0};
  LossReport report = compute_loss<double>(model, sample, w, nullptr, 1.0, false, &fixed);
  EXPECT_NEAR(report.pred, oracle::scalar_mse(zhat, fixed), 1e-12);
}

TEST(Loss, NonFiniteLossThrowsWithTermName) {
  Model<float> model(micro_config(), 14);
  model.reg.param(0).data[0] = std::numeric_limits<float>::quiet_NaN();
  auto frames = random_frames<float>(4, 8, 8, 230);
  SampleView<float> sample;
  for (int j = 0; j < 3; ++j) sample.inputs.push_back(&frames[static_cast<size_t>(j)]);
  sample.target = &frames[3];

  try {
    compute_loss<float>(model, sample, LossWeights{});
    FAIL() << "expected non-finite loss to throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
  }
}

TEST(Loss, RejectsMalformedSamples) {
  Model<float> model(micro_config(), 15);
  auto frames = random_frames<float>(4, 8, 8, 240);
  SampleView<float> sample;
  sample.inputs = {&frames[0], &frames[1]};  // k = 3 expected
  sample.target = &frames[3];
  EXPECT_THROW(compute_loss<float>(model, sample, LossWeights{}), std::invalid_argument);
  sample.inputs = {&frames[0], &frames[1], &frames[2]};
  sample.target = nullptr;
  EXPECT_THROW(compute_loss<float>(model, sample, LossWeights{}), std::invalid_argument);
}

// ----------------------------------------------------------------------------
// Optimizer
// ----------------------------------------------------------------------------
TEST(Optimizer, AdamMatchesReferenceUpdate) {
  ParamRegistry<double> reg;
  reg.add_param("w", Tensor<double>::full({2}, 1.0));
  Adam<double> opt(reg, 0.01);
  GradStore<double> gs(reg);
  gs.grad(0).data = {2.0, -3.0};

  // reference state
  double w[2] = {1.0, 1.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 3; ++t) {
    opt.step(reg, gs);
    for (int i = 0; i < 2; ++i) {
      const double g = gs.grad(0)[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mhat = m[i] / (1.0 - std::pow(0.9, t));
      const double vhat = v[i] / (1.0 - std::pow(0.999, t));
      w[i] -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
      ASSERT_NEAR(reg.param(0)[i], w[i], 1e-14) << "t=" << t << " i=" << i;
    }
  }
}

TEST(Optimizer, LearningRateDecaySchedule) {
  TrainSchedule sched;
  EXPECT_DOUBLE_EQ(sched.lr_at(0), 1e-4);
  EXPECT_DOUBLE_EQ(sched.lr_at(19), 1e-4);
  EXPECT_NEAR(sched.lr_at(20), 1e-5, 1e-18);
  EXPECT_NEAR(sched.lr_at(39), 1e-5, 1e-18);
  EXPECT_NEAR(sched.lr_at(40), 1e-6, 1e-19);
}

// ----------------------------------------------------------------------------
// Training driver
// ----------------------------------------------------------------------------
TEST(Trainer, ScheduleValidation) {
  TrainSchedule sched;
  EXPECT_NO_THROW(sched.validate());
  sched.phase_switch_epoch = 50;  // must be < total
  EXPECT_THROW(sched.validate(), std::invalid_argument);
  sched = TrainSchedule();
  sched.phase_switch_epoch = 0;
  EXPECT_THROW(sched.validate(), std::invalid_argument);
  sched = TrainSchedule();
  sched.lr = 0.0;
  EXPECT_THROW(sched.validate(), std::invalid_argument);
  sched = TrainSchedule();
  sched.phase1.gamma = -1.0;
  EXPECT_THROW(sched.validate(), std::invalid_argument);
}

TEST(Trainer, DefaultWeightsMatchTwoPhaseRecipe) {
  TrainSchedule sched;
  EXPECT_DOUBLE_EQ(sched.phase1.lambda_r, 1.0);
  EXPECT_DOUBLE_EQ(sched.phase1.lambda_p, 0.001);
  EXPECT_DOUBLE_EQ(sched.phase1.gamma, 0.001);
  EXPECT_DOUBLE_EQ(sched.phase2.lambda_r, 0.001);
  EXPECT_DOUBLE_EQ(sched.phase2.lambda_p, 1.0);
  EXPECT_DOUBLE_EQ(sched.phase2.gamma, 0.001);
  EXPECT_EQ(sched.total_epochs, 50);
  EXPECT_EQ(sched.phase_switch_epoch, 25);
  EXPECT_DOUBLE_EQ(sched.lr, 1e-4);
}

TEST(Trainer, WritesLossCsvAndSwitchesPhase) {
  fs::path dir = temp_dir("csv");
  ModelConfig cfg = micro_config();
  Model<float> model(cfg, 16);
  TrainSchedule sched;
  sched.total_epochs = 4;
  sched.phase_switch_epoch = 2;
  sched.batch_size = 4;
  sched.seed = 3;

  auto videos = residual_videos(2, 6, 8, 8, 300);
  TrainResult result = train_model(model, flat_background(8, 8), videos, sched, dir.string());

  EXPECT_FALSE(result.diverged);
  EXPECT_EQ(result.epoch_reports.size(), 4u);
  EXPECT_EQ(result.switch_epoch_used, 2);
  EXPECT_TRUE(fs::exists(dir / "model_final.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "model_best.ckpt"));
  ASSERT_TRUE(fs::exists(dir / "loss.csv"));

  std::ifstream csv(dir / "loss.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "epoch,step,recon,pred,reg,total,lr,lambda_r,lambda_p");

  // each video yields 6-(3+1)+1 = 3 samples; 6 total, batch 4 -> 2 steps/epoch
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) {
    const auto cols = split(line, ',');
    ASSERT_EQ(cols.size(), 9u) << line;
    const int epoch = std::stoi(cols[0]);
    const double lambda_r = std::stod(cols[7]), lambda_p = std::stod(cols[8]);
    if (epoch < 2) {
      EXPECT_DOUBLE_EQ(lambda_r, 1.0);
      EXPECT_DOUBLE_EQ(lambda_p, 0.001);
    } else {
      EXPECT_DOUBLE_EQ(lambda_r, 0.001);
      EXPECT_DOUBLE_EQ(lambda_p, 1.0);
    }
    ++rows;
  }
  EXPECT_EQ(rows, 4 * 2);
  fs::remove_all(dir);
}

TEST(Trainer, LossDecreasesOnTinyProblem) {
  ModelConfig cfg = micro_config();
  Model<float> model(cfg, 17);
  TrainSchedule sched;
  sched.total_epochs = 6;
  sched.phase_switch_epoch = 5;
  sched.batch_size = 1;
  sched.lr = 3e-3;
  sched.seed = 4;

  auto videos = residual_videos(1, 6, 8, 8, 310);
  TrainResult result = train_model(model, flat_background(8, 8), videos, sched);
  ASSERT_EQ(result.epoch_reports.size(), 6u);
  // phase 1 reconstruction should clearly improve from the first epoch
  EXPECT_LT(result.epoch_reports[4].recon, result.epoch_reports[0].recon);
}

TEST(Trainer, DivergenceRestoresParametersAndReportsIt) {
  fs::path dir = temp_dir("diverge");
  ModelConfig cfg = micro_config();
  Model<float> model(cfg, 18);
  const Tensor<float> before = model.reg.param(0);

  TrainSchedule sched;
  sched.total_epochs = 3;
  sched.phase_switch_epoch = 1;

  auto videos = residual_videos(1, 5, 8, 8, 320);
  for (auto& f : videos[0].frames) f.fill(std::numeric_limits<float>::quiet_NaN());

  std::ostringstream log;
  TrainResult result = train_model(model, flat_background(8, 8), videos, sched, dir.string(), &log);
  EXPECT_TRUE(result.diverged);
  EXPECT_TRUE(result.epoch_reports.empty());
  EXPECT_EQ(model.reg.param(0).data, before.data);  // rolled back to init
  EXPECT_TRUE(fs::exists(dir / "model_final.ckpt"));
  EXPECT_NE(log.str().find("aborted"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Trainer, PlateauSwitchFiresEarly) {
  ModelConfig cfg = micro_config();
  Model<float> model(cfg, 19);
  TrainSchedule sched;
  sched.total_epochs = 4;
  sched.phase_switch_epoch = 3;
  sched.plateau_switch = true;
  sched.plateau_rel_improvement = 1.0;  // impossible bar: every epoch stalls
  sched.plateau_patience = 1;

  auto videos = residual_videos(1, 5, 8, 8, 330);
  TrainResult result = train_model(model, flat_background(8, 8), videos, sched);
  EXPECT_EQ(result.switch_epoch_used, 1);  // stall detected after epoch 0
}

TEST(Trainer, TooShortVideosAreRejected) {
  Model<float> model(micro_config(), 20);
  TrainSchedule sched;
  sched.total_epochs = 2;
  sched.phase_switch_epoch = 1;
  auto videos = residual_videos(1, 3, 8, 8, 340);  // needs k + t_offset = 4
  EXPECT_THROW(train_model(model, flat_background(8, 8), videos, sched), std::invalid_argument);
}

TEST(Trainer, PeriodicCheckpointsWritten) {
  fs::path dir = temp_dir("periodic");
  Model<float> model(micro_config(), 21);
  TrainSchedule sched;
  sched.total_epochs = 4;
  sched.phase_switch_epoch = 2;
  sched.checkpoint_every = 2;
  auto videos = residual_videos(1, 5, 8, 8, 350);
  train_model(model, flat_background(8, 8), videos, sched, dir.string());
  EXPECT_TRUE(fs::exists(dir / "model_epoch_002.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "model_epoch_004.ckpt"));
  fs::remove_all(dir);
}
