#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "hrpose/checkpoint.hpp"
#include "hrpose/layers.hpp"
#include "hrpose/synthetic.hpp"
#include "hrpose/train.hpp"

using namespace hrpose;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hrpose_test_train_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

PoseDataset small_set(int n, std::uint64_t seed = 5) {
  SyntheticSpec spec;
  spec.num_images = n;
  return generate_synthetic(spec, seed);
}

RunConfig quick_config(std::uint64_t seed = 1) {
  RunConfig c;
  c.batch_size = 2;
  c.epochs = 2;
  c.seed = seed;
  c.lr_milestones = {};
  return c;
}

}  // namespace

TEST(RunConfig, DefaultsFollowTheCocoSchedule) {
  const RunConfig c;
  EXPECT_DOUBLE_EQ(c.schedule().lr_at(0), 1e-3);
  EXPECT_DOUBLE_EQ(c.schedule().lr_at(170), 1e-4);
  EXPECT_DOUBLE_EQ(c.schedule().lr_at(200), 1e-5);
  EXPECT_EQ(c.epochs, 210);
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, ParsesKeysAndRoundTrips) {
  const auto cfg = KeyValueConfig::parse(
      "model.arch = w8\n"
      "input.width = 96\ninput.height = 128\n"
      "train.batch_size = 4\ntrain.seed = 42\n"
      "train.lr = 5e-4\ntrain.lr_milestones = 10:5e-5, 20:5e-6\ntrain.epochs = 30\n"
      "aug.enabled = false\naug.rotation = 30\n");
  const RunConfig r = RunConfig::from_config(cfg);
  EXPECT_EQ(r.model.width, 8);
  EXPECT_EQ(r.model.num_keypoints, 5);
  EXPECT_EQ(r.input_width, 96);
  EXPECT_EQ(r.input_height, 128);
  EXPECT_EQ(r.batch_size, 4);
  EXPECT_EQ(r.seed, 42u);
  EXPECT_FALSE(r.augment);
  EXPECT_DOUBLE_EQ(r.augmentation.rotation_range, 30);
  EXPECT_DOUBLE_EQ(r.schedule().lr_at(15), 5e-5);
  EXPECT_DOUBLE_EQ(r.schedule().lr_at(25), 5e-6);

  const RunConfig back = RunConfig::from_config(r.to_config());
  EXPECT_EQ(format_hrnet_spec(back.model), format_hrnet_spec(r.model));
  EXPECT_EQ(back.to_config().values(), r.to_config().values());
}

TEST(RunConfig, EnvironmentOverridesAnyKey) {
  auto cfg = KeyValueConfig::parse("train.batch_size = 4\n");
  ::setenv("HRPOSE_TRAIN_BATCH_SIZE", "6", 1);
  ::setenv("HRPOSE_TRAIN_SEED", "9", 1);
  cfg.apply_env_overrides("HRPOSE_", RunConfig::known_keys());
  ::unsetenv("HRPOSE_TRAIN_BATCH_SIZE");
  ::unsetenv("HRPOSE_TRAIN_SEED");
  const RunConfig r = RunConfig::from_config(cfg);
  EXPECT_EQ(r.batch_size, 6);
  EXPECT_EQ(r.seed, 9u);
}

TEST(RunConfig, RejectsInvalidSettings) {
  EXPECT_THROW(RunConfig::from_config(KeyValueConfig::parse("input.width = 100\n")), ConfigError);
  EXPECT_THROW(RunConfig::from_config(KeyValueConfig::parse("train.batch_size = 1\n")), ConfigError);
  EXPECT_THROW(RunConfig::from_config(KeyValueConfig::parse("train.bogus = 1\n")), ConfigError);
  EXPECT_THROW(RunConfig::from_config(KeyValueConfig::parse("train.lr_milestones = 10\n")), ConfigError);
  EXPECT_THROW(RunConfig::from_config(KeyValueConfig::parse("data.schema = coco17\n")), ConfigError);
  EXPECT_NO_THROW(RunConfig::from_config(KeyValueConfig::parse("data.schema = coco17\nmodel.arch = w8\n")));
}

TEST(BatchNorm, SingleSampleInTrainModeUsesRunningStatistics) {
  Rng rng(3);
  BatchNorm2d bn("bn", 2, BuildContext{DType::kFloat64, &rng});
  bn.running_mean() = Tensor::from({1, 2, 1, 1}, std::vector<double>{0.5, -1.0});
  bn.running_var() = Tensor::from({1, 2, 1, 1}, std::vector<double>{2.0, 0.25});
  const Tensor x = Tensor::from({1, 2, 2, 2}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
  bn.set_training(false);
  const auto expected = bn.forward(x).to_vector();
  bn.set_training(true);
  EXPECT_EQ(bn.forward(x).to_vector(), expected);
  EXPECT_EQ(bn.running_mean().to_vector(), (std::vector<double>{0.5, -1.0}));
}

TEST(SamplePreparer, TargetsFollowTheCropAndFlip) {
  const PoseDataset d = small_set(1);
  const PersonInstance& p = d.annotations.instances[0];
  RunConfig c = quick_config();
  const SamplePreparer prep(c, d.annotations.schema, 4);
  const TrainBatch plain = prep.batch({&d.images[0]}, {&p}, nullptr);
  EXPECT_EQ(plain.images.shape(), (Shape{1, 3, 64, 64}));
  EXPECT_EQ(plain.targets.shape(), (Shape{1, 5, 16, 16}));
  EXPECT_EQ(plain.weights.to_vector(), std::vector<double>(5, 1.0));

  c.augmentation = AugmentationConfig{};
  c.augmentation.rotation_probability = 0;
  c.augmentation.scale_min = c.augmentation.scale_max = 1.0;
  c.augmentation.flip_probability = 1.0;
  c.augmentation.half_body_probability = 0;
  const SamplePreparer flipping(c, d.annotations.schema, 4);
  Rng rng(0);
  const TrainBatch flipped = flipping.batch({&d.images[0]}, {&p}, &rng);
  const auto peaks = decode_heatmaps(plain.targets);
  const auto mirrored = decode_heatmaps(flipped.targets);
  const int perm[5] = {0, 2, 1, 4, 3};
  for (int j = 0; j < 5; ++j) {
    // Heatmap column x in the crop corresponds to 15 - x after mirroring, up to rounding.
    EXPECT_NEAR(mirrored[j].x, 15 - peaks[perm[j]].x, 1.0) << j;
    EXPECT_NEAR(mirrored[j].y, peaks[perm[j]].y, 1e-9) << j;
  }
}

TEST(Train, SameSeedIsBitwiseReproducible) {
  const PoseDataset d = small_set(4);
  const auto run = [&](std::uint64_t seed, const std::string& name) {
    RunConfig c = quick_config(seed);
    c.output_dir = temp_dir(name);
    HRNet net(c.model, DType::kFloat32, c.seed);
    return std::pair{train(c, net, d), c.output_dir};
  };
  const auto [a, dir_a] = run(1, "det_a");
  const auto [b, dir_b] = run(1, "det_b");
  const auto [other, dir_c] = run(2, "det_c");
  ASSERT_EQ(a.steps.size(), 4u);
  ASSERT_EQ(b.steps.size(), 4u);
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_EQ(a.steps[i].loss, b.steps[i].loss);
    EXPECT_TRUE(std::isfinite(a.steps[i].loss));
  }
  EXPECT_EQ(slurp(dir_a / "final.bin"), slurp(dir_b / "final.bin"));
  EXPECT_EQ(slurp(dir_a / "epoch_0001.bin"), slurp(dir_b / "epoch_0001.bin"));
  EXPECT_NE(slurp(dir_a / "final.bin"), slurp(dir_c / "final.bin"));
  EXPECT_NE(a.steps[0].loss, other.steps[0].loss);
}

TEST(Train, WritesLogsAndPerEpochCheckpoints) {
  const PoseDataset d = small_set(5);
  RunConfig c = quick_config();
  c.output_dir = temp_dir("logs");
  HRNet net(c.model, DType::kFloat32, c.seed);
  const TrainResult r = train(c, net, d);
  // Five people in batches of two: the single leftover is dropped each epoch.
  ASSERT_EQ(r.steps.size(), 4u);
  EXPECT_EQ(r.epochs_run, 2);
  ASSERT_EQ(r.checkpoints.size(), 3u);
  for (const auto& stem : r.checkpoints) {
    EXPECT_TRUE(std::filesystem::exists(stem.string() + ".json"));
    EXPECT_TRUE(std::filesystem::exists(stem.string() + ".bin"));
  }
  std::ifstream log(c.output_dir / "train_log.jsonl");
  std::string line;
  long count = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    ++count;
    EXPECT_EQ(j.at("step").get<long>(), count);
    EXPECT_EQ(j.at("loss").get<double>(), r.steps[count - 1].loss);
    EXPECT_DOUBLE_EQ(j.at("lr").get<double>(), 1e-3);
  }
  EXPECT_EQ(count, 4);

  HRNet restored(c.model, DType::kFloat32, 99);
  load_model(r.checkpoints.back(), restored);
  EXPECT_EQ(evaluate_loss(restored, c, d), evaluate_loss(net, c, d));
}

TEST(Train, StopsAtMaxStepsAndOnRequest) {
  const PoseDataset d = small_set(4);
  RunConfig c = quick_config();
  c.epochs = 50;
  c.max_steps = 3;
  HRNet net(c.model, DType::kFloat32, c.seed);
  EXPECT_EQ(train(c, net, d).steps.size(), 3u);
  c.max_steps = -1;
  const auto r = train(c, net, d, [](const StepRecord& s) { return s.step == 2; });
  EXPECT_EQ(r.steps.size(), 2u);
}

TEST(Train, NonFiniteLossAborts) {
  PoseDataset d = small_set(2);
  d.images[0].data.assign(d.images[0].data.size(), std::numeric_limits<float>::quiet_NaN());
  RunConfig c = quick_config();
  c.augment = false;
  HRNet net(c.model, DType::kFloat32, c.seed);
  try {
    train(c, net, d);
    FAIL() << "expected TrainingDiverged";
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.step, 1);
    EXPECT_EQ(e.epoch, 0);
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
  }
}

TEST(Train, RejectsUnusableInputs) {
  RunConfig c = quick_config();
  HRNet net(c.model, DType::kFloat32, c.seed);
  EXPECT_THROW(train(c, net, small_set(1)), std::invalid_argument);
  c.batch_size = 1;
  EXPECT_THROW(train(c, net, small_set(4)), ConfigError);
}

TEST(Train, LossFallsOnAFixedSet) {
  const PoseDataset d = small_set(4);
  RunConfig c = quick_config();
  c.augment = false;
  c.batch_size = 4;
  c.epochs = 25;
  HRNet net(c.model, DType::kFloat32, c.seed);
  const TrainResult r = train(c, net, d);
  ASSERT_EQ(r.steps.size(), 25u);
  for (const auto& s : r.steps) EXPECT_TRUE(std::isfinite(s.loss));
  EXPECT_LT(r.steps.back().loss, 0.5 * r.steps.front().loss);
}

TEST(Predict, ReturnsOnePosePerBoxWithImageIds) {
  SyntheticSpec spec;
  spec.num_images = 2;
  spec.persons_per_image = 2;
  spec.width = 128;
  const PoseDataset d = generate_synthetic(spec, 4);
  RunConfig c = quick_config();
  HRNet net(c.model, DType::kFloat32, c.seed);
  const auto preds = predict_on_boxes(net, d, c.estimator());
  ASSERT_EQ(preds.size(), 4u);
  EXPECT_EQ(preds[0].image_id, 1);
  EXPECT_EQ(preds[3].image_id, 2);
  for (const auto& p : preds) EXPECT_EQ(p.keypoints.size(), 5u);
  EXPECT_TRUE(net.training());
}
