#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrpose/config.hpp"
#include "hrpose/dataset.hpp"
#include "hrpose/estimator.hpp"
#include "hrpose/heatmap.hpp"
#include "hrpose/hrnet.hpp"
#include "hrpose/metrics.hpp"
#include "hrpose/optim.hpp"

namespace hrpose {

struct RunConfig {
  HRNetSpec model = HRNetSpec::w8(5);
  std::string schema = "toy5";
  int input_width = 64;
  int input_height = 64;
  double box_padding = 1.25;
  double target_sigma = 1.0;  // heatmap pixels
  bool augment = true;
  AugmentationConfig augmentation;
  double lr = 1e-3;
  std::vector<std::pair<int, double>> lr_milestones{{170, 1e-4}, {200, 1e-5}};
  int epochs = 210;
  long max_steps = -1;  // stop early after this many steps (-1: no limit)
  int batch_size = 32;
  std::uint64_t seed = 0;
  int checkpoint_every = 1;  // epochs; 0 keeps only the final checkpoint
  std::filesystem::path annotations;
  std::filesystem::path image_root;
  std::filesystem::path output_dir;

  LrSchedule schedule() const { return LrSchedule(lr, lr_milestones, epochs); }
  KeypointSchema keypoint_schema() const { return KeypointSchema::by_name(schema); }
  EstimatorConfig estimator() const;
  void validate() const;

  // Keys are the names listed by known_keys(); see README for the meaning.
  static RunConfig from_config(const KeyValueConfig& config);
  static const std::vector<std::string>& known_keys();
  KeyValueConfig to_config() const;
};

// Checked after every step.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(long step, int epoch, double lr, double loss);
  long step;
  int epoch;
};

struct StepRecord {
  long step = 0;  // 1-based
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<StepRecord> steps;
  std::vector<std::filesystem::path> checkpoints;  // stems
  int epochs_run = 0;
};

struct TrainBatch {
  Tensor images;   // [N, 3, H, W]
  Tensor targets;  // [N, K, H / s, W / s]
  Tensor weights;  // [N, K, 1, 1]
};

// Augmentation, cropping and target generation for a batch of people.
struct SamplePreparer {
  SamplePreparer(const RunConfig& config, const KeypointSchema& schema, int heatmap_stride);
  TrainBatch batch(const std::vector<const Image*>& images, const std::vector<const PersonInstance*>& people,
                   Rng* augmentation) const;

  RunConfig config;
  KeypointSchema schema;
  int stride;
};

// Instances usable for training: not crowd, at least one labeled keypoint, a
// box of positive extent.
std::vector<const PersonInstance*> trainable_instances(const AnnotationSet& set);

// Called after every step; returning true stops training there.
using StepCallback = std::function<bool(const StepRecord&)>;

// Epoch loop over the trainable instances in a shuffled order; the last batch
// of an epoch is dropped when it would hold fewer than two samples. Writes
// train_log.jsonl and checkpoints under config.output_dir when it is set.
TrainResult train(const RunConfig& config, HRNet& net, const PoseDataset& data, const StepCallback& on_step = {});

// Runs the estimator on every ground-truth box and returns the predictions.
std::vector<PersonInstance> predict_on_boxes(HRNet& net, const PoseDataset& data, const EstimatorConfig& config);

// Weighted MSE on the given data with the net in eval mode, no augmentation.
double evaluate_loss(HRNet& net, const RunConfig& config, const PoseDataset& data);

void save_model(const std::filesystem::path& stem, HRNet& net);
void load_model(const std::filesystem::path& stem, HRNet& net);

}  // namespace hrpose
