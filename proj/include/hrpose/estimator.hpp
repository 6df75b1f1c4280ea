#pragma once

#include <vector>

#include "hrpose/heatmap.hpp"
#include "hrpose/hrnet.hpp"
#include "hrpose/image.hpp"
#include "hrpose/keypoints.hpp"

namespace hrpose {

struct EstimatorConfig {
  int input_width = 192;
  int input_height = 256;
  double box_padding = 1.25;
  bool flip_test = false;
  int flip_shift = 1;
  ScoreMode score_mode = ScoreMode::kMeanConfidence;
  int batch_size = 16;
};

// Top-down inference: crop each box at the network aspect, run the net in
// eval mode and map the decoded keypoints back to image coordinates.
class PoseEstimator {
 public:
  PoseEstimator(HRNet& net, KeypointSchema schema, EstimatorConfig config = {});

  std::vector<PersonInstance> estimate(const Image& image, const std::vector<Box>& boxes,
                                       const std::vector<double>& box_scores = {});
  const EstimatorConfig& config() const { return config_; }

 private:
  HRNet& net_;
  KeypointSchema schema_;
  EstimatorConfig config_;
};

}  // namespace hrpose
