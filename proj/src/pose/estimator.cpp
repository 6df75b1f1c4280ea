#include "hrpose/estimator.hpp"

#include <algorithm>
#include <stdexcept>

namespace hrpose {

PoseEstimator::PoseEstimator(HRNet& net, KeypointSchema schema, EstimatorConfig config)
    : net_(net), schema_(std::move(schema)), config_(config) {
  if (schema_.size() != net_.spec().num_keypoints) {
    throw std::invalid_argument("PoseEstimator: schema and network keypoint counts differ");
  }
  if (config_.batch_size < 1) throw std::invalid_argument("PoseEstimator: batch size must be positive");
}

std::vector<PersonInstance> PoseEstimator::estimate(const Image& image, const std::vector<Box>& boxes,
                                                    const std::vector<double>& box_scores) {
  if (!box_scores.empty() && box_scores.size() != boxes.size()) {
    throw std::invalid_argument("PoseEstimator: one score per box required");
  }
  const int w = config_.input_width, h = config_.input_height;
  const double aspect = static_cast<double>(h) / w;
  const bool was_training = net_.training();
  net_.set_training(false);
  NoGradGuard guard;
  const auto perm = schema_.flip_permutation();
  std::vector<PersonInstance> out;
  out.reserve(boxes.size());
  for (std::size_t start = 0; start < boxes.size(); start += static_cast<std::size_t>(config_.batch_size)) {
    const std::size_t end = std::min(boxes.size(), start + static_cast<std::size_t>(config_.batch_size));
    std::vector<Crop> crops;
    for (std::size_t i = start; i < end; ++i) {
      crops.push_back(crop_affine(image, person_crop_box(boxes[i], aspect, config_.box_padding), w, h));
    }
    std::vector<const Image*> views;
    for (const auto& c : crops) views.push_back(&c.image);
    const Tensor input = images_to_tensor(views, net_.dtype());
    const Tensor maps = config_.flip_test
                            ? flip_average([&](const Tensor& x) { return net_.forward(x); }, input, perm,
                                           config_.flip_shift)
                            : net_.forward(input);
    const int stride = w / maps.shape().w;
    const Affine2D to_input = input_to_heatmap(stride).inverse();
    for (std::size_t i = start; i < end; ++i) {
      const Crop& crop = crops[i - start];
      const auto kps = decode(maps, static_cast<int>(i - start), to_input.then(crop.inverse));
      PersonInstance p;
      for (const auto& k : kps) p.keypoints.push_back({k.x, k.y, 2});
      p.box = boxes[i];
      p.area = boxes[i].area();
      const double box_score = box_scores.empty() ? 1.0 : box_scores[i];
      p.score = instance_score(kps, config_.score_mode, box_score);
      out.push_back(std::move(p));
    }
  }
  net_.set_training(was_training);
  return out;
}

}  // namespace hrpose
