#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hrpose {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  int v = 0;  // 0 unlabeled, 1 labeled but occluded, 2 visible
  bool labeled() const { return v > 0; }
  bool operator==(const Keypoint&) const = default;
};

// Axis-aligned box, top-left corner plus extent, in pixels.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double area() const { return w * h; }
  double cx() const { return x + w / 2; }
  double cy() const { return y + h / 2; }
  bool operator==(const Box&) const = default;
};

double box_iou(const Box& a, const Box& b);

struct KeypointSchema {
  std::string name;
  std::vector<std::string> names;
  std::vector<std::pair<int, int>> flip_pairs;
  // Per-keypoint OKS falloff constants; the COCO evaluator uses k_i = 2 * sigma_i.
  std::vector<double> sigmas;
  std::vector<int> upper_body;
  // Parent-child joint pairs used for rendering limbs.
  std::vector<std::pair<int, int>> skeleton;

  int size() const { return static_cast<int>(names.size()); }
  // Index mapping each keypoint to its mirror partner (itself if unpaired).
  std::vector<int> flip_permutation() const;
  std::vector<double> falloff() const;
  void validate() const;

  static KeypointSchema coco17();
  static KeypointSchema mpii16();
  // Desk-scale five-joint figure (head, two hands, two feet).
  static KeypointSchema toy5();
  static KeypointSchema by_name(const std::string& name);
  bool operator==(const KeypointSchema&) const = default;
};

// One person: keypoints plus the metadata metrics need.
struct PersonInstance {
  std::vector<Keypoint> keypoints;
  Box box;
  double area = 0.0;  // s^2 in OKS
  double score = 1.0;
  std::optional<Box> head_box;
  int track_id = -1;
  std::int64_t image_id = 0;
  int category_id = 1;
  bool crowd = false;
  std::int64_t id = 0;  // annotation id

  int num_labeled() const;
  // Tight box of the labeled keypoints.
  std::optional<Box> keypoint_bounds() const;
  bool operator==(const PersonInstance&) const = default;
};

}  // namespace hrpose
