#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hrpose/dataset.hpp"
#include "hrpose/image.hpp"
#include "hrpose/random.hpp"

namespace hrpose {

// Five-joint stick figures (head, hands, feet) facing the camera, so the
// figure's left side is on the image right.
struct SyntheticSpec {
  int num_images = 16;
  int width = 64;
  int height = 64;
  int persons_per_image = 1;
  // Figure height as a fraction of its slot height.
  double figure_scale_min = 0.7;
  double figure_scale_max = 0.9;
  double max_lean_deg = 15.0;
  double arm_angle_min_deg = 30.0;  // from straight down, away from the body
  double arm_angle_max_deg = 120.0;
  double leg_angle_min_deg = 12.0;
  double leg_angle_max_deg = 35.0;
  double blob_sigma = 1.5;
  double limb_width = 1.5;  // 0 draws joints only
  double noise = 0.02;      // per-pixel Gaussian noise level
  // Keypoints keep this distance from the image border.
  double margin = 4.0;

  void validate() const;
};

// toy5 schema, image ids 1..N. Deterministic for a given (spec, seed).
PoseDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Colour used for keypoint j of the five-joint figure; mirror pairs share it.
std::array<float, 3> joint_colour(int joint);

// Draws `person` onto `image`: limb segments (if limb_width > 0) then joint blobs.
void render_person(Image& image, const PersonInstance& person, const SyntheticSpec& spec);

}  // namespace hrpose
