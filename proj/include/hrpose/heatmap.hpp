#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "hrpose/image.hpp"
#include "hrpose/keypoints.hpp"
#include "hrpose/random.hpp"
#include "hrpose/tensor.hpp"

namespace hrpose {

// Person region as center plus extent, after aspect extension.
struct PersonBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  Box source;
};

// Grows the relatively smaller side symmetrically until h / w == aspect_hw.
PersonBox extend_box_to_aspect(const Box& box, double aspect_hw = 4.0 / 3.0);
// Aspect-extended box with both sides scaled by `padding`; the crop used for
// training and inference.
PersonBox person_crop_box(const Box& box, double aspect_hw, double padding = 1.25);

// 2x3 affine map: (x, y) -> (a x + b y + c, d x + e y + f).
struct Affine2D {
  double a = 1, b = 0, c = 0;
  double d = 0, e = 1, f = 0;

  std::pair<double, double> apply(double x, double y) const {
    return {a * x + b * y + c, d * x + e * y + f};
  }
  double determinant() const { return a * e - b * d; }
  Affine2D inverse() const;
  // The map that applies `this` first, then `next`.
  Affine2D then(const Affine2D& next) const;
};

// Input pixel coordinates to heatmap pixel coordinates for an output stride.
Affine2D input_to_heatmap(int stride);

struct CropParams {
  double rotation_deg = 0.0;
  double scale = 1.0;  // >1 zooms out (covers more of the image)
  bool flip = false;
};

// Image -> crop transform placing the box center at the crop center.
Affine2D crop_transform(const PersonBox& box, int out_w, int out_h, const CropParams& params = {});

// out(p) = image(T^-1 p), bilinear, zero outside.
Image warp_image(const Image& image, const Affine2D& forward, int out_w, int out_h);

struct Crop {
  Image image;
  Affine2D transform;  // image -> crop
  Affine2D inverse;    // crop -> image
};

// Throws std::invalid_argument for a degenerate transform.
Crop crop_affine(const Image& image, const PersonBox& box, int out_w, int out_h,
                 const CropParams& params = {});

// Maps keypoints through `t`. With a flip permutation the keypoint list is
// also reordered so that index i keeps its semantic side.
std::vector<Keypoint> warp_keypoints(const std::vector<Keypoint>& kps, const Affine2D& t,
                                     const std::vector<int>* flip_perm = nullptr);

struct HeatmapTarget {
  Tensor maps;                  // [1, K, H, W]
  std::vector<double> weights;  // 0 for unlabeled or off-map keypoints
};

// Unit-peak Gaussians (truncated at 3 sigma) centred on the rounded keypoint.
HeatmapTarget generate_target(const std::vector<Keypoint>& heatmap_kps, int width, int height,
                              double sigma = 1.0, DType dtype = DType::kFloat32);

// Per-sample weights packed as [N, K, 1, 1] for mse_loss.
Tensor stack_weights(const std::vector<std::vector<double>>& weights, DType dtype = DType::kFloat32);
Tensor stack_maps(const std::vector<Tensor>& maps);

struct DecodedKeypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
};

// Argmax (first in row-major order) plus a quarter-pixel shift per axis toward
// the larger neighbour. No shift along an axis where the peak sits on the border.
DecodedKeypoint decode_map(const double* map, int width, int height);
// Heatmap coordinates for sample n of [N, K, H, W].
std::vector<DecodedKeypoint> decode_heatmaps(const Tensor& maps, int n = 0);
// Same, mapped through `heatmap_to_image`.
std::vector<DecodedKeypoint> decode(const Tensor& maps, int n, const Affine2D& heatmap_to_image);

using ForwardFn = std::function<Tensor(const Tensor&)>;

// Mirrors maps of a flipped input back: flips W, swaps paired channels, and
// moves everything `shift` columns right (column 0 keeps its value).
Tensor flip_back(const Tensor& maps, const std::vector<int>& flip_perm, int shift = 1);
// Mean of forward(x) and flip_back(forward(flip(x))).
Tensor flip_average(const ForwardFn& forward, const Tensor& images,
                    const std::vector<int>& flip_perm, int shift = 1);

struct AugmentationConfig {
  double rotation_range = 45.0;
  double rotation_probability = 1.0;
  double scale_min = 0.65;
  double scale_max = 1.35;
  double flip_probability = 0.5;
  double half_body_probability = 0.3;
  int half_body_min_visible = 8;
  double half_body_padding = 1.5;
};

CropParams sample_crop_params(const AugmentationConfig& config, Rng& rng);

// With probability config.half_body_probability, a box around the upper- or
// lower-body labeled keypoints (chosen at random), padded and re-extended to
// aspect_hw. Otherwise, or with too few keypoints, `box` unchanged.
PersonBox half_body_transform(const PersonBox& box, const std::vector<Keypoint>& kps,
                              const std::vector<int>& upper_body, const AugmentationConfig& config,
                              Rng& rng, double aspect_hw = 4.0 / 3.0);

enum class ScoreMode { kMeanConfidence, kBoxProduct };
double instance_score(const std::vector<DecodedKeypoint>& kps, ScoreMode mode = ScoreMode::kMeanConfidence,
                      double box_score = 1.0);

}  // namespace hrpose
