#pragma once

#include <filesystem>
#include <vector>

#include "hrpose/tensor.hpp"

namespace hrpose {

// Planar float image, channel-major; pixel (x, y) covers [x - 0.5, x + 0.5].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<float> data;

  Image() = default;
  Image(int width, int height, int channels = 3, float value = 0.0f);

  float& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  // Bilinear read; positions outside the image read as zero.
  float sample(int c, double x, double y) const;

  bool operator==(const Image&) const = default;
};

// Packs images of one size into [N, C, H, W].
Tensor images_to_tensor(const std::vector<const Image*>& images, DType dtype = DType::kFloat32);
Image tensor_to_image(const Tensor& t, int n = 0);

// Binary PPM (P6) for three channels, PGM (P5) for one; values clamp to [0, 1].
void save_pnm(const std::filesystem::path& path, const Image& image);
Image load_pnm(const std::filesystem::path& path);

}  // namespace hrpose
