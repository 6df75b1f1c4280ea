#include "hrpose/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace hrpose {

Image::Image(int w, int h, int c, float value)
    : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, value) {
  if (w < 1 || h < 1 || c < 1) throw std::invalid_argument("Image: extents must be positive");
}

float Image::sample(int c, double x, double y) const {
  const double fx = std::floor(x), fy = std::floor(y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double ax = x - fx, ay = y - fy;
  auto px = [&](int xx, int yy) -> double {
    if (xx < 0 || yy < 0 || xx >= width || yy >= height) return 0.0;
    return at(c, yy, xx);
  };
  const double top = px(x0, y0) * (1 - ax) + px(x0 + 1, y0) * ax;
  const double bottom = px(x0, y0 + 1) * (1 - ax) + px(x0 + 1, y0 + 1) * ax;
  return static_cast<float>(top * (1 - ay) + bottom * ay);
}

Tensor images_to_tensor(const std::vector<const Image*>& images, DType dtype) {
  if (images.empty()) throw std::invalid_argument("images_to_tensor: empty batch");
  const Image& first = *images.front();
  Tensor t = Tensor::zeros({static_cast<int>(images.size()), first.channels, first.height,
                            first.width},
                           dtype);
  const std::size_t per = first.data.size();
  dispatch(dtype, [&](auto tag) {
    using T = decltype(tag);
    T* out = t.data<T>();
    for (std::size_t i = 0; i < images.size(); ++i) {
      const Image& im = *images[i];
      if (im.width != first.width || im.height != first.height || im.channels != first.channels) {
        throw ShapeError("images_to_tensor", "image.size", static_cast<std::int64_t>(per),
                         static_cast<std::int64_t>(im.data.size()));
      }
      std::copy(im.data.begin(), im.data.end(), out + i * per);
    }
  });
  return t;
}

Image tensor_to_image(const Tensor& t, int n) {
  const Shape& s = t.shape();
  Image im(s.w, s.h, s.c);
  for (int c = 0; c < s.c; ++c)
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) im.at(c, y, x) = static_cast<float>(t.at(n, c, y, x));
  return im;
}

void save_pnm(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw std::invalid_argument("save_pnm: one or three channels required");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << (image.channels == 3 ? "P6" : "P5") << "\n" << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(image.width) * image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        row[static_cast<std::size_t>(x) * image.channels + c] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

Image load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if ((magic != "P6" && magic != "P5") || maxval != 255 || w < 1 || h < 1) {
    throw std::runtime_error(path.string() + ": unsupported PNM header");
  }
  in.get();
  const int channels = magic == "P6" ? 3 : 1;
  Image image(w, h, channels);
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * channels);
  for (int y = 0; y < h; ++y) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()))) {
      throw std::runtime_error(path.string() + ": truncated pixel data");
    }
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        image.at(c, y, x) = row[static_cast<std::size_t>(x) * channels + c] / 255.0f;
  }
  return image;
}

}  // namespace hrpose
