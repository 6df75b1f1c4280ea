#include "hrpose/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hrpose/ops.hpp"

namespace hrpose {

PersonBox extend_box_to_aspect(const Box& box, double aspect_hw) {
  if (!(box.w > 0) || !(box.h > 0)) {
    throw std::invalid_argument("extend_box_to_aspect: box extents must be positive");
  }
  if (!(aspect_hw > 0)) throw std::invalid_argument("extend_box_to_aspect: aspect must be positive");
  PersonBox out{box.cx(), box.cy(), box.w, box.h, box};
  if (box.h > aspect_hw * box.w) {
    out.w = box.h / aspect_hw;
  } else {
    out.h = box.w * aspect_hw;
  }
  return out;
}

PersonBox person_crop_box(const Box& box, double aspect_hw, double padding) {
  if (!(padding > 0)) throw std::invalid_argument("person_crop_box: padding must be positive");
  PersonBox out = extend_box_to_aspect(box, aspect_hw);
  out.w *= padding;
  out.h *= padding;
  return out;
}

Affine2D Affine2D::inverse() const {
  const double det = determinant();
  if (std::abs(det) < 1e-12) throw std::invalid_argument("Affine2D: singular transform");
  Affine2D inv;
  inv.a = e / det;
  inv.b = -b / det;
  inv.d = -d / det;
  inv.e = a / det;
  inv.c = -(inv.a * c + inv.b * f);
  inv.f = -(inv.d * c + inv.e * f);
  return inv;
}

Affine2D Affine2D::then(const Affine2D& n) const {
  Affine2D out;
  out.a = n.a * a + n.b * d;
  out.b = n.a * b + n.b * e;
  out.c = n.a * c + n.b * f + n.c;
  out.d = n.d * a + n.e * d;
  out.e = n.d * b + n.e * e;
  out.f = n.d * c + n.e * f + n.f;
  return out;
}

Affine2D input_to_heatmap(int stride) {
  const double s = 1.0 / stride;
  return Affine2D{s, 0, 0.5 * s - 0.5, 0, s, 0.5 * s - 0.5};
}

Affine2D crop_transform(const PersonBox& box, int out_w, int out_h, const CropParams& p) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("crop_transform: empty output");
  const double bw = box.w * p.scale, bh = box.h * p.scale;
  if (!(std::abs(bw) > 1e-9) || !(std::abs(bh) > 1e-9)) {
    throw std::invalid_argument("crop_transform: degenerate transform (zero scale)");
  }
  const double sx = out_w / bw, sy = out_h / bh;
  const double theta = p.rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double ox = (out_w - 1) / 2.0, oy = (out_h - 1) / 2.0;
  // out = S R (p - center) + crop_center
  Affine2D t;
  t.a = sx * cs;
  t.b = -sx * sn;
  t.d = sy * sn;
  t.e = sy * cs;
  t.c = ox - (t.a * box.cx + t.b * box.cy);
  t.f = oy - (t.d * box.cx + t.e * box.cy);
  if (p.flip) {
    t.a = -t.a;
    t.b = -t.b;
    t.c = (out_w - 1) - t.c;
  }
  if (std::abs(t.determinant()) < 1e-12) {
    throw std::invalid_argument("crop_transform: degenerate transform");
  }
  return t;
}

Image warp_image(const Image& image, const Affine2D& forward, int out_w, int out_h) {
  const Affine2D inv = forward.inverse();
  Image out(out_w, out_h, image.channels);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const auto [sx, sy] = inv.apply(x, y);
      for (int c = 0; c < image.channels; ++c) out.at(c, y, x) = image.sample(c, sx, sy);
    }
  }
  return out;
}

Crop crop_affine(const Image& image, const PersonBox& box, int out_w, int out_h,
                 const CropParams& params) {
  Crop crop;
  crop.transform = crop_transform(box, out_w, out_h, params);
  crop.inverse = crop.transform.inverse();
  crop.image = warp_image(image, crop.transform, out_w, out_h);
  return crop;
}

std::vector<Keypoint> warp_keypoints(const std::vector<Keypoint>& kps, const Affine2D& t,
                                     const std::vector<int>* flip_perm) {
  std::vector<Keypoint> out(kps.size());
  for (std::size_t i = 0; i < kps.size(); ++i) {
    const auto [x, y] = t.apply(kps[i].x, kps[i].y);
    const std::size_t dst = flip_perm ? static_cast<std::size_t>((*flip_perm)[i]) : i;
    out[dst] = Keypoint{x, y, kps[i].v};
  }
  return out;
}

HeatmapTarget generate_target(const std::vector<Keypoint>& kps, int width, int height,
                              double sigma, DType dtype) {
  if (!(sigma > 0)) throw std::invalid_argument("generate_target: sigma must be positive");
  const int k = static_cast<int>(kps.size());
  HeatmapTarget target{Tensor::zeros({1, k, height, width}, dtype),
                       std::vector<double>(static_cast<std::size_t>(k), 0.0)};
  const double radius = 3.0 * sigma;
  const int reach = static_cast<int>(std::floor(radius));
  dispatch(dtype, [&](auto tag) {
    using T = decltype(tag);
    T* maps = target.maps.data<T>();
    for (int j = 0; j < k; ++j) {
      if (!kps[j].labeled() || !std::isfinite(kps[j].x) || !std::isfinite(kps[j].y)) continue;
      const long mx = std::lround(kps[j].x), my = std::lround(kps[j].y);
      if (mx < 0 || my < 0 || mx >= width || my >= height) continue;
      target.weights[j] = 1.0;
      T* map = maps + static_cast<std::size_t>(j) * width * height;
      for (long y = std::max(0L, my - reach); y <= std::min<long>(height - 1, my + reach); ++y) {
        for (long x = std::max(0L, mx - reach); x <= std::min<long>(width - 1, mx + reach); ++x) {
          const double d2 = static_cast<double>((x - mx) * (x - mx) + (y - my) * (y - my));
          if (d2 > radius * radius) continue;
          map[y * width + x] = static_cast<T>(std::exp(-d2 / (2 * sigma * sigma)));
        }
      }
    }
  });
  return target;
}

Tensor stack_weights(const std::vector<std::vector<double>>& weights, DType dtype) {
  if (weights.empty()) throw std::invalid_argument("stack_weights: empty batch");
  const int k = static_cast<int>(weights.front().size());
  Tensor out = Tensor::zeros({static_cast<int>(weights.size()), k, 1, 1}, dtype);
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (static_cast<int>(weights[n].size()) != k) {
      throw ShapeError("stack_weights", "keypoints", k, static_cast<std::int64_t>(weights[n].size()));
    }
    for (int j = 0; j < k; ++j) out.set(static_cast<int>(n), j, 0, 0, weights[n][j]);
  }
  return out;
}

Tensor stack_maps(const std::vector<Tensor>& maps) {
  if (maps.empty()) throw std::invalid_argument("stack_maps: empty batch");
  const Shape s = maps.front().shape();
  Tensor out = Tensor::zeros({static_cast<int>(maps.size()), s.c, s.h, s.w}, maps.front().dtype());
  const std::int64_t per = s.numel();
  for (std::size_t n = 0; n < maps.size(); ++n) {
    if (maps[n].shape() != s) throw ShapeError("stack_maps", "sample.shape", per, maps[n].numel());
    for (std::int64_t i = 0; i < per; ++i) out.set_flat(static_cast<std::int64_t>(n) * per + i, maps[n].flat(i));
  }
  return out;
}

DecodedKeypoint decode_map(const double* map, int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("decode_map: empty map");
  const int total = width * height;
  int best = 0;
  bool all_equal = true;
  for (int i = 1; i < total; ++i) {
    if (map[i] > map[best]) best = i;
    if (map[i] != map[0]) all_equal = false;
  }
  const int px = best % width, py = best / width;
  DecodedKeypoint out{static_cast<double>(px), static_cast<double>(py), map[best]};
  if (all_equal) return out;
  auto shift = [](double lo, double hi) { return hi > lo ? 0.25 : (lo > hi ? -0.25 : 0.0); };
  // An axis on which the peak touches the border gets no offset.
  if (px > 0 && px < width - 1) out.x += shift(map[best - 1], map[best + 1]);
  if (py > 0 && py < height - 1) out.y += shift(map[best - width], map[best + width]);
  return out;
}

std::vector<DecodedKeypoint> decode_heatmaps(const Tensor& maps, int n) {
  const Shape& s = maps.shape();
  if (n < 0 || n >= s.n) throw std::out_of_range("decode_heatmaps: sample index");
  std::vector<DecodedKeypoint> out;
  out.reserve(static_cast<std::size_t>(s.c));
  std::vector<double> buf(static_cast<std::size_t>(s.plane()));
  for (int k = 0; k < s.c; ++k) {
    const std::int64_t base = (static_cast<std::int64_t>(n) * s.c + k) * s.plane();
    for (std::int64_t i = 0; i < s.plane(); ++i) buf[static_cast<std::size_t>(i)] = maps.flat(base + i);
    out.push_back(decode_map(buf.data(), s.w, s.h));
  }
  return out;
}

std::vector<DecodedKeypoint> decode(const Tensor& maps, int n, const Affine2D& heatmap_to_image) {
  auto kps = decode_heatmaps(maps, n);
  for (auto& k : kps) {
    const auto [x, y] = heatmap_to_image.apply(k.x, k.y);
    k.x = x;
    k.y = y;
  }
  return kps;
}

Tensor flip_back(const Tensor& maps, const std::vector<int>& perm, int shift) {
  const Shape& s = maps.shape();
  if (static_cast<int>(perm.size()) != s.c) {
    throw ShapeError("flip_back", "flip_perm.length", s.c, static_cast<std::int64_t>(perm.size()));
  }
  for (int k = 0; k < s.c; ++k) {
    if (perm[k] < 0 || perm[k] >= s.c || perm[perm[k]] != k) {
      throw std::invalid_argument("flip_back: flip pairs must form an involution");
    }
  }
  if (shift < 0 || shift >= s.w) throw std::invalid_argument("flip_back: shift out of range");
  Tensor out = Tensor::zeros(s, maps.dtype());
  for (int n = 0; n < s.n; ++n)
    for (int k = 0; k < s.c; ++k)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          const int fx = x >= shift ? x - shift : x;  // column in the mirrored map
          out.set(n, k, y, x, maps.at(n, perm[k], y, s.w - 1 - fx));
        }
  return out;
}

Tensor flip_average(const ForwardFn& forward, const Tensor& images, const std::vector<int>& perm,
                    int shift) {
  NoGradGuard guard;
  Tensor plain = forward(images);
  Tensor mirrored = flip_back(forward(flip_horizontal(images)), perm, shift);
  return scale(add(plain, mirrored), 0.5);
}

CropParams sample_crop_params(const AugmentationConfig& config, Rng& rng) {
  CropParams p;
  p.scale = rng.uniform(config.scale_min, config.scale_max);
  if (rng.bernoulli(config.rotation_probability)) {
    p.rotation_deg = rng.uniform(-config.rotation_range, config.rotation_range);
  }
  p.flip = rng.bernoulli(config.flip_probability);
  return p;
}

PersonBox half_body_transform(const PersonBox& box, const std::vector<Keypoint>& kps,
                              const std::vector<int>& upper_body, const AugmentationConfig& config,
                              Rng& rng, double aspect_hw) {
  if (!rng.bernoulli(config.half_body_probability)) return box;
  const int labeled = static_cast<int>(
      std::count_if(kps.begin(), kps.end(), [](const Keypoint& k) { return k.labeled(); }));
  if (labeled < config.half_body_min_visible) return box;
  std::vector<const Keypoint*> upper, lower;
  for (std::size_t i = 0; i < kps.size(); ++i) {
    if (!kps[i].labeled()) continue;
    const bool is_upper =
        std::find(upper_body.begin(), upper_body.end(), static_cast<int>(i)) != upper_body.end();
    (is_upper ? upper : lower).push_back(&kps[i]);
  }
  const bool want_upper = rng.bernoulli(0.5);
  const auto* chosen = want_upper ? &upper : &lower;
  if (chosen->size() < 2) chosen = want_upper ? &lower : &upper;
  if (chosen->size() < 2) return box;
  double x0 = (*chosen)[0]->x, x1 = x0, y0 = (*chosen)[0]->y, y1 = y0;
  for (const Keypoint* k : *chosen) {
    x0 = std::min(x0, k->x);
    x1 = std::max(x1, k->x);
    y0 = std::min(y0, k->y);
    y1 = std::max(y1, k->y);
  }
  // Collinear subsets still need a positive extent.
  const double w = std::max(x1 - x0, 1.0), h = std::max(y1 - y0, 1.0);
  const double cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
  PersonBox out = extend_box_to_aspect(Box{cx - w / 2, cy - h / 2, w, h}, aspect_hw);
  out.w *= config.half_body_padding;
  out.h *= config.half_body_padding;
  out.source = box.source;
  return out;
}

double instance_score(const std::vector<DecodedKeypoint>& kps, ScoreMode mode, double box_score) {
  if (kps.empty()) return 0.0;
  double mean = 0.0;
  for (const auto& k : kps) mean += k.confidence;
  mean /= static_cast<double>(kps.size());
  return mode == ScoreMode::kBoxProduct ? mean * box_score : mean;
}

}  // namespace hrpose
