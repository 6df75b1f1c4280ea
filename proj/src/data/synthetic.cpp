#include "hrpose/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hrpose {

namespace {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double deg(double d) { return d * std::numbers::pi / 180.0; }

void blend(Image& image, int x, int y, const std::array<float, 3>& colour, double alpha) {
  for (int c = 0; c < 3; ++c) {
    float& v = image.at(c, y, x);
    v = static_cast<float>(v * (1.0 - alpha) + colour[c] * alpha);
  }
}

void draw_segment(Image& image, Point a, Point b, double width, const std::array<float, 3>& colour) {
  const double reach = width / 2 + 1;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - reach)));
  const int x1 = std::min(image.width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - reach)));
  const int y1 = std::min(image.height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + reach)));
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double t = len2 > 0 ? std::clamp(((x - a.x) * dx + (y - a.y) * dy) / len2, 0.0, 1.0) : 0.0;
      const double dist = std::hypot(x - (a.x + t * dx), y - (a.y + t * dy));
      // Coverage of a pixel-wide box filter across the stroke edge.
      const double coverage = std::clamp(width / 2 + 0.5 - dist, 0.0, 1.0);
      if (coverage > 0) blend(image, x, y, colour, coverage);
    }
  }
}

void draw_blob(Image& image, Point p, double sigma, const std::array<float, 3>& colour) {
  const double radius = 3 * sigma;
  const int x0 = std::max(0, static_cast<int>(std::floor(p.x - radius)));
  const int x1 = std::min(image.width - 1, static_cast<int>(std::ceil(p.x + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(p.y - radius)));
  const int y1 = std::min(image.height - 1, static_cast<int>(std::ceil(p.y + radius)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
      if (d2 > radius * radius) continue;
      blend(image, x, y, colour, std::exp(-d2 / (2 * sigma * sigma)));
    }
  }
}

constexpr std::array<float, 3> kLimbColour{0.6f, 0.6f, 0.6f};

// Body-frame joints for unit height, y down: head, hands, feet, then neck and hip.
std::array<Point, 7> sample_figure(const SyntheticSpec& spec, Rng& rng) {
  const Point neck{0, -0.25}, hip{0, 0.15}, head{0, -0.42};
  const auto limb = [&](Point from, double length, double lo, double hi, double side) {
    const double a = deg(rng.uniform(lo, hi));
    return Point{from.x + side * length * std::sin(a), from.y + length * std::cos(a)};
  };
  std::array<Point, 7> p{head,
                         limb(neck, 0.33, spec.arm_angle_min_deg, spec.arm_angle_max_deg, +1),
                         limb(neck, 0.33, spec.arm_angle_min_deg, spec.arm_angle_max_deg, -1),
                         limb(hip, 0.42, spec.leg_angle_min_deg, spec.leg_angle_max_deg, +1),
                         limb(hip, 0.42, spec.leg_angle_min_deg, spec.leg_angle_max_deg, -1),
                         neck,
                         hip};
  const double lean = deg(rng.uniform(-spec.max_lean_deg, spec.max_lean_deg));
  const double c = std::cos(lean), s = std::sin(lean);
  for (auto& q : p) {
    const double x = q.x - hip.x, y = q.y - hip.y;
    q = {hip.x + c * x - s * y, hip.y + s * x + c * y};
  }
  return p;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (num_images < 0 || persons_per_image < 0) throw std::invalid_argument("SyntheticSpec: negative count");
  if (width < 16 || height < 16) throw std::invalid_argument("SyntheticSpec: images must be at least 16x16");
  if (!(figure_scale_min > 0) || figure_scale_max < figure_scale_min || figure_scale_max > 1) {
    throw std::invalid_argument("SyntheticSpec: figure scale range must satisfy 0 < min <= max <= 1");
  }
  if (arm_angle_max_deg < arm_angle_min_deg || leg_angle_max_deg < leg_angle_min_deg || max_lean_deg < 0) {
    throw std::invalid_argument("SyntheticSpec: empty angle range");
  }
  if (!(blob_sigma > 0) || limb_width < 0 || noise < 0 || margin < 0) {
    throw std::invalid_argument("SyntheticSpec: sigma must be positive, widths and noise non-negative");
  }
  if (persons_per_image > 0 && width / persons_per_image <= 2 * margin + 4) {
    throw std::invalid_argument("SyntheticSpec: too many persons for the image width");
  }
}

std::array<float, 3> joint_colour(int joint) {
  switch (joint) {
    case 0:
      return {1.0f, 0.3f, 0.3f};
    case 1:
    case 2:
      return {0.3f, 1.0f, 0.3f};
    default:
      return {0.35f, 0.5f, 1.0f};
  }
}

void render_person(Image& image, const PersonInstance& person, const SyntheticSpec& spec) {
  if (person.keypoints.size() != 5) throw std::invalid_argument("render_person: five keypoints required");
  const auto& k = person.keypoints;
  const Point head{k[0].x, k[0].y};
  if (spec.limb_width > 0) {
    // Neck and hip sit on the head-to-feet axis.
    const Point feet_mid{(k[3].x + k[4].x) / 2, (k[3].y + k[4].y) / 2};
    const auto along = [&](double t) { return Point{head.x + t * (feet_mid.x - head.x), head.y + t * (feet_mid.y - head.y)}; };
    const Point neck = along(0.2), hip = along(0.6);
    draw_segment(image, head, neck, spec.limb_width, kLimbColour);
    draw_segment(image, neck, hip, spec.limb_width, kLimbColour);
    for (int j : {1, 2}) draw_segment(image, neck, {k[j].x, k[j].y}, spec.limb_width, kLimbColour);
    for (int j : {3, 4}) draw_segment(image, hip, {k[j].x, k[j].y}, spec.limb_width, kLimbColour);
  }
  for (int j = 0; j < 5; ++j) draw_blob(image, {k[j].x, k[j].y}, spec.blob_sigma, joint_colour(j));
}

PoseDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = Rng::substream(seed, "synthetic");
  PoseDataset out;
  out.annotations.schema = KeypointSchema::toy5();
  std::int64_t next_annotation = 1;
  for (int i = 0; i < spec.num_images; ++i) {
    ImageRecord record{i + 1, spec.width, spec.height, ""};
    Image image(spec.width, spec.height, 3);
    std::array<float, 3> background{};
    for (auto& b : background) b = static_cast<float>(rng.uniform(0.05, 0.3));
    for (int c = 0; c < 3; ++c) {
      std::fill_n(image.data.begin() + static_cast<std::ptrdiff_t>(c) * spec.width * spec.height,
                  spec.width * spec.height, background[c]);
    }
    const double slot = spec.persons_per_image > 0 ? static_cast<double>(spec.width) / spec.persons_per_image : 0;
    for (int n = 0; n < spec.persons_per_image; ++n) {
      const auto body = sample_figure(spec, rng);
      double x0 = body[0].x, x1 = x0, y0 = body[0].y, y1 = y0;
      for (const auto& q : body) {
        x0 = std::min(x0, q.x), x1 = std::max(x1, q.x);
        y0 = std::min(y0, q.y), y1 = std::max(y1, q.y);
      }
      const double free_w = slot - 2 * spec.margin, free_h = spec.height - 2 * spec.margin;
      double scale = rng.uniform(spec.figure_scale_min, spec.figure_scale_max) * spec.height / (y1 - y0);
      scale = std::min({scale, free_w / (x1 - x0), free_h / (y1 - y0)});
      const double lo_x = n * slot + spec.margin - x0 * scale, hi_x = (n + 1) * slot - spec.margin - x1 * scale;
      const double lo_y = spec.margin - y0 * scale, hi_y = spec.height - spec.margin - y1 * scale;
      const double tx = rng.uniform(lo_x, std::max(lo_x, hi_x)), ty = rng.uniform(lo_y, std::max(lo_y, hi_y));

      PersonInstance p;
      p.id = next_annotation++;
      p.image_id = record.id;
      for (int j = 0; j < 5; ++j) p.keypoints.push_back({tx + scale * body[j].x, ty + scale * body[j].y, 2});
      const double pad = 3 * spec.blob_sigma;
      const Box bounds = *p.keypoint_bounds();
      const double bx0 = std::max(0.0, bounds.x - pad), by0 = std::max(0.0, bounds.y - pad);
      const double bx1 = std::min<double>(spec.width, bounds.x + bounds.w + pad);
      const double by1 = std::min<double>(spec.height, bounds.y + bounds.h + pad);
      p.box = Box{bx0, by0, bx1 - bx0, by1 - by0};
      p.area = p.box.area();
      const double head_side = 0.2 * scale;
      p.head_box = Box{p.keypoints[0].x - head_side / 2, p.keypoints[0].y - head_side / 2, head_side, head_side};
      render_person(image, p, spec);
      out.annotations.instances.push_back(std::move(p));
    }
    if (spec.noise > 0) {
      for (auto& v : image.data) v = static_cast<float>(std::clamp(v + spec.noise * rng.normal(), 0.0, 1.0));
    }
    out.annotations.images.push_back(record);
    out.images.push_back(std::move(image));
  }
  return out;
}

}  // namespace hrpose
