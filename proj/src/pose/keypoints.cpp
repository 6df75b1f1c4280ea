#include "hrpose/keypoints.hpp"

#include <algorithm>
#include <stdexcept>

namespace hrpose {

double box_iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<int> KeypointSchema::flip_permutation() const {
  std::vector<int> perm(static_cast<std::size_t>(size()));
  for (int i = 0; i < size(); ++i) perm[i] = i;
  for (auto [a, b] : flip_pairs) {
    perm[a] = b;
    perm[b] = a;
  }
  return perm;
}

std::vector<double> KeypointSchema::falloff() const {
  std::vector<double> k;
  k.reserve(sigmas.size());
  for (double s : sigmas) k.push_back(2.0 * s);
  return k;
}

void KeypointSchema::validate() const {
  const int k = size();
  if (k < 1) throw std::invalid_argument("schema " + name + ": no keypoints");
  if (static_cast<int>(sigmas.size()) != k) {
    throw std::invalid_argument("schema " + name + ": one sigma per keypoint required");
  }
  for (double s : sigmas) {
    if (!(s > 0)) throw std::invalid_argument("schema " + name + ": sigmas must be positive");
  }
  std::vector<int> seen(static_cast<std::size_t>(k), 0);
  for (auto [a, b] : flip_pairs) {
    if (a < 0 || b < 0 || a >= k || b >= k || a == b) {
      throw std::invalid_argument("schema " + name + ": flip pair out of range");
    }
    if (seen[a]++ || seen[b]++) {
      throw std::invalid_argument("schema " + name + ": keypoint in more than one flip pair");
    }
  }
  for (int u : upper_body) {
    if (u < 0 || u >= k) throw std::invalid_argument("schema " + name + ": upper-body index");
  }
}

KeypointSchema KeypointSchema::coco17() {
  KeypointSchema s;
  s.name = "coco17";
  s.names = {"nose",       "left_eye",       "right_eye",   "left_ear",    "right_ear",
             "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
             "right_wrist", "left_hip",       "right_hip",   "left_knee",   "right_knee",
             "left_ankle",  "right_ankle"};
  s.flip_pairs = {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}, {15, 16}};
  s.sigmas = {.026, .025, .025, .035, .035, .079, .079, .072, .072,
              .062, .062, .107, .107, .087, .087, .089, .089};
  s.upper_body = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  s.skeleton = {{0, 1},  {0, 2},  {1, 3},   {2, 4},   {0, 5},   {0, 6},   {5, 7},  {7, 9},
                {6, 8},  {8, 10}, {5, 11},  {6, 12},  {11, 13}, {13, 15}, {12, 14}, {14, 16}};
  return s;
}

KeypointSchema KeypointSchema::mpii16() {
  KeypointSchema s;
  s.name = "mpii16";
  s.names = {"r_ankle", "r_knee",   "r_hip",    "l_hip",      "l_knee",     "l_ankle",
             "pelvis",  "thorax",   "upper_neck", "head_top", "r_wrist",    "r_elbow",
             "r_shoulder", "l_shoulder", "l_elbow", "l_wrist"};
  s.flip_pairs = {{0, 5}, {1, 4}, {2, 3}, {10, 15}, {11, 14}, {12, 13}};
  s.sigmas.assign(16, 0.08);
  s.upper_body = {7, 8, 9, 10, 11, 12, 13, 14, 15};
  s.skeleton = {{0, 1},  {1, 2},  {2, 6},   {3, 6},   {3, 4},   {4, 5},  {6, 7},  {7, 8},
                {8, 9},  {7, 12}, {12, 11}, {11, 10}, {7, 13},  {13, 14}, {14, 15}};
  return s;
}

KeypointSchema KeypointSchema::toy5() {
  KeypointSchema s;
  s.name = "toy5";
  s.names = {"head", "left_hand", "right_hand", "left_foot", "right_foot"};
  s.flip_pairs = {{1, 2}, {3, 4}};
  s.sigmas = {0.05, 0.06, 0.06, 0.07, 0.07};
  s.upper_body = {0, 1, 2};
  s.skeleton = {{0, 1}, {0, 2}, {0, 3}, {0, 4}};
  return s;
}

KeypointSchema KeypointSchema::by_name(const std::string& name) {
  if (name == "coco17" || name == "coco") return coco17();
  if (name == "mpii16" || name == "mpii") return mpii16();
  if (name == "toy5") return toy5();
  throw std::invalid_argument("unknown keypoint schema '" + name + "'");
}

int PersonInstance::num_labeled() const {
  return static_cast<int>(
      std::count_if(keypoints.begin(), keypoints.end(), [](const Keypoint& k) { return k.labeled(); }));
}

std::optional<Box> PersonInstance::keypoint_bounds() const {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool any = false;
  for (const auto& k : keypoints) {
    if (!k.labeled()) continue;
    if (!any) {
      x0 = x1 = k.x;
      y0 = y1 = k.y;
      any = true;
    }
    x0 = std::min(x0, k.x);
    x1 = std::max(x1, k.x);
    y0 = std::min(y0, k.y);
    y1 = std::max(y1, k.y);
  }
  if (!any) return std::nullopt;
  return Box{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace hrpose
