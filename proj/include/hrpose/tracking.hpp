#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "hrpose/image.hpp"
#include "hrpose/keypoints.hpp"
#include "hrpose/metrics.hpp"

namespace hrpose {

// Per-pixel displacement (dense, planar dx then dy, pixel centres at integer
// coordinates) or a list of sampled keypoint displacements (sparse).
struct DisplacementField {
  struct Point {
    double x = 0.0;
    double y = 0.0;
    double dx = 0.0;
    double dy = 0.0;
  };
  struct Displacement {
    double dx = 0.0;
    double dy = 0.0;
    bool clamped = false;  // query fell outside a dense field
  };

  int from_frame = 0;
  int to_frame = 1;
  int width = 0;  // 0 for sparse fields
  int height = 0;
  std::vector<float> dx;
  std::vector<float> dy;
  std::vector<Point> points;

  bool dense() const { return width > 0; }
  void validate() const;
  // Dense: bilinear, clamped to the nearest edge. Sparse: nearest point.
  Displacement sample(double x, double y) const;

  static DisplacementField uniform(int width, int height, double dx, double dy, int from = 0, int to = 1);
  static DisplacementField from_function(int width, int height,
                                         const std::function<std::pair<double, double>(double, double)>& f,
                                         int from = 0, int to = 1);
};

// Binary records: "HRDF", u32 version = 1, i32 from, i32 to, i32 height,
// i32 width, then height*width f32 dx followed by height*width f32 dy, all
// little-endian. A file may hold several records back to back.
void write_fields_binary(const std::filesystem::path& path, const std::vector<DisplacementField>& fields);
std::vector<DisplacementField> read_fields_binary(const std::filesystem::path& path);
// JSON: [{"from": 0, "to": 1, "points": [[x, y, dx, dy], ...]}, ...].
nlohmann::json fields_to_json(const std::vector<DisplacementField>& fields);
std::vector<DisplacementField> fields_from_json(const nlohmann::json& j);
// Dispatches on the .json extension.
std::vector<DisplacementField> read_fields(const std::filesystem::path& path);

struct ScoredBox {
  Box box;
  double score = 1.0;
  int track_id = -1;  // source track for propagated boxes
};

struct PropagatedPose {
  PersonInstance pose;  // keypoints shifted into the next frame
  Box box;              // keypoint bounds grown by the extension on each side length
  bool clamped = false;
};

std::vector<PropagatedPose> propagate_poses(const std::vector<PersonInstance>& prev,
                                            const DisplacementField& field, double extension = 0.15);
std::vector<ScoredBox> propagate_boxes(const std::vector<PersonInstance>& prev, const DisplacementField& field,
                                       double extension = 0.15);

// Greedy NMS in descending score (ties by input index); returns kept indices
// in that order. A box is suppressed when its IoU with a kept box exceeds the threshold.
std::vector<int> box_nms(const std::vector<ScoredBox>& boxes, double iou_threshold);

// sim[c][p] between current pose c and previous pose p. Repeatedly takes the
// largest remaining entry >= floor (ties by prev_ids[p], then c) and removes
// its row and column. Returns, per current pose, the matched p or -1.
// This is greedy, not an optimal assignment.
std::vector<int> greedy_match(const std::vector<std::vector<double>>& sim, const std::vector<int>& prev_ids,
                              double floor);

struct AssociationConfig {
  double oks_floor = 0.2;
  std::vector<double> falloff;
};

// Greedy matching on OKS between `prev` (already propagated, with track ids)
// and `cur`: the global best pair at or above the floor is taken first, ties
// by (prev track id, current index). Unmatched current poses receive fresh
// ids from `next_id`, in left-to-right, top-to-bottom order of their boxes.
std::vector<PersonInstance> associate(const std::vector<PersonInstance>& prev, std::vector<PersonInstance> cur,
                                      const AssociationConfig& config, int& next_id);

struct SequenceFrame {
  int frame_index = 0;
  Image image;
  std::vector<ScoredBox> detections;
};

using PoseEstimatorFn = std::function<std::vector<PersonInstance>(const SequenceFrame&, const std::vector<ScoredBox>&)>;

struct TrackerConfig {
  double nms_iou = 0.5;
  double box_extension = 0.15;
  bool propagate = true;
  // Tracks unseen for up to `window` frames can still be re-associated.
  int window = 1;
  AssociationConfig association;
};

struct TrackResult {
  std::vector<PoseFrame> frames;
  std::optional<MOTAResult> mota;
};

// fields[t] maps frame t to frame t + 1.
TrackResult track_sequence(const std::vector<SequenceFrame>& frames, const std::vector<DisplacementField>& fields,
                           const PoseEstimatorFn& estimate, const TrackerConfig& config,
                           const KeypointSchema& schema, const std::vector<PoseFrame>* gt = nullptr,
                           const MatchRule& rule = head_normalized_rule());

// PoseTrack-style export: {"annolist": [{"image": [{"name": ...}], "imgnum": [t], "annorect": [...]}]}.
nlohmann::json tracks_to_json(const std::vector<PoseFrame>& frames);
std::vector<PoseFrame> tracks_from_json(const nlohmann::json& j, int num_keypoints);

}  // namespace hrpose
