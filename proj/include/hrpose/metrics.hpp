#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hrpose/keypoints.hpp"

namespace hrpose {

// Object keypoint similarity with falloff constants k_i and scale s^2 = gt.area.
// Throws std::invalid_argument when gt has no labeled keypoint or area <= 0.
double oks(const PersonInstance& gt, const PersonInstance& dt, const std::vector<double>& falloff);

struct AreaRange {
  std::string name;
  double lo = 0.0;
  double hi = 1e10;
};

struct CocoEvalConfig {
  std::vector<double> thresholds;  // defaults to 0.50:0.05:0.95
  std::vector<double> falloff;     // k_i
  int max_dets = 20;
  int recall_points = 101;

  static CocoEvalConfig for_schema(const KeypointSchema& schema);
};

struct ThresholdCurve {
  double threshold = 0.0;
  double ap = -1.0;      // -1 when the range has no ground truth
  double recall = -1.0;  // max recall reached
  std::vector<double> precision;  // interpolated, one per recall point
};

// Scores in [0, 1]; a value of -1 marks an empty area range.
struct EvalResult {
  double ap = -1.0;
  double ap50 = -1.0;
  double ap75 = -1.0;
  double ap_m = -1.0;
  double ap_l = -1.0;
  double ar = -1.0;
  double ar50 = -1.0;
  double ar75 = -1.0;
  double ar_m = -1.0;
  double ar_l = -1.0;
  std::vector<ThresholdCurve> curves;  // area range "all"

  std::string table() const;
};

// COCO-style keypoint evaluation. Instances are grouped by image_id.
EvalResult coco_ap_suite(const std::vector<PersonInstance>& gts, const std::vector<PersonInstance>& dts,
                         const CocoEvalConfig& config);

// Per-threshold evaluation for one area range.
std::vector<ThresholdCurve> coco_curves(const std::vector<PersonInstance>& gts,
                                        const std::vector<PersonInstance>& dts,
                                        const CocoEvalConfig& config, const AreaRange& range);

struct PCKhResult {
  double alpha = 0.5;
  std::vector<std::string> joint_names;
  std::vector<double> joint_rates;  // percent; 0 for joints never evaluated
  std::vector<int> joint_counts;
  std::vector<std::pair<std::string, double>> groups;  // percent
  double total = 0.0;                                // percent, over all evaluated joints
  int evaluated = 0;
  int skipped = 0;  // instances without a head box

  std::string table() const;
};

// Head length l = 0.6 * head-box diagonal; a joint is correct iff its
// distance is <= alpha * l. preds[i] pairs with gts[i]. Ground-truth joints
// with v == 0 are not evaluated, nor are MPII pelvis and thorax.
PCKhResult pckh(const std::vector<PersonInstance>& preds, const std::vector<PersonInstance>& gts,
                const KeypointSchema& schema, double alpha = 0.5);

// One frame of poses; track ids live on the instances.
struct PoseFrame {
  int frame_index = 0;
  std::vector<PersonInstance> poses;
};

// Distance threshold (pixels) for matching keypoints of a ground-truth pose.
using MatchRule = std::function<double(const PersonInstance& gt)>;
// 0.5 * 0.6 * head-box diagonal. Throws std::invalid_argument without a head box.
MatchRule head_normalized_rule(double alpha = 0.5);
MatchRule fixed_distance_rule(double pixels);

struct MOTACounts {
  long gt = 0;
  long misses = 0;
  long false_positives = 0;
  long id_switches = 0;
  double mota() const;
  MOTACounts& operator+=(const MOTACounts& o);
};

struct MOTAResult {
  std::vector<std::string> joint_names;
  std::vector<MOTACounts> per_joint;
  MOTACounts total;
  double mota() const { return total.mota(); }

  std::string table() const;
};

// CLEAR-MOT accumulation per keypoint type. Correspondences from the previous
// frame are kept while within threshold; the rest are matched greedily by
// distance. An identity switch is a matched ground-truth track whose track id
// differs from the one it was last matched to.
MOTAResult mota(const std::vector<PoseFrame>& tracked, const std::vector<PoseFrame>& gt,
                const KeypointSchema& schema, const MatchRule& rule = head_normalized_rule());

}  // namespace hrpose
