#include "hrpose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

namespace hrpose {

double oks(const PersonInstance& gt, const PersonInstance& dt, const std::vector<double>& falloff) {
  const std::size_t k = gt.keypoints.size();
  if (dt.keypoints.size() != k || falloff.size() != k) {
    throw std::invalid_argument("oks: keypoint count mismatch");
  }
  if (!(gt.area > 0)) throw std::invalid_argument("oks: ground-truth area must be positive");
  double sum = 0.0;
  int labeled = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!gt.keypoints[i].labeled()) continue;
    if (!(falloff[i] > 0)) throw std::invalid_argument("oks: falloff constants must be positive");
    const double dx = dt.keypoints[i].x - gt.keypoints[i].x;
    const double dy = dt.keypoints[i].y - gt.keypoints[i].y;
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * gt.area * falloff[i] * falloff[i]));
    ++labeled;
  }
  if (labeled == 0) throw std::invalid_argument("oks: ground truth has no labeled keypoint");
  return sum / labeled;
}

CocoEvalConfig CocoEvalConfig::for_schema(const KeypointSchema& schema) {
  CocoEvalConfig c;
  for (int i = 0; i < 10; ++i) c.thresholds.push_back(0.5 + 0.05 * i);
  c.falloff = schema.falloff();
  return c;
}

namespace {

struct DetEval {
  double score = 0.0;
  bool matched = false;
  bool ignored = false;
};

struct ImageEval {
  std::vector<DetEval> dets;
  long positives = 0;
};

double detection_area(const PersonInstance& dt) {
  if (dt.area > 0) return dt.area;
  if (auto b = dt.keypoint_bounds()) return b->area();
  return dt.box.area();
}

bool gt_usable(const PersonInstance& gt) { return gt.area > 0 && gt.num_labeled() > 0; }

ImageEval evaluate_image(std::vector<const PersonInstance*> gts, std::vector<const PersonInstance*> dts,
                         double threshold, const AreaRange& range, const CocoEvalConfig& config) {
  auto ignored = [&](const PersonInstance* g) {
    return g->crowd || !gt_usable(*g) || g->area < range.lo || g->area > range.hi;
  };
  std::stable_partition(gts.begin(), gts.end(), [&](const PersonInstance* g) { return !ignored(g); });
  std::stable_sort(dts.begin(), dts.end(),
                   [](const PersonInstance* a, const PersonInstance* b) { return a->score > b->score; });
  if (static_cast<int>(dts.size()) > config.max_dets) dts.resize(static_cast<std::size_t>(config.max_dets));

  ImageEval out;
  std::vector<char> gt_ignore(gts.size());
  for (std::size_t g = 0; g < gts.size(); ++g) {
    gt_ignore[g] = ignored(gts[g]);
    if (!gt_ignore[g]) ++out.positives;
  }
  std::vector<char> gt_taken(gts.size(), 0);
  const double bar = std::min(threshold, 1.0 - 1e-10);
  for (const PersonInstance* d : dts) {
    double best = bar;
    int m = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g] && !gts[g]->crowd) continue;
      if (m > -1 && !gt_ignore[m] && gt_ignore[g]) break;
      const double s = gt_usable(*gts[g]) ? oks(*gts[g], *d, config.falloff) : 0.0;
      if (s < best) continue;
      best = s;
      m = static_cast<int>(g);
    }
    DetEval e{d->score, false, false};
    if (m > -1) {
      gt_taken[m] = 1;
      e.matched = true;
      e.ignored = gt_ignore[m];
    } else {
      const double a = detection_area(*d);
      e.ignored = a < range.lo || a > range.hi;
    }
    out.dets.push_back(e);
  }
  return out;
}

}  // namespace

std::vector<ThresholdCurve> coco_curves(const std::vector<PersonInstance>& gts,
                                        const std::vector<PersonInstance>& dts,
                                        const CocoEvalConfig& config, const AreaRange& range) {
  std::map<std::int64_t, std::pair<std::vector<const PersonInstance*>, std::vector<const PersonInstance*>>>
      images;
  for (const auto& g : gts) images[g.image_id].first.push_back(&g);
  for (const auto& d : dts) images[d.image_id].second.push_back(&d);

  const int points = config.recall_points;
  if (points < 2) throw std::invalid_argument("coco_curves: need at least two recall points");
  std::vector<ThresholdCurve> curves;
  for (double t : config.thresholds) {
    std::vector<DetEval> all;
    long positives = 0;
    for (const auto& [id, pair] : images) {
      ImageEval e = evaluate_image(pair.first, pair.second, t, range, config);
      positives += e.positives;
      all.insert(all.end(), e.dets.begin(), e.dets.end());
    }
    ThresholdCurve curve;
    curve.threshold = t;
    if (positives == 0) {
      curves.push_back(curve);
      continue;
    }
    std::stable_sort(all.begin(), all.end(), [](const DetEval& a, const DetEval& b) { return a.score > b.score; });
    std::vector<double> recall, precision;
    long tp = 0, fp = 0;
    for (const DetEval& d : all) {
      if (d.ignored) continue;
      (d.matched ? tp : fp) += 1;
      recall.push_back(static_cast<double>(tp) / positives);
      precision.push_back(static_cast<double>(tp) / (tp + fp));
    }
    for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    curve.recall = recall.empty() ? 0.0 : recall.back();
    curve.precision.assign(static_cast<std::size_t>(points), 0.0);
    const double step = 1.0 / (points - 1);
    for (int r = 0; r < points; ++r) {
      const double level = r * step;
      auto it = std::lower_bound(recall.begin(), recall.end(), level);
      if (it != recall.end()) curve.precision[r] = precision[static_cast<std::size_t>(it - recall.begin())];
    }
    curve.ap = std::accumulate(curve.precision.begin(), curve.precision.end(), 0.0) / points;
    curves.push_back(curve);
  }
  return curves;
}

namespace {

double mean_valid(const std::vector<ThresholdCurve>& curves, double ThresholdCurve::*field) {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : curves) {
    if (c.*field < 0) continue;
    sum += c.*field;
    ++n;
  }
  return n ? sum / n : -1.0;
}

double at_threshold(const std::vector<ThresholdCurve>& curves, double t, double ThresholdCurve::*field) {
  for (const auto& c : curves) {
    if (std::abs(c.threshold - t) < 1e-9) return c.*field;
  }
  return -1.0;
}

}  // namespace

EvalResult coco_ap_suite(const std::vector<PersonInstance>& gts, const std::vector<PersonInstance>& dts,
                         const CocoEvalConfig& config) {
  EvalResult r;
  r.curves = coco_curves(gts, dts, config, {"all", 0.0, 1e10});
  const auto medium = coco_curves(gts, dts, config, {"medium", 32.0 * 32.0, 96.0 * 96.0});
  const auto large = coco_curves(gts, dts, config, {"large", 96.0 * 96.0, 1e10});
  r.ap = mean_valid(r.curves, &ThresholdCurve::ap);
  r.ap50 = at_threshold(r.curves, 0.5, &ThresholdCurve::ap);
  r.ap75 = at_threshold(r.curves, 0.75, &ThresholdCurve::ap);
  r.ap_m = mean_valid(medium, &ThresholdCurve::ap);
  r.ap_l = mean_valid(large, &ThresholdCurve::ap);
  r.ar = mean_valid(r.curves, &ThresholdCurve::recall);
  r.ar50 = at_threshold(r.curves, 0.5, &ThresholdCurve::recall);
  r.ar75 = at_threshold(r.curves, 0.75, &ThresholdCurve::recall);
  r.ar_m = mean_valid(medium, &ThresholdCurve::recall);
  r.ar_l = mean_valid(large, &ThresholdCurve::recall);
  return r;
}

std::string EvalResult::table() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "AP     AP50   AP75   AP_M   AP_L   AR     AR50   AR75   AR_M   AR_L\n"
                "%-6.3f %-6.3f %-6.3f %-6.3f %-6.3f %-6.3f %-6.3f %-6.3f %-6.3f %-6.3f\n",
                ap, ap50, ap75, ap_m, ap_l, ar, ar50, ar75, ar_m, ar_l);
  return buf;
}

namespace {

std::string joint_group(const std::string& name) {
  auto has = [&](const char* s) { return name.find(s) != std::string::npos; };
  if (has("pelvis") || has("thorax")) return "";
  if (has("shoulder")) return "Sho";
  if (has("elbow")) return "Elb";
  if (has("wrist")) return "Wri";
  if (has("hip")) return "Hip";
  if (has("knee")) return "Kne";
  if (has("ankle")) return "Ank";
  if (has("head") || has("neck") || has("nose") || has("eye") || has("ear")) return "Head";
  return "";
}

bool joint_excluded(const std::string& name) { return name == "pelvis" || name == "thorax"; }

}  // namespace

PCKhResult pckh(const std::vector<PersonInstance>& preds, const std::vector<PersonInstance>& gts,
                const KeypointSchema& schema, double alpha) {
  if (preds.size() != gts.size()) throw std::invalid_argument("pckh: prediction and ground-truth counts differ");
  if (!(alpha > 0)) throw std::invalid_argument("pckh: alpha must be positive");
  const int k = schema.size();
  PCKhResult r;
  r.alpha = alpha;
  r.joint_names = schema.names;
  std::vector<int> correct(static_cast<std::size_t>(k), 0);
  r.joint_counts.assign(static_cast<std::size_t>(k), 0);
  for (std::size_t n = 0; n < gts.size(); ++n) {
    const PersonInstance& gt = gts[n];
    if (static_cast<int>(gt.keypoints.size()) != k || static_cast<int>(preds[n].keypoints.size()) != k) {
      throw std::invalid_argument("pckh: keypoint count does not match the schema");
    }
    if (!gt.head_box) {
      ++r.skipped;
      continue;
    }
    const double l = 0.6 * std::hypot(gt.head_box->w, gt.head_box->h);
    const double bound = alpha * l;
    for (int j = 0; j < k; ++j) {
      if (!gt.keypoints[j].labeled() || joint_excluded(schema.names[j])) continue;
      const double d = std::hypot(preds[n].keypoints[j].x - gt.keypoints[j].x,
                                  preds[n].keypoints[j].y - gt.keypoints[j].y);
      ++r.joint_counts[j];
      if (d <= bound) ++correct[j];
    }
  }
  r.joint_rates.assign(static_cast<std::size_t>(k), 0.0);
  long all_correct = 0;
  for (int j = 0; j < k; ++j) {
    if (r.joint_counts[j] > 0) r.joint_rates[j] = 100.0 * correct[j] / r.joint_counts[j];
    all_correct += correct[j];
    r.evaluated += r.joint_counts[j];
  }
  r.total = r.evaluated ? 100.0 * all_correct / r.evaluated : 0.0;
  for (const char* g : {"Head", "Sho", "Elb", "Wri", "Hip", "Kne", "Ank"}) {
    long c = 0, n = 0;
    for (int j = 0; j < k; ++j) {
      if (joint_group(schema.names[j]) != g) continue;
      c += correct[j];
      n += r.joint_counts[j];
    }
    if (n > 0) r.groups.emplace_back(g, 100.0 * c / n);
  }
  return r;
}

std::string PCKhResult::table() const {
  std::string head, row;
  char buf[32];
  for (const auto& [name, rate] : groups) {
    std::snprintf(buf, sizeof buf, "%-7s", name.c_str());
    head += buf;
    std::snprintf(buf, sizeof buf, "%-7.1f", rate);
    row += buf;
  }
  std::snprintf(buf, sizeof buf, "%-7s", "Total");
  head += buf;
  std::snprintf(buf, sizeof buf, "%-7.1f", total);
  row += buf;
  return head + "\n" + row + "\n";
}

MatchRule head_normalized_rule(double alpha) {
  return [alpha](const PersonInstance& gt) {
    if (!gt.head_box) throw std::invalid_argument("mota: ground-truth pose without head box");
    return alpha * 0.6 * std::hypot(gt.head_box->w, gt.head_box->h);
  };
}

MatchRule fixed_distance_rule(double pixels) {
  return [pixels](const PersonInstance&) { return pixels; };
}

double MOTACounts::mota() const {
  if (gt == 0) return 0.0;
  return 1.0 - static_cast<double>(misses + false_positives + id_switches) / static_cast<double>(gt);
}

MOTACounts& MOTACounts::operator+=(const MOTACounts& o) {
  gt += o.gt;
  misses += o.misses;
  false_positives += o.false_positives;
  id_switches += o.id_switches;
  return *this;
}

MOTAResult mota(const std::vector<PoseFrame>& tracked, const std::vector<PoseFrame>& gt,
                const KeypointSchema& schema, const MatchRule& rule) {
  if (tracked.size() != gt.size()) throw std::invalid_argument("mota: misaligned frame indices (length)");
  for (std::size_t f = 0; f < gt.size(); ++f) {
    if (tracked[f].frame_index != gt[f].frame_index) {
      throw std::invalid_argument("mota: misaligned frame indices at position " + std::to_string(f));
    }
  }
  const int k = schema.size();
  MOTAResult r;
  r.joint_names = schema.names;
  r.per_joint.assign(static_cast<std::size_t>(k), {});

  std::vector<std::vector<double>> thresholds(gt.size());
  for (std::size_t f = 0; f < gt.size(); ++f) {
    for (const auto& g : gt[f].poses) {
      if (g.track_id < 0) throw std::invalid_argument("mota: ground-truth pose without track id");
      if (static_cast<int>(g.keypoints.size()) != k) throw std::invalid_argument("mota: keypoint count");
      thresholds[f].push_back(rule(g));
    }
    for (const auto& p : tracked[f].poses) {
      if (static_cast<int>(p.keypoints.size()) != k) throw std::invalid_argument("mota: keypoint count");
    }
  }

  for (int j = 0; j < k; ++j) {
    MOTACounts& c = r.per_joint[j];
    std::map<int, int> last_id;     // gt track -> last matched predicted track
    std::map<int, int> prev_pairs;  // correspondences of the previous frame
    for (std::size_t f = 0; f < gt.size(); ++f) {
      std::vector<int> g_idx, p_idx;
      for (std::size_t i = 0; i < gt[f].poses.size(); ++i) {
        if (gt[f].poses[i].keypoints[j].labeled()) g_idx.push_back(static_cast<int>(i));
      }
      for (std::size_t i = 0; i < tracked[f].poses.size(); ++i) {
        if (tracked[f].poses[i].keypoints[j].labeled()) p_idx.push_back(static_cast<int>(i));
      }
      auto distance = [&](int gi, int pi) {
        const Keypoint& a = gt[f].poses[gi].keypoints[j];
        const Keypoint& b = tracked[f].poses[pi].keypoints[j];
        return std::hypot(a.x - b.x, a.y - b.y);
      };
      std::vector<char> g_used(g_idx.size(), 0), p_used(p_idx.size(), 0);
      std::vector<std::pair<int, int>> matches;
      for (std::size_t a = 0; a < g_idx.size(); ++a) {
        auto it = prev_pairs.find(gt[f].poses[g_idx[a]].track_id);
        if (it == prev_pairs.end()) continue;
        for (std::size_t b = 0; b < p_idx.size(); ++b) {
          if (p_used[b] || tracked[f].poses[p_idx[b]].track_id != it->second) continue;
          if (distance(g_idx[a], p_idx[b]) <= thresholds[f][g_idx[a]]) {
            g_used[a] = p_used[b] = 1;
            matches.emplace_back(static_cast<int>(a), static_cast<int>(b));
          }
          break;
        }
      }
      struct Candidate {
        double d;
        int a, b;
      };
      std::vector<Candidate> cands;
      for (std::size_t a = 0; a < g_idx.size(); ++a) {
        if (g_used[a]) continue;
        for (std::size_t b = 0; b < p_idx.size(); ++b) {
          if (p_used[b]) continue;
          const double d = distance(g_idx[a], p_idx[b]);
          if (d <= thresholds[f][g_idx[a]]) cands.push_back({d, static_cast<int>(a), static_cast<int>(b)});
        }
      }
      std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
        if (x.d != y.d) return x.d < y.d;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
      });
      for (const Candidate& cand : cands) {
        if (g_used[cand.a] || p_used[cand.b]) continue;
        g_used[cand.a] = p_used[cand.b] = 1;
        matches.emplace_back(cand.a, cand.b);
      }
      prev_pairs.clear();
      for (auto [a, b] : matches) {
        const int gid = gt[f].poses[g_idx[a]].track_id;
        const int pid = tracked[f].poses[p_idx[b]].track_id;
        auto it = last_id.find(gid);
        if (it != last_id.end() && it->second != pid) ++c.id_switches;
        last_id[gid] = pid;
        prev_pairs[gid] = pid;
      }
      c.gt += static_cast<long>(g_idx.size());
      c.misses += static_cast<long>(g_idx.size() - matches.size());
      c.false_positives += static_cast<long>(p_idx.size() - matches.size());
    }
    r.total += c;
  }
  return r;
}

std::string MOTAResult::table() const {
  std::string out = "joint            MOTA     GT     FN     FP   IDSW\n";
  char buf[128];
  auto line = [&](const std::string& name, const MOTACounts& c) {
    std::snprintf(buf, sizeof buf, "%-14s %6.1f %6ld %6ld %6ld %6ld\n", name.c_str(), 100.0 * c.mota(), c.gt,
                  c.misses, c.false_positives, c.id_switches);
    out += buf;
  };
  for (std::size_t j = 0; j < per_joint.size(); ++j) line(joint_names[j], per_joint[j]);
  line("total", total);
  return out;
}

}  // namespace hrpose
