#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "hrpose/metrics.hpp"
#include "support/metrics_fixture.hpp"

using namespace hrpose;
using namespace hrpose::testing;

TEST(Oks, IdenticalPoseScoresOne) {
  const auto schema = KeypointSchema::coco17();
  std::mt19937 rng(1);
  PersonInstance gt = random_person(rng, 17, 100, 100, 40, 5000);
  EXPECT_DOUBLE_EQ(oks(gt, gt, schema.falloff()), 1.0);
}

TEST(Oks, AnalyticSingleKeypoint) {
  const double s2 = 900.0, k = 0.15;
  const double d = std::sqrt(s2) * k * std::sqrt(2.0);
  PersonInstance gt = make_person({{10, 10}}, s2);
  PersonInstance dt = make_person({{10 + d, 10}}, s2);
  EXPECT_NEAR(oks(gt, dt, {k}), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(oks(gt, dt, {k}), 0.36788, 1e-5);
}

TEST(Oks, MatchesTransliterationOnRandomPairs) {
  const auto schema = KeypointSchema::coco17();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> area(100, 40000);
  for (int trial = 0; trial < 500; ++trial) {
    PersonInstance gt = random_person(rng, 17, 200, 150, 60, area(rng));
    PersonInstance dt = random_person(rng, 17, 200, 150, 60, 0);
    EXPECT_NEAR(oks(gt, dt, schema.falloff()), oks_transliteration(gt, dt, schema.sigmas), 1e-12);
  }
}

TEST(Oks, RejectsUndefinedInputs) {
  PersonInstance gt = make_person({{1, 1}, {2, 2}}, 100, 0);
  EXPECT_THROW(oks(gt, gt, {0.1, 0.1}), std::invalid_argument);
  PersonInstance zero_area = make_person({{1, 1}}, 0);
  EXPECT_THROW(oks(zero_area, zero_area, {0.1}), std::invalid_argument);
  PersonInstance one = make_person({{1, 1}}, 10);
  EXPECT_THROW(oks(one, gt, {0.1}), std::invalid_argument);
}

TEST(Oks, ScaleInvariant) {
  const auto schema = KeypointSchema::coco17();
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    PersonInstance gt = random_person(rng, 17, 100, 100, 30, 2500);
    PersonInstance dt = random_person(rng, 17, 100, 100, 30, 0);
    const double base = oks(gt, dt, schema.falloff());
    for (double lambda : {0.25, 3.0, 17.5}) {
      PersonInstance g2 = gt, d2 = dt;
      for (auto& p : g2.keypoints) p.x *= lambda, p.y *= lambda;
      for (auto& p : d2.keypoints) p.x *= lambda, p.y *= lambda;
      g2.area *= lambda * lambda;
      EXPECT_NEAR(oks(g2, d2, schema.falloff()), base, 1e-12);
    }
  }
}

TEST(Oks, MonotoneInEachDistance) {
  const auto schema = KeypointSchema::coco17();
  std::mt19937 rng(5);
  PersonInstance gt = random_person(rng, 17, 100, 100, 30, 3000);
  for (auto& p : gt.keypoints) p.v = 2;
  for (int i = 0; i < 17; ++i) {
    double prev = 2.0;
    for (double d = 0; d < 80; d += 4) {
      PersonInstance dt = gt;
      dt.keypoints[i].x += d;
      const double s = oks(gt, dt, schema.falloff());
      EXPECT_LE(s, prev);
      prev = s;
    }
  }
}

TEST(CocoAp, PerfectDetectionsScoreOne) {
  std::mt19937 rng(3);
  auto gts = grid_gts(rng, 3, 3);
  auto dts = gts;
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& d : dts) d.score = u(rng);
  const EvalResult r = coco_ap_suite(gts, dts, coco_config());
  EXPECT_DOUBLE_EQ(r.ap, 1.0);
  EXPECT_DOUBLE_EQ(r.ar, 1.0);
  EXPECT_DOUBLE_EQ(r.ap50, 1.0);
  EXPECT_DOUBLE_EQ(r.ap75, 1.0);
}

TEST(CocoAp, NoDetectionsScoreZero) {
  std::mt19937 rng(4);
  auto gts = grid_gts(rng, 2, 3);
  const EvalResult r = coco_ap_suite(gts, {}, coco_config());
  EXPECT_DOUBLE_EQ(r.ap, 0.0);
  EXPECT_DOUBLE_EQ(r.ar, 0.0);
}

TEST(CocoAp, TwentyInstanceFixtureMatchesExhaustiveOracle) {
  std::mt19937 rng(2024);
  auto gts = grid_gts(rng, 5, 4);
  ASSERT_EQ(gts.size(), 20u);
  const std::vector<double> targets = {0.97, 0.93, 0.91, 0.88, 0.86, 0.83, 0.81, 0.78, 0.76, 0.73,
                                       0.71, 0.68, 0.66, 0.63, 0.61, 0.58, 0.56, 0.53, 0.51, 0.46};
  std::vector<double> scores(30);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = 0.3 + 0.02 * static_cast<double>(i);
  std::shuffle(scores.begin(), scores.end(), rng);
  std::vector<PersonInstance> dts;
  std::size_t next = 0;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (g % 7 == 3) continue;  // missed person
    dts.push_back(with_oks(gts[g], targets[g], scores[next++], rng));
    if (g % 5 == 1) dts.push_back(with_oks(gts[g], targets[g] * 0.9, scores[next++], rng));  // duplicate
  }
  for (int im = 0; im < 5; ++im) {  // detections on empty background
    PersonInstance fp = random_person(rng, 17, 4000.0 + 300 * im, 900, 30, 0);
    fp.image_id = im;
    fp.score = scores[next++];
    dts.push_back(fp);
  }
  const CocoEvalConfig config = coco_config();
  const auto curves = coco_curves(gts, dts, config, {"all", 0.0, 1e10});
  const auto oracle = oracle_ap(gts, dts, config.thresholds);
  ASSERT_EQ(curves.size(), oracle.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    EXPECT_NEAR(curves[i].ap, oracle[i], 1e-9) << "threshold " << config.thresholds[i];
  }
  const EvalResult r = coco_ap_suite(gts, dts, config);
  EXPECT_GE(r.ap50, r.ap75);
  EXPECT_GT(r.ap, 0.0);
  EXPECT_LT(r.ap, 1.0);
}

TEST(CocoAp, ConflictingDetectionsMatchOracle) {
  // Two people close enough that detections are plausible for both.
  std::mt19937 rng(99);
  std::vector<PersonInstance> gts;
  for (int p = 0; p < 3; ++p) {
    PersonInstance g = random_person(rng, 17, 12.0 * p, 0, 30, 3600);
    for (auto& kp : g.keypoints) kp.v = 2;
    g.image_id = 0;
    gts.push_back(g);
  }
  std::vector<PersonInstance> dts;
  std::uniform_real_distribution<double> jitter(-6, 6);
  for (int d = 0; d < 5; ++d) {
    PersonInstance dt = gts[d % 3];
    for (auto& kp : dt.keypoints) kp.x += jitter(rng), kp.y += jitter(rng);
    dt.score = 0.9 - 0.1 * d;
    dts.push_back(dt);
  }
  const CocoEvalConfig config = coco_config();
  const auto curves = coco_curves(gts, dts, config, {"all", 0.0, 1e10});
  const auto oracle = oracle_ap(gts, dts, config.thresholds);
  for (std::size_t i = 0; i < curves.size(); ++i) EXPECT_NEAR(curves[i].ap, oracle[i], 1e-9);
}

TEST(CocoAp, DependsOnlyOnScoreRanking) {
  std::mt19937 rng(8);
  auto gts = grid_gts(rng, 4, 3);
  std::vector<PersonInstance> dts;
  std::uniform_real_distribution<double> u(0.5, 0.99), sc(0.0, 1.0);
  for (const auto& g : gts) dts.push_back(with_oks(g, u(rng), sc(rng), rng));
  for (int i = 0; i < 4; ++i) {
    PersonInstance fp = random_person(rng, 17, 5000, 5000, 20, 0);
    fp.image_id = i;
    fp.score = sc(rng);
    dts.push_back(fp);
  }
  const EvalResult base = coco_ap_suite(gts, dts, coco_config());
  for (auto f : {+[](double s) { return 3 * s + 1; }, +[](double s) { return std::exp(5 * s); },
                 +[](double s) { return s * s * s; }}) {
    auto moved = dts;
    for (auto& d : moved) d.score = f(d.score);
    const EvalResult r = coco_ap_suite(gts, moved, coco_config());
    EXPECT_DOUBLE_EQ(r.ap, base.ap);
    EXPECT_DOUBLE_EQ(r.ar, base.ar);
  }
}

TEST(CocoAp, PrecisionBoundedByRecall) {
  std::mt19937 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    auto gts = grid_gts(rng, 3, 3);
    std::vector<PersonInstance> dts;
    std::uniform_real_distribution<double> u(0.3, 0.99), sc(0.0, 1.0);
    for (const auto& g : gts) {
      if (sc(rng) < 0.2) continue;
      dts.push_back(with_oks(g, u(rng), sc(rng), rng));
    }
    const EvalResult r = coco_ap_suite(gts, dts, coco_config());
    EXPECT_GE(r.ap50 + 1e-12, r.ap75);
    for (const auto& c : r.curves) EXPECT_LE(c.ap, c.recall + 1.0 / 101 + 1e-12);
  }
}

TEST(CocoAp, AreaRangesSplitGroundTruth) {
  std::vector<PersonInstance> gts;
  PersonInstance small = make_person({{0, 0}, {10, 10}}, 20.0 * 20.0);
  PersonInstance medium = make_person({{500, 0}, {510, 10}}, 50.0 * 50.0);
  PersonInstance large = make_person({{1000, 0}, {1010, 10}}, 150.0 * 150.0);
  gts = {small, medium, large};
  CocoEvalConfig config;
  config.thresholds = {0.5, 0.75};
  config.falloff = {0.1, 0.1};
  std::vector<PersonInstance> dts = {large};
  const EvalResult r = coco_ap_suite(gts, dts, config);
  EXPECT_DOUBLE_EQ(r.ap_l, 1.0);
  EXPECT_DOUBLE_EQ(r.ap_m, 0.0);
  EXPECT_NEAR(r.ar, 1.0 / 3.0, 1e-12);
  const EvalResult none = coco_ap_suite({small}, {small}, config);
  EXPECT_EQ(none.ap_m, -1.0);
  EXPECT_EQ(none.ap_l, -1.0);
}

namespace {

double group(const PCKhResult& r, const std::string& name) {
  for (const auto& [g, v] : r.groups) {
    if (g == name) return v;
  }
  return -1;
}

}  // namespace

TEST(Pckh, PerfectPredictionsScoreHundred) {
  std::mt19937 rng(1);
  auto gts = mpii_people(rng, 5);
  const PCKhResult r = pckh(gts, gts, KeypointSchema::mpii16());
  EXPECT_DOUBLE_EQ(r.total, 100.0);
  ASSERT_EQ(r.groups.size(), 7u);
  for (const auto& [name, v] : r.groups) EXPECT_DOUBLE_EQ(v, 100.0) << name;
  EXPECT_EQ(r.evaluated, 5 * 14);
}

TEST(Pckh, BoundaryIsInclusive) {
  std::mt19937 rng(2);
  auto gts = mpii_people(rng, 1);  // head box 30 x 40: l = 0.6 * 50 = 30, bound 15
  auto preds = gts;
  preds[0].keypoints[9].x += 9;
  preds[0].keypoints[9].y += 12;
  PCKhResult r = pckh(preds, gts, KeypointSchema::mpii16());
  EXPECT_DOUBLE_EQ(r.joint_rates[9], 100.0);
  preds[0].keypoints[9].y += 1e-9;
  r = pckh(preds, gts, KeypointSchema::mpii16());
  EXPECT_DOUBLE_EQ(r.joint_rates[9], 0.0);
}

TEST(Pckh, HalfTheWristsDisplacedGivesFifty) {
  std::mt19937 rng(3);
  auto gts = mpii_people(rng, 8);
  auto preds = gts;
  for (int i = 0; i < 4; ++i) {
    preds[i].keypoints[10].x += 45;  // r_wrist, 3 bounds away
    preds[i].keypoints[15].y -= 45;  // l_wrist
  }
  const PCKhResult r = pckh(preds, gts, KeypointSchema::mpii16());
  EXPECT_EQ(group(r, "Wri"), 50.0);
  EXPECT_EQ(group(r, "Head"), 100.0);
  EXPECT_EQ(group(r, "Ank"), 100.0);
  EXPECT_DOUBLE_EQ(r.total, 100.0 * (14 * 8 - 8) / (14 * 8));
}

TEST(Pckh, SkipsInstancesWithoutHeadBox) {
  std::mt19937 rng(4);
  auto gts = mpii_people(rng, 3);
  gts[1].head_box.reset();
  const PCKhResult r = pckh(gts, gts, KeypointSchema::mpii16());
  EXPECT_EQ(r.skipped, 1);
  EXPECT_EQ(r.evaluated, 2 * 14);
}

TEST(Pckh, UnlabeledJointsAreNotEvaluated) {
  std::mt19937 rng(5);
  auto gts = mpii_people(rng, 2);
  gts[0].keypoints[0].v = 0;
  auto preds = gts;
  preds[0].keypoints[0].x += 1000;
  const PCKhResult r = pckh(preds, gts, KeypointSchema::mpii16());
  EXPECT_EQ(r.joint_counts[0], 1);
  EXPECT_DOUBLE_EQ(r.joint_rates[0], 100.0);
}

TEST(Pckh, TotalInvariantUnderTranslation) {
  std::mt19937 rng(6);
  std::normal_distribution<double> n(0, 10);
  for (int trial = 0; trial < 20; ++trial) {
    auto gts = mpii_people(rng, 6);
    auto preds = gts;
    for (auto& p : preds) {
      for (auto& k : p.keypoints) k.x += n(rng), k.y += n(rng);
    }
    const double base = pckh(preds, gts, KeypointSchema::mpii16()).total;
    const double tx = n(rng) * 50, ty = n(rng) * 50;
    for (auto* set : {&gts, &preds}) {
      for (auto& p : *set) {
        for (auto& k : p.keypoints) k.x += tx, k.y += ty;
        if (p.head_box) p.head_box->x += tx, p.head_box->y += ty;
      }
    }
    EXPECT_DOUBLE_EQ(pckh(preds, gts, KeypointSchema::mpii16()).total, base);
  }
}

namespace {

PersonInstance tracked(const KeypointSchema& schema, double cx, double cy, int id) {
  PersonInstance p;
  for (int j = 0; j < schema.size(); ++j) p.keypoints.push_back({cx + 3.0 * j, cy + 2.0 * j, 2});
  p.head_box = Box{cx - 10, cy - 10, 20, 20};
  p.track_id = id;
  return p;
}

}  // namespace

TEST(Mota, PerfectTrackingScoresOne) {
  const auto schema = KeypointSchema::toy5();
  std::vector<PoseFrame> gt;
  for (int f = 0; f < 4; ++f) gt.push_back({f, {tracked(schema, 10.0 * f, 0, 0), tracked(schema, 200, 10.0 * f, 1)}});
  const MOTAResult r = mota(gt, gt, schema);
  EXPECT_DOUBLE_EQ(r.mota(), 1.0);
  EXPECT_EQ(r.total.id_switches, 0);
  EXPECT_EQ(r.total.gt, 4 * 2 * 5);
}

TEST(Mota, EmptyPredictionsScoreZero) {
  const auto schema = KeypointSchema::toy5();
  std::vector<PoseFrame> gt, pred;
  for (int f = 0; f < 3; ++f) {
    gt.push_back({f, {tracked(schema, 0, 0, 0)}});
    pred.push_back({f, {}});
  }
  const MOTAResult r = mota(pred, gt, schema);
  EXPECT_EQ(r.total.misses, r.total.gt);
  EXPECT_DOUBLE_EQ(r.mota(), 0.0);
}

TEST(Mota, CrossingSwapHandTrace) {
  // Frames 0..2; predicted ids swap between the two people at frame 1 and
  // stay swapped. Per keypoint type: frame 1 re-matches both ground-truth
  // tracks to the other id (2 switches), frame 2 keeps the new pairing.
  // GT = 3 frames * 2 people * 5 joints = 30, IDSW = 2 * 5 = 10.
  const auto schema = KeypointSchema::toy5();
  std::vector<PoseFrame> gt, pred;
  for (int f = 0; f < 3; ++f) {
    PersonInstance a = tracked(schema, 0, 0, 0), b = tracked(schema, 300, 0, 1);
    gt.push_back({f, {a, b}});
    if (f > 0) std::swap(a.track_id, b.track_id);
    pred.push_back({f, {a, b}});
  }
  const MOTAResult r = mota(pred, gt, schema);
  EXPECT_EQ(r.total.gt, 30);
  EXPECT_EQ(r.total.id_switches, 10);
  EXPECT_EQ(r.total.misses, 0);
  EXPECT_EQ(r.total.false_positives, 0);
  EXPECT_NEAR(r.mota(), 1.0 - 10.0 / 30.0, 1e-12);
  for (const auto& c : r.per_joint) EXPECT_EQ(c.id_switches, 2);
}

TEST(Mota, ContinuityKeepsPreviousCorrespondence) {
  // A second prediction closer to the ground truth does not steal an existing
  // within-threshold correspondence.
  const auto schema = KeypointSchema::toy5();
  PersonInstance g = tracked(schema, 0, 0, 0);
  PersonInstance p = g, q = g;
  for (auto& k : p.keypoints) k.x += 4;
  for (auto& k : q.keypoints) k.x += 1;
  p.track_id = 5;
  q.track_id = 6;
  std::vector<PoseFrame> gt = {{0, {g}}, {1, {g}}};
  std::vector<PoseFrame> pred = {{0, {p}}, {1, {q, p}}};
  const MOTAResult r = mota(pred, gt, schema);
  EXPECT_EQ(r.total.id_switches, 0);
  EXPECT_EQ(r.total.false_positives, 5);
}

TEST(Mota, RejectsMisalignedFrames) {
  const auto schema = KeypointSchema::toy5();
  std::vector<PoseFrame> gt = {{0, {}}, {1, {}}};
  std::vector<PoseFrame> pred = {{0, {}}, {2, {}}};
  EXPECT_THROW(mota(pred, gt, schema), std::invalid_argument);
  EXPECT_THROW(mota({{0, {}}}, gt, schema), std::invalid_argument);
}

TEST(Mota, ExtraFalsePositiveNeverHelps) {
  const auto schema = KeypointSchema::toy5();
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> pos(0, 200), jitter(-8, 8), coin(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PoseFrame> gt, pred;
    for (int f = 0; f < 4; ++f) {
      PoseFrame g{f, {}}, p{f, {}};
      for (int id = 0; id < 3; ++id) {
        PersonInstance person = tracked(schema, pos(rng), pos(rng), id);
        g.poses.push_back(person);
        if (coin(rng) < 0.8) {
          for (auto& k : person.keypoints) k.x += jitter(rng), k.y += jitter(rng);
          person.track_id = coin(rng) < 0.8 ? id : 10 + id;
          p.poses.push_back(person);
        }
      }
      gt.push_back(g);
      pred.push_back(p);
    }
    const double base = mota(pred, gt, schema).mota();
    auto injected = pred;
    const int frame = static_cast<int>(coin(rng) * 4);
    PersonInstance fp = tracked(schema, pos(rng), pos(rng), 99);
    injected[frame].poses.insert(injected[frame].poses.begin() + static_cast<long>(coin(rng) * 2), fp);
    EXPECT_LE(mota(injected, gt, schema).mota(), base + 1e-12) << "trial " << trial;
  }
}
