#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hrpose/dataset.hpp"
#include "hrpose/synthetic.hpp"

using namespace hrpose;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hrpose_test_data_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json minimal_coco(int values) {
  json kps = json::array();
  for (int i = 0; i < values; ++i) kps.push_back(i % 3 == 2 ? 2 : 10 + i);
  return {{"images", {{{"id", 1}, {"width", 640}, {"height", 480}, {"file_name", "a.jpg"}}}},
          {"annotations",
           {{{"id", 5}, {"image_id", 1}, {"category_id", 1}, {"keypoints", kps}, {"bbox", {1, 2, 30, 40}},
             {"area", 900.5}, {"iscrowd", 0}}}},
          {"categories", {{{"id", 1}, {"name", "person"}, {"keypoints", KeypointSchema::coco17().names}}}}};
}

AnnotationError expect_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const AnnotationError& e) {
    return e;
  }
  ADD_FAILURE() << "expected AnnotationError";
  return AnnotationError("none", {});
}

bool any_issue(const AnnotationError& e, const std::string& needle) {
  for (const auto& s : e.issues()) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Annotations, MinimalFileParsesWithSeventeenKeypoints) {
  const AnnotationSet set = parse_annotations(minimal_coco(51));
  EXPECT_EQ(set.schema.size(), 17);
  EXPECT_EQ(set.schema.name, "coco17");
  ASSERT_EQ(set.images.size(), 1u);
  ASSERT_EQ(set.instances.size(), 1u);
  const PersonInstance& p = set.instances[0];
  EXPECT_EQ(p.id, 5);
  EXPECT_EQ(p.image_id, 1);
  EXPECT_EQ(p.keypoints.size(), 17u);
  EXPECT_DOUBLE_EQ(p.keypoints[1].x, 13);
  EXPECT_EQ(p.keypoints[1].v, 2);
  EXPECT_EQ(p.box, (Box{1, 2, 30, 40}));
  EXPECT_DOUBLE_EQ(p.area, 900.5);
  EXPECT_NO_THROW(set.validate());
  EXPECT_EQ(parse_annotations(minimal_coco(51), KeypointSchema::coco17()).schema.size(), 17);
}

TEST(Annotations, WrongKeypointLengthIsAStructuredError) {
  const auto e = expect_error([] { parse_annotations(minimal_coco(50), KeypointSchema::coco17()); });
  ASSERT_EQ(e.issues().size(), 1u);
  EXPECT_NE(e.issues()[0].find("/annotations/0/keypoints"), std::string::npos);
  EXPECT_NE(e.issues()[0].find("expected 51"), std::string::npos);
  EXPECT_NE(e.issues()[0].find("got 50"), std::string::npos);
}

TEST(Annotations, EveryViolationIsListed) {
  json j = minimal_coco(51);
  json bad = j["annotations"][0];
  bad["image_id"] = 99;
  bad["keypoints"][2] = 7;
  bad["bbox"] = {1, 2, 3};
  j["annotations"].push_back(bad);
  j["images"].push_back(j["images"][0]);
  const auto e = expect_error([&] { parse_annotations(j); });
  EXPECT_TRUE(any_issue(e, "/annotations/1/image_id: image 99 is not listed"));
  EXPECT_TRUE(any_issue(e, "/annotations/1/keypoints/2: visibility"));
  EXPECT_TRUE(any_issue(e, "/annotations/1/bbox"));
  EXPECT_TRUE(any_issue(e, "/images/1/id: duplicate"));
  EXPECT_EQ(e.issues().size(), 4u);
}

TEST(Annotations, SchemaSizeMismatchWithCategories) {
  const auto e = expect_error([] { parse_annotations(minimal_coco(51), KeypointSchema::mpii16()); });
  EXPECT_TRUE(any_issue(e, "/categories: file lists 17 keypoints, expected 16"));
}

TEST(Annotations, SyntaxErrorsReportLineAndColumn) {
  const std::string text = "{\n  \"images\": [\n    {\"id\": 1,, \"width\": 2}\n  ]\n}\n";
  const auto e = expect_error([&] { parse_json_text(text, "ann.json"); });
  ASSERT_EQ(e.issues().size(), 1u);
  EXPECT_EQ(e.issues()[0].rfind("3:14:", 0), 0u) << e.issues()[0];
  EXPECT_NE(std::string(e.what()).find("ann.json"), std::string::npos);
}

TEST(Annotations, NonObjectRootIsRejected) {
  EXPECT_THROW(parse_annotations(json::array()), AnnotationError);
  const auto e = expect_error([] { parse_annotations(json::object()); });
  EXPECT_TRUE(any_issue(e, "/images"));
  EXPECT_TRUE(any_issue(e, "/annotations"));
}

TEST(Annotations, SaveLoadRoundTrip) {
  SyntheticSpec spec;
  spec.num_images = 3;
  spec.persons_per_image = 2;
  spec.width = 96;
  AnnotationSet set = generate_synthetic(spec, 3).annotations;
  set.instances[0].crowd = true;
  set.instances[1].track_id = 4;
  set.instances[2].keypoints[3] = {0.1 + 1e-13, 1.0 / 3.0, 0};
  set.instances[3].head_box.reset();
  set.instances[3].score = 0.375;
  set.instances[4].category_id = 2;
  const auto dir = temp_dir("roundtrip");
  save_annotations(dir / "a.json", set);
  const AnnotationSet back = load_annotations(dir / "a.json");
  EXPECT_TRUE(back == set);
  EXPECT_EQ(back.instances[2].keypoints[3].y, 1.0 / 3.0);
  save_annotations(dir / "b.json", back);
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
}

TEST(Annotations, CustomNamesInferMirrorPairs) {
  const KeypointSchema s = schema_from_names({"nose", "left_eye", "right_eye", "l_knee", "r_knee"});
  EXPECT_EQ(s.name, "custom");
  EXPECT_EQ(s.flip_permutation(), (std::vector<int>{0, 2, 1, 4, 3}));
  EXPECT_EQ(schema_from_names(KeypointSchema::mpii16().names), KeypointSchema::mpii16());
}

TEST(Results, RoundTripAndValidation) {
  std::vector<PersonInstance> results(2);
  for (int i = 0; i < 2; ++i) {
    results[i].image_id = 10 + i;
    results[i].score = 0.25 * (i + 1);
    results[i].keypoints = {{1.5, 2.5, 2}, {3.25, 4.0, 1}, {0, 0, 0}, {7, 8, 2}, {9, 10, 2}};
    results[i].box = *results[i].keypoint_bounds();
    results[i].area = results[i].box.area();
  }
  results[1].track_id = 3;
  const auto dir = temp_dir("results");
  save_results(dir / "r.json", results);
  EXPECT_EQ(load_results(dir / "r.json", 5), results);
  EXPECT_THROW(load_results(dir / "r.json", 17), AnnotationError);
  json j = results_to_json(results);
  j[0].erase("score");
  const auto e = expect_error([&] { results_from_json(j, 5); });
  EXPECT_TRUE(any_issue(e, "/0/score: missing"));
}

TEST(KeypointLines, ParseWithCommentsAndRoundTrip) {
  std::string text = "# header\n\n";
  text += "3 10 20 8 6";
  for (int j = 0; j < 16; ++j) text += " " + std::to_string(j) + " " + std::to_string(2 * j) + " " + (j == 6 ? "0" : "1");
  text += "  # trailing\n";
  const auto people = parse_keypoint_lines(text, 16);
  ASSERT_EQ(people.size(), 1u);
  EXPECT_EQ(people[0].image_id, 3);
  EXPECT_EQ(*people[0].head_box, (Box{10, 20, 8, 6}));
  EXPECT_EQ(people[0].keypoints[5].y, 10);
  EXPECT_EQ(people[0].keypoints[6].v, 0);
  const auto dir = temp_dir("lines");
  save_keypoint_lines(dir / "k.txt", people);
  EXPECT_EQ(load_keypoint_lines(dir / "k.txt", 16), people);
}

TEST(KeypointLines, ErrorsNameTheLine) {
  const auto e = expect_error([] { parse_keypoint_lines("# c\n1 2 3 4 5 6 7\n1 2 3 4 x 1 1 2\n", 1); });
  ASSERT_EQ(e.issues().size(), 2u);
  EXPECT_EQ(e.issues()[0].rfind("line 2: expected 8 fields, got 7", 0), 0u);
  EXPECT_EQ(e.issues()[1].rfind("line 3, field 5", 0), 0u);
}

TEST(Synthetic, SameSeedSameBytes) {
  SyntheticSpec spec;
  spec.num_images = 4;
  PoseDataset a = generate_synthetic(spec, 7), b = generate_synthetic(spec, 7);
  EXPECT_EQ(a.images, b.images);
  EXPECT_TRUE(a.annotations == b.annotations);
  const auto d1 = temp_dir("synth1"), d2 = temp_dir("synth2");
  write_dataset(d1, a);
  write_dataset(d2, b);
  EXPECT_EQ(slurp(d1 / "annotations.json"), slurp(d2 / "annotations.json"));
  EXPECT_EQ(slurp(d1 / "images/000003.ppm"), slurp(d2 / "images/000003.ppm"));
  EXPECT_NE(generate_synthetic(spec, 8).images, a.images);
}

TEST(Synthetic, ZeroPersonsGivesEmptyAnnotations) {
  SyntheticSpec spec;
  spec.num_images = 3;
  spec.persons_per_image = 0;
  const PoseDataset d = generate_synthetic(spec, 1);
  EXPECT_EQ(d.images.size(), 3u);
  EXPECT_EQ(d.annotations.images.size(), 3u);
  EXPECT_TRUE(d.annotations.instances.empty());
}

TEST(Synthetic, KeypointsInBoundsAndVisible) {
  for (int persons : {1, 2, 3}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      SyntheticSpec spec;
      spec.num_images = 5;
      spec.persons_per_image = persons;
      spec.width = 64 * persons;
      const PoseDataset d = generate_synthetic(spec, seed);
      ASSERT_EQ(d.annotations.instances.size(), static_cast<std::size_t>(5 * persons));
      EXPECT_NO_THROW(d.annotations.validate());
      for (const auto& p : d.annotations.instances) {
        for (const auto& k : p.keypoints) {
          EXPECT_EQ(k.v, 2);
          EXPECT_GE(k.x, spec.margin - 1e-9);
          EXPECT_LE(k.x, spec.width - spec.margin + 1e-9);
          EXPECT_GE(k.y, spec.margin - 1e-9);
          EXPECT_LE(k.y, spec.height - spec.margin + 1e-9);
        }
        // Facing the camera: the figure's left is on the image right.
        EXPECT_GT(p.keypoints[1].x, p.keypoints[2].x);
        EXPECT_GT(p.keypoints[3].x, p.keypoints[4].x);
        EXPECT_LT(p.keypoints[0].y, std::min(p.keypoints[3].y, p.keypoints[4].y));
        ASSERT_TRUE(p.head_box.has_value());
        EXPECT_GT(p.area, 0);
        const Box b = *p.keypoint_bounds();
        EXPECT_LE(p.box.x, b.x);
        EXPECT_GE(p.box.x + p.box.w, b.x + b.w);
      }
    }
  }
}

TEST(Synthetic, MirrorJointsShareColours) {
  EXPECT_EQ(joint_colour(1), joint_colour(2));
  EXPECT_EQ(joint_colour(3), joint_colour(4));
  EXPECT_NE(joint_colour(0), joint_colour(1));
  EXPECT_NE(joint_colour(1), joint_colour(3));
}

// Centroid of the blob intensity in a window around each recorded keypoint.
TEST(Synthetic, BlobCentroidsMatchKeypoints) {
  SyntheticSpec spec;
  spec.num_images = 40;
  spec.limb_width = 0;
  spec.noise = 0;
  const PoseDataset d = generate_synthetic(spec, 11);
  double worst = 0.0;
  for (const auto& p : d.annotations.instances) {
    const Image& im = d.images[static_cast<std::size_t>(p.image_id - 1)];
    float bg[3];
    for (int c = 0; c < 3; ++c) bg[c] = im.at(c, 0, 0);
    for (const auto& k : p.keypoints) {
      const double r = 2 * spec.blob_sigma;
      double sw = 0, sx = 0, sy = 0;
      for (int y = static_cast<int>(std::floor(k.y - r)); y <= static_cast<int>(std::ceil(k.y + r)); ++y) {
        for (int x = static_cast<int>(std::floor(k.x - r)); x <= static_cast<int>(std::ceil(k.x + r)); ++x) {
          if (x < 0 || y < 0 || x >= im.width || y >= im.height) continue;
          if (std::hypot(x - k.x, y - k.y) > r) continue;
          double w = 0;
          for (int c = 0; c < 3; ++c) w += std::abs(im.at(c, y, x) - bg[c]);
          sw += w;
          sx += w * x;
          sy += w * y;
        }
      }
      ASSERT_GT(sw, 0);
      worst = std::max(worst, std::hypot(sx / sw - k.x, sy / sw - k.y));
    }
  }
  EXPECT_LT(worst, 0.5);
}

TEST(Synthetic, InvalidSpecsAreRejected) {
  SyntheticSpec spec;
  spec.width = 8;
  EXPECT_THROW(generate_synthetic(spec, 0), std::invalid_argument);
  spec = {};
  spec.persons_per_image = 10;
  EXPECT_THROW(generate_synthetic(spec, 0), std::invalid_argument);
  spec = {};
  spec.blob_sigma = 0;
  EXPECT_THROW(generate_synthetic(spec, 0), std::invalid_argument);
}

TEST(Dataset, WriteReadRoundTrip) {
  SyntheticSpec spec;
  spec.num_images = 2;
  PoseDataset d = generate_synthetic(spec, 2);
  const auto dir = temp_dir("dataset");
  write_dataset(dir, d);
  EXPECT_EQ(d.annotations.images[1].file_name, "images/000002.ppm");
  const PoseDataset back = read_dataset(dir / "annotations.json");
  EXPECT_TRUE(back.annotations == d.annotations);
  ASSERT_EQ(back.images.size(), 2u);
  for (std::size_t i = 0; i < back.images[1].data.size(); ++i) {
    ASSERT_NEAR(back.images[1].data[i], d.images[1].data[i], 0.5 / 255 + 1e-6);
  }
  std::filesystem::remove(dir / "images/000001.ppm");
  EXPECT_THROW(read_dataset(dir / "annotations.json"), std::runtime_error);
}
