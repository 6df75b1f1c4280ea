#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrpose/image.hpp"
#include "hrpose/keypoints.hpp"

namespace hrpose {

struct ImageRecord {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;
  bool operator==(const ImageRecord&) const = default;
};

struct AnnotationSet {
  KeypointSchema schema;
  std::vector<ImageRecord> images;
  std::vector<PersonInstance> instances;

  const ImageRecord* find_image(std::int64_t id) const;
  std::vector<const PersonInstance*> instances_for(std::int64_t image_id) const;
  // Throws AnnotationError listing every violation.
  void validate() const;
  bool operator==(const AnnotationSet& other) const;
};

// Every problem found in an annotation file, each prefixed by its location:
// "line:column" for syntax errors, a JSON pointer for schema violations.
class AnnotationError : public std::runtime_error {
 public:
  AnnotationError(const std::string& source, std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

// COCO keypoint layout: {"images": [{id, width, height, file_name}],
// "annotations": [{id, image_id, category_id, keypoints: [x, y, v] * K,
// num_keypoints, bbox: [x, y, w, h], area, iscrowd, head_box?, track_id?}],
// "categories": [{id, name, keypoints: [names], skeleton: [[a, b]] (1-based)}]}.
// Without an explicit schema it is taken from the category keypoint names.
AnnotationSet parse_annotations(const nlohmann::json& j, const std::optional<KeypointSchema>& schema = {},
                                const std::string& source = "<json>");
AnnotationSet load_annotations(const std::filesystem::path& path,
                               const std::optional<KeypointSchema>& schema = {});
nlohmann::json annotations_to_json(const AnnotationSet& set);
void save_annotations(const std::filesystem::path& path, const AnnotationSet& set);

// Keypoint schema for a list of joint names: a built-in one when the names
// match, otherwise pairs inferred from "left_"/"right_" prefixes.
KeypointSchema schema_from_names(const std::vector<std::string>& names);

// COCO results: [{image_id, category_id, keypoints, score, bbox?}].
nlohmann::json results_to_json(const std::vector<PersonInstance>& results);
std::vector<PersonInstance> results_from_json(const nlohmann::json& j, int num_keypoints,
                                              const std::string& source = "<json>");
void save_results(const std::filesystem::path& path, const std::vector<PersonInstance>& results);
std::vector<PersonInstance> load_results(const std::filesystem::path& path, int num_keypoints);

// One person per line: image_id, head box x y w h, then x y v for each joint.
// '#' starts a comment; blank lines are ignored.
std::vector<PersonInstance> parse_keypoint_lines(const std::string& text, int num_keypoints,
                                                 const std::string& source = "<text>");
std::vector<PersonInstance> load_keypoint_lines(const std::filesystem::path& path, int num_keypoints);
void save_keypoint_lines(const std::filesystem::path& path, const std::vector<PersonInstance>& instances);

struct PoseDataset {
  std::vector<Image> images;  // parallel to annotations.images
  AnnotationSet annotations;
};

// images/NNNNNN.ppm plus annotations.json under `dir`; file names are rewritten.
void write_dataset(const std::filesystem::path& dir, PoseDataset& data);
// Loads an annotation file and the images it lists, relative to `image_root`
// (default: the annotation file's directory).
PoseDataset read_dataset(const std::filesystem::path& annotations, const std::optional<KeypointSchema>& schema = {},
                         const std::filesystem::path& image_root = {});

// Parses text, reporting syntax errors as "source:line:column: message".
nlohmann::json parse_json_text(const std::string& text, const std::string& source);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j, int indent = -1);

}  // namespace hrpose
