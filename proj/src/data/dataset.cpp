#include "hrpose/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hrpose {

using nlohmann::json;

namespace {

std::string join_issues(const std::string& source, const std::vector<std::string>& issues) {
  std::ostringstream os;
  os << source << ": " << issues.size() << " problem" << (issues.size() == 1 ? "" : "s");
  const std::size_t shown = std::min<std::size_t>(issues.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) os << "\n  " << issues[i];
  if (shown < issues.size()) os << "\n  ... " << issues.size() - shown << " more";
  return os.str();
}

class Issues {
 public:
  void add(const std::string& where, const std::string& what) { list_.push_back(where + ": " + what); }
  bool empty() const { return list_.empty(); }
  void raise_if_any(const std::string& source) {
    if (!list_.empty()) throw AnnotationError(source, std::move(list_));
  }

 private:
  std::vector<std::string> list_;
};

std::string ptr(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }
std::string ptr(const std::string& base, const std::string& key) { return base + "/" + key; }

bool is_integral(const json& v) {
  if (v.is_number_integer()) return true;
  if (!v.is_number_float()) return false;
  const double d = v.get<double>();
  return std::isfinite(d) && d == std::floor(d);
}

// Optional numeric members; a present member of the wrong type is an issue.
std::optional<double> number_at(const json& obj, const std::string& key, const std::string& where,
                                Issues& issues) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) {
    issues.add(ptr(where, key), "expected a number");
    return std::nullopt;
  }
  return it->get<double>();
}

std::optional<std::int64_t> integer_at(const json& obj, const std::string& key, const std::string& where,
                                       Issues& issues) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!is_integral(*it)) {
    issues.add(ptr(where, key), "expected an integer");
    return std::nullopt;
  }
  return it->get<std::int64_t>();
}

std::optional<Box> box_at(const json& obj, const std::string& key, const std::string& where, Issues& issues) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  const std::string at = ptr(where, key);
  if (!it->is_array() || it->size() != 4) {
    issues.add(at, "expected [x, y, w, h]");
    return std::nullopt;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(*it)[i].is_number()) {
      issues.add(ptr(at, i), "expected a number");
      return std::nullopt;
    }
  }
  Box b{(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>(), (*it)[3].get<double>()};
  if (b.w < 0 || b.h < 0) issues.add(at, "negative box extent");
  return b;
}

std::vector<Keypoint> keypoints_at(const json& obj, int k, const std::string& where, Issues& issues) {
  const auto it = obj.find("keypoints");
  const std::string at = ptr(where, "keypoints");
  if (it == obj.end()) {
    issues.add(at, "missing");
    return {};
  }
  if (!it->is_array()) {
    issues.add(at, "expected an array");
    return {};
  }
  if (it->size() != static_cast<std::size_t>(3 * k)) {
    issues.add(at, "expected " + std::to_string(3 * k) + " values (3 x " + std::to_string(k) +
                       " keypoints), got " + std::to_string(it->size()));
    return {};
  }
  std::vector<Keypoint> kps(static_cast<std::size_t>(k));
  bool ok = true;
  for (int j = 0; j < k; ++j) {
    const json& x = (*it)[3 * j];
    const json& y = (*it)[3 * j + 1];
    const json& v = (*it)[3 * j + 2];
    if (!x.is_number()) ok = false, issues.add(ptr(at, 3 * j), "expected a number");
    if (!y.is_number()) ok = false, issues.add(ptr(at, 3 * j + 1), "expected a number");
    if (!is_integral(v) || v.get<double>() < 0 || v.get<double>() > 2) {
      ok = false;
      issues.add(ptr(at, 3 * j + 2), "visibility must be 0, 1 or 2");
    }
    if (ok) kps[j] = {x.get<double>(), y.get<double>(), v.get<int>()};
  }
  return ok ? kps : std::vector<Keypoint>{};
}

json box_json(const Box& b) { return json::array({b.x, b.y, b.w, b.h}); }

json keypoints_json(const std::vector<Keypoint>& kps) {
  json out = json::array();
  for (const auto& k : kps) {
    out.push_back(k.x);
    out.push_back(k.y);
    out.push_back(k.v);
  }
  return out;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  const std::size_t index = std::min(byte > 0 ? byte - 1 : 0, text.size());
  const auto begin = text.begin(), at = text.begin() + static_cast<std::ptrdiff_t>(index);
  const std::size_t line = 1 + static_cast<std::size_t>(std::count(begin, at, '\n'));
  const std::size_t last = text.rfind('\n', index == 0 ? std::string::npos : index - 1);
  const std::size_t column = last == std::string::npos || index == 0 ? index + 1 : index - last;
  return {line, column};
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

AnnotationError::AnnotationError(const std::string& source, std::vector<std::string> issues)
    : std::runtime_error(join_issues(source, issues)), issues_(std::move(issues)) {}

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is the 1-based offset of the offending character.
    const auto [line, column] = line_column(text, e.byte);
    std::string message = e.what();
    const auto cut = message.find("syntax error");
    if (cut != std::string::npos) message = message.substr(cut);
    throw AnnotationError(source, {std::to_string(line) + ":" + std::to_string(column) + ": " + message});
  }
}

json read_json_file(const std::filesystem::path& path) { return parse_json_text(read_text(path), path.string()); }

void write_json_file(const std::filesystem::path& path, const json& j, int indent) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(indent) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

KeypointSchema schema_from_names(const std::vector<std::string>& names) {
  for (const auto& known : {KeypointSchema::coco17(), KeypointSchema::mpii16(), KeypointSchema::toy5()}) {
    if (known.names == names) return known;
  }
  KeypointSchema s;
  s.name = "custom";
  s.names = names;
  s.sigmas.assign(names.size(), 0.08);
  const auto side = [](const std::string& n, const std::string& a, const std::string& b) -> std::optional<std::string> {
    if (n.rfind(a, 0) == 0) return b + n.substr(a.size());
    return std::nullopt;
  };
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (const auto& [from, to] : {std::pair{"left_", "right_"}, std::pair{"l_", "r_"}}) {
      const auto mirror = side(names[i], from, to);
      if (!mirror) continue;
      const auto it = std::find(names.begin(), names.end(), *mirror);
      if (it != names.end()) s.flip_pairs.emplace_back(static_cast<int>(i), static_cast<int>(it - names.begin()));
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) s.upper_body.push_back(static_cast<int>(i));
  return s;
}

const ImageRecord* AnnotationSet::find_image(std::int64_t id) const {
  const auto it = std::find_if(images.begin(), images.end(), [&](const ImageRecord& r) { return r.id == id; });
  return it == images.end() ? nullptr : &*it;
}

std::vector<const PersonInstance*> AnnotationSet::instances_for(std::int64_t image_id) const {
  std::vector<const PersonInstance*> out;
  for (const auto& p : instances) {
    if (p.image_id == image_id) out.push_back(&p);
  }
  return out;
}

void AnnotationSet::validate() const {
  Issues issues;
  std::set<std::int64_t> ids;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!ids.insert(images[i].id).second) issues.add(ptr("/images", i), "duplicate image id");
    if (images[i].width <= 0 || images[i].height <= 0) issues.add(ptr("/images", i), "image size must be positive");
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& p = instances[i];
    const std::string at = ptr("/annotations", i);
    if (!ids.count(p.image_id)) issues.add(at, "image_id " + std::to_string(p.image_id) + " is not listed");
    if (static_cast<int>(p.keypoints.size()) != schema.size()) {
      issues.add(at, std::to_string(p.keypoints.size()) + " keypoints, schema has " + std::to_string(schema.size()));
    }
  }
  issues.raise_if_any("annotation set");
}

bool AnnotationSet::operator==(const AnnotationSet& other) const {
  return schema == other.schema && images == other.images && instances == other.instances;
}

AnnotationSet parse_annotations(const json& j, const std::optional<KeypointSchema>& schema,
                                const std::string& source) {
  Issues issues;
  if (!j.is_object()) {
    issues.add("", "expected an object with images, annotations and categories");
    issues.raise_if_any(source);
  }
  AnnotationSet set;

  std::optional<KeypointSchema> from_file;
  std::set<std::int64_t> category_ids;
  if (j.contains("categories")) {
    const json& cats = j["categories"];
    if (!cats.is_array()) {
      issues.add("/categories", "expected an array");
    } else {
      for (std::size_t i = 0; i < cats.size(); ++i) {
        const std::string at = ptr("/categories", i);
        if (!cats[i].is_object()) {
          issues.add(at, "expected an object");
          continue;
        }
        if (const auto id = integer_at(cats[i], "id", at, issues)) category_ids.insert(*id);
        if (!cats[i].contains("keypoints")) continue;
        const json& names = cats[i]["keypoints"];
        if (!names.is_array() || !std::all_of(names.begin(), names.end(), [](const json& n) { return n.is_string(); })) {
          issues.add(ptr(at, "keypoints"), "expected an array of names");
          continue;
        }
        KeypointSchema s = schema_from_names(names.get<std::vector<std::string>>());
        if (cats[i].contains("sigmas")) {
          const json& sig = cats[i]["sigmas"];
          if (sig.is_array() && sig.size() == names.size() &&
              std::all_of(sig.begin(), sig.end(), [](const json& v) { return v.is_number(); })) {
            s.sigmas = sig.get<std::vector<double>>();
          } else {
            issues.add(ptr(at, "sigmas"), "expected one number per keypoint");
          }
        }
        if (cats[i].contains("flip_pairs")) {
          try {
            s.flip_pairs = cats[i]["flip_pairs"].get<std::vector<std::pair<int, int>>>();
          } catch (const json::exception&) {
            issues.add(ptr(at, "flip_pairs"), "expected [[a, b], ...]");
          }
        }
        if (cats[i].contains("skeleton")) {
          try {
            s.skeleton.clear();
            for (const auto& [a, b] : cats[i]["skeleton"].get<std::vector<std::pair<int, int>>>()) {
              s.skeleton.emplace_back(a - 1, b - 1);
            }
          } catch (const json::exception&) {
            issues.add(ptr(at, "skeleton"), "expected [[a, b], ...]");
          }
        }
        if (from_file && from_file->names != s.names) {
          issues.add(ptr(at, "keypoints"), "categories disagree on keypoint names");
        }
        if (!from_file) from_file = std::move(s);
      }
    }
  }
  if (schema) {
    set.schema = *schema;
    if (from_file && from_file->size() != schema->size()) {
      issues.add("/categories", "file lists " + std::to_string(from_file->size()) + " keypoints, expected " +
                                    std::to_string(schema->size()));
    }
  } else if (from_file) {
    set.schema = *from_file;
  } else {
    issues.add("/categories", "no keypoint names and no schema given");
  }
  const int k = set.schema.size();

  std::set<std::int64_t> image_ids;
  if (!j.contains("images") || !j["images"].is_array()) {
    issues.add("/images", "expected an array");
  } else {
    const json& images = j["images"];
    for (std::size_t i = 0; i < images.size(); ++i) {
      const std::string at = ptr("/images", i);
      if (!images[i].is_object()) {
        issues.add(at, "expected an object");
        continue;
      }
      ImageRecord r;
      const auto id = integer_at(images[i], "id", at, issues);
      if (!id) {
        if (!images[i].contains("id")) issues.add(ptr(at, "id"), "missing");
        continue;
      }
      r.id = *id;
      r.width = static_cast<int>(integer_at(images[i], "width", at, issues).value_or(0));
      r.height = static_cast<int>(integer_at(images[i], "height", at, issues).value_or(0));
      if (images[i].contains("file_name")) {
        if (images[i]["file_name"].is_string()) {
          r.file_name = images[i]["file_name"].get<std::string>();
        } else {
          issues.add(ptr(at, "file_name"), "expected a string");
        }
      }
      if (!image_ids.insert(r.id).second) issues.add(ptr(at, "id"), "duplicate image id " + std::to_string(r.id));
      set.images.push_back(std::move(r));
    }
  }

  if (!j.contains("annotations") || !j["annotations"].is_array()) {
    issues.add("/annotations", "expected an array");
  } else {
    const json& anns = j["annotations"];
    for (std::size_t i = 0; i < anns.size(); ++i) {
      const std::string at = ptr("/annotations", i);
      if (!anns[i].is_object()) {
        issues.add(at, "expected an object");
        continue;
      }
      const json& a = anns[i];
      PersonInstance p;
      p.id = integer_at(a, "id", at, issues).value_or(static_cast<std::int64_t>(i) + 1);
      const auto image_id = integer_at(a, "image_id", at, issues);
      if (!image_id) {
        if (!a.contains("image_id")) issues.add(ptr(at, "image_id"), "missing");
      } else {
        p.image_id = *image_id;
        if (!image_ids.count(p.image_id)) {
          issues.add(ptr(at, "image_id"), "image " + std::to_string(p.image_id) + " is not listed");
        }
      }
      p.category_id = static_cast<int>(integer_at(a, "category_id", at, issues).value_or(1));
      if (!category_ids.empty() && !category_ids.count(p.category_id)) {
        issues.add(ptr(at, "category_id"), "category " + std::to_string(p.category_id) + " is not listed");
      }
      if (k > 0) p.keypoints = keypoints_at(a, k, at, issues);
      if (const auto n = integer_at(a, "num_keypoints", at, issues);
          n && !p.keypoints.empty() && *n != p.num_labeled()) {
        issues.add(ptr(at, "num_keypoints"),
                   "says " + std::to_string(*n) + ", keypoints label " + std::to_string(p.num_labeled()));
      }
      const auto bbox = box_at(a, "bbox", at, issues);
      if (bbox) {
        p.box = *bbox;
      } else if (const auto bounds = p.keypoint_bounds()) {
        p.box = *bounds;
      }
      p.area = number_at(a, "area", at, issues).value_or(p.box.area());
      p.score = number_at(a, "score", at, issues).value_or(1.0);
      p.head_box = box_at(a, "head_box", at, issues);
      p.track_id = static_cast<int>(integer_at(a, "track_id", at, issues).value_or(-1));
      if (a.contains("iscrowd")) {
        const json& c = a["iscrowd"];
        if (c.is_boolean()) {
          p.crowd = c.get<bool>();
        } else if (is_integral(c)) {
          p.crowd = c.get<int>() != 0;
        } else {
          issues.add(ptr(at, "iscrowd"), "expected 0 or 1");
        }
      }
      set.instances.push_back(std::move(p));
    }
  }
  issues.raise_if_any(source);
  return set;
}

AnnotationSet load_annotations(const std::filesystem::path& path, const std::optional<KeypointSchema>& schema) {
  return parse_annotations(read_json_file(path), schema, path.string());
}

json annotations_to_json(const AnnotationSet& set) {
  json images = json::array();
  for (const auto& r : set.images) {
    images.push_back({{"id", r.id}, {"width", r.width}, {"height", r.height}, {"file_name", r.file_name}});
  }
  json anns = json::array();
  std::set<int> category_ids;
  for (const auto& p : set.instances) {
    category_ids.insert(p.category_id);
    json a = {{"id", p.id},
              {"image_id", p.image_id},
              {"category_id", p.category_id},
              {"keypoints", keypoints_json(p.keypoints)},
              {"num_keypoints", p.num_labeled()},
              {"bbox", box_json(p.box)},
              {"area", p.area},
              {"iscrowd", p.crowd ? 1 : 0}};
    if (p.score != 1.0) a["score"] = p.score;
    if (p.head_box) a["head_box"] = box_json(*p.head_box);
    if (p.track_id >= 0) a["track_id"] = p.track_id;
    anns.push_back(std::move(a));
  }
  if (category_ids.empty()) category_ids.insert(1);
  json skeleton = json::array();
  for (const auto& [a, b] : set.schema.skeleton) skeleton.push_back({a + 1, b + 1});
  json cats = json::array();
  for (const int id : category_ids) {
    cats.push_back({{"id", id},
                    {"name", "person"},
                    {"keypoints", set.schema.names},
                    {"skeleton", skeleton},
                    {"sigmas", set.schema.sigmas},
                    {"flip_pairs", set.schema.flip_pairs}});
  }
  return {{"images", images}, {"annotations", anns}, {"categories", cats}};
}

void save_annotations(const std::filesystem::path& path, const AnnotationSet& set) {
  write_json_file(path, annotations_to_json(set));
}

json results_to_json(const std::vector<PersonInstance>& results) {
  json out = json::array();
  for (const auto& p : results) {
    out.push_back({{"image_id", p.image_id},
                   {"category_id", p.category_id},
                   {"keypoints", keypoints_json(p.keypoints)},
                   {"score", p.score},
                   {"bbox", box_json(p.box)}});
    if (p.track_id >= 0) out.back()["track_id"] = p.track_id;
  }
  return out;
}

std::vector<PersonInstance> results_from_json(const json& j, int num_keypoints, const std::string& source) {
  Issues issues;
  std::vector<PersonInstance> out;
  if (!j.is_array()) {
    issues.add("", "expected an array of results");
    issues.raise_if_any(source);
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = ptr("", i);
    if (!j[i].is_object()) {
      issues.add(at, "expected an object");
      continue;
    }
    PersonInstance p;
    const auto image_id = integer_at(j[i], "image_id", at, issues);
    if (!image_id && !j[i].contains("image_id")) issues.add(ptr(at, "image_id"), "missing");
    p.image_id = image_id.value_or(0);
    p.category_id = static_cast<int>(integer_at(j[i], "category_id", at, issues).value_or(1));
    p.keypoints = keypoints_at(j[i], num_keypoints, at, issues);
    const auto score = number_at(j[i], "score", at, issues);
    if (!score && !j[i].contains("score")) issues.add(ptr(at, "score"), "missing");
    p.score = score.value_or(0.0);
    if (const auto b = box_at(j[i], "bbox", at, issues)) {
      p.box = *b;
    } else if (const auto bounds = p.keypoint_bounds()) {
      p.box = *bounds;
    }
    p.area = p.box.area();
    p.track_id = static_cast<int>(integer_at(j[i], "track_id", at, issues).value_or(-1));
    out.push_back(std::move(p));
  }
  issues.raise_if_any(source);
  return out;
}

void save_results(const std::filesystem::path& path, const std::vector<PersonInstance>& results) {
  write_json_file(path, results_to_json(results));
}

std::vector<PersonInstance> load_results(const std::filesystem::path& path, int num_keypoints) {
  return results_from_json(read_json_file(path), num_keypoints, path.string());
}

std::vector<PersonInstance> parse_keypoint_lines(const std::string& text, int num_keypoints,
                                                 const std::string& source) {
  Issues issues;
  std::vector<PersonInstance> out;
  std::istringstream in(text);
  std::string line;
  const std::size_t expected = 5 + 3 * static_cast<std::size_t>(num_keypoints);
  for (int number = 1; std::getline(in, line); ++number) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    const std::string at = "line " + std::to_string(number);
    if (tokens.size() != expected) {
      issues.add(at, "expected " + std::to_string(expected) + " fields, got " + std::to_string(tokens.size()));
      continue;
    }
    std::vector<double> v(tokens.size());
    bool ok = true;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::size_t used = 0;
      try {
        v[i] = std::stod(tokens[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tokens[i].size()) {
        issues.add(at + ", field " + std::to_string(i + 1), "not a number: '" + tokens[i] + "'");
        ok = false;
      }
    }
    if (!ok) continue;
    PersonInstance p;
    p.image_id = static_cast<std::int64_t>(v[0]);
    if (static_cast<double>(p.image_id) != v[0]) issues.add(at + ", field 1", "image id must be an integer");
    p.head_box = Box{v[1], v[2], v[3], v[4]};
    for (int j = 0; j < num_keypoints; ++j) {
      const double vis = v[5 + 3 * j + 2];
      if (vis != 0 && vis != 1 && vis != 2) {
        issues.add(at + ", field " + std::to_string(5 + 3 * j + 3), "visibility must be 0, 1 or 2");
      }
      p.keypoints.push_back({v[5 + 3 * j], v[5 + 3 * j + 1], static_cast<int>(vis)});
    }
    if (const auto bounds = p.keypoint_bounds()) p.box = *bounds;
    p.area = p.box.area();
    p.id = static_cast<std::int64_t>(out.size()) + 1;
    out.push_back(std::move(p));
  }
  issues.raise_if_any(source);
  return out;
}

std::vector<PersonInstance> load_keypoint_lines(const std::filesystem::path& path, int num_keypoints) {
  return parse_keypoint_lines(read_text(path), num_keypoints, path.string());
}

void save_keypoint_lines(const std::filesystem::path& path, const std::vector<PersonInstance>& instances) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "# image_id head_x head_y head_w head_h then x y v per joint\n";
  for (const auto& p : instances) {
    const Box h = p.head_box.value_or(Box{});
    out << p.image_id << ' ' << h.x << ' ' << h.y << ' ' << h.w << ' ' << h.h;
    for (const auto& k : p.keypoints) out << ' ' << k.x << ' ' << k.y << ' ' << k.v;
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_dataset(const std::filesystem::path& dir, PoseDataset& data) {
  if (data.images.size() != data.annotations.images.size()) {
    throw std::invalid_argument("write_dataset: one image per image record required");
  }
  std::filesystem::create_directories(dir / "images");
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "images/%06lld.ppm", static_cast<long long>(data.annotations.images[i].id));
    data.annotations.images[i].file_name = name;
    save_pnm(dir / name, data.images[i]);
  }
  save_annotations(dir / "annotations.json", data.annotations);
}

PoseDataset read_dataset(const std::filesystem::path& annotations, const std::optional<KeypointSchema>& schema,
                         const std::filesystem::path& image_root) {
  PoseDataset data;
  data.annotations = load_annotations(annotations, schema);
  const std::filesystem::path root = image_root.empty() ? annotations.parent_path() : image_root;
  for (const auto& r : data.annotations.images) {
    if (r.file_name.empty()) throw std::runtime_error("image " + std::to_string(r.id) + " has no file_name");
    Image im = load_pnm(root / r.file_name);
    if (im.width != r.width || im.height != r.height) {
      throw std::runtime_error(r.file_name + ": size " + std::to_string(im.width) + "x" + std::to_string(im.height) +
                               " differs from the annotation " + std::to_string(r.width) + "x" +
                               std::to_string(r.height));
    }
    data.images.push_back(std::move(im));
  }
  return data;
}

}  // namespace hrpose
