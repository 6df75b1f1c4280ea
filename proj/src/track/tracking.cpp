#include "hrpose/tracking.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

namespace hrpose {

void DisplacementField::validate() const {
  if (dense()) {
    if (height < 1) throw std::invalid_argument("DisplacementField: height must be positive");
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (dx.size() != n || dy.size() != n) {
      throw std::invalid_argument("DisplacementField: dense payload does not match " + std::to_string(width) +
                                  "x" + std::to_string(height));
    }
  } else if (width < 0 || height < 0) {
    throw std::invalid_argument("DisplacementField: negative size");
  }
}

DisplacementField::Displacement DisplacementField::sample(double x, double y) const {
  Displacement out;
  if (!dense()) {
    if (points.empty()) return out;
    double best = std::numeric_limits<double>::infinity();
    for (const Point& p : points) {
      const double d = (p.x - x) * (p.x - x) + (p.y - y) * (p.y - y);
      if (d < best) {
        best = d;
        out.dx = p.dx;
        out.dy = p.dy;
      }
    }
    return out;
  }
  out.clamped = !(x >= -0.5 && x <= width - 0.5 && y >= -0.5 && y <= height - 0.5);
  const double cx = std::clamp(x, 0.0, static_cast<double>(width - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(height - 1));
  const int x0 = std::min(static_cast<int>(std::floor(cx)), std::max(width - 2, 0));
  const int y0 = std::min(static_cast<int>(std::floor(cy)), std::max(height - 2, 0));
  const int x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
  const double fx = cx - x0, fy = cy - y0;
  auto lerp = [&](const std::vector<float>& v) {
    auto at = [&](int xx, int yy) { return static_cast<double>(v[static_cast<std::size_t>(yy) * width + xx]); };
    return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) + fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
  };
  out.dx = lerp(dx);
  out.dy = lerp(dy);
  return out;
}

DisplacementField DisplacementField::uniform(int width, int height, double ddx, double ddy, int from, int to) {
  return from_function(width, height, [&](double, double) { return std::pair{ddx, ddy}; }, from, to);
}

DisplacementField DisplacementField::from_function(
    int width, int height, const std::function<std::pair<double, double>(double, double)>& f, int from, int to) {
  if (width < 1 || height < 1) throw std::invalid_argument("DisplacementField: empty dense field");
  DisplacementField field;
  field.from_frame = from;
  field.to_frame = to;
  field.width = width;
  field.height = height;
  field.dx.resize(static_cast<std::size_t>(width) * height);
  field.dy.resize(field.dx.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto [a, b] = f(x, y);
      field.dx[static_cast<std::size_t>(y) * width + x] = static_cast<float>(a);
      field.dy[static_cast<std::size_t>(y) * width + x] = static_cast<float>(b);
    }
  }
  return field;
}

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  const unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                              static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

template <typename T>
bool get_le(std::istream& is, T& value) {
  static_assert(sizeof(T) == 4);
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  std::memcpy(&value, &bits, 4);
  return true;
}

}  // namespace

void write_fields_binary(const std::filesystem::path& path, const std::vector<DisplacementField>& fields) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  for (const auto& f : fields) {
    if (!f.dense()) throw std::invalid_argument("write_fields_binary: sparse fields go to JSON");
    f.validate();
    os.write("HRDF", 4);
    put_le<std::uint32_t>(os, 1);
    put_le<std::int32_t>(os, f.from_frame);
    put_le<std::int32_t>(os, f.to_frame);
    put_le<std::int32_t>(os, f.height);
    put_le<std::int32_t>(os, f.width);
    for (float v : f.dx) put_le(os, v);
    for (float v : f.dy) put_le(os, v);
  }
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

std::vector<DisplacementField> read_fields_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<DisplacementField> out;
  char magic[4];
  while (is.read(magic, 4)) {
    const std::string where = path.string() + " record " + std::to_string(out.size());
    if (std::memcmp(magic, "HRDF", 4) != 0) throw std::runtime_error(where + ": bad magic");
    std::uint32_t version = 0;
    DisplacementField f;
    std::int32_t from = 0, to = 0, h = 0, w = 0;
    if (!get_le(is, version) || !get_le(is, from) || !get_le(is, to) || !get_le(is, h) || !get_le(is, w)) {
      throw std::runtime_error(where + ": truncated header");
    }
    if (version != 1) throw std::runtime_error(where + ": unsupported version " + std::to_string(version));
    if (h < 1 || w < 1) throw std::runtime_error(where + ": non-positive size");
    f.from_frame = from;
    f.to_frame = to;
    f.height = h;
    f.width = w;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    f.dx.resize(n);
    f.dy.resize(n);
    for (auto* plane : {&f.dx, &f.dy}) {
      for (float& v : *plane) {
        if (!get_le(is, v)) throw std::runtime_error(where + ": truncated payload");
      }
    }
    out.push_back(std::move(f));
  }
  if (!is.eof() || is.gcount() != 0) throw std::runtime_error(path.string() + ": trailing bytes");
  return out;
}

nlohmann::json fields_to_json(const std::vector<DisplacementField>& fields) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : fields) {
    if (f.dense()) throw std::invalid_argument("fields_to_json: dense fields go to the binary format");
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : f.points) pts.push_back({p.x, p.y, p.dx, p.dy});
    out.push_back({{"from", f.from_frame}, {"to", f.to_frame}, {"points", pts}});
  }
  return out;
}

std::vector<DisplacementField> fields_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("displacement JSON: expected an array of fields");
  std::vector<DisplacementField> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    const std::string where = "displacement JSON field " + std::to_string(i);
    if (!e.is_object() || !e.contains("from") || !e.contains("to") || !e.contains("points")) {
      throw std::invalid_argument(where + ": needs from, to and points");
    }
    DisplacementField f;
    f.from_frame = e.at("from").get<int>();
    f.to_frame = e.at("to").get<int>();
    for (std::size_t p = 0; p < e.at("points").size(); ++p) {
      const auto& q = e.at("points")[p];
      if (!q.is_array() || q.size() != 4) {
        throw std::invalid_argument(where + " point " + std::to_string(p) + ": expected [x, y, dx, dy]");
      }
      f.points.push_back({q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()});
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<DisplacementField> read_fields(const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return fields_from_json(nlohmann::json::parse(is));
  }
  return read_fields_binary(path);
}

std::vector<PropagatedPose> propagate_poses(const std::vector<PersonInstance>& prev,
                                            const DisplacementField& field, double extension) {
  field.validate();
  std::vector<PropagatedPose> out;
  out.reserve(prev.size());
  for (const auto& p : prev) {
    PropagatedPose moved{p, p.box, false};
    for (auto& k : moved.pose.keypoints) {
      if (!k.labeled()) continue;
      const auto d = field.sample(k.x, k.y);
      k.x += d.dx;
      k.y += d.dy;
      moved.clamped = moved.clamped || d.clamped;
    }
    if (auto b = moved.pose.keypoint_bounds()) {
      const double w = std::max(b->w, 1.0) * (1.0 + extension);
      const double h = std::max(b->h, 1.0) * (1.0 + extension);
      moved.box = Box{b->cx() - w / 2, b->cy() - h / 2, w, h};
    }
    moved.pose.box = moved.box;
    out.push_back(std::move(moved));
  }
  return out;
}

std::vector<ScoredBox> propagate_boxes(const std::vector<PersonInstance>& prev, const DisplacementField& field,
                                       double extension) {
  std::vector<ScoredBox> out;
  for (const auto& m : propagate_poses(prev, field, extension)) {
    if (m.pose.num_labeled() == 0) continue;
    out.push_back({m.box, m.pose.score, m.pose.track_id});
  }
  return out;
}

std::vector<int> box_nms(const std::vector<ScoredBox>& boxes, double iou_threshold) {
  if (!(iou_threshold > 0 && iou_threshold < 1)) throw std::invalid_argument("box_nms: threshold must be in (0, 1)");
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return boxes[a].score > boxes[b].score; });
  std::vector<int> kept;
  for (int i : order) {
    bool suppressed = false;
    for (int k : kept) {
      if (box_iou(boxes[k].box, boxes[i].box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

namespace {

double reference_area(const PersonInstance& p) {
  if (p.area > 0) return p.area;
  if (p.box.area() > 0) return p.box.area();
  if (auto b = p.keypoint_bounds(); b && b->area() > 0) return b->area();
  return 1.0;
}

}  // namespace

std::vector<int> greedy_match(const std::vector<std::vector<double>>& sim, const std::vector<int>& prev_ids,
                              double floor) {
  struct Pair {
    double sim;
    int prev_id;
    int cur;
    int prev;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < sim.size(); ++c) {
    if (sim[c].size() != prev_ids.size()) throw std::invalid_argument("greedy_match: ragged similarity matrix");
    for (std::size_t p = 0; p < prev_ids.size(); ++p) {
      if (sim[c][p] >= floor) pairs.push_back({sim[c][p], prev_ids[p], static_cast<int>(c), static_cast<int>(p)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    if (a.prev_id != b.prev_id) return a.prev_id < b.prev_id;
    return a.cur < b.cur;
  });
  std::vector<int> match(sim.size(), -1);
  std::vector<char> prev_used(prev_ids.size(), 0);
  for (const Pair& p : pairs) {
    if (prev_used[p.prev] || match[p.cur] >= 0) continue;
    prev_used[p.prev] = 1;
    match[p.cur] = p.prev;
  }
  return match;
}

std::vector<PersonInstance> associate(const std::vector<PersonInstance>& prev, std::vector<PersonInstance> cur,
                                      const AssociationConfig& config, int& next_id) {
  std::vector<std::vector<double>> sim(cur.size(), std::vector<double>(prev.size(), 0.0));
  std::vector<int> prev_ids;
  for (const auto& p : prev) prev_ids.push_back(p.track_id);
  for (std::size_t c = 0; c < cur.size(); ++c) {
    if (cur[c].num_labeled() == 0) continue;
    PersonInstance ref = cur[c];
    ref.area = reference_area(cur[c]);
    for (std::size_t p = 0; p < prev.size(); ++p) {
      if (prev[p].keypoints.size() != cur[c].keypoints.size()) {
        throw std::invalid_argument("associate: keypoint count mismatch");
      }
      sim[c][p] = oks(ref, prev[p], config.falloff);
    }
  }
  const std::vector<int> match = greedy_match(sim, prev_ids, config.oks_floor);
  std::vector<char> cur_used(cur.size(), 0);
  for (std::size_t c = 0; c < cur.size(); ++c) {
    if (match[c] < 0) continue;
    cur[c].track_id = prev_ids[match[c]];
    cur_used[c] = 1;
  }
  std::vector<int> fresh;
  for (std::size_t c = 0; c < cur.size(); ++c) {
    if (!cur_used[c]) fresh.push_back(static_cast<int>(c));
  }
  auto anchor = [&](int c) {
    const auto b = cur[c].keypoint_bounds();
    return b ? std::pair{b->x, b->y} : std::pair{cur[c].box.x, cur[c].box.y};
  };
  std::stable_sort(fresh.begin(), fresh.end(), [&](int a, int b) {
    const auto pa = anchor(a), pb = anchor(b);
    if (pa != pb) return pa < pb;
    return cur[a].score > cur[b].score;
  });
  for (int c : fresh) cur[c].track_id = next_id++;
  return cur;
}

TrackResult track_sequence(const std::vector<SequenceFrame>& frames, const std::vector<DisplacementField>& fields,
                           const PoseEstimatorFn& estimate, const TrackerConfig& config,
                           const KeypointSchema& schema, const std::vector<PoseFrame>* gt, const MatchRule& rule) {
  if (!frames.empty() && fields.size() + 1 != frames.size()) {
    throw std::invalid_argument("track_sequence: need one displacement field per consecutive frame pair");
  }
  if (config.window < 1) throw std::invalid_argument("track_sequence: window must be at least 1");
  AssociationConfig assoc = config.association;
  if (assoc.falloff.empty()) assoc.falloff = schema.falloff();

  struct Track {
    PersonInstance pose;
    int last_seen;
  };
  std::vector<Track> tracks;
  int next_id = 0;
  TrackResult result;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const SequenceFrame& frame = frames[t];
    std::vector<ScoredBox> boxes = frame.detections;
    if (t > 0) {
      const DisplacementField& field = fields[t - 1];
      if (field.from_frame != frames[t - 1].frame_index || field.to_frame != frame.frame_index) {
        throw std::invalid_argument("track_sequence: field " + std::to_string(t - 1) +
                                    " does not connect frames " + std::to_string(frames[t - 1].frame_index) +
                                    " and " + std::to_string(frame.frame_index));
      }
      for (auto& tr : tracks) {
        auto moved = propagate_poses({tr.pose}, field, config.box_extension);
        tr.pose = moved.front().pose;
        if (config.propagate && tr.last_seen == static_cast<int>(t) - 1 && tr.pose.num_labeled() > 0) {
          boxes.push_back({moved.front().box, tr.pose.score, tr.pose.track_id});
        }
      }
    }
    std::vector<ScoredBox> kept;
    for (int i : box_nms(boxes, config.nms_iou)) kept.push_back(boxes[i]);
    std::vector<PersonInstance> poses = kept.empty() ? std::vector<PersonInstance>{} : estimate(frame, kept);
    for (auto& p : poses) p.image_id = frame.frame_index;

    std::vector<PersonInstance> candidates;
    for (const auto& tr : tracks) candidates.push_back(tr.pose);
    poses = associate(candidates, std::move(poses), assoc, next_id);

    for (const auto& p : poses) {
      auto it = std::find_if(tracks.begin(), tracks.end(), [&](const Track& tr) { return tr.pose.track_id == p.track_id; });
      if (it == tracks.end()) {
        tracks.push_back({p, static_cast<int>(t)});
      } else {
        *it = {p, static_cast<int>(t)};
      }
    }
    std::erase_if(tracks, [&](const Track& tr) { return static_cast<int>(t) - tr.last_seen >= config.window; });
    result.frames.push_back({frame.frame_index, std::move(poses)});
  }
  if (gt) result.mota = mota(result.frames, *gt, schema, rule);
  return result;
}

nlohmann::json tracks_to_json(const std::vector<PoseFrame>& frames) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& f : frames) {
    nlohmann::json rects = nlohmann::json::array();
    for (const auto& p : f.poses) {
      nlohmann::json points = nlohmann::json::array();
      for (std::size_t j = 0; j < p.keypoints.size(); ++j) {
        const auto& k = p.keypoints[j];
        if (!k.labeled()) continue;
        points.push_back({{"id", {j}}, {"x", {k.x}}, {"y", {k.y}}});
      }
      rects.push_back({{"track_id", {p.track_id}},
                       {"score", {p.score}},
                       {"x1", {p.box.x}},
                       {"y1", {p.box.y}},
                       {"x2", {p.box.x + p.box.w}},
                       {"y2", {p.box.y + p.box.h}},
                       {"annopoints", {{{"point", points}}}}});
    }
    char name[32];
    std::snprintf(name, sizeof name, "%06d.jpg", f.frame_index);
    list.push_back({{"image", {{{"name", name}}}}, {"imgnum", {f.frame_index}}, {"annorect", rects}});
  }
  return {{"annolist", list}};
}

std::vector<PoseFrame> tracks_from_json(const nlohmann::json& j, int num_keypoints) {
  if (!j.contains("annolist")) throw std::invalid_argument("tracks JSON: missing annolist");
  std::vector<PoseFrame> out;
  for (const auto& e : j.at("annolist")) {
    PoseFrame f;
    f.frame_index = e.at("imgnum").at(0).get<int>();
    for (const auto& r : e.at("annorect")) {
      PersonInstance p;
      p.track_id = r.at("track_id").at(0).get<int>();
      p.score = r.at("score").at(0).get<double>();
      const double x1 = r.at("x1").at(0).get<double>(), y1 = r.at("y1").at(0).get<double>();
      p.box = Box{x1, y1, r.at("x2").at(0).get<double>() - x1, r.at("y2").at(0).get<double>() - y1};
      p.keypoints.assign(static_cast<std::size_t>(num_keypoints), Keypoint{});
      for (const auto& pt : r.at("annopoints").at(0).at("point")) {
        const int id = pt.at("id").at(0).get<int>();
        if (id < 0 || id >= num_keypoints) {
          throw std::invalid_argument("tracks JSON frame " + std::to_string(f.frame_index) + ": keypoint id " +
                                      std::to_string(id) + " out of range");
        }
        p.keypoints[id] = {pt.at("x").at(0).get<double>(), pt.at("y").at(0).get<double>(), 2};
      }
      p.image_id = f.frame_index;
      f.poses.push_back(std::move(p));
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace hrpose
