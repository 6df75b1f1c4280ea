#include "hrpose/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hrpose/checkpoint.hpp"
#include "hrpose/ops.hpp"
#include "hrpose/random.hpp"

namespace hrpose {

namespace {

const std::vector<std::string> kSpecKeys = {"arch",         "width",        "num_keypoints", "stage_blocks",
                                            "units_per_block", "branch_units", "stage1_units", "stage1_width",
                                            "stem_width",   "fusion",       "all_branches_from_start",
                                            "head_branch"};

std::vector<std::string> make_known_keys() {
  std::vector<std::string> keys = {"data.schema",
                                   "data.annotations",
                                   "data.images",
                                   "input.width",
                                   "input.height",
                                   "input.box_padding",
                                   "target.sigma",
                                   "aug.enabled",
                                   "aug.rotation",
                                   "aug.rotation_probability",
                                   "aug.scale_min",
                                   "aug.scale_max",
                                   "aug.flip",
                                   "aug.half_body",
                                   "aug.half_body_min_visible",
                                   "aug.half_body_padding",
                                   "train.lr",
                                   "train.lr_milestones",
                                   "train.epochs",
                                   "train.max_steps",
                                   "train.batch_size",
                                   "train.seed",
                                   "train.checkpoint_every",
                                   "output.dir"};
  for (const auto& k : kSpecKeys) keys.push_back("model." + k);
  return keys;
}

// "170:1e-4, 200:1e-5"
std::vector<std::pair<int, double>> parse_milestones(const std::string& text, const std::string& where) {
  std::vector<std::pair<int, double>> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto colon = item.find(':');
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      if (colon == std::string::npos) throw std::invalid_argument(item);
      std::size_t a = 0, b = 0;
      const std::string epoch = item.substr(0, colon), lr = item.substr(colon + 1);
      const int e = std::stoi(epoch, &a);
      const double v = std::stod(lr, &b);
      if (epoch.find_first_not_of(" \t", a) != std::string::npos || lr.find_first_not_of(" \t", b) != std::string::npos) {
        throw std::invalid_argument(item);
      }
      out.emplace_back(e, v);
    } catch (const std::exception&) {
      throw ConfigError(where + ": expected 'epoch:lr' pairs, got '" + text + "'");
    }
  }
  return out;
}

// Shortest text that parses back to the same value.
std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

int heatmap_stride(const HRNetSpec& spec) { return 1 << (spec.head_branch + 1); }

std::string epoch_stem(int epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%04d", epoch);
  return name;
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = make_known_keys();
  return keys;
}

EstimatorConfig RunConfig::estimator() const {
  EstimatorConfig e;
  e.input_width = input_width;
  e.input_height = input_height;
  e.box_padding = box_padding;
  e.batch_size = std::max(1, batch_size);
  return e;
}

void RunConfig::validate() const {
  model.validate();
  const KeypointSchema s = keypoint_schema();
  if (s.size() != model.num_keypoints) {
    throw ConfigError("model.num_keypoints = " + std::to_string(model.num_keypoints) + " but schema " + schema +
                      " has " + std::to_string(s.size()) + " keypoints");
  }
  if (input_width <= 0 || input_height <= 0 || input_width % 32 != 0 || input_height % 32 != 0) {
    throw ConfigError("input size " + std::to_string(input_width) + "x" + std::to_string(input_height) +
                      " must be positive multiples of 32");
  }
  if (batch_size < 2) throw ConfigError("train.batch_size must be at least 2 (batch statistics)");
  if (epochs < 1) throw ConfigError("train.epochs must be positive");
  if (!(lr > 0)) throw ConfigError("train.lr must be positive");
  if (!(target_sigma > 0)) throw ConfigError("target.sigma must be positive");
  if (!(box_padding > 0)) throw ConfigError("input.box_padding must be positive");
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be non-negative");
  (void)schedule();
}

RunConfig RunConfig::from_config(const KeyValueConfig& cfg) {
  cfg.require_known(known_keys());
  RunConfig r;
  const KeyValueConfig model = cfg.section("model");
  if (!model.values().empty()) {
    std::ostringstream text;
    for (const auto& [k, v] : model.values()) text << k << " = " << v << "\n";
    r.model = parse_hrnet_spec(text.str(), r.model);
  }
  if (cfg.has("data.schema")) r.schema = cfg.get_string("data.schema");
  if (!model.has("num_keypoints") && model.has("arch")) {
    r.model.num_keypoints = KeypointSchema::by_name(r.schema).size();
  }
  if (cfg.has("data.annotations")) r.annotations = cfg.get_string("data.annotations");
  if (cfg.has("data.images")) r.image_root = cfg.get_string("data.images");
  if (cfg.has("input.width")) r.input_width = cfg.get_int("input.width");
  if (cfg.has("input.height")) r.input_height = cfg.get_int("input.height");
  if (cfg.has("input.box_padding")) r.box_padding = cfg.get_double("input.box_padding");
  if (cfg.has("target.sigma")) r.target_sigma = cfg.get_double("target.sigma");
  if (cfg.has("aug.enabled")) r.augment = cfg.get_bool("aug.enabled");
  auto& a = r.augmentation;
  if (cfg.has("aug.rotation")) a.rotation_range = cfg.get_double("aug.rotation");
  if (cfg.has("aug.rotation_probability")) a.rotation_probability = cfg.get_double("aug.rotation_probability");
  if (cfg.has("aug.scale_min")) a.scale_min = cfg.get_double("aug.scale_min");
  if (cfg.has("aug.scale_max")) a.scale_max = cfg.get_double("aug.scale_max");
  if (cfg.has("aug.flip")) a.flip_probability = cfg.get_double("aug.flip");
  if (cfg.has("aug.half_body")) a.half_body_probability = cfg.get_double("aug.half_body");
  if (cfg.has("aug.half_body_min_visible")) a.half_body_min_visible = cfg.get_int("aug.half_body_min_visible");
  if (cfg.has("aug.half_body_padding")) a.half_body_padding = cfg.get_double("aug.half_body_padding");
  if (cfg.has("train.lr")) r.lr = cfg.get_double("train.lr");
  if (cfg.has("train.lr_milestones")) {
    r.lr_milestones = parse_milestones(cfg.get_string("train.lr_milestones"), "train.lr_milestones");
  }
  if (cfg.has("train.epochs")) r.epochs = cfg.get_int("train.epochs");
  if (cfg.has("train.max_steps")) r.max_steps = cfg.get_int("train.max_steps");
  if (cfg.has("train.batch_size")) r.batch_size = cfg.get_int("train.batch_size");
  if (cfg.has("train.seed")) r.seed = static_cast<std::uint64_t>(std::stoull(cfg.get_string("train.seed")));
  if (cfg.has("train.checkpoint_every")) r.checkpoint_every = cfg.get_int("train.checkpoint_every");
  if (cfg.has("output.dir")) r.output_dir = cfg.get_string("output.dir");
  r.validate();
  return r;
}

KeyValueConfig RunConfig::to_config() const {
  KeyValueConfig c;
  std::istringstream spec(format_hrnet_spec(model));
  for (std::string line; std::getline(spec, line);) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) c.set("model." + line.substr(0, eq), line.substr(eq + 3));
  }
  c.set("data.schema", schema);
  if (!annotations.empty()) c.set("data.annotations", annotations.string());
  if (!image_root.empty()) c.set("data.images", image_root.string());
  c.set("input.width", std::to_string(input_width));
  c.set("input.height", std::to_string(input_height));
  c.set("input.box_padding", format_double(box_padding));
  c.set("target.sigma", format_double(target_sigma));
  c.set("aug.enabled", augment ? "true" : "false");
  c.set("aug.rotation", format_double(augmentation.rotation_range));
  c.set("aug.rotation_probability", format_double(augmentation.rotation_probability));
  c.set("aug.scale_min", format_double(augmentation.scale_min));
  c.set("aug.scale_max", format_double(augmentation.scale_max));
  c.set("aug.flip", format_double(augmentation.flip_probability));
  c.set("aug.half_body", format_double(augmentation.half_body_probability));
  c.set("aug.half_body_min_visible", std::to_string(augmentation.half_body_min_visible));
  c.set("aug.half_body_padding", format_double(augmentation.half_body_padding));
  c.set("train.lr", format_double(lr));
  std::string ms;
  for (const auto& [e, v] : lr_milestones) ms += (ms.empty() ? "" : ", ") + std::to_string(e) + ":" + format_double(v);
  c.set("train.lr_milestones", ms);
  c.set("train.epochs", std::to_string(epochs));
  c.set("train.max_steps", std::to_string(max_steps));
  c.set("train.batch_size", std::to_string(batch_size));
  c.set("train.seed", std::to_string(seed));
  c.set("train.checkpoint_every", std::to_string(checkpoint_every));
  if (!output_dir.empty()) c.set("output.dir", output_dir.string());
  return c;
}

TrainingDiverged::TrainingDiverged(long step_, int epoch_, double lr, double loss)
    : std::runtime_error("training diverged: loss " + format_double(loss) + " at step " + std::to_string(step_) +
                         " (epoch " + std::to_string(epoch_) + ", lr " + format_double(lr) + ")"),
      step(step_),
      epoch(epoch_) {}

nlohmann::json StepRecord::to_json() const {
  return {{"step", step}, {"epoch", epoch}, {"lr", lr}, {"loss", loss}};
}

SamplePreparer::SamplePreparer(const RunConfig& c, const KeypointSchema& s, int heatmap_stride)
    : config(c), schema(s), stride(heatmap_stride) {}

TrainBatch SamplePreparer::batch(const std::vector<const Image*>& images,
                                 const std::vector<const PersonInstance*>& people, Rng* augmentation) const {
  if (images.size() != people.size() || images.empty()) {
    throw std::invalid_argument("SamplePreparer: one image per person required");
  }
  const int w = config.input_width, h = config.input_height;
  const double aspect = static_cast<double>(h) / w;
  const auto perm = schema.flip_permutation();
  const Affine2D to_heatmap = input_to_heatmap(stride);
  std::vector<Crop> crops;
  std::vector<Tensor> maps;
  std::vector<std::vector<double>> weights;
  for (std::size_t i = 0; i < people.size(); ++i) {
    const PersonInstance& p = *people[i];
    PersonBox box = person_crop_box(p.box, aspect, config.box_padding);
    CropParams params;
    if (augmentation) {
      box = half_body_transform(box, p.keypoints, schema.upper_body, config.augmentation, *augmentation, aspect);
      params = sample_crop_params(config.augmentation, *augmentation);
    }
    crops.push_back(crop_affine(*images[i], box, w, h, params));
    const auto in_crop = warp_keypoints(p.keypoints, crops.back().transform, params.flip ? &perm : nullptr);
    HeatmapTarget t = generate_target(warp_keypoints(in_crop, to_heatmap), w / stride, h / stride,
                                      config.target_sigma);
    maps.push_back(std::move(t.maps));
    weights.push_back(std::move(t.weights));
  }
  std::vector<const Image*> views;
  for (const auto& c : crops) views.push_back(&c.image);
  return {images_to_tensor(views), stack_maps(maps), stack_weights(weights)};
}

std::vector<const PersonInstance*> trainable_instances(const AnnotationSet& set) {
  std::vector<const PersonInstance*> out;
  for (const auto& p : set.instances) {
    if (!p.crowd && p.num_labeled() > 0 && p.box.w > 0 && p.box.h > 0) out.push_back(&p);
  }
  return out;
}

namespace {

std::map<std::int64_t, const Image*> image_index(const PoseDataset& data) {
  if (data.images.size() != data.annotations.images.size()) {
    throw std::invalid_argument("dataset: one image per image record required");
  }
  std::map<std::int64_t, const Image*> out;
  for (std::size_t i = 0; i < data.images.size(); ++i) out[data.annotations.images[i].id] = &data.images[i];
  return out;
}

}  // namespace

TrainResult train(const RunConfig& config, HRNet& net, const PoseDataset& data, const StepCallback& on_step) {
  config.validate();
  const KeypointSchema schema = config.keypoint_schema();
  if (net.spec().num_keypoints != schema.size()) {
    throw std::invalid_argument("train: network and schema keypoint counts differ");
  }
  const auto images = image_index(data);
  const auto people = trainable_instances(data.annotations);
  if (people.size() < 2) throw std::invalid_argument("train: at least two trainable instances required");
  for (const auto* p : people) {
    if (!images.count(p->image_id)) throw std::invalid_argument("train: instance references a missing image");
  }

  Rng order_rng = Rng::substream(config.seed, "data-order");
  Rng aug_rng = Rng::substream(config.seed, "augmentation");
  const SamplePreparer prep(config, schema, heatmap_stride(net.spec()));
  const LrSchedule schedule = config.schedule();
  Adam adam(net.parameters(), AdamOptions{config.lr});

  std::ofstream log;
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    log.open(config.output_dir / "train_log.jsonl");
    if (!log) throw std::runtime_error("cannot write " + (config.output_dir / "train_log.jsonl").string());
  }
  const auto checkpoint = [&](const std::string& name, TrainResult& result) {
    if (config.output_dir.empty()) return;
    const auto stem = config.output_dir / name;
    save_model(stem, net);
    result.checkpoints.push_back(stem);
  };

  net.set_training(true);
  TrainResult result;
  std::vector<std::size_t> order(people.size());
  long step = 0;
  bool done = false;
  for (int epoch = 0; epoch < config.epochs && !done; ++epoch) {
    const double lr = schedule.lr_at(epoch);
    adam.set_lr(lr);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
    for (std::size_t start = 0; start + 2 <= order.size() && !done; start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const Image*> batch_images;
      std::vector<const PersonInstance*> batch_people;
      for (std::size_t i = start; i < end; ++i) {
        batch_people.push_back(people[order[i]]);
        batch_images.push_back(images.at(people[order[i]]->image_id));
      }
      const TrainBatch batch = prep.batch(batch_images, batch_people, config.augment ? &aug_rng : nullptr);
      const Tensor loss = mse_loss(net.forward(batch.images), batch.targets, batch.weights);
      const double value = loss.item();
      ++step;
      if (!std::isfinite(value)) throw TrainingDiverged(step, epoch, lr, value);
      adam.zero_grad();
      backward(loss);
      adam.step();
      const StepRecord record{step, epoch, lr, value};
      result.steps.push_back(record);
      if (log.is_open()) log << record.to_json().dump() << "\n" << std::flush;
      if (on_step && on_step(record)) done = true;
      if (config.max_steps >= 0 && step >= config.max_steps) done = true;
    }
    result.epochs_run = epoch + 1;
    if (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
      checkpoint(epoch_stem(epoch + 1), result);
    }
  }
  checkpoint("final", result);
  return result;
}

std::vector<PersonInstance> predict_on_boxes(HRNet& net, const PoseDataset& data, const EstimatorConfig& config) {
  PoseEstimator estimator(net, data.annotations.schema, config);
  std::vector<PersonInstance> out;
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    const std::int64_t id = data.annotations.images[i].id;
    std::vector<Box> boxes;
    std::vector<const PersonInstance*> sources;
    for (const auto* p : data.annotations.instances_for(id)) {
      if (p->crowd || !(p->box.w > 0) || !(p->box.h > 0)) continue;
      boxes.push_back(p->box);
      sources.push_back(p);
    }
    if (boxes.empty()) continue;
    auto preds = estimator.estimate(data.images[i], boxes);
    for (std::size_t j = 0; j < preds.size(); ++j) {
      preds[j].image_id = id;
      preds[j].category_id = sources[j]->category_id;
      out.push_back(std::move(preds[j]));
    }
  }
  return out;
}

double evaluate_loss(HRNet& net, const RunConfig& config, const PoseDataset& data) {
  const auto images = image_index(data);
  const auto people = trainable_instances(data.annotations);
  if (people.empty()) throw std::invalid_argument("evaluate_loss: no trainable instances");
  const SamplePreparer prep(config, data.annotations.schema, heatmap_stride(net.spec()));
  const bool was_training = net.training();
  net.set_training(false);
  NoGradGuard guard;
  double total = 0.0;
  const std::size_t chunk = static_cast<std::size_t>(std::max(1, config.batch_size));
  for (std::size_t start = 0; start < people.size(); start += chunk) {
    const std::size_t end = std::min(people.size(), start + chunk);
    std::vector<const Image*> batch_images;
    std::vector<const PersonInstance*> batch_people(people.begin() + start, people.begin() + end);
    for (const auto* p : batch_people) batch_images.push_back(images.at(p->image_id));
    const TrainBatch batch = prep.batch(batch_images, batch_people, nullptr);
    total += mse_loss(net.forward(batch.images), batch.targets, batch.weights).item() * (end - start);
  }
  net.set_training(was_training);
  return total / people.size();
}

void save_model(const std::filesystem::path& stem, HRNet& net) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  save_checkpoint(stem, net.state());
}

void load_model(const std::filesystem::path& stem, HRNet& net) { net.load_state(load_checkpoint(stem)); }

}  // namespace hrpose
