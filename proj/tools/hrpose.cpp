#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hrpose/audit.hpp"
#include "hrpose/dataset.hpp"
#include "hrpose/estimator.hpp"
#include "hrpose/hrnet.hpp"
#include "hrpose/metrics.hpp"
#include "hrpose/synthetic.hpp"
#include "hrpose/tracking.hpp"
#include "hrpose/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hrpose;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InputSize {
  int height = 256;
  int width = 192;
};

// "HxW", e.g. 256x192.
InputSize parse_size(const std::string& text) {
  InputSize s;
  char x = 0;
  std::istringstream in(text);
  if (!(in >> s.height >> x >> s.width) || (x != 'x' && x != 'X') || !in.eof() || s.height <= 0 || s.width <= 0) {
    throw UsageError("--input-size expects HEIGHTxWIDTH, got '" + text + "'");
  }
  return s;
}

Box parse_box(const std::string& text) {
  std::vector<double> v;
  std::istringstream in(text);
  for (std::string part; std::getline(in, part, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("--box expects x,y,w,h, got '" + text + "'");
    }
  }
  if (v.size() != 4 || !(v[2] > 0) || !(v[3] > 0)) throw UsageError("--box expects x,y,w,h with w, h > 0");
  return Box{v[0], v[1], v[2], v[3]};
}

std::string format_config(const KeyValueConfig& c) {
  std::string out;
  for (const auto& [k, v] : c.values()) out += k + " = " + v + "\n";
  return out;
}

struct ArchOptions {
  std::string arch = "w32";
  std::string config;
  std::string input_size = "256x192";

  void add(CLI::App* app) {
    app->add_option("--arch", arch, "Preset: w32, w48, w8, w32-rm, w48-rm")->capture_default_str();
    app->add_option("--config", config, "Architecture spec file (key = value); overrides --arch")
        ->check(CLI::ExistingFile);
    app->add_option("--input-size", input_size, "Input HEIGHTxWIDTH")->capture_default_str();
  }

  HRNetSpec spec() const { return config.empty() ? HRNetSpec::preset(arch) : load_hrnet_spec(config); }

  // Published figures are keyed by preset name; a spec file counts as a
  // preset when it describes exactly that topology.
  std::string label(const HRNetSpec& s) const {
    if (config.empty()) return arch;
    for (const char* name : {"w32", "w48", "w8", "w32-rm", "w48-rm"}) {
      if (format_hrnet_spec(HRNetSpec::preset(name)) == format_hrnet_spec(s)) return name;
    }
    return fs::path(config).stem().string();
  }
};

// ---- audit ----------------------------------------------------------------

struct AuditCommand {
  ArchOptions arch;
  bool compare = false;
  bool json_out = false;
  bool layers = false;

  void add(CLI::App* app) {
    arch.add(app);
    app->add_flag("--compare-paper", compare, "Check against published params/FLOPs; exit 1 outside tolerance");
    app->add_flag("--json", json_out, "Emit the report as JSON");
    app->add_flag("--layers", layers, "Include the per-layer table");
  }

  int run() const {
    const HRNetSpec spec = arch.spec();
    const InputSize size = parse_size(arch.input_size);
    const HRNet net = HRNet::structure_only(spec);
    const CostReport report = cost_report(net, size.height, size.width, arch.label(spec));
    const auto checks = compare ? compare_with_published(report) : std::vector<TargetCheck>{};
    bool ok = true;
    for (const auto& c : checks) ok = ok && c.ok();
    if (compare && checks.empty()) ok = false;

    if (json_out) {
      json j = json::parse(report.json());
      if (!layers) j.erase("rows");
      j["exchange_units"] = net.exchange_unit_count();
      if (compare) {
        json list = json::array();
        for (const auto& c : checks) {
          list.push_back({{"what", c.what}, {"measured", c.measured}, {"target", c.target},
                          {"tolerance", c.tolerance}, {"ok", c.ok()}});
        }
        j["checks"] = list;
        j["within_tolerance"] = ok;
      }
      std::cout << j.dump(2) << "\n";
    } else {
      if (layers) {
        std::cout << report.table();
      } else {
        std::printf("%s @%dx%d: %.3f M params, %.3f GFLOPs, %d exchange units\n", report.arch.c_str(),
                    size.height, size.width, report.mparams(), report.gflops(), net.exchange_unit_count());
      }
      for (const auto& c : checks) std::cout << c.line() << "\n";
      if (compare && checks.empty()) {
        std::cout << "no published figures for " << report.arch << " at " << size.height << "x" << size.width
                  << "\n";
      }
    }
    return ok ? 0 : 1;
  }
};

// ---- describe -------------------------------------------------------------

struct DescribeCommand {
  ArchOptions arch;
  bool json_out = false;

  void add(CLI::App* app) {
    arch.add(app);
    app->add_flag("--json", json_out, "Emit the module tree as JSON");
  }

  int run() const {
    const HRNetSpec spec = arch.spec();
    const InputSize size = parse_size(arch.input_size);
    const HRNet net = HRNet::structure_only(spec);
    Tracer tracer;
    net.trace({1, 3, size.height, size.width}, tracer);
    std::cout << (json_out ? describe_json(tracer.root()) : describe_text(tracer.root()));
    if (!json_out) std::cout << "\n" << format_hrnet_spec(spec);
    return 0;
  }
};

// ---- ablate ---------------------------------------------------------------

struct AblateCommand {
  ArchOptions arch;
  bool json_out = false;

  void add(CLI::App* app) {
    arch.add(app);
    app->add_flag("--json", json_out, "Emit the report as JSON");
  }

  int run() const {
    const HRNetSpec base = arch.spec();
    const InputSize size = parse_size(arch.input_size);
    std::vector<std::pair<std::string, HRNetSpec>> variants;
    for (FusionMode m : {FusionMode::kFinalOnly, FusionMode::kAcrossStageOnly, FusionMode::kFull}) {
      HRNetSpec s = base;
      s.fusion = m;
      variants.emplace_back(std::string("fusion=") + fusion_mode_name(m), s);
    }
    variants.emplace_back("resolution-maintenance", HRNetSpec::resolution_maintenance(base));
    for (int b = 1; b <= base.num_branches(); ++b) {
      HRNetSpec s = base;
      s.head_branch = b;
      variants.emplace_back("head-branch=" + std::to_string(b), s);
    }

    json rows = json::array();
    if (!json_out) {
      std::printf("%s @%dx%d\n%-24s %6s %12s %10s %10s\n", arch.label(base).c_str(), size.height, size.width,
                  "variant", "units", "params (M)", "GFLOPs", "heatmap");
    }
    for (const auto& [name, spec] : variants) {
      const HRNet net = HRNet::structure_only(spec);
      Tracer tracer;
      const Shape out = net.trace({1, 3, size.height, size.width}, tracer);
      const double mparams = static_cast<double>(count_params(net)) * 1e-6;
      const double gflops = count_flops(net, size.height, size.width);
      const std::string heatmap = std::to_string(out.h) + "x" + std::to_string(out.w);
      if (json_out) {
        rows.push_back({{"variant", name}, {"exchange_units", net.exchange_unit_count()}, {"mparams", mparams},
                        {"gflops", gflops}, {"heatmap", {out.h, out.w}}});
      } else {
        std::printf("%-24s %6d %12.3f %10.3f %10s\n", name.c_str(), net.exchange_unit_count(), mparams, gflops,
                    heatmap.c_str());
      }
    }
    if (json_out) {
      std::cout << json{{"arch", arch.label(base)}, {"input", {size.height, size.width}}, {"variants", rows}}.dump(2)
                << "\n";
    }
    return 0;
  }
};

// ---- synth ----------------------------------------------------------------

struct SynthCommand {
  std::uint64_t seed = 0;
  SyntheticSpec spec;
  std::string out = "synth";

  void add(CLI::App* app) {
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
    app->add_option("--n", spec.num_images, "Number of images")->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--width", spec.width, "Image width")->capture_default_str();
    app->add_option("--height", spec.height, "Image height")->capture_default_str();
    app->add_option("--persons", spec.persons_per_image, "Persons per image")->capture_default_str();
    app->add_option("--noise", spec.noise, "Pixel noise level")->capture_default_str();
    app->add_option("--out", out, "Output directory")->capture_default_str();
  }

  int run() {
    PoseDataset data = generate_synthetic(spec, seed);
    write_dataset(out, data);
    std::cout << "wrote " << data.annotations.images.size() << " images, " << data.annotations.instances.size()
              << " persons to " << (fs::path(out) / "annotations.json").string() << "\n";
    return 0;
  }
};

// ---- model loading --------------------------------------------------------

struct LoadedModel {
  RunConfig config;
  std::unique_ptr<HRNet> net;
};

// A run directory written by `train`: run.cfg plus checkpoints.
LoadedModel load_run(const std::string& dir, const std::string& checkpoint) {
  const fs::path cfg_path = fs::path(dir) / "run.cfg";
  if (!fs::exists(cfg_path)) throw std::runtime_error("no run.cfg in " + dir);
  LoadedModel m;
  m.config = RunConfig::from_config(KeyValueConfig::load(cfg_path.string()));
  m.net = std::make_unique<HRNet>(m.config.model, DType::kFloat32, m.config.seed);
  load_model(checkpoint.empty() ? fs::path(dir) / "final" : fs::path(checkpoint), *m.net);
  return m;
}

struct ModelOptions {
  std::string run_dir;
  std::string checkpoint;
  bool flip = false;

  void add(CLI::App* app) {
    app->add_option("--model", run_dir, "Run directory written by train")->check(CLI::ExistingDirectory);
    app->add_option("--checkpoint", checkpoint, "Checkpoint stem (default: <model>/final)");
    app->add_flag("--flip", flip, "Average with the mirrored image");
  }
};

// ---- train ----------------------------------------------------------------

struct TrainCommand {
  std::string config;
  std::vector<std::string> sets;
  std::string data;
  std::string images;
  std::string out;
  long steps = -1;
  int epochs = -1;
  int batch_size = -1;
  std::optional<std::uint64_t> seed;
  double stop_below = 0.0;
  int log_every = 10;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Run config (key = value)")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "Override a config key: KEY=VALUE (repeatable)");
    app->add_option("--data", data, "Annotation file (data.annotations)");
    app->add_option("--images", images, "Image root (data.images)");
    app->add_option("--out", out, "Output directory (output.dir)");
    app->add_option("--steps", steps, "Stop after this many steps (train.max_steps)");
    app->add_option("--epochs", epochs, "Epoch count (train.epochs)");
    app->add_option("--batch-size", batch_size, "Batch size (train.batch_size)");
    app->add_option("--seed", seed, "Seed (train.seed)");
    app->add_option("--stop-below", stop_below, "Stop once the step loss is below this value");
    app->add_option("--log-every", log_every, "Print every N steps (0: quiet)")->capture_default_str();
  }

  int run() const {
    KeyValueConfig cfg = config.empty() ? KeyValueConfig{} : KeyValueConfig::load(config);
    cfg.apply_env_overrides("HRPOSE_", RunConfig::known_keys());
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!data.empty()) cfg.set("data.annotations", data);
    if (!images.empty()) cfg.set("data.images", images);
    if (!out.empty()) cfg.set("output.dir", out);
    if (steps >= 0) cfg.set("train.max_steps", std::to_string(steps));
    if (epochs > 0) cfg.set("train.epochs", std::to_string(epochs));
    if (batch_size > 0) cfg.set("train.batch_size", std::to_string(batch_size));
    if (seed) cfg.set("train.seed", std::to_string(*seed));
    const RunConfig run = RunConfig::from_config(cfg);
    if (run.annotations.empty()) throw UsageError("no training data: pass --data or set data.annotations");
    if (run.output_dir.empty()) throw UsageError("no output directory: pass --out or set output.dir");

    const PoseDataset dataset = read_dataset(run.annotations, run.keypoint_schema(), run.image_root);
    fs::create_directories(run.output_dir);
    {
      std::ofstream f(run.output_dir / "run.cfg");
      f << format_config(run.to_config());
    }
    HRNet net(run.model, DType::kFloat32, run.seed);
    const auto on_step = [&](const StepRecord& r) {
      if (log_every > 0 && r.step % log_every == 0) {
        std::printf("step %6ld  epoch %4d  lr %.1e  loss %.4e\n", r.step, r.epoch, r.lr, r.loss);
        std::fflush(stdout);
      }
      return stop_below > 0 && r.loss < stop_below;
    };
    const TrainResult result = train(run, net, dataset, on_step);
    const double eval_loss = evaluate_loss(net, run, dataset);
    std::printf("%zu steps, %d epochs; last step loss %.4e, eval-mode loss %.4e\ncheckpoint %s\n",
                result.steps.size(), result.epochs_run, result.steps.empty() ? 0.0 : result.steps.back().loss,
                eval_loss, (run.output_dir / "final").string().c_str());
    return 0;
  }
};

// ---- eval -----------------------------------------------------------------

struct EvalCommand {
  ModelOptions model;
  std::string data;
  std::string images;
  std::string results;
  std::string save;
  std::string metric = "coco";
  double alpha = 0.5;
  bool json_out = false;

  void add(CLI::App* app) {
    model.add(app);
    app->add_option("--data", data, "Ground-truth annotations (default: the run's data.annotations)");
    app->add_option("--images", images, "Image root");
    app->add_option("--results", results, "Evaluate a results file instead of running a model")
        ->check(CLI::ExistingFile);
    app->add_option("--save-results", save, "Write predictions as COCO results JSON");
    app->add_option("--metric", metric, "coco or pckh")->check(CLI::IsMember({"coco", "pckh"}))->capture_default_str();
    app->add_option("--alpha", alpha, "PCKh threshold fraction")->capture_default_str();
    app->add_flag("--json", json_out, "Emit metrics as JSON");
  }

  int run() const {
    if (model.run_dir.empty() == results.empty()) throw UsageError("pass exactly one of --model and --results");
    std::optional<LoadedModel> loaded;
    if (!model.run_dir.empty()) loaded = load_run(model.run_dir, model.checkpoint);
    fs::path ann = data;
    if (ann.empty() && loaded) ann = loaded->config.annotations;
    if (ann.empty()) throw UsageError("no ground truth: pass --data");
    const std::optional<KeypointSchema> schema =
        loaded ? std::optional<KeypointSchema>(loaded->config.keypoint_schema()) : std::nullopt;
    const fs::path root = !images.empty() ? fs::path(images) : loaded && data.empty() ? loaded->config.image_root
                                                                                    : fs::path{};

    std::vector<PersonInstance> preds;
    AnnotationSet gt;
    if (loaded) {
      const PoseDataset dataset = read_dataset(ann, schema, root);
      EstimatorConfig e = loaded->config.estimator();
      e.flip_test = model.flip;
      preds = predict_on_boxes(*loaded->net, dataset, e);
      gt = dataset.annotations;
    } else {
      gt = load_annotations(ann);
      preds = load_results(results, gt.schema.size());
    }
    if (!save.empty()) save_results(save, preds);

    if (metric == "pckh") {
      // Predictions pair with ground truths by image and order within the image.
      std::map<std::int64_t, std::vector<const PersonInstance*>> by_image;
      for (const auto& p : preds) by_image[p.image_id].push_back(&p);
      std::vector<PersonInstance> paired_pred, paired_gt;
      std::map<std::int64_t, std::size_t> used;
      for (const auto& g : gt.instances) {
        auto& list = by_image[g.image_id];
        const std::size_t i = used[g.image_id]++;
        if (i >= list.size()) continue;
        paired_gt.push_back(g);
        paired_pred.push_back(*list[i]);
      }
      const PCKhResult r = pckh(paired_pred, paired_gt, gt.schema, alpha);
      if (json_out) {
        json groups = json::object();
        for (const auto& [name, v] : r.groups) groups[name] = v;
        std::cout << json{{"alpha", r.alpha}, {"joints", r.joint_names}, {"joint_rates", r.joint_rates},
                          {"groups", groups}, {"total", r.total}, {"evaluated", r.evaluated},
                          {"skipped", r.skipped}}
                         .dump(2)
                  << "\n";
      } else {
        std::cout << r.table();
      }
      return 0;
    }

    const EvalResult r = coco_ap_suite(gt.instances, preds, CocoEvalConfig::for_schema(gt.schema));
    if (json_out) {
      std::cout << json{{"AP", r.ap},    {"AP50", r.ap50}, {"AP75", r.ap75}, {"APm", r.ap_m},
                        {"APl", r.ap_l}, {"AR", r.ar},     {"AR50", r.ar50}, {"AR75", r.ar75},
                        {"ARm", r.ar_m}, {"ARl", r.ar_l},  {"predictions", preds.size()}}
                       .dump(2)
                << "\n";
    } else {
      std::cout << r.table();
    }
    return 0;
  }
};

// ---- decode ---------------------------------------------------------------

struct DecodeCommand {
  ModelOptions model;
  std::string image;
  std::vector<std::string> boxes;

  void add(CLI::App* app) {
    model.add(app);
    app->add_option("--image", image, "Input image (PPM)")->required()->check(CLI::ExistingFile);
    app->add_option("--box", boxes, "Person box x,y,w,h (repeatable; default: the whole image)");
  }

  int run() const {
    if (model.run_dir.empty()) throw UsageError("--model is required");
    LoadedModel loaded = load_run(model.run_dir, model.checkpoint);
    const Image img = load_pnm(image);
    std::vector<Box> list;
    for (const auto& b : boxes) list.push_back(parse_box(b));
    if (list.empty()) list.push_back(Box{0, 0, static_cast<double>(img.width), static_cast<double>(img.height)});
    EstimatorConfig e = loaded.config.estimator();
    e.flip_test = model.flip;
    const KeypointSchema schema = loaded.config.keypoint_schema();
    PoseEstimator estimator(*loaded.net, schema, e);
    json out = json::array();
    for (const auto& p : estimator.estimate(img, list)) {
      json joints = json::array();
      for (std::size_t j = 0; j < p.keypoints.size(); ++j) {
        const auto& k = p.keypoints[j];
        joints.push_back({{"name", schema.names[j]}, {"x", k.x}, {"y", k.y}});
      }
      out.push_back({{"box", {p.box.x, p.box.y, p.box.w, p.box.h}}, {"score", p.score}, {"keypoints", joints}});
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  }
};

// ---- track ----------------------------------------------------------------

struct TrackCommand {
  ModelOptions model;
  std::string frames;
  std::string images;
  std::string detections;
  std::string fields;
  std::string out;
  TrackerConfig tracker;
  bool no_propagation = false;
  double match_px = 0.0;

  void add(CLI::App* app) {
    model.add(app);
    app->add_option("--frames", frames, "Annotation file listing the frames in order")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--images", images, "Image root");
    app->add_option("--detections", detections, "COCO detections: [{image_id, bbox, score}]")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--fields", fields, "Displacement fields, binary or .json (field t maps frame t to t+1)")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--out", out, "Write tracks as PoseTrack-style JSON");
    app->add_option("--nms", tracker.nms_iou, "Box NMS IoU threshold")->capture_default_str();
    app->add_option("--window", tracker.window, "Frames a lost track stays matchable")->capture_default_str();
    app->add_option("--oks-floor", tracker.association.oks_floor, "Minimum OKS to continue a track")
        ->capture_default_str();
    app->add_flag("--no-propagation", no_propagation, "Do not add boxes propagated from the previous frame");
    app->add_option("--match-px", match_px, "MOTA match distance in pixels (default: head-normalized)");
  }

  int run() {
    if (model.run_dir.empty()) throw UsageError("--model is required");
    LoadedModel loaded = load_run(model.run_dir, model.checkpoint);
    const KeypointSchema schema = loaded.config.keypoint_schema();
    const PoseDataset seq = read_dataset(frames, schema, images);
    std::map<std::int64_t, int> frame_of;
    std::vector<SequenceFrame> seq_frames;
    for (std::size_t t = 0; t < seq.images.size(); ++t) {
      frame_of[seq.annotations.images[t].id] = static_cast<int>(t);
      seq_frames.push_back({static_cast<int>(t), seq.images[t], {}});
    }
    const json dets = read_json_file(detections);
    if (!dets.is_array()) throw std::runtime_error(detections + ": expected an array of detections");
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const auto& d = dets[i];
      const std::string where = detections + ": /" + std::to_string(i);
      if (!d.contains("image_id") || !d.contains("bbox") || d["bbox"].size() != 4) {
        throw std::runtime_error(where + ": needs image_id and a four-value bbox");
      }
      const auto it = frame_of.find(d["image_id"].get<std::int64_t>());
      if (it == frame_of.end()) throw std::runtime_error(where + ": image_id is not a listed frame");
      const auto& b = d["bbox"];
      seq_frames[it->second].detections.push_back(
          {Box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()},
           d.value("score", 1.0), -1});
    }

    tracker.propagate = !no_propagation;
    EstimatorConfig e = loaded.config.estimator();
    e.flip_test = model.flip;
    PoseEstimator estimator(*loaded.net, schema, e);
    const PoseEstimatorFn estimate = [&](const SequenceFrame& f, const std::vector<ScoredBox>& boxes) {
      std::vector<Box> list;
      std::vector<double> scores;
      for (const auto& b : boxes) {
        list.push_back(b.box);
        scores.push_back(b.score);
      }
      return estimator.estimate(f.image, list, scores);
    };

    // Ground truth counts when every annotated person carries a track id.
    std::vector<PoseFrame> gt;
    bool have_gt = !seq.annotations.instances.empty();
    for (const auto& p : seq.annotations.instances) have_gt = have_gt && p.track_id >= 0;
    if (have_gt) {
      gt.resize(seq_frames.size());
      for (std::size_t t = 0; t < gt.size(); ++t) gt[t].frame_index = static_cast<int>(t);
      for (const auto& p : seq.annotations.instances) gt[frame_of.at(p.image_id)].poses.push_back(p);
    }
    const MatchRule rule = match_px > 0 ? fixed_distance_rule(match_px) : head_normalized_rule();
    const TrackResult result =
        track_sequence(seq_frames, read_fields(fields), estimate, tracker, schema, have_gt ? &gt : nullptr, rule);
    if (!out.empty()) write_json_file(out, tracks_to_json(result.frames), 1);
    std::size_t poses = 0;
    for (const auto& f : result.frames) poses += f.poses.size();
    std::cout << result.frames.size() << " frames, " << poses << " tracked poses\n";
    if (result.mota) std::cout << result.mota->table();
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HRNet pose estimation toolkit", "hrpose"};
  app.require_subcommand(1);
  AuditCommand audit;
  DescribeCommand describe;
  AblateCommand ablate;
  SynthCommand synth;
  TrainCommand train_cmd;
  EvalCommand eval;
  DecodeCommand decode_cmd;
  TrackCommand track;
  std::vector<std::pair<CLI::App*, std::function<int()>>> commands;
  const auto add = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.add(sub);
    commands.emplace_back(sub, [&cmd] { return cmd.run(); });
  };
  add("audit", "Parameter and FLOP audit", audit);
  add("describe", "Print the module tree with shapes and costs", describe);
  add("ablate", "Structural report for fusion, resolution and head variants", ablate);
  add("synth", "Render a synthetic stick-figure dataset", synth);
  add("train", "Train a model on an annotation file", train_cmd);
  add("eval", "COCO AP or PCKh on ground-truth boxes", eval);
  add("decode", "Estimate keypoints for boxes in one image", decode_cmd);
  add("track", "Track poses through a frame sequence", track);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const auto parsed = app.get_subcommands();
    std::cerr << "error: " << e.what() << "\n\n" << (parsed.empty() ? app.help() : parsed.front()->help());
    return 2;
  }
  for (auto& [sub, run] : commands) {
    if (!sub->parsed()) continue;
    try {
      return run();
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << "\n\n" << sub->help();
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "hrpose " << sub->get_name() << ": " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}
