#include "hrpose/hrnet.hpp"

#include <algorithm>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "hrpose/config.hpp"

namespace hrpose {

const char* fusion_mode_name(FusionMode mode) {
  switch (mode) {
    case FusionMode::kFinalOnly: return "final_only";
    case FusionMode::kAcrossStageOnly: return "across_stage_only";
    case FusionMode::kFull: return "full";
  }
  return "?";
}

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "final_only" || text == "final") return FusionMode::kFinalOnly;
  if (text == "across_stage_only" || text == "across_stage") return FusionMode::kAcrossStageOnly;
  if (text == "full") return FusionMode::kFull;
  throw std::invalid_argument("unknown fusion mode '" + std::string(text) + "'");
}

int HRNetSpec::units_for_branch(int branch) const {
  if (!branch_units.empty()) return branch_units.at(static_cast<std::size_t>(branch - 1));
  return units_per_block;
}

int HRNetSpec::branches_in_stage(int stage) const {
  if (stage < 1 || stage > num_stages()) {
    throw std::out_of_range("stage index " + std::to_string(stage) + " outside 1.." +
                            std::to_string(num_stages()));
  }
  if (stage == 1) return 1;
  return all_branches_from_start ? num_branches() : stage;
}

void HRNetSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("HRNetSpec: " + what); };
  if (width < 1) fail("width must be positive");
  if (num_keypoints < 1) fail("num_keypoints must be positive");
  if (stage_blocks.empty()) fail("stage_blocks must list at least one stage");
  for (int b : stage_blocks) {
    if (b < 1) fail("every stage needs at least one exchange block");
  }
  if (units_per_block < 0) fail("units_per_block must be non-negative");
  if (!branch_units.empty()) {
    if (static_cast<int>(branch_units.size()) != num_branches()) {
      fail("branch_units needs one entry per branch (" + std::to_string(num_branches()) + ")");
    }
    for (int u : branch_units) {
      if (u < 0) fail("branch_units entries must be non-negative");
    }
  }
  if (stage1_units < 1) fail("stage1_units must be positive");
  if (stage1_width < 1 || stem_width < 1) fail("stem and stage-1 widths must be positive");
  if (head_branch < 1 || head_branch > num_branches()) {
    fail("head_branch " + std::to_string(head_branch) + " out of range 1.." +
         std::to_string(num_branches()));
  }
}

HRNetSpec HRNetSpec::w32() { return HRNetSpec{}; }

HRNetSpec HRNetSpec::w48() {
  HRNetSpec s;
  s.width = 48;
  return s;
}

HRNetSpec HRNetSpec::w8(int num_keypoints) {
  HRNetSpec s;
  s.width = 8;
  s.num_keypoints = num_keypoints;
  return s;
}

HRNetSpec HRNetSpec::resolution_maintenance(const HRNetSpec& base) {
  HRNetSpec s = base;
  s.all_branches_from_start = true;
  s.branch_units.assign(static_cast<std::size_t>(s.num_branches()), base.units_per_block);
  s.branch_units.back() = 1;
  return s;
}

HRNetSpec HRNetSpec::preset(std::string_view name) {
  if (name == "w32") return w32();
  if (name == "w48") return w48();
  if (name == "w8") return w8();
  if (name == "w32-rm") return resolution_maintenance(w32());
  if (name == "w48-rm") return resolution_maintenance(w48());
  throw std::invalid_argument("unknown architecture preset '" + std::string(name) + "'");
}

namespace {

const std::vector<std::string> kSpecKeys = {
    "arch",          "width",          "num_keypoints", "stage_blocks",
    "units_per_block", "branch_units", "stage1_units",  "stage1_width",
    "stem_width",    "fusion",         "all_branches_from_start", "head_branch"};

std::string join(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

HRNetSpec parse_hrnet_spec(std::string_view text, const HRNetSpec& base) {
  const KeyValueConfig cfg = KeyValueConfig::parse(text, "<hrnet spec>");
  cfg.require_known(kSpecKeys);
  HRNetSpec s = cfg.has("arch") ? HRNetSpec::preset(cfg.get_string("arch")) : base;
  if (cfg.has("width")) s.width = cfg.get_int("width");
  if (cfg.has("num_keypoints")) s.num_keypoints = cfg.get_int("num_keypoints");
  if (cfg.has("stage_blocks")) s.stage_blocks = cfg.get_int_list("stage_blocks");
  if (cfg.has("units_per_block")) s.units_per_block = cfg.get_int("units_per_block");
  if (cfg.has("branch_units")) s.branch_units = cfg.get_int_list("branch_units");
  if (cfg.has("stage1_units")) s.stage1_units = cfg.get_int("stage1_units");
  if (cfg.has("stage1_width")) s.stage1_width = cfg.get_int("stage1_width");
  if (cfg.has("stem_width")) s.stem_width = cfg.get_int("stem_width");
  if (cfg.has("fusion")) s.fusion = parse_fusion_mode(cfg.get_string("fusion"));
  if (cfg.has("all_branches_from_start")) {
    s.all_branches_from_start = cfg.get_bool("all_branches_from_start");
  }
  if (cfg.has("head_branch")) s.head_branch = cfg.get_int("head_branch");
  s.validate();
  return s;
}

HRNetSpec load_hrnet_spec(const std::string& path) {
  const KeyValueConfig cfg = KeyValueConfig::load(path);
  std::ostringstream text;
  for (const auto& [k, v] : cfg.values()) text << k << " = " << v << "\n";
  return parse_hrnet_spec(text.str());
}

std::string format_hrnet_spec(const HRNetSpec& s) {
  std::ostringstream out;
  out << "width = " << s.width << "\n"
      << "num_keypoints = " << s.num_keypoints << "\n"
      << "stage_blocks = " << join(s.stage_blocks) << "\n"
      << "units_per_block = " << s.units_per_block << "\n";
  if (!s.branch_units.empty()) out << "branch_units = " << join(s.branch_units) << "\n";
  out << "stage1_units = " << s.stage1_units << "\n"
      << "stage1_width = " << s.stage1_width << "\n"
      << "stem_width = " << s.stem_width << "\n"
      << "fusion = " << fusion_mode_name(s.fusion) << "\n"
      << "all_branches_from_start = " << (s.all_branches_from_start ? "true" : "false") << "\n"
      << "head_branch = " << s.head_branch << "\n";
  return out.str();
}

// FusePath ------------------------------------------------------------------

FusePath::FusePath(int from, int to, const HRNetSpec& spec, const BuildContext& ctx)
    : Module("path" + std::to_string(from) + "to" + std::to_string(to),
             from < to ? "fuse_down" : "fuse_up"),
      from_(from),
      to_(to) {
  if (from == to) throw std::invalid_argument("FusePath: identity paths carry no layers");
  const int cin = spec.branch_width(from);
  const int cout = spec.branch_width(to);
  if (from > to) {
    steps_.push_back(&add_child<ConvBn>("conv", cin, cout, 1, 1, false, ctx));
    return;
  }
  for (int step = 0; step < to - from; ++step) {
    const bool last = step == to - from - 1;
    steps_.push_back(&add_child<ConvBn>("down" + std::to_string(step + 1), cin,
                                        last ? cout : cin, 3, 2, !last, ctx));
  }
}

Tensor FusePath::forward(const Tensor& x) {
  if (from_ > to_) return upsample_nearest(steps_.front()->forward(x), 1 << (from_ - to_));
  Tensor y = x;
  for (ConvBn* step : steps_) y = step->forward(y);
  return y;
}

Shape FusePath::trace(Shape in, Tracer& tracer) const {
  auto scope = tracer.scope(name(), kind());
  Shape s = in;
  for (const ConvBn* step : steps_) s = step->trace(s, tracer);
  if (from_ > to_) s = trace_upsample(s, 1 << (from_ - to_), tracer);
  scope.outputs({s});
  return s;
}

// ExchangeUnit --------------------------------------------------------------

namespace {

void check_branch_inputs(const std::vector<Shape>& in, int branches, const HRNetSpec& spec,
                         const char* op) {
  if (static_cast<int>(in.size()) != branches) {
    throw ShapeError(op, "branches", branches, static_cast<std::int64_t>(in.size()));
  }
  for (int r = 1; r <= branches; ++r) {
    const Shape& s = in[r - 1];
    const std::string tag = "branch" + std::to_string(r);
    if (s.c != spec.branch_width(r)) throw ShapeError(op, tag + ".channels", spec.branch_width(r), s.c);
    if (s.n != in[0].n) throw ShapeError(op, tag + ".batch", in[0].n, s.n);
    const int f = 1 << (r - 1);
    if (s.h * f != in[0].h) throw ShapeError(op, tag + ".height", in[0].h / f, s.h);
    if (s.w * f != in[0].w) throw ShapeError(op, tag + ".width", in[0].w / f, s.w);
  }
}

std::vector<Shape> shapes_of(const std::vector<Tensor>& xs) {
  std::vector<Shape> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.shape());
  return out;
}

}  // namespace

ExchangeUnit::ExchangeUnit(std::string name, int branches, std::vector<int> outputs,
                           const HRNetSpec& spec, const BuildContext& ctx)
    : Module(std::move(name), "exchange_unit"),
      spec_(spec),
      branches_(branches),
      outputs_(std::move(outputs)) {
  if (branches < 1) throw std::invalid_argument("ExchangeUnit: needs at least one branch");
  paths_.assign(static_cast<std::size_t>(branches + 1),
                std::vector<FusePath*>(static_cast<std::size_t>(branches + 1), nullptr));
  for (int k : outputs_) {
    if (k < 1 || k > branches) {
      throw std::invalid_argument("ExchangeUnit: output " + std::to_string(k) + " out of range");
    }
  }
  for (int k : outputs_) {
    for (int i = 1; i <= branches; ++i) {
      if (i != k) paths_[k][i] = &add_child<FusePath>(i, k, spec, ctx);
    }
  }
}

FusePath* ExchangeUnit::path(int from, int to) const {
  if (from < 1 || from > branches_ || to < 1 || to > branches_) return nullptr;
  return paths_[to][from];
}

std::vector<Tensor> ExchangeUnit::forward(const std::vector<Tensor>& xs) {
  check_branch_inputs(shapes_of(xs), branches_, spec_, "exchange_unit");
  std::vector<Tensor> ys(xs.size());
  for (int k : outputs_) {
    Tensor acc = xs[k - 1];
    for (int i = 1; i <= branches_; ++i) {
      if (i == k) continue;
      acc = add(acc, paths_[k][i]->forward(xs[i - 1]));
    }
    ys[k - 1] = branches_ == 1 ? acc : relu(acc);
  }
  return ys;
}

std::vector<Shape> ExchangeUnit::trace(const std::vector<Shape>& in, Tracer& tracer) const {
  check_branch_inputs(in, branches_, spec_, "exchange_unit");
  auto scope = tracer.scope(name(), kind());
  std::vector<Shape> out = in;
  for (int k : outputs_) {
    for (int i = 1; i <= branches_; ++i) {
      if (i == k) continue;
      paths_[k][i]->trace(in[i - 1], tracer);
      trace_add(in[k - 1], tracer, "add" + std::to_string(k));
    }
    if (branches_ > 1) trace_relu(in[k - 1], tracer, "relu" + std::to_string(k));
  }
  scope.outputs(out);
  return out;
}

// BranchExtension -----------------------------------------------------------

BranchExtension::BranchExtension(std::string name, int in_channels, int out_channels,
                                 const BuildContext& ctx)
    : Module(std::move(name), "branch_extension") {
  conv_ = &add_child<ConvBn>("down", in_channels, out_channels, 3, 2, true, ctx);
}

Shape BranchExtension::trace(Shape in, Tracer& tracer) const {
  auto scope = tracer.scope(name(), kind());
  const Shape s = conv_->trace(in, tracer);
  scope.outputs({s});
  return s;
}

// ExchangeBlock -------------------------------------------------------------

ExchangeBlock::ExchangeBlock(std::string name, int branches, bool with_exchange,
                             std::vector<int> outputs, const HRNetSpec& spec,
                             const BuildContext& ctx)
    : Module(std::move(name), "exchange_block") {
  units_.resize(static_cast<std::size_t>(branches));
  for (int r = 1; r <= branches; ++r) {
    for (int u = 0; u < spec.units_for_branch(r); ++u) {
      units_[r - 1].push_back(&add_child<BasicBlock>(
          "branch" + std::to_string(r) + ".unit" + std::to_string(u + 1), spec.branch_width(r),
          ctx));
    }
  }
  if (with_exchange) {
    exchange_ = &add_child<ExchangeUnit>("exchange", branches, std::move(outputs), spec, ctx);
  }
}

std::vector<Tensor> ExchangeBlock::forward(std::vector<Tensor> xs) {
  if (xs.size() != units_.size()) {
    throw ShapeError("exchange_block", "branches", static_cast<std::int64_t>(units_.size()),
                     static_cast<std::int64_t>(xs.size()));
  }
  for (std::size_t r = 0; r < units_.size(); ++r) {
    for (BasicBlock* unit : units_[r]) xs[r] = unit->forward(xs[r]);
  }
  return exchange_ ? exchange_->forward(xs) : xs;
}

std::vector<Shape> ExchangeBlock::trace(std::vector<Shape> in, Tracer& tracer) const {
  if (in.size() != units_.size()) {
    throw ShapeError("exchange_block", "branches", static_cast<std::int64_t>(units_.size()),
                     static_cast<std::int64_t>(in.size()));
  }
  auto scope = tracer.scope(name(), kind());
  for (std::size_t r = 0; r < units_.size(); ++r) {
    for (const BasicBlock* unit : units_[r]) in[r] = unit->trace(in[r], tracer);
  }
  if (exchange_) in = exchange_->trace(in, tracer);
  scope.outputs(in);
  return in;
}

// Stem / Stage1 -------------------------------------------------------------

Stem::Stem(const HRNetSpec& spec, const BuildContext& ctx) : Module("stem", "stem") {
  first_ = &add_child<ConvBn>("conv1", 3, spec.stem_width, 3, 2, true, ctx);
  second_ = &add_child<ConvBn>("conv2", spec.stem_width, spec.stem_width, 3, 2, true, ctx);
}

Tensor Stem::forward(const Tensor& x) { return second_->forward(first_->forward(x)); }

Shape Stem::trace(Shape in, Tracer& tracer) const {
  auto scope = tracer.scope(name(), kind());
  const Shape s = second_->trace(first_->trace(in, tracer), tracer);
  scope.outputs({s});
  return s;
}

Stage1::Stage1(const HRNetSpec& spec, const BuildContext& ctx) : Module("stage1", "stage") {
  int channels = spec.stem_width;
  for (int u = 0; u < spec.stage1_units; ++u) {
    units_.push_back(
        &add_child<Bottleneck>("unit" + std::to_string(u + 1), channels, spec.stage1_width, ctx));
    channels = units_.back()->out_channels();
  }
  bottleneck_out_ = channels;
  const int created = spec.branches_in_stage(2);
  for (int r = 1; r <= created; ++r) {
    const int cin = r <= 2 ? bottleneck_out_ : spec.branch_width(r - 1);
    transition_.push_back(&add_child<ConvBn>("transition.branch" + std::to_string(r), cin,
                                             spec.branch_width(r), 3, r == 1 ? 1 : 2, true, ctx));
  }
}

std::vector<Tensor> Stage1::forward(const Tensor& x) {
  Tensor y = x;
  for (Bottleneck* unit : units_) y = unit->forward(y);
  std::vector<Tensor> out;
  for (std::size_t r = 0; r < transition_.size(); ++r) {
    const Tensor& src = r <= 1 ? y : out.back();
    out.push_back(transition_[r]->forward(src));
  }
  return out;
}

std::vector<Shape> Stage1::trace(Shape in, Tracer& tracer) const {
  auto scope = tracer.scope(name(), kind());
  for (const Bottleneck* unit : units_) in = unit->trace(in, tracer);
  std::vector<Shape> out;
  {
    auto transition = tracer.scope("transition", "exchange_unit");
    for (std::size_t r = 0; r < transition_.size(); ++r) {
      out.push_back(transition_[r]->trace(r <= 1 ? in : out.back(), tracer));
    }
    transition.outputs(out);
  }
  scope.outputs(out);
  return out;
}

// Stage ---------------------------------------------------------------------

Stage::Stage(int stage, const HRNetSpec& spec, const BuildContext& ctx)
    : Module("stage" + std::to_string(stage), "stage") {
  if (stage < 2 || stage > spec.num_stages()) {
    throw std::invalid_argument("exchange blocks exist for stages 2.." +
                                std::to_string(spec.num_stages()) + ", got " +
                                std::to_string(stage));
  }
  const int branches = spec.branches_in_stage(stage);
  const int count = spec.stage_blocks[static_cast<std::size_t>(stage - 2)];
  const bool final_stage = stage == spec.num_stages();
  for (int b = 1; b <= count; ++b) {
    const bool last = b == count;
    bool with_exchange = false;
    switch (spec.fusion) {
      case FusionMode::kFull: with_exchange = true; break;
      case FusionMode::kAcrossStageOnly: with_exchange = last; break;
      case FusionMode::kFinalOnly: with_exchange = last && final_stage; break;
    }
    std::vector<int> outputs;
    if (final_stage && last) {
      outputs = {spec.head_branch};
    } else {
      for (int r = 1; r <= branches; ++r) outputs.push_back(r);
    }
    blocks_.push_back(&add_child<ExchangeBlock>("block" + std::to_string(b), branches,
                                                with_exchange, outputs, spec, ctx));
  }
  if (!final_stage && !spec.all_branches_from_start) {
    extension_ = &add_child<BranchExtension>("extension", spec.branch_width(branches),
                                             spec.branch_width(branches + 1), ctx);
  }
}

std::vector<Tensor> Stage::forward(std::vector<Tensor> xs) {
  for (ExchangeBlock* block : blocks_) xs = block->forward(std::move(xs));
  if (extension_) xs.push_back(extension_->forward(xs.back()));
  return xs;
}

std::vector<Shape> Stage::trace(std::vector<Shape> in, Tracer& tracer) const {
  auto scope = tracer.scope(name(), kind());
  for (const ExchangeBlock* block : blocks_) in = block->trace(std::move(in), tracer);
  if (extension_) in.push_back(extension_->trace(in.back(), tracer));
  scope.outputs(in);
  return in;
}

// HRNet ---------------------------------------------------------------------

HRNet::HRNet(HRNetSpec spec, DType dtype, std::uint64_t seed)
    : HRNet(std::move(spec), dtype, std::make_unique<Rng>(Rng::substream(seed, "init")).get()) {}

HRNet HRNet::structure_only(HRNetSpec spec) { return HRNet(std::move(spec), DType::kFloat32, nullptr); }

HRNet::HRNet(HRNetSpec spec, DType dtype, Rng* rng)
    : Module("", "hrnet"), spec_(std::move(spec)), dtype_(dtype) {
  spec_.validate();
  const BuildContext ctx{dtype, rng};
  stem_ = &add_child<Stem>(spec_, ctx);
  stage1_ = &add_child<Stage1>(spec_, ctx);
  for (int s = 2; s <= spec_.num_stages(); ++s) stages_.push_back(&add_child<Stage>(s, spec_, ctx));
  head_ = &add_child<Conv2d>("head", spec_.branch_width(spec_.head_branch), spec_.num_keypoints, 1,
                             1, 0, true, ctx, InitKind::kNormalSmall);
  assign_paths();
}

namespace {

void check_image(Shape in, const HRNetSpec& spec) {
  if (in.c != 3) throw ShapeError("hrnet", "input.channels", 3, in.c);
  const int div = 1 << (spec.num_branches() + 1);
  if (in.h % div != 0) throw ShapeError("hrnet", "input.height", (in.h / div + 1) * div, in.h);
  if (in.w % div != 0) throw ShapeError("hrnet", "input.width", (in.w / div + 1) * div, in.w);
}

}  // namespace

Tensor HRNet::forward(const Tensor& image) {
  check_image(image.shape(), spec_);
  std::vector<Tensor> xs = stage1_->forward(stem_->forward(image));
  for (Stage* stage : stages_) xs = stage->forward(std::move(xs));
  return head_->forward(xs[static_cast<std::size_t>(spec_.head_branch - 1)]);
}

Shape HRNet::trace(Shape input, Tracer& tracer) const {
  check_image(input, spec_);
  auto scope = tracer.scope("hrnet", kind());
  std::vector<Shape> xs = stage1_->trace(stem_->trace(input, tracer), tracer);
  for (const Stage* stage : stages_) xs = stage->trace(std::move(xs), tracer);
  const Shape out = head_->trace(xs[static_cast<std::size_t>(spec_.head_branch - 1)], tracer);
  scope.outputs({out});
  return out;
}

int HRNet::exchange_unit_count() const {
  int count = 0;
  for (const Stage* stage : stages_) {
    for (const ExchangeBlock* block : stage->blocks()) count += block->exchange() != nullptr;
  }
  return count;
}

// describe ------------------------------------------------------------------

namespace {

std::string shape_list(const std::vector<Shape>& shapes) {
  std::string out;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (i) out += " ";
    out += shapes[i].str();
  }
  return out;
}

void describe_text_rec(const TraceNode& node, int depth, std::ostringstream& out) {
  out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << node.name << " [" << node.kind
      << "] " << shape_list(node.outputs) << " params=" << node.total_params()
      << " flops=" << node.total_flops() << "\n";
  for (const auto& c : node.children) describe_text_rec(c, depth + 1, out);
}

nlohmann::json describe_json_rec(const TraceNode& node) {
  nlohmann::json j;
  j["name"] = node.name;
  j["kind"] = node.kind;
  j["params"] = node.total_params();
  j["flops"] = node.total_flops();
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& s : node.outputs) outs.push_back({s.n, s.c, s.h, s.w});
  j["outputs"] = outs;
  if (!node.children.empty()) {
    nlohmann::json kids = nlohmann::json::array();
    for (const auto& c : node.children) kids.push_back(describe_json_rec(c));
    j["children"] = kids;
  }
  return j;
}

}  // namespace

std::string describe_text(const TraceNode& root) {
  std::ostringstream out;
  for (const auto& c : root.children) describe_text_rec(c, 0, out);
  return out.str();
}

std::string describe_json(const TraceNode& root) {
  nlohmann::json kids = nlohmann::json::array();
  for (const auto& c : root.children) kids.push_back(describe_json_rec(c));
  return kids.dump(2);
}

}  // namespace hrpose
