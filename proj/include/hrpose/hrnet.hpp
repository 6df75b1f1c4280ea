#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hrpose/layers.hpp"

namespace hrpose {

enum class FusionMode {
  kFinalOnly,        // one exchange unit, at the very end
  kAcrossStageOnly,  // the last unit of each stage
  kFull,             // one unit per exchange block
};

const char* fusion_mode_name(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view text);

// Declarative description of the network. Branch r (1-based) runs at
// 1/2^(r-1) of the stage-1 resolution with width C * 2^(r-1).
struct HRNetSpec {
  int width = 32;
  int num_keypoints = 17;
  // Exchange-block counts for stages 2..S; the net has stage_blocks.size() + 1
  // branches.
  std::vector<int> stage_blocks{1, 4, 3};
  int units_per_block = 4;
  // Optional per-branch residual-unit count, overriding units_per_block.
  std::vector<int> branch_units;
  int stage1_units = 4;
  int stage1_width = 64;
  int stem_width = 64;
  FusionMode fusion = FusionMode::kFull;
  bool all_branches_from_start = false;
  int head_branch = 1;

  int num_stages() const { return static_cast<int>(stage_blocks.size()) + 1; }
  int num_branches() const { return num_stages(); }
  int branch_width(int branch) const { return width << (branch - 1); }
  int units_for_branch(int branch) const;
  // Number of parallel branches alive during `stage` (1-based).
  int branches_in_stage(int stage) const;
  void validate() const;

  static HRNetSpec w32();
  static HRNetSpec w48();
  // Desk-scale preset, C = 8 with the canonical topology. Not a published net.
  static HRNetSpec w8(int num_keypoints = 5);
  // All four branches from stage 2 onward; the lowest branch carries one unit
  // per block so that the size stays close to the canonical net.
  static HRNetSpec resolution_maintenance(const HRNetSpec& base);
  static HRNetSpec preset(std::string_view name);
};

// key = value lines; '#' starts a comment. Unknown keys are rejected.
HRNetSpec parse_hrnet_spec(std::string_view text, const HRNetSpec& base = HRNetSpec{});
HRNetSpec load_hrnet_spec(const std::string& path);
std::string format_hrnet_spec(const HRNetSpec& spec);

// a(X_i, k): stride-2 3x3 chain for i < k, 1x1 conv + nearest upsample for i > k.
// Intermediate convs of a chain keep the source width and carry a ReLU.
class FusePath : public Module {
 public:
  FusePath(int from, int to, const HRNetSpec& spec, const BuildContext& ctx);
  Tensor forward(const Tensor& x);
  Shape trace(Shape in, Tracer& tracer) const;
  int from() const { return from_; }
  int to() const { return to_; }

 private:
  int from_, to_;
  std::vector<ConvBn*> steps_;
};

// Y_k = relu(sum_i a(X_i, k)) for each requested output k.
class ExchangeUnit : public Module {
 public:
  ExchangeUnit(std::string name, int branches, std::vector<int> outputs, const HRNetSpec& spec,
               const BuildContext& ctx);

  // Returns one tensor per input branch; entries not in `outputs()` are undefined.
  std::vector<Tensor> forward(const std::vector<Tensor>& xs);
  std::vector<Shape> trace(const std::vector<Shape>& in, Tracer& tracer) const;

  int branches() const { return branches_; }
  const std::vector<int>& outputs() const { return outputs_; }
  // Path feeding output `to` from input `from` (both 1-based); null for identity.
  FusePath* path(int from, int to) const;

 private:
  HRNetSpec spec_;
  int branches_;
  std::vector<int> outputs_;
  std::vector<std::vector<FusePath*>> paths_;  // [to][from]
};

// The extra output of an across-stage unit: Y_{s+1} = a(Y_s, s+1).
class BranchExtension : public Module {
 public:
  BranchExtension(std::string name, int in_channels, int out_channels, const BuildContext& ctx);
  Tensor forward(const Tensor& x) { return conv_->forward(x); }
  Shape trace(Shape in, Tracer& tracer) const;

 private:
  ConvBn* conv_;
};

class ExchangeBlock : public Module {
 public:
  ExchangeBlock(std::string name, int branches, bool with_exchange, std::vector<int> outputs,
                const HRNetSpec& spec, const BuildContext& ctx);

  std::vector<Tensor> forward(std::vector<Tensor> xs);
  std::vector<Shape> trace(std::vector<Shape> in, Tracer& tracer) const;
  ExchangeUnit* exchange() const { return exchange_; }

 private:
  std::vector<std::vector<BasicBlock*>> units_;
  ExchangeUnit* exchange_ = nullptr;
};

class Stem : public Module {
 public:
  Stem(const HRNetSpec& spec, const BuildContext& ctx);
  Tensor forward(const Tensor& x);
  Shape trace(Shape in, Tracer& tracer) const;

 private:
  ConvBn* first_;
  ConvBn* second_;
};

// Bottleneck units at 1/4 resolution followed by the branch-creating
// transition into the parallel stages.
class Stage1 : public Module {
 public:
  Stage1(const HRNetSpec& spec, const BuildContext& ctx);
  std::vector<Tensor> forward(const Tensor& x);
  std::vector<Shape> trace(Shape in, Tracer& tracer) const;
  int bottleneck_out_channels() const { return bottleneck_out_; }

 private:
  int bottleneck_out_;
  std::vector<Bottleneck*> units_;
  std::vector<ConvBn*> transition_;  // branch r's creating conv
};

class Stage : public Module {
 public:
  Stage(int stage, const HRNetSpec& spec, const BuildContext& ctx);
  std::vector<Tensor> forward(std::vector<Tensor> xs);
  std::vector<Shape> trace(std::vector<Shape> in, Tracer& tracer) const;
  const std::vector<ExchangeBlock*>& blocks() const { return blocks_; }

 private:
  std::vector<ExchangeBlock*> blocks_;
  BranchExtension* extension_ = nullptr;
};

class HRNet : public Module {
 public:
  HRNet(HRNetSpec spec, DType dtype = DType::kFloat32, std::uint64_t seed = 0);
  // Zero-initialized net for audits and shape queries.
  static HRNet structure_only(HRNetSpec spec);

  // image [N, 3, H, W] -> heatmaps [N, K, H / 2^(r+1), W / 2^(r+1)] for head branch r.
  Tensor forward(const Tensor& image);
  Shape trace(Shape input, Tracer& tracer) const;

  const HRNetSpec& spec() const { return spec_; }
  DType dtype() const { return dtype_; }
  Conv2d& head() { return *head_; }
  int exchange_unit_count() const;
  const std::vector<Stage*>& stages() const { return stages_; }

 private:
  HRNet(HRNetSpec spec, DType dtype, Rng* rng);
  HRNetSpec spec_;
  DType dtype_;
  Stem* stem_;
  Stage1* stage1_;
  std::vector<Stage*> stages_;
  Conv2d* head_;
};

// Indented text and JSON renderings of a trace for `describe`.
std::string describe_text(const TraceNode& root);
std::string describe_json(const TraceNode& root);

}  // namespace hrpose
