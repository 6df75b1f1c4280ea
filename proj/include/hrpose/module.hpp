#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "hrpose/checkpoint.hpp"
#include "hrpose/optim.hpp"
#include "hrpose/random.hpp"
#include "hrpose/tensor.hpp"

namespace hrpose {

// One node of a symbolic execution: shapes and costs without touching data.
struct TraceNode {
  std::string name;
  std::string kind;
  std::int64_t params = 0;
  std::int64_t flops = 0;
  std::vector<Shape> outputs;
  std::vector<TraceNode> children;

  bool is_leaf() const { return children.empty(); }
  std::int64_t total_params() const;
  std::int64_t total_flops() const;
};

class Tracer {
 public:
  Tracer();

  class Scope {
   public:
    Scope(Tracer& tracer, TraceNode* node) : tracer_(&tracer), node_(node) {}
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;
    ~Scope();
    void outputs(std::vector<Shape> shapes) { node_->outputs = std::move(shapes); }

   private:
    Tracer* tracer_;
    TraceNode* node_;
  };

  Scope scope(const std::string& name, const std::string& kind);
  void leaf(const std::string& name, const std::string& kind, std::int64_t params,
            std::int64_t flops, Shape output);

  const TraceNode& root() const { return root_; }
  TraceNode& root() { return root_; }

 private:
  friend class Scope;
  TraceNode root_;
  std::vector<TraceNode*> stack_;
};

struct BuildContext {
  DType dtype = DType::kFloat32;
  Rng* rng = nullptr;
};

class Module {
 public:
  Module(std::string name, std::string kind);
  virtual ~Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  const std::string& name() const { return name_; }
  const std::string& kind() const { return kind_; }
  const std::string& path() const { return path_; }
  const std::vector<std::unique_ptr<Module>>& children() const { return children_; }

  // All learnable leaves below this module, in registration order.
  std::vector<Parameter*> parameters();
  std::int64_t parameter_count() const;
  // Parameters followed by buffers, keyed by full path.
  std::vector<NamedTensor> state() const;
  // Strict: every name must match and every shape must agree.
  void load_state(const std::vector<NamedTensor>& state);

  void set_training(bool training);
  bool training() const { return training_; }

  // Recomputes dotted paths and parameter names below `prefix`.
  void assign_paths(const std::string& prefix = "");

 protected:
  Parameter& register_parameter(const std::string& name, Tensor value);
  Tensor& register_buffer(const std::string& name, Tensor value);

  template <typename M, typename... Args>
  M& add_child(Args&&... args) {
    auto child = std::make_unique<M>(std::forward<Args>(args)...);
    M& ref = *child;
    children_.push_back(std::move(child));
    return ref;
  }

 private:
  void collect_parameters(std::vector<Parameter*>& out);
  void collect_state(std::vector<NamedTensor>& params, std::vector<NamedTensor>& buffers) const;

  std::string name_;
  std::string kind_;
  std::string path_;
  bool training_ = true;
  std::vector<std::unique_ptr<Module>> children_;
  std::vector<std::unique_ptr<Parameter>> params_;
  std::deque<std::pair<std::string, Tensor>> buffers_;
};

}  // namespace hrpose
