#include "hrpose/module.hpp"

#include <stdexcept>
#include <unordered_map>

namespace hrpose {

std::int64_t TraceNode::total_params() const {
  std::int64_t total = params;
  for (const auto& c : children) total += c.total_params();
  return total;
}

std::int64_t TraceNode::total_flops() const {
  std::int64_t total = flops;
  for (const auto& c : children) total += c.total_flops();
  return total;
}

Tracer::Tracer() {
  root_.name = "";
  root_.kind = "root";
  stack_.push_back(&root_);
}

Tracer::Scope::~Scope() { tracer_->stack_.pop_back(); }

Tracer::Scope Tracer::scope(const std::string& name, const std::string& kind) {
  TraceNode& parent = *stack_.back();
  parent.children.push_back(TraceNode{name, kind, 0, 0, {}, {}});
  TraceNode* node = &parent.children.back();
  stack_.push_back(node);
  return Scope(*this, node);
}

void Tracer::leaf(const std::string& name, const std::string& kind, std::int64_t params,
                  std::int64_t flops, Shape output) {
  stack_.back()->children.push_back(TraceNode{name, kind, params, flops, {output}, {}});
}

Module::Module(std::string name, std::string kind)
    : name_(std::move(name)), kind_(std::move(kind)), path_(name_) {}

Parameter& Module::register_parameter(const std::string& name, Tensor value) {
  value.set_requires_grad(true);
  params_.push_back(std::make_unique<Parameter>(Parameter{name, std::move(value)}));
  return *params_.back();
}

Tensor& Module::register_buffer(const std::string& name, Tensor value) {
  buffers_.emplace_back(name, std::move(value));
  return buffers_.back().second;
}

void Module::assign_paths(const std::string& prefix) {
  path_ = prefix.empty() ? name_ : (name_.empty() ? prefix : prefix + "." + name_);
  for (auto& p : params_) {
    const auto dot = p->name.rfind('.');
    const std::string local = dot == std::string::npos ? p->name : p->name.substr(dot + 1);
    p->name = path_.empty() ? local : path_ + "." + local;
  }
  for (auto& c : children_) c->assign_paths(path_);
}

void Module::collect_parameters(std::vector<Parameter*>& out) {
  for (auto& p : params_) out.push_back(p.get());
  for (auto& c : children_) c->collect_parameters(out);
}

std::vector<Parameter*> Module::parameters() {
  std::vector<Parameter*> out;
  collect_parameters(out);
  return out;
}

std::int64_t Module::parameter_count() const {
  std::int64_t total = 0;
  for (const auto& p : params_) total += p->value.numel();
  for (const auto& c : children_) total += c->parameter_count();
  return total;
}

void Module::collect_state(std::vector<NamedTensor>& params,
                           std::vector<NamedTensor>& buffers) const {
  for (const auto& p : params_) params.push_back({p->name, p->value});
  for (const auto& [name, t] : buffers_) {
    buffers.push_back({path_.empty() ? name : path_ + "." + name, t});
  }
  for (const auto& c : children_) c->collect_state(params, buffers);
}

std::vector<NamedTensor> Module::state() const {
  std::vector<NamedTensor> params, buffers;
  collect_state(params, buffers);
  params.insert(params.end(), buffers.begin(), buffers.end());
  return params;
}

void Module::load_state(const std::vector<NamedTensor>& state) {
  std::unordered_map<std::string, const Tensor*> incoming;
  for (const auto& e : state) incoming[e.name] = &e.value;
  auto own = this->state();
  if (own.size() != incoming.size()) {
    throw std::runtime_error("load_state: expected " + std::to_string(own.size()) +
                             " tensors, got " + std::to_string(incoming.size()));
  }
  for (auto& e : own) {
    auto it = incoming.find(e.name);
    if (it == incoming.end()) throw std::runtime_error("load_state: missing " + e.name);
    const Tensor& src = *it->second;
    if (src.shape() != e.value.shape()) {
      throw std::runtime_error("load_state: " + e.name + " has shape " + src.shape().str() +
                               ", expected " + e.value.shape().str());
    }
    // e.value shares storage with the live parameter / buffer.
    Tensor dst = e.value;
    dst.copy_from(src);
  }
}

void Module::set_training(bool training) {
  training_ = training;
  for (auto& c : children_) c->set_training(training);
}

}  // namespace hrpose
