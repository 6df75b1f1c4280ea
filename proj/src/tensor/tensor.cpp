#include "hrpose/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace hrpose {

const char* dtype_name(DType dtype) {
  return dtype == DType::kFloat64 ? "float64" : "float32";
}

std::string Shape::str() const {
  std::ostringstream os;
  os << n << "x" << c << "x" << h << "x" << w;
  return os.str();
}

ShapeError::ShapeError(const std::string& op, std::string dimension, std::int64_t expected,
                       std::int64_t actual)
    : std::invalid_argument(op + ": " + dimension + " expected " + std::to_string(expected) +
                            ", got " + std::to_string(actual)),
      dimension_(std::move(dimension)),
      expected_(expected),
      actual_(actual) {}

namespace {

void check_shape(const Shape& shape) {
  if (shape.n < 1) throw ShapeError("tensor", "shape.n", 1, shape.n);
  if (shape.c < 1) throw ShapeError("tensor", "shape.c", 1, shape.c);
  if (shape.h < 1) throw ShapeError("tensor", "shape.h", 1, shape.h);
  if (shape.w < 1) throw ShapeError("tensor", "shape.w", 1, shape.w);
}

std::shared_ptr<detail::TensorImpl> make_impl(Shape shape, DType dtype) {
  check_shape(shape);
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape;
  impl->dtype = dtype;
  if (dtype == DType::kFloat64) {
    impl->f64.assign(static_cast<std::size_t>(shape.numel()), 0.0);
  } else {
    impl->f32.assign(static_cast<std::size_t>(shape.numel()), 0.0f);
  }
  return impl;
}

thread_local bool g_grad_enabled = true;

}  // namespace

Tensor Tensor::zeros(Shape shape, DType dtype) { return Tensor(make_impl(shape, dtype)); }

Tensor Tensor::full(Shape shape, double value, DType dtype) {
  Tensor t = zeros(shape, dtype);
  t.fill(value);
  return t;
}

Tensor Tensor::from(Shape shape, std::span<const float> values) {
  if (static_cast<std::int64_t>(values.size()) != shape.numel()) {
    throw ShapeError("tensor", "buffer.length", shape.numel(),
                     static_cast<std::int64_t>(values.size()));
  }
  Tensor t = zeros(shape, DType::kFloat32);
  std::copy(values.begin(), values.end(), t.impl_->f32.begin());
  return t;
}

Tensor Tensor::from(Shape shape, std::span<const double> values) {
  if (static_cast<std::int64_t>(values.size()) != shape.numel()) {
    throw ShapeError("tensor", "buffer.length", shape.numel(),
                     static_cast<std::int64_t>(values.size()));
  }
  Tensor t = zeros(shape, DType::kFloat64);
  std::copy(values.begin(), values.end(), t.impl_->f64.begin());
  return t;
}

const Shape& Tensor::shape() const {
  if (!impl_) throw std::logic_error("tensor: undefined tensor");
  return impl_->shape;
}

DType Tensor::dtype() const {
  if (!impl_) throw std::logic_error("tensor: undefined tensor");
  return impl_->dtype;
}

template <>
float* Tensor::data<float>() {
  if (dtype() != DType::kFloat32) throw std::logic_error("tensor: data<float> on float64 tensor");
  return impl_->f32.data();
}
template <>
const float* Tensor::data<float>() const {
  if (dtype() != DType::kFloat32) throw std::logic_error("tensor: data<float> on float64 tensor");
  return impl_->f32.data();
}
template <>
double* Tensor::data<double>() {
  if (dtype() != DType::kFloat64) throw std::logic_error("tensor: data<double> on float32 tensor");
  return impl_->f64.data();
}
template <>
const double* Tensor::data<double>() const {
  if (dtype() != DType::kFloat64) throw std::logic_error("tensor: data<double> on float32 tensor");
  return impl_->f64.data();
}

double Tensor::flat(std::int64_t i) const {
  const auto& s = shape();
  if (i < 0 || i >= s.numel()) throw std::out_of_range("tensor: flat index");
  return impl_->dtype == DType::kFloat64 ? impl_->f64[i] : impl_->f32[i];
}

void Tensor::set_flat(std::int64_t i, double value) {
  const auto& s = shape();
  if (i < 0 || i >= s.numel()) throw std::out_of_range("tensor: flat index");
  if (impl_->dtype == DType::kFloat64) {
    impl_->f64[i] = value;
  } else {
    impl_->f32[i] = static_cast<float>(value);
  }
}

double Tensor::at(int n, int c, int h, int w) const {
  const auto& s = shape();
  return flat(((std::int64_t{n} * s.c + c) * s.h + h) * s.w + w);
}

void Tensor::set(int n, int c, int h, int w, double value) {
  const auto& s = shape();
  set_flat(((std::int64_t{n} * s.c + c) * s.h + h) * s.w + w, value);
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item", "numel", 1, numel());
  return flat(0);
}

std::vector<double> Tensor::to_vector() const {
  if (dtype() == DType::kFloat64) return impl_->f64;
  return {impl_->f32.begin(), impl_->f32.end()};
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
  if (!impl_) throw std::logic_error("tensor: undefined tensor");
  if (impl_->node) throw std::logic_error("tensor: requires_grad can only be set on leaves");
  impl_->requires_grad = flag;
  return *this;
}

bool Tensor::is_leaf() const { return impl_ && !impl_->node; }

Tensor Tensor::grad() const {
  if (!impl_ || !impl_->grad) return Tensor();
  return Tensor(impl_->grad);
}

void Tensor::zero_grad() {
  if (impl_ && impl_->grad) Tensor(impl_->grad).fill(0.0);
}

void Tensor::clear_grad() {
  if (impl_) impl_->grad.reset();
}

Tensor Tensor::detach() const {
  Tensor t = clone();
  return t;
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape();
  impl->dtype = impl_->dtype;
  impl->f32 = impl_->f32;
  impl->f64 = impl_->f64;
  return Tensor(impl);
}

Tensor Tensor::to(DType dtype) const {
  if (dtype == this->dtype()) return clone();
  Tensor out = zeros(shape(), dtype);
  if (dtype == DType::kFloat64) {
    std::copy(impl_->f32.begin(), impl_->f32.end(), out.impl_->f64.begin());
  } else {
    std::transform(impl_->f64.begin(), impl_->f64.end(), out.impl_->f32.begin(),
                   [](double v) { return static_cast<float>(v); });
  }
  return out;
}

void Tensor::fill(double value) {
  if (dtype() == DType::kFloat64) {
    std::fill(impl_->f64.begin(), impl_->f64.end(), value);
  } else {
    std::fill(impl_->f32.begin(), impl_->f32.end(), static_cast<float>(value));
  }
}

void Tensor::add_inplace(const Tensor& other, double scale) {
  if (other.shape() != shape()) throw ShapeError("add_inplace", "numel", numel(), other.numel());
  if (other.dtype() != dtype()) throw std::invalid_argument("add_inplace: dtype mismatch");
  dispatch(dtype(), [&](auto tag) {
    using T = decltype(tag);
    T* dst = data<T>();
    const T* src = other.data<T>();
    const T s = static_cast<T>(scale);
    const std::int64_t n = numel();
    for (std::int64_t i = 0; i < n; ++i) dst[i] += s * src[i];
  });
}

void Tensor::copy_from(const Tensor& other) {
  if (other.shape() != shape()) throw ShapeError("copy_from", "numel", numel(), other.numel());
  if (dtype() == DType::kFloat64) {
    if (other.dtype() == DType::kFloat64) {
      impl_->f64 = other.impl_->f64;
    } else {
      std::copy(other.impl_->f32.begin(), other.impl_->f32.end(), impl_->f64.begin());
    }
  } else if (other.dtype() == DType::kFloat32) {
    impl_->f32 = other.impl_->f32;
  } else {
    std::transform(other.impl_->f64.begin(), other.impl_->f64.end(), impl_->f32.begin(),
                   [](double v) { return static_cast<float>(v); });
  }
}

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set_enabled(bool enabled) { g_grad_enabled = enabled; }

NoGradGuard::NoGradGuard() : previous_(GradMode::enabled()) { GradMode::set_enabled(false); }
NoGradGuard::~NoGradGuard() { GradMode::set_enabled(previous_); }

bool any_requires_grad(std::initializer_list<const Tensor*> tensors) {
  for (const Tensor* t : tensors) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

void attach_grad(Tensor& output, std::string op, std::vector<Tensor> inputs,
                 std::function<std::vector<Tensor>(const Tensor&)> fn) {
  if (!GradMode::enabled()) return;
  bool needed = false;
  for (const auto& in : inputs) needed = needed || (in.defined() && in.requires_grad());
  if (!needed) return;
  auto node = std::make_shared<detail::GradNode>();
  node->op = std::move(op);
  node->inputs = std::move(inputs);
  node->backward = std::move(fn);
  output.impl()->node = std::move(node);
  output.impl()->requires_grad = true;
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::logic_error("backward: undefined loss");
  if (loss.numel() != 1) throw ShapeError("backward", "loss.numel", 1, loss.numel());
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> visited;
  std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack;
  stack.emplace_back(loss.impl().get(), 0);
  visited.insert(loss.impl().get());
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    if (impl->node && next < impl->node->inputs.size()) {
      detail::TensorImpl* child = impl->node->inputs[next++].impl().get();
      if (child && child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(impl);
    stack.pop_back();
  }

  std::unordered_map<detail::TensorImpl*, Tensor> grads;
  grads[loss.impl().get()] = Tensor::full(loss.shape(), 1.0, loss.dtype());

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorImpl* impl = *it;
    auto found = grads.find(impl);
    if (found == grads.end()) continue;
    Tensor g = found->second;
    grads.erase(found);
    if (!impl->node) {
      if (!impl->grad) {
        impl->grad = g.clone().impl();
      } else {
        Tensor(impl->grad).add_inplace(g);
      }
      continue;
    }
    std::vector<Tensor> input_grads = impl->node->backward(g);
    for (std::size_t i = 0; i < impl->node->inputs.size() && i < input_grads.size(); ++i) {
      const Tensor& in = impl->node->inputs[i];
      Tensor& gi = input_grads[i];
      if (!gi.defined() || !in.defined() || !in.requires_grad()) continue;
      auto slot = grads.find(in.impl().get());
      if (slot == grads.end()) {
        if (gi.impl().use_count() > 1) gi = gi.clone();
        grads.emplace(in.impl().get(), std::move(gi));
      } else {
        slot->second.add_inplace(gi);
      }
    }
  }
}

}  // namespace hrpose
