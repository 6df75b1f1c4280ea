#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hrpose {

enum class DType { kFloat32, kFloat64 };

const char* dtype_name(DType dtype);

// Dense NCHW extent. Every entry is >= 1.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::int64_t numel() const {
    return std::int64_t{n} * c * h * w;
  }
  std::int64_t plane() const { return std::int64_t{h} * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Raised by any op whose operands disagree on an extent. `dimension()` names
// the offending axis, e.g. "weight.in_channels".
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& op, std::string dimension, std::int64_t expected,
             std::int64_t actual);
  const std::string& dimension() const { return dimension_; }
  std::int64_t expected() const { return expected_; }
  std::int64_t actual() const { return actual_; }

 private:
  std::string dimension_;
  std::int64_t expected_;
  std::int64_t actual_;
};

namespace detail {
struct TensorImpl;
struct GradNode;
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, DType dtype = DType::kFloat32);
  static Tensor full(Shape shape, double value, DType dtype = DType::kFloat32);
  static Tensor from(Shape shape, std::span<const float> values);
  static Tensor from(Shape shape, std::span<const double> values);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  DType dtype() const;
  std::int64_t numel() const { return shape().numel(); }

  template <typename T>
  T* data();
  template <typename T>
  const T* data() const;

  double at(int n, int c, int h, int w) const;
  void set(int n, int c, int h, int w, double value);
  double flat(std::int64_t i) const;
  void set_flat(std::int64_t i, double value);
  // Value of a one-element tensor.
  double item() const;
  std::vector<double> to_vector() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool flag);
  bool is_leaf() const;
  // Accumulated gradient of a leaf; undefined until a backward pass reaches it.
  Tensor grad() const;
  void zero_grad();
  void clear_grad();

  Tensor detach() const;
  Tensor clone() const;
  Tensor to(DType dtype) const;
  void fill(double value);
  // Elementwise `this += scale * other`, no tape. Shapes must match.
  void add_inplace(const Tensor& other, double scale = 1.0);
  // Overwrites the values with `other`'s (same shape, any dtype), no tape.
  void copy_from(const Tensor& other);

  const void* id() const { return impl_.get(); }

  // Used by op implementations.
  std::shared_ptr<detail::TensorImpl>& impl() { return impl_; }
  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

template <>
float* Tensor::data<float>();
template <>
const float* Tensor::data<float>() const;
template <>
double* Tensor::data<double>();
template <>
const double* Tensor::data<double>() const;

namespace detail {

struct GradNode {
  std::string op;
  std::vector<Tensor> inputs;
  // Returns one gradient per input (undefined for inputs that need none).
  std::function<std::vector<Tensor>(const Tensor& grad_output)> backward;
};

struct TensorImpl {
  Shape shape;
  DType dtype = DType::kFloat32;
  std::vector<float> f32;
  std::vector<double> f64;
  bool requires_grad = false;
  std::shared_ptr<TensorImpl> grad;
  std::shared_ptr<GradNode> node;
};

}  // namespace detail

// Thread-local switch for tape recording.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool enabled);
};

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Accumulates d(loss)/d(leaf) into every reachable leaf that requires grad.
// The graph is retained, so calling again without zeroing accumulates.
void backward(const Tensor& loss);

// Attaches `node` to `output` when recording is enabled and some input needs a
// gradient.
void attach_grad(Tensor& output, std::string op, std::vector<Tensor> inputs,
                 std::function<std::vector<Tensor>(const Tensor&)> fn);

bool any_requires_grad(std::initializer_list<const Tensor*> tensors);

// Dispatches `fn` with a `T` tag of float or double.
template <typename Fn>
decltype(auto) dispatch(DType dtype, Fn&& fn) {
  if (dtype == DType::kFloat64) return fn(double{});
  return fn(float{});
}

}  // namespace hrpose
