#include "hrpose/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace hrpose {

namespace {

Tensor init_tensor(Shape shape, InitKind init, int fan_out, const BuildContext& ctx) {
  Tensor t = Tensor::zeros(shape, ctx.dtype);
  // Without a generator the weights stay zero (structure-only builds).
  if (init == InitKind::kZero || ctx.rng == nullptr) return t;
  const double stddev =
      init == InitKind::kNormalSmall ? 0.001 : std::sqrt(2.0 / static_cast<double>(fan_out));
  for (std::int64_t i = 0; i < t.numel(); ++i) t.set_flat(i, ctx.rng->normal(0.0, stddev));
  return t;
}

Shape conv_out(Shape in, int out_channels, int kernel, int stride, int padding) {
  return {in.n, out_channels, (in.h + 2 * padding - kernel) / stride + 1,
          (in.w + 2 * padding - kernel) / stride + 1};
}

}  // namespace

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride,
               int padding, bool bias, const BuildContext& ctx, InitKind init)
    : Module(std::move(name), "conv"),
      in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding) {
  weight_ = &register_parameter(
      "weight", init_tensor({out_channels, in_channels, kernel, kernel}, init,
                            out_channels * kernel * kernel, ctx));
  if (bias) bias_ = &register_parameter("bias", Tensor::zeros({1, out_channels, 1, 1}, ctx.dtype));
}

Tensor Conv2d::forward(const Tensor& x) const {
  return conv2d(x, weight_->value, bias_ ? bias_->value : Tensor(), {stride_, padding_});
}

Shape Conv2d::trace(Shape in, Tracer& tracer) const {
  if (in.c != in_) throw ShapeError("conv2d", "weight.in_channels", in.c, in_);
  const Shape out = conv_out(in, out_, kernel_, stride_, padding_);
  const std::int64_t macs = std::int64_t{out_} * in_ * kernel_ * kernel_ * out.plane() * in.n;
  const std::int64_t params =
      std::int64_t{out_} * in_ * kernel_ * kernel_ + (bias_ ? out_ : 0);
  tracer.leaf(name(), "conv", params, macs, out);
  return out;
}

BatchNorm2d::BatchNorm2d(std::string name, int channels, const BuildContext& ctx)
    : Module(std::move(name), "bn"), channels_(channels) {
  gamma_ = &register_parameter("weight", Tensor::full({1, channels, 1, 1}, 1.0, ctx.dtype));
  beta_ = &register_parameter("bias", Tensor::zeros({1, channels, 1, 1}, ctx.dtype));
  mean_ = &register_buffer("running_mean", Tensor::zeros({1, channels, 1, 1}, ctx.dtype));
  var_ = &register_buffer("running_var", Tensor::full({1, channels, 1, 1}, 1.0, ctx.dtype));
}

Tensor BatchNorm2d::forward(const Tensor& x) {
  BatchNormOptions options;
  options.mode = training() && x.shape().n > 1 ? BatchNormMode::kTrain : BatchNormMode::kEval;
  return batch_norm2d(x, gamma_->value, beta_->value, *mean_, *var_, options);
}

Shape BatchNorm2d::trace(Shape in, Tracer& tracer) const {
  if (in.c != channels_) throw ShapeError("batch_norm2d", "gamma.length", in.c, channels_);
  tracer.leaf(name(), "bn", 2 * std::int64_t{channels_}, in.numel(), in);
  return in;
}

Shape trace_relu(Shape in, Tracer& tracer, const std::string& name) {
  tracer.leaf(name, "relu", 0, in.numel(), in);
  return in;
}

Shape trace_add(Shape in, Tracer& tracer, const std::string& name) {
  tracer.leaf(name, "add", 0, in.numel(), in);
  return in;
}

Shape trace_upsample(Shape in, int factor, Tracer& tracer) {
  const Shape out{in.n, in.c, in.h * factor, in.w * factor};
  tracer.leaf("upsample", "upsample", 0, out.numel(), out);
  return out;
}

ConvBn::ConvBn(std::string name, int in_channels, int out_channels, int kernel, int stride,
               bool relu, const BuildContext& ctx)
    : Module(std::move(name), "conv_bn"), relu_(relu) {
  conv_ = &add_child<Conv2d>("conv", in_channels, out_channels, kernel, stride, kernel / 2, false,
                             ctx);
  bn_ = &add_child<BatchNorm2d>("bn", out_channels, ctx);
}

Tensor ConvBn::forward(const Tensor& x) {
  Tensor y = bn_->forward(conv_->forward(x));
  return relu_ ? relu(y) : y;
}

Shape ConvBn::trace(Shape in, Tracer& tracer) const {
  auto scope = tracer.scope(name(), kind());
  Shape s = bn_->trace(conv_->trace(in, tracer), tracer);
  if (relu_) s = trace_relu(s, tracer);
  scope.outputs({s});
  return s;
}

BasicBlock::BasicBlock(std::string name, int channels, const BuildContext& ctx)
    : Module(std::move(name), "basic_block") {
  a_ = &add_child<ConvBn>("a", channels, channels, 3, 1, true, ctx);
  b_ = &add_child<ConvBn>("b", channels, channels, 3, 1, false, ctx);
}

Tensor BasicBlock::forward(const Tensor& x) { return relu(add(b_->forward(a_->forward(x)), x)); }

Shape BasicBlock::trace(Shape in, Tracer& tracer) const {
  auto scope = tracer.scope(name(), kind());
  Shape s = b_->trace(a_->trace(in, tracer), tracer);
  s = trace_relu(trace_add(s, tracer), tracer);
  scope.outputs({s});
  return s;
}

Bottleneck::Bottleneck(std::string name, int in_channels, int width, const BuildContext& ctx)
    : Module(std::move(name), "bottleneck"), out_(width * kExpansion) {
  reduce_ = &add_child<ConvBn>("reduce", in_channels, width, 1, 1, true, ctx);
  spatial_ = &add_child<ConvBn>("spatial", width, width, 3, 1, true, ctx);
  expand_ = &add_child<ConvBn>("expand", width, out_, 1, 1, false, ctx);
  if (in_channels != out_) {
    projection_ = &add_child<ConvBn>("projection", in_channels, out_, 1, 1, false, ctx);
  }
}

Tensor Bottleneck::forward(const Tensor& x) {
  Tensor y = expand_->forward(spatial_->forward(reduce_->forward(x)));
  Tensor skip = projection_ ? projection_->forward(x) : x;
  return relu(add(y, skip));
}

Shape Bottleneck::trace(Shape in, Tracer& tracer) const {
  auto scope = tracer.scope(name(), kind());
  Shape s = expand_->trace(spatial_->trace(reduce_->trace(in, tracer), tracer), tracer);
  if (projection_) projection_->trace(in, tracer);
  s = trace_relu(trace_add(s, tracer), tracer);
  scope.outputs({s});
  return s;
}

}  // namespace hrpose
