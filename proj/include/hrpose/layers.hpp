#pragma once

#include <vector>

#include "hrpose/module.hpp"
#include "hrpose/ops.hpp"

namespace hrpose {

enum class InitKind {
  kHeFanOut,     // N(0, 2 / (cout * kh * kw))
  kNormalSmall,  // N(0, 0.001^2)
  kZero,
};

class Conv2d : public Module {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding,
         bool bias, const BuildContext& ctx, InitKind init = InitKind::kHeFanOut);

  Tensor forward(const Tensor& x) const;
  Shape trace(Shape in, Tracer& tracer) const;

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  Parameter& weight() { return *weight_; }
  Parameter* bias() { return bias_; }

 private:
  int in_, out_, kernel_, stride_, padding_;
  Parameter* weight_;
  Parameter* bias_ = nullptr;
};

class BatchNorm2d : public Module {
 public:
  BatchNorm2d(std::string name, int channels, const BuildContext& ctx);

  // Train mode with a batch of one falls back to the running statistics.
  Tensor forward(const Tensor& x);
  Shape trace(Shape in, Tracer& tracer) const;

  Parameter& gamma() { return *gamma_; }
  Parameter& beta() { return *beta_; }
  Tensor& running_mean() { return *mean_; }
  Tensor& running_var() { return *var_; }

 private:
  int channels_;
  Parameter* gamma_;
  Parameter* beta_;
  Tensor* mean_;
  Tensor* var_;
};

Shape trace_relu(Shape in, Tracer& tracer, const std::string& name = "relu");
Shape trace_add(Shape in, Tracer& tracer, const std::string& name = "add");
Shape trace_upsample(Shape in, int factor, Tracer& tracer);

// conv -> bn (-> relu)
class ConvBn : public Module {
 public:
  ConvBn(std::string name, int in_channels, int out_channels, int kernel, int stride, bool relu,
         const BuildContext& ctx);

  Tensor forward(const Tensor& x);
  Shape trace(Shape in, Tracer& tracer) const;

  Conv2d& conv() { return *conv_; }
  BatchNorm2d& bn() { return *bn_; }

 private:
  Conv2d* conv_;
  BatchNorm2d* bn_;
  bool relu_;
};

// Two 3x3 conv/bn pairs with an identity skip.
class BasicBlock : public Module {
 public:
  BasicBlock(std::string name, int channels, const BuildContext& ctx);
  Tensor forward(const Tensor& x);
  Shape trace(Shape in, Tracer& tracer) const;

 private:
  ConvBn* a_;
  ConvBn* b_;
};

// 1x1 -> 3x3 -> 1x1 (x expansion) with an identity or projected skip.
class Bottleneck : public Module {
 public:
  static constexpr int kExpansion = 4;
  Bottleneck(std::string name, int in_channels, int width, const BuildContext& ctx);
  Tensor forward(const Tensor& x);
  Shape trace(Shape in, Tracer& tracer) const;
  int out_channels() const { return out_; }

 private:
  int out_;
  ConvBn* reduce_;
  ConvBn* spatial_;
  ConvBn* expand_;
  ConvBn* projection_ = nullptr;
};

}  // namespace hrpose
