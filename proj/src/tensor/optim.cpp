#include "hrpose/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace hrpose {

Adam::Adam(std::vector<Parameter*> params, AdamOptions options) : params_(std::move(params)) {
  if (!(options.lr > 0.0)) throw std::invalid_argument("adam: lr must be positive");
  state_.options = options;
  state_.m.reserve(params_.size());
  state_.v.reserve(params_.size());
  for (const Parameter* p : params_) {
    state_.m.push_back(Tensor::zeros(p->value.shape(), p->value.dtype()));
    state_.v.push_back(Tensor::zeros(p->value.shape(), p->value.dtype()));
  }
}

void Adam::step() {
  ++state_.t;
  const AdamOptions& o = state_.options;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state_.t));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state_.t));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor g = params_[i]->value.grad();
    if (!g.defined()) continue;
    Tensor& value = params_[i]->value;
    dispatch(value.dtype(), [&](auto tag) {
      using T = decltype(tag);
      T* w = value.data<T>();
      const T* gp = g.data<T>();
      T* m = state_.m[i].data<T>();
      T* v = state_.v[i].data<T>();
      const std::int64_t n = value.numel();
      for (std::int64_t j = 0; j < n; ++j) {
        const double gj = gp[j];
        const double mj = o.beta1 * m[j] + (1.0 - o.beta1) * gj;
        const double vj = o.beta2 * v[j] + (1.0 - o.beta2) * gj * gj;
        m[j] = static_cast<T>(mj);
        v[j] = static_cast<T>(vj);
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        w[j] = static_cast<T>(w[j] - o.lr * mhat / (std::sqrt(vhat) + o.eps));
      }
    });
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->value.zero_grad();
}

void Adam::set_lr(double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("adam: lr must be positive");
  state_.options.lr = lr;
}

LrSchedule::LrSchedule(double base_lr, std::vector<std::pair<int, double>> milestones,
                       int total_epochs)
    : base_lr_(base_lr), milestones_(std::move(milestones)), total_epochs_(total_epochs) {
  if (!(base_lr_ > 0.0)) throw std::invalid_argument("lr schedule: base lr must be positive");
  int previous = -1;
  for (const auto& [epoch, lr] : milestones_) {
    if (epoch <= previous) {
      throw std::invalid_argument("lr schedule: milestone epochs must be strictly increasing");
    }
    if (epoch >= total_epochs_) {
      throw std::invalid_argument("lr schedule: milestone epoch must be < total epochs");
    }
    if (!(lr > 0.0)) throw std::invalid_argument("lr schedule: milestone lr must be positive");
    previous = epoch;
  }
}

double LrSchedule::lr_at(int epoch) const {
  double lr = base_lr_;
  for (const auto& [at, value] : milestones_) {
    if (epoch >= at) lr = value;
  }
  return lr;
}

LrSchedule LrSchedule::coco() { return LrSchedule(1e-3, {{170, 1e-4}, {200, 1e-5}}, 210); }

LrSchedule LrSchedule::posetrack() { return LrSchedule(1e-4, {{10, 1e-5}, {15, 1e-6}}, 20); }

}  // namespace hrpose
