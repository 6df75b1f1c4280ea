#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hrpose/tensor.hpp"

namespace hrpose {

// A learnable leaf. `value.grad()` holds its gradient once a backward pass
// has reached it.
struct Parameter {
  std::string name;
  Tensor value;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter moments plus the shared step counter.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long t = 0;
  AdamOptions options;
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options = {});

  // Bias-corrected Adam update. Parameters without a gradient are skipped.
  void step();
  void zero_grad();

  void set_lr(double lr);
  double lr() const { return state_.options.lr; }
  const AdamState& state() const { return state_; }
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  AdamState state_;
};

// Piecewise-constant learning rate: `base_lr` until the first milestone, then
// the rate of the latest milestone whose epoch is <= the query epoch.
class LrSchedule {
 public:
  LrSchedule(double base_lr, std::vector<std::pair<int, double>> milestones, int total_epochs);

  double lr_at(int epoch) const;
  int total_epochs() const { return total_epochs_; }
  double base_lr() const { return base_lr_; }
  const std::vector<std::pair<int, double>>& milestones() const { return milestones_; }

  // 1e-3, dropped to 1e-4 at 170 and 1e-5 at 200, 210 epochs.
  static LrSchedule coco();
  // Fine-tuning: 1e-4, 1e-5 at 10, 1e-6 at 15, 20 epochs.
  static LrSchedule posetrack();

 private:
  double base_lr_;
  std::vector<std::pair<int, double>> milestones_;
  int total_epochs_;
};

}  // namespace hrpose
