#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hrpose/hrnet.hpp"

namespace hrpose {

struct CostRow {
  std::string name;  // dotted path of a leaf layer
  std::string kind;
  std::int64_t params = 0;
  std::int64_t flops = 0;
  Shape output;
};

struct CostReport {
  std::string arch;
  int input_height = 0;
  int input_width = 0;
  std::int64_t total_params = 0;
  std::int64_t total_flops = 0;
  std::vector<CostRow> rows;

  double gflops() const { return static_cast<double>(total_flops) * 1e-9; }
  double mparams() const { return static_cast<double>(total_params) * 1e-6; }
  std::string table() const;
  std::string json() const;
};

// Learnable scalars only; running statistics are buffers and not counted.
std::int64_t count_params(const Module& model);
// One multiply-accumulate = one FLOP; bn/relu/add/upsample cost one op per
// output element. Batch size 1. Returns GFLOPs.
double count_flops(const HRNet& model, int height, int width);
CostReport cost_report(const HRNet& model, int height, int width, std::string arch = "");

struct PublishedTarget {
  std::string arch;
  int input_height;
  int input_width;
  std::optional<double> mparams;  // millions
  std::optional<double> gflops;
};

const std::vector<PublishedTarget>& published_targets();

struct TargetCheck {
  std::string what;
  double measured;
  double target;
  double tolerance;  // relative
  bool ok() const;
  std::string line() const;
};

// Checks against every published target matching (arch, input size).
// Parameter targets carry a 2% band, FLOP targets 10%.
std::vector<TargetCheck> compare_with_published(const CostReport& report);

}  // namespace hrpose
