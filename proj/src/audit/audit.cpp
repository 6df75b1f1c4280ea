#include "hrpose/audit.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

namespace hrpose {

namespace {

void collect_rows(const TraceNode& node, const std::string& prefix, std::vector<CostRow>& rows) {
  const std::string path =
      node.name.empty() ? prefix : (prefix.empty() ? node.name : prefix + "." + node.name);
  if (node.is_leaf()) {
    rows.push_back({path, node.kind, node.params, node.flops,
                    node.outputs.empty() ? Shape{} : node.outputs.front()});
    return;
  }
  for (const auto& c : node.children) collect_rows(c, path, rows);
}

}  // namespace

std::int64_t count_params(const Module& model) { return model.parameter_count(); }

double count_flops(const HRNet& model, int height, int width) {
  Tracer tracer;
  model.trace({1, 3, height, width}, tracer);
  return static_cast<double>(tracer.root().total_flops()) * 1e-9;
}

CostReport cost_report(const HRNet& model, int height, int width, std::string arch) {
  Tracer tracer;
  model.trace({1, 3, height, width}, tracer);
  CostReport report;
  report.arch = std::move(arch);
  report.input_height = height;
  report.input_width = width;
  for (const auto& c : tracer.root().children) {
    // The root scope is named after the model; drop it from row paths.
    for (const auto& cc : c.children) collect_rows(cc, "", report.rows);
  }
  for (const auto& r : report.rows) {
    report.total_params += r.params;
    report.total_flops += r.flops;
  }
  return report;
}

std::string CostReport::table() const {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-64s %-9s %12s %14s  %s\n", "layer", "kind", "params", "flops",
                "output");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-64s %-9s %12lld %14lld  %s\n", r.name.c_str(),
                  r.kind.c_str(), static_cast<long long>(r.params),
                  static_cast<long long>(r.flops), r.output.str().c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "total params %lld (%.3fM), flops %lld (%.3f GFLOPs) at %dx%d\n",
                static_cast<long long>(total_params), mparams(),
                static_cast<long long>(total_flops), gflops(), input_width, input_height);
  out << buf;
  return out.str();
}

std::string CostReport::json() const {
  nlohmann::json j;
  j["arch"] = arch;
  j["input_size"] = {input_width, input_height};
  j["total_params"] = total_params;
  j["total_flops"] = total_flops;
  j["gflops"] = gflops();
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"name", r.name},
                         {"kind", r.kind},
                         {"params", r.params},
                         {"flops", r.flops},
                         {"output", {r.output.n, r.output.c, r.output.h, r.output.w}}});
  }
  j["rows"] = rows_json;
  return j.dump(2);
}

const std::vector<PublishedTarget>& published_targets() {
  static const std::vector<PublishedTarget> targets = {
      {"w32", 256, 192, 28.5, 7.10}, {"w32", 384, 288, 28.5, 16.0},
      {"w48", 256, 192, 63.6, 14.6}, {"w48", 384, 288, 63.6, 32.9},
      {"w32", 256, 256, 28.5, 9.5},
  };
  return targets;
}

bool TargetCheck::ok() const { return std::abs(measured - target) <= tolerance * target; }

std::string TargetCheck::line() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-4s %-28s measured %9.3f target %7.2f (+/-%.0f%%)",
                ok() ? "ok" : "FAIL", what.c_str(), measured, target, tolerance * 100);
  return buf;
}

std::vector<TargetCheck> compare_with_published(const CostReport& report) {
  std::vector<TargetCheck> checks;
  const std::string size =
      std::to_string(report.input_height) + "x" + std::to_string(report.input_width);
  for (const auto& t : published_targets()) {
    if (t.arch != report.arch || t.input_height != report.input_height ||
        t.input_width != report.input_width) {
      continue;
    }
    if (t.mparams) checks.push_back({t.arch + " params (M)", report.mparams(), *t.mparams, 0.02});
    if (t.gflops) checks.push_back({t.arch + " GFLOPs @" + size, report.gflops(), *t.gflops, 0.10});
  }
  return checks;
}

}  // namespace hrpose
