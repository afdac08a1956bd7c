#pragma once

#include <string>
#include <vector>

#include "afdx/engine.hpp"
#include "afdx/scenario.hpp"
#include "afdx/search.hpp"

namespace afdx {

// Shortest round-trippable decimal, stable across runs ("%.9g").
std::string fmt_g(double v);

// One-token human layout description, comma free for CSV cells.
std::string layout_string(const DeploymentConfig& cfg);

std::string frontier_csv(const SearchOutcome& o);
std::string all_points_jsonl(const SearchOutcome& o);
std::string search_summary(const Scenario& s, const SearchOutcome& o, int top);
// Machine-readable run record: counts, reason histogram, warnings, and the
// frontier's best-throughput / best-interactivity picks with their verdicts.
std::string search_summary_json(const Scenario& s, const SearchOutcome& o);
std::string frontier_svg_doc(const SearchOutcome& o);

std::string eval_json(const DeploymentConfig& cfg, const PerfEstimate& perf,
                      const EvalDetail& det);
std::string flows_jsonl(const EvalDetail& det);
std::string traffic_csv(const TrafficMatrix& t);

// Cost/memory/traffic anatomy of the scenario, for eyeballing the model.
std::string breakdown_text(const Scenario& s, const EvalContext& ctx,
                           std::uint64_t seed);

// Context sweep of the decode-time and memory composition: doubling steps
// from 1k up to the workload's own horizon (prefix + isl + osl).
struct BreakdownSweep {
  std::vector<i64> contexts;
  std::vector<double> attn_time_share;
  std::vector<double> ffn_time_share;
  std::vector<double> weight_mem_share;
  std::vector<double> kv_mem_share;
  std::vector<double> act_mem_share;
};
BreakdownSweep breakdown_sweep(const EvalContext& ctx);
std::string breakdown_csv(const BreakdownSweep& sweep);
std::string breakdown_svg_doc(const BreakdownSweep& sweep);

}  // namespace afdx
