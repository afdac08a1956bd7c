#pragma once

#include <string>
#include <vector>

#include "afdx/context.hpp"
#include "afdx/memory.hpp"
#include "afdx/pipeline.hpp"

namespace afdx {

struct FlowLogEntry {
  std::string label;  // "prefill.a2f", "decode.f2a", "kv", ...
  double bytes = 0.0;
  double seconds = 0.0;
  std::string bottleneck;
};

// Everything evaluate() derived on the way to a verdict, for reports.
struct EvalDetail {
  std::vector<MemoryFootprint> footprints;
  StageCosts prefill_stages;  // AFD modes only, empty otherwise
  StageCosts decode_stages;
  std::vector<FlowLogEntry> flow_log;
  WorkerLayout layout;
  double kv_transfer_s = 0.0;
  double prefill_s = 0.0;      // one request through its prefill worker/phase
  double decode_iter_s = 0.0;  // one decode iteration at the final concurrency
};

// Full evaluation of one deployment: validity, placement, max sustainable
// concurrency under memory + SLOs, and the resulting service rates.
PerfEstimate evaluate(const DeploymentConfig& cfg, const EvalContext& ctx,
                      EvalDetail* detail = nullptr);

// Latency pair for a fixed concurrency, no feasibility search. Exposed for
// tests and the breakdown report.
struct LatencyPoint {
  double ttft = 0.0;
  double tpot = 0.0;
};
LatencyPoint latency_at(const DeploymentConfig& cfg, const EvalContext& ctx,
                        i64 concurrency, EvalDetail* detail = nullptr);

}  // namespace afdx
