#pragma once

#include <string>
#include <vector>

#include "afdx/context.hpp"
#include "afdx/types.hpp"

namespace afdx {

enum class Phase { Prefill, Decode };

// Per-microbatch stage times for one AFD worker, all layers folded in.
// Stage order: attn, a2f, ffn, f2a (full duplex) or attn, a2f+f2a, ffn
// (half duplex, the two transfers share the wire).
struct StageCosts {
  std::vector<double> stages;  // seconds per microbatch
  i64 layers = 1;
  int microbatches = 1;
};

// Split a token budget of batch*isl into `microbatches` balanced slices,
// larger slices first. Throws std::invalid_argument when a slice would be
// empty.
std::vector<i64> partition_budget(i64 batch, i64 isl, int microbatches);

// Latency of M microbatches flowing through the stages with per-layer
// granularity: M * s_max plus one fill/drain slice of every non-bottleneck
// stage. Stages exactly tied with the maximum fold into the M*s_max term.
double pipelined_latency(const StageCosts& c);

// Ring allreduce time for one full-width activation pass over a TP group.
double tp_allreduce_seconds(i64 tokens, const ModelArch& m, int tp, double bw);

// Network side of one microbatch pass, for flow logging.
struct StageNetInfo {
  double a2f_bytes = 0.0;
  double a2f_seconds = 0.0;  // per layer
  std::string a2f_bottleneck;
  double f2a_bytes = 0.0;
  double f2a_seconds = 0.0;
  std::string f2a_bottleneck;
};

// Stage costs for one AFD worker of the deployment, evaluated on a
// worker-local topology (attention GPUs 0..A-1, FFN GPUs A..A+F-1, placed at
// a scale-up-domain origin) so the result does not depend on which replica
// the worker belongs to.
StageCosts stage_costs_for(const DeploymentConfig& cfg, const EvalContext& ctx,
                           Phase phase, i64 microbatch_tokens, i64 context,
                           StageNetInfo* net = nullptr);

}  // namespace afdx
