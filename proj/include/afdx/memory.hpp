#pragma once

#include <vector>

#include "afdx/context.hpp"
#include "afdx/types.hpp"

namespace afdx {

// GPU classes with distinct residency profiles. A shared GPU holds attention
// state and expert weights together; the AFD split gives each side its own.
enum class MemRole { Shared, AttnSide, FfnSide };

const char* to_string(MemRole r);

struct MemoryFootprint {
  MemRole role = MemRole::Shared;
  WorkerRole worker = WorkerRole::Unified;
  double weights = 0.0;
  double activations = 0.0;
  double kv_cache = 0.0;
  double comm_buffers = 0.0;
  double overhead = 0.0;

  double total() const {
    return weights + activations + kv_cache + comm_buffers + overhead;
  }
};

struct MemVerdict {
  bool feasible = true;
  double headroom = 0.0;  // bytes left on the tightest GPU class
  MemRole limiting = MemRole::Shared;
  WorkerRole limiting_worker = WorkerRole::Unified;
};

// Worst-GPU footprint for every distinct GPU class the deployment creates
// (one entry for a unified non-AFD worker, attention+FFN entries per AFD
// worker, prefill and decode classes listed separately for disagg modes).
// `concurrency` is the per-replica number of resident decode requests.
std::vector<MemoryFootprint> footprint(const DeploymentConfig& cfg,
                                       const EvalContext& ctx, i64 concurrency);

MemVerdict check_memory(const std::vector<MemoryFootprint>& fps, const GpuSpec& gpu);

}  // namespace afdx
