#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace afdx {

using i64 = std::int64_t;

constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;
constexpr double kGB = 1e9;
constexpr double kMs = 1e-3;
constexpr double kUs = 1e-6;
constexpr double kTFlops = 1e12;

enum class Duplex { Full, Half };

enum class AttentionVariant { MHA, GQA, SlidingWindowGQA, MLA, SparseTopK, MambaHybrid };

// Base used for the KV layout of SparseTopK attention.
enum class SparseBase { MLA, GQA };

struct AttentionKind {
  AttentionVariant variant = AttentionVariant::GQA;
  i64 window = 0;      // SlidingWindowGQA: attended span cap
  i64 latent_dim = 0;  // MLA (and SparseTopK on MLA): compressed KV width
  i64 selected = 0;    // SparseTopK: tokens attended per query
  SparseBase base = SparseBase::MLA;
  i64 state_dim = 0;   // MambaHybrid: recurrent state width per channel
  i64 gqa_every = 0;   // MambaHybrid: one GQA layer every N layers (0 = pure mixer)
};

struct ModelArch {
  std::string name;
  i64 layers = 0;
  i64 hidden_dim = 0;
  i64 q_heads = 0;
  i64 kv_heads = 0;
  i64 head_dim = 0;
  AttentionKind attention;
  i64 num_experts = 1;
  i64 top_k = 1;
  i64 expert_ffn_dim = 0;
  i64 shared_expert_dim = 0;
  double param_bytes_per_elem = 1.0;  // weight + activation precision
  double kv_bytes_per_elem = 2.0;
};

struct Workload {
  std::string name;
  i64 prefix = 0;  // cached prefix tokens (100% cache hit by default)
  i64 isl = 1;     // uncached input tokens
  i64 osl = 1;     // generated tokens
  double slo_ttft = 0.0;  // seconds; <= 0 means unconstrained
  double slo_tpot = 0.0;
};

struct GpuSpec {
  std::string name;
  double peak_flops = 0.0;     // dense, at model precision
  double hbm_capacity = 0.0;   // bytes
  double hbm_bandwidth = 0.0;  // bytes/s
};

struct ClusterSpec {
  GpuSpec gpu;
  int num_gpus = 0;
  int scaleup_domain_size = 0;  // GPUs per scale-up domain (node)
  double scaleup_bw = 0.0;      // bytes/s per GPU per direction
  double scaleout_bw = 0.0;     // bytes/s per GPU per direction; 0 = no scale-out tier
  Duplex scaleup_duplex = Duplex::Full;
  Duplex scaleout_duplex = Duplex::Full;
};

enum class ServingMode { AggChunked, AggAFD, DisaggPD, DisaggAFD };

inline bool is_afd(ServingMode m) {
  return m == ServingMode::AggAFD || m == ServingMode::DisaggAFD;
}
inline bool is_disagg(ServingMode m) {
  return m == ServingMode::DisaggPD || m == ServingMode::DisaggAFD;
}

// One replica = one unified worker (Agg modes) or prefill_workers + decode_workers
// workers (Disagg modes). AFD splits apply per worker.
struct DeploymentConfig {
  ServingMode mode = ServingMode::AggChunked;
  int replicas = 1;
  int prefill_workers = 0;  // x (Disagg only)
  int decode_workers = 0;   // y (Disagg only)
  int prefill_gpus = 0;     // GPUs per prefill worker (Disagg only)
  int decode_gpus = 0;      // GPUs per decode worker (Disagg only)
  int attn_gpus = 0;        // A (AFD modes, per worker)
  int ffn_gpus = 0;         // F (AFD modes, per worker)
  int tp = 1;
  int dp = 1;
  int ep = 1;
  int microbatches = 1;   // M
  i64 chunk_size = 0;     // AggChunked only

  int unified_worker_gpus() const {
    return mode == ServingMode::AggAFD ? attn_gpus + ffn_gpus : tp * dp;
  }
  int per_replica_gpus() const {
    if (is_disagg(mode))
      return prefill_workers * prefill_gpus + decode_workers * decode_gpus;
    return unified_worker_gpus();
  }
  int total_gpus() const { return replicas * per_replica_gpus(); }
};

enum class InfeasibleReason { None, SloViolated, MemoryExceeded, InvalidLayout };

struct PerfEstimate {
  bool feasible = false;
  InfeasibleReason reason = InfeasibleReason::None;
  std::string detail;
  double ttft = 0.0;           // seconds
  double tpot = 0.0;           // seconds
  double per_user_rate = 0.0;  // tokens/s seen by one request
  double system_rate = 0.0;    // tokens/s across all replicas
  i64 concurrency = 0;         // requests in flight per replica
};

struct CostKnobs {
  double eta_compute = 0.7;
  double eta_memory = 0.8;
  double kernel_overhead = 5e-6;  // seconds per kernel
};

struct NetKnobs {
  double latency_floor = 2e-6;  // seconds added to every flow
};

struct MemKnobs {
  double runtime_overhead = 6.0 * kGiB;  // allocator, cuda context, fragmentation
  bool worst_case_kv_residency = false;  // false: generated KV averaged at osl/2
};

struct EngineKnobs {
  bool count_input_tokens = false;
  double prefix_cache_hit = 1.0;
  i64 max_concurrency = 65536;
  bool allow_uneven_experts = false;  // waive the num_experts % ep rule
};

struct Verdict {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

const char* to_string(ServingMode m);
const char* to_string(Duplex d);
const char* to_string(AttentionVariant v);
const char* to_string(InfeasibleReason r);

// Total: collects every violation, never throws.
Verdict validate_scenario(const ModelArch& model, const Workload& workload,
                          const ClusterSpec& cluster);

// Layout arithmetic for one deployment against a model + cluster.
Verdict validate_config(const DeploymentConfig& cfg, const ModelArch& model,
                        const ClusterSpec& cluster, bool allow_uneven_experts);

// Tokens a decode-phase request keeps resident (prefix + isl + generated share).
i64 resident_tokens(const Workload& w, const MemKnobs& mem);

// Input tokens the prefill phase actually computes: isl plus the share of the
// prefix the cache misses.
i64 uncached_input(const Workload& w, const EngineKnobs& knobs);

}  // namespace afdx
