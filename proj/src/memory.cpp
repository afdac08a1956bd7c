#include "afdx/memory.hpp"

#include <algorithm>
#include <cmath>

namespace afdx {

const char* to_string(MemRole r) {
  switch (r) {
    case MemRole::Shared: return "shared";
    case MemRole::AttnSide: return "attn";
    case MemRole::FfnSide: return "ffn";
  }
  return "?";
}

namespace {

i64 ceil_div(i64 a, i64 b) { return (a + b - 1) / b; }

double activation_buffer(const ModelArch& m, i64 tokens) {
  return 4.0 * double(tokens) * double(m.hidden_dim) * m.param_bytes_per_elem;
}

// KV bytes the worst GPU of a (tp x dp) attention group holds: sequences land
// on dp groups whole, and within a group the cache splits only as far as the
// head layout allows.
double kv_per_gpu(const ModelArch& m, i64 sequences, i64 resident_tokens, int tp,
                  int dp) {
  if (sequences <= 0) return 0.0;
  const double per_seq = kv_resident_bytes(m, resident_tokens);
  const i64 per_group = ceil_div(sequences, dp);
  return double(per_group) * per_seq / double(kv_tp_shard_ways(m, tp));
}

MemoryFootprint shared_gpu(const EvalContext& ctx, WorkerRole worker, int worker_gpus,
                           int tp, i64 sequences, i64 resident_tokens, i64 iter_tokens) {
  const ModelArch& m = ctx.model;
  const int dp = worker_gpus / tp;
  MemoryFootprint f;
  f.role = MemRole::Shared;
  f.worker = worker;
  const i64 hosted = ceil_div(m.num_experts, worker_gpus);
  f.weights = double(m.layers) *
              (attn_weight_bytes_per_layer(m) / double(tp) +
               double(hosted) * expert_weight_bytes(m) +
               shared_expert_weight_bytes_per_layer(m));
  f.kv_cache = kv_per_gpu(m, sequences, resident_tokens, tp, dp);
  const i64 per_gpu_tokens = ceil_div(iter_tokens, dp);
  f.activations = activation_buffer(m, per_gpu_tokens);
  f.comm_buffers = 2.0 * double(per_gpu_tokens) * double(m.hidden_dim) *
                   m.param_bytes_per_elem;
  f.overhead = ctx.mem_knobs.runtime_overhead;
  return f;
}

MemoryFootprint attn_gpu(const EvalContext& ctx, WorkerRole worker, int tp, int dp,
                         i64 sequences, i64 resident_tokens, i64 iter_tokens) {
  const ModelArch& m = ctx.model;
  MemoryFootprint f;
  f.role = MemRole::AttnSide;
  f.worker = worker;
  f.weights = double(m.layers) * attn_weight_bytes_per_layer(m) / double(tp);
  f.kv_cache = kv_per_gpu(m, sequences, resident_tokens, tp, dp);
  const i64 per_gpu_tokens = ceil_div(iter_tokens, dp);
  f.activations = activation_buffer(m, per_gpu_tokens);
  // Dispatch out and combine in, double buffered.
  f.comm_buffers = 4.0 * double(per_gpu_tokens) * double(m.hidden_dim) *
                   m.param_bytes_per_elem;
  f.overhead = ctx.mem_knobs.runtime_overhead;
  return f;
}

MemoryFootprint ffn_gpu(const EvalContext& ctx, WorkerRole worker, int ffn_gpus,
                        i64 iter_tokens) {
  const ModelArch& m = ctx.model;
  MemoryFootprint f;
  f.role = MemRole::FfnSide;
  f.worker = worker;
  const i64 hosted = ceil_div(m.num_experts, ffn_gpus);
  f.weights = double(m.layers) * (double(hosted) * expert_weight_bytes(m) +
                                  shared_expert_weight_bytes_per_layer(m));
  const i64 per_gpu_tokens = ceil_div(iter_tokens * m.top_k, ffn_gpus);
  f.activations = activation_buffer(m, per_gpu_tokens);
  f.comm_buffers = 4.0 * double(per_gpu_tokens) * double(m.hidden_dim) *
                   m.param_bytes_per_elem;
  f.overhead = ctx.mem_knobs.runtime_overhead;
  return f;
}

}  // namespace

std::vector<MemoryFootprint> footprint(const DeploymentConfig& cfg,
                                       const EvalContext& ctx, i64 concurrency) {
  const Workload& w = ctx.workload;
  const i64 resident_decode = resident_tokens(w, ctx.mem_knobs);
  const i64 resident_prefill = w.prefix + w.isl;
  const i64 ui = uncached_input(w, ctx.engine_knobs);
  const i64 refill = ceil_div(concurrency * ui, std::max<i64>(1, w.osl));

  std::vector<MemoryFootprint> out;
  switch (cfg.mode) {
    case ServingMode::AggChunked: {
      const i64 prefill_share = std::min<i64>(cfg.chunk_size, refill);
      const i64 iter = concurrency + prefill_share;
      out.push_back(shared_gpu(ctx, WorkerRole::Unified, cfg.unified_worker_gpus(),
                               cfg.tp, concurrency, resident_decode, iter));
      break;
    }
    case ServingMode::AggAFD: {
      const i64 iter = concurrency + refill;
      out.push_back(attn_gpu(ctx, WorkerRole::Unified, cfg.tp, cfg.dp, concurrency,
                             resident_decode, iter));
      out.push_back(ffn_gpu(ctx, WorkerRole::Unified, cfg.ffn_gpus, iter));
      break;
    }
    case ServingMode::DisaggPD: {
      out.push_back(shared_gpu(ctx, WorkerRole::Prefill, cfg.prefill_gpus, cfg.tp,
                               1, resident_prefill, ui));
      const i64 conc_d = ceil_div(concurrency, cfg.decode_workers);
      out.push_back(shared_gpu(ctx, WorkerRole::Decode, cfg.decode_gpus, cfg.tp,
                               conc_d, resident_decode, conc_d));
      break;
    }
    case ServingMode::DisaggAFD: {
      out.push_back(attn_gpu(ctx, WorkerRole::Prefill, cfg.tp, cfg.dp, 1,
                             resident_prefill, ui));
      out.push_back(ffn_gpu(ctx, WorkerRole::Prefill, cfg.ffn_gpus, ui));
      const i64 conc_d = ceil_div(concurrency, cfg.decode_workers);
      out.push_back(attn_gpu(ctx, WorkerRole::Decode, cfg.tp, cfg.dp, conc_d,
                             resident_decode, conc_d));
      out.push_back(ffn_gpu(ctx, WorkerRole::Decode, cfg.ffn_gpus, conc_d));
      break;
    }
  }
  return out;
}

MemVerdict check_memory(const std::vector<MemoryFootprint>& fps, const GpuSpec& gpu) {
  MemVerdict v;
  v.headroom = gpu.hbm_capacity;
  for (const auto& f : fps) {
    const double head = gpu.hbm_capacity - f.total();
    if (head < v.headroom) {
      v.headroom = head;
      v.limiting = f.role;
      v.limiting_worker = f.worker;
    }
  }
  v.feasible = v.headroom >= 0.0;
  return v;
}

}  // namespace afdx
