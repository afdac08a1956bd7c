#include "doctest.h"

#include <cmath>

#include "afdx/memory.hpp"
#include "afdx/scenario.hpp"

using namespace afdx;

namespace {

// Single-KV-head long-prefix model on 36 GiB GPUs; P=1 byte, KV=2 bytes.
EvalContext flip_ctx() {
  Scenario s = load_scenario(std::string(SCENARIO_DIR) + "/longprefix_flip_desk.json");
  return context_for(s);
}

const MemoryFootprint& by_role(const std::vector<MemoryFootprint>& fps, MemRole role,
                               WorkerRole worker) {
  for (const auto& f : fps)
    if (f.role == role && f.worker == worker) return f;
  REQUIRE(false);
  return fps.front();
}

// attn qkv+o weights per layer: 4096*(32+2)*128 + 4096*32*128
constexpr double kAttnW = 34603008.0;
constexpr double kExpertW = 3.0 * 4096 * 14336;       // 176160768
constexpr double kKvPerSeq = 48.0 * 2 * 1 * 128 * 2;  // bytes per resident token

}  // namespace

TEST_CASE("shared worker stacks kv on top of expert weights") {
  const EvalContext ctx = flip_ctx();
  DeploymentConfig cfg;
  cfg.mode = ServingMode::AggChunked;
  cfg.tp = 8;
  cfg.dp = 2;
  cfg.chunk_size = 512;

  const auto fps = footprint(cfg, ctx, 1);
  REQUIRE(fps.size() == 1);
  const MemoryFootprint& f = fps[0];
  CHECK(f.role == MemRole::Shared);
  CHECK(f.worker == WorkerRole::Unified);

  // 16 GPUs host one expert each; attention weights shard over tp
  CHECK(f.weights == 48.0 * (kAttnW / 8.0 + kExpertW));

  // one sequence, resident 1048576 + 4096 + 256 tokens, single kv head
  // cannot shard across tp
  CHECK(f.kv_cache == kKvPerSeq * 1052928.0);
  CHECK(f.kv_cache == 25876758528.0);

  // refill ceil(1*4096/512)=8 prefill tokens join the iteration; dp=2
  const double per_gpu_tokens = std::ceil(9.0 / 2.0);
  CHECK(f.activations == 4.0 * per_gpu_tokens * 4096.0);
  CHECK(f.comm_buffers == 2.0 * per_gpu_tokens * 4096.0);
  CHECK(f.overhead == 6.0 * kGiB);

  // kv plus an expert copy plus runtime exceeds the 36 GiB card
  CHECK(f.total() > ctx.cluster.gpu.hbm_capacity);
}

TEST_CASE("afd split strips expert weights off the attention gpu") {
  const EvalContext ctx = flip_ctx();
  DeploymentConfig cfg;
  cfg.mode = ServingMode::AggAFD;
  cfg.attn_gpus = 8;
  cfg.ffn_gpus = 8;
  cfg.tp = 8;
  cfg.dp = 1;
  cfg.ep = 8;
  cfg.microbatches = 1;

  const auto fps = footprint(cfg, ctx, 1);
  REQUIRE(fps.size() == 2);
  const MemoryFootprint& attn = by_role(fps, MemRole::AttnSide, WorkerRole::Unified);
  const MemoryFootprint& ffn = by_role(fps, MemRole::FfnSide, WorkerRole::Unified);

  CHECK(attn.weights == 48.0 * kAttnW / 8.0);
  CHECK(attn.kv_cache == 25876758528.0);
  // iter = conc + refill = 1 + 8
  CHECK(attn.activations == 4.0 * 9.0 * 4096.0);
  CHECK(attn.comm_buffers == 4.0 * 9.0 * 4096.0);  // dispatch+combine buffers
  CHECK(attn.total() < ctx.cluster.gpu.hbm_capacity);

  CHECK(ffn.weights == 48.0 * 2.0 * kExpertW);
  CHECK(ffn.weights == 16911433728.0);
  CHECK(ffn.kv_cache == 0.0);
  // top-2 routing: ceil(9 * 2 / 8) tokens per ffn gpu
  CHECK(ffn.activations == 4.0 * 3.0 * 4096.0);
  CHECK(ffn.total() < ctx.cluster.gpu.hbm_capacity);
}

TEST_CASE("disagg separates prefill and decode residency") {
  const EvalContext ctx = flip_ctx();
  DeploymentConfig cfg;
  cfg.mode = ServingMode::DisaggPD;
  cfg.prefill_workers = 1;
  cfg.decode_workers = 2;
  cfg.prefill_gpus = 8;
  cfg.decode_gpus = 4;
  cfg.tp = 4;
  cfg.dp = 1;

  const auto fps = footprint(cfg, ctx, 6);
  REQUIRE(fps.size() == 2);
  const MemoryFootprint& pre = by_role(fps, MemRole::Shared, WorkerRole::Prefill);
  const MemoryFootprint& dec = by_role(fps, MemRole::Shared, WorkerRole::Decode);

  // prefill holds one in-flight request at prefix+isl tokens, no decode share
  CHECK(pre.kv_cache == kKvPerSeq * 1052672.0);
  CHECK(pre.weights == 48.0 * (kAttnW / 4.0 + 2.0 * kExpertW));
  CHECK(pre.activations == 4.0 * std::ceil(4096.0 / 2.0) * 4096.0);

  // decode splits 6 requests over 2 workers, dp=1 inside each
  CHECK(dec.kv_cache == 3.0 * kKvPerSeq * 1052928.0);
  CHECK(dec.weights == 48.0 * (kAttnW / 4.0 + 4.0 * kExpertW));
  CHECK(dec.activations == 4.0 * 3.0 * 4096.0);
}

TEST_CASE("disagg afd lists all four gpu classes") {
  const EvalContext ctx = flip_ctx();
  DeploymentConfig cfg;
  cfg.mode = ServingMode::DisaggAFD;
  cfg.prefill_workers = 1;
  cfg.decode_workers = 1;
  cfg.prefill_gpus = 8;
  cfg.decode_gpus = 8;
  cfg.attn_gpus = 4;
  cfg.ffn_gpus = 4;
  cfg.tp = 4;
  cfg.dp = 1;
  cfg.ep = 4;
  cfg.microbatches = 1;

  const auto fps = footprint(cfg, ctx, 2);
  REQUIRE(fps.size() == 4);
  const MemoryFootprint& pa = by_role(fps, MemRole::AttnSide, WorkerRole::Prefill);
  const MemoryFootprint& pf = by_role(fps, MemRole::FfnSide, WorkerRole::Prefill);
  const MemoryFootprint& da = by_role(fps, MemRole::AttnSide, WorkerRole::Decode);
  const MemoryFootprint& df = by_role(fps, MemRole::FfnSide, WorkerRole::Decode);

  CHECK(pa.kv_cache == kKvPerSeq * 1052672.0);
  CHECK(da.kv_cache == 2.0 * kKvPerSeq * 1052928.0);
  CHECK(pf.weights == df.weights);
  CHECK(pf.kv_cache == 0.0);
  // prefill ffn sees the whole uncached input, decode ffn one token per seq
  CHECK(pf.activations == 4.0 * std::ceil(4096.0 * 2.0 / 4.0) * 4096.0);
  CHECK(df.activations == 4.0 * 1.0 * 4096.0);
}

TEST_CASE("kv residency knob switches to worst case") {
  Scenario s = load_scenario(std::string(SCENARIO_DIR) + "/longprefix_flip_desk.json");
  s.mem_knobs.worst_case_kv_residency = true;
  const EvalContext ctx = context_for(s);
  DeploymentConfig cfg;
  cfg.mode = ServingMode::AggAFD;
  cfg.attn_gpus = 8;
  cfg.ffn_gpus = 8;
  cfg.tp = 8;
  cfg.dp = 1;
  cfg.ep = 8;

  const auto fps = footprint(cfg, ctx, 1);
  const MemoryFootprint& attn = by_role(fps, MemRole::AttnSide, WorkerRole::Unified);
  CHECK(attn.kv_cache == kKvPerSeq * double(1048576 + 4096 + 512));
}

TEST_CASE("kv shards over tp only as far as the heads allow") {
  Scenario s = load_scenario(std::string(SCENARIO_DIR) + "/longprefix_flip_desk.json");
  s.model.kv_heads = 4;
  s.model.q_heads = 32;
  const EvalContext ctx = context_for(s);

  DeploymentConfig cfg;
  cfg.mode = ServingMode::AggAFD;
  cfg.attn_gpus = 8;
  cfg.ffn_gpus = 8;
  cfg.tp = 8;
  cfg.dp = 1;
  cfg.ep = 8;

  const auto fps = footprint(cfg, ctx, 1);
  const MemoryFootprint& attn = by_role(fps, MemRole::AttnSide, WorkerRole::Unified);
  // 4 kv heads now split the cache 4 ways (not 8) at 4x the row width
  CHECK(attn.kv_cache == 4.0 * kKvPerSeq * 1052928.0 / 4.0);
}

TEST_CASE("check_memory reports the tightest gpu class") {
  GpuSpec gpu;
  gpu.hbm_capacity = 100.0;

  MemoryFootprint a;
  a.role = MemRole::AttnSide;
  a.worker = WorkerRole::Decode;
  a.weights = 40.0;
  a.kv_cache = 30.0;

  MemoryFootprint b;
  b.role = MemRole::FfnSide;
  b.worker = WorkerRole::Decode;
  b.weights = 90.0;
  b.comm_buffers = 5.0;

  MemVerdict v = check_memory({a, b}, gpu);
  CHECK(v.feasible);
  CHECK(v.headroom == 5.0);
  CHECK(v.limiting == MemRole::FfnSide);
  CHECK(v.limiting_worker == WorkerRole::Decode);

  b.overhead = 20.0;
  v = check_memory({a, b}, gpu);
  CHECK(!v.feasible);
  CHECK(v.headroom == -15.0);

  // empty set trivially fits
  CHECK(check_memory({}, gpu).feasible);
}
