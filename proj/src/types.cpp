#include "afdx/types.hpp"

#include <cmath>
#include <string>

namespace afdx {

const char* to_string(ServingMode m) {
  switch (m) {
    case ServingMode::AggChunked: return "agg_chunked";
    case ServingMode::AggAFD: return "agg_afd";
    case ServingMode::DisaggPD: return "disagg_pd";
    case ServingMode::DisaggAFD: return "disagg_afd";
  }
  return "?";
}

const char* to_string(Duplex d) { return d == Duplex::Full ? "full" : "half"; }

const char* to_string(AttentionVariant v) {
  switch (v) {
    case AttentionVariant::MHA: return "mha";
    case AttentionVariant::GQA: return "gqa";
    case AttentionVariant::SlidingWindowGQA: return "swa_gqa";
    case AttentionVariant::MLA: return "mla";
    case AttentionVariant::SparseTopK: return "sparse_topk";
    case AttentionVariant::MambaHybrid: return "mamba_hybrid";
  }
  return "?";
}

const char* to_string(InfeasibleReason r) {
  switch (r) {
    case InfeasibleReason::None: return "none";
    case InfeasibleReason::SloViolated: return "slo-violated";
    case InfeasibleReason::MemoryExceeded: return "memory-exceeded";
    case InfeasibleReason::InvalidLayout: return "invalid-layout";
  }
  return "?";
}

namespace {

bool uses_gqa_heads(const AttentionKind& a) {
  switch (a.variant) {
    case AttentionVariant::MHA:
    case AttentionVariant::GQA:
    case AttentionVariant::SlidingWindowGQA:
    case AttentionVariant::MambaHybrid:
      return true;
    case AttentionVariant::SparseTopK:
      return a.base == SparseBase::GQA;
    case AttentionVariant::MLA:
      return false;
  }
  return true;
}

}  // namespace

Verdict validate_scenario(const ModelArch& m, const Workload& w, const ClusterSpec& c) {
  Verdict v;
  auto bad = [&](const std::string& s) { v.violations.push_back(s); };

  if (m.layers < 1) bad("model.layers must be >= 1");
  if (m.hidden_dim < 1) bad("model.hidden_dim must be >= 1");
  if (m.q_heads < 1) bad("model.q_heads must be >= 1");
  if (m.kv_heads < 1) bad("model.kv_heads must be >= 1");
  if (m.head_dim < 1) bad("model.head_dim must be >= 1");
  if (m.num_experts < 1) bad("model.num_experts must be >= 1");
  if (m.top_k < 1) bad("model.top_k must be >= 1");
  if (m.top_k > m.num_experts) bad("model.top_k exceeds num_experts");
  if (m.expert_ffn_dim < 1) bad("model.expert_ffn_dim must be >= 1");
  if (m.shared_expert_dim < 0) bad("model.shared_expert_dim must be >= 0");
  if (m.param_bytes_per_elem <= 0) bad("model.param_bytes_per_elem must be > 0");
  if (m.kv_bytes_per_elem <= 0) bad("model.kv_bytes_per_elem must be > 0");
  if (uses_gqa_heads(m.attention) && m.kv_heads > 0 && m.q_heads % m.kv_heads != 0)
    bad("model.q_heads not divisible by kv_heads");

  const AttentionKind& a = m.attention;
  switch (a.variant) {
    case AttentionVariant::SlidingWindowGQA:
      if (a.window < 1) bad("model.attention.window must be >= 1 for swa_gqa");
      break;
    case AttentionVariant::MLA:
      if (a.latent_dim < 1) bad("model.attention.latent_dim must be >= 1 for mla");
      break;
    case AttentionVariant::SparseTopK:
      if (a.selected < 1) bad("model.attention.selected must be >= 1 for sparse_topk");
      if (a.base == SparseBase::MLA && a.latent_dim < 1)
        bad("model.attention.latent_dim must be >= 1 for sparse_topk on mla");
      break;
    case AttentionVariant::MambaHybrid:
      if (a.state_dim < 1) bad("model.attention.state_dim must be >= 1 for mamba_hybrid");
      if (a.gqa_every < 0) bad("model.attention.gqa_every must be >= 0");
      if (a.gqa_every > m.layers) bad("model.attention.gqa_every exceeds layer count");
      break;
    default:
      break;
  }

  if (w.prefix < 0) bad("workload.prefix must be >= 0");
  if (w.isl < 1) bad("workload.isl must be >= 1");
  if (w.osl < 1) bad("workload.osl must be >= 1");
  if (w.slo_ttft < 0) bad("workload.slo_ttft must be > 0 when set");
  if (w.slo_tpot < 0) bad("workload.slo_tpot must be > 0 when set");
  // A prefix longer than any native window is deliberately accepted.

  if (c.gpu.peak_flops <= 0) bad("cluster.gpu.peak_flops must be > 0");
  if (c.gpu.hbm_capacity <= 0) bad("cluster.gpu.hbm_capacity must be > 0");
  if (c.gpu.hbm_bandwidth <= 0) bad("cluster.gpu.hbm_bandwidth must be > 0");
  if (c.num_gpus < 1) bad("cluster.num_gpus must be >= 1");
  if (c.scaleup_domain_size < 1) bad("cluster.scaleup_domain_size must be >= 1");
  if (c.scaleup_domain_size > c.num_gpus)
    bad("cluster.scaleup_domain_size exceeds num_gpus");
  if (c.num_gpus >= 1 && c.scaleup_domain_size >= 1 &&
      c.num_gpus % c.scaleup_domain_size != 0)
    bad("cluster not divisible into scale-up domains");
  if (c.scaleup_bw <= 0) bad("cluster.scaleup_bw must be > 0");
  if (c.scaleout_bw < 0) bad("cluster.scaleout_bw must be >= 0");

  return v;
}

Verdict validate_config(const DeploymentConfig& cfg, const ModelArch& model,
                        const ClusterSpec& cluster, bool allow_uneven_experts) {
  Verdict v;
  auto bad = [&](const std::string& s) { v.violations.push_back(s); };

  if (cfg.replicas < 1) bad("replicas must be >= 1");
  if (cfg.tp < 1 || cfg.dp < 1 || cfg.ep < 1) bad("tp/dp/ep must be >= 1");

  const bool afd = is_afd(cfg.mode);
  const bool disagg = is_disagg(cfg.mode);

  if (afd) {
    if (cfg.attn_gpus < 1) bad("attn_gpus must be >= 1 in AFD modes");
    if (cfg.ffn_gpus < 1) bad("ffn_gpus must be >= 1 in AFD modes");
    if (cfg.tp * cfg.dp != cfg.attn_gpus) bad("tp*dp must equal attn_gpus in AFD modes");
    if (cfg.ep != cfg.ffn_gpus) bad("ep must equal ffn_gpus in AFD modes");
    if (!allow_uneven_experts && cfg.ep > 0 && model.num_experts % cfg.ep != 0)
      bad("num_experts not divisible by ep");
    if (cfg.ep > model.num_experts) bad("ep exceeds num_experts");
  } else {
    if (cfg.attn_gpus != 0 || cfg.ffn_gpus != 0)
      bad("attn_gpus/ffn_gpus only valid in AFD modes");
    if (cfg.microbatches != 1) bad("microbatches only valid in AFD modes");
  }

  if (disagg) {
    if (cfg.prefill_workers < 1) bad("prefill_workers must be >= 1 in Disagg modes");
    if (cfg.decode_workers < 1) bad("decode_workers must be >= 1 in Disagg modes");
    if (cfg.prefill_gpus < 1) bad("prefill_gpus must be >= 1 in Disagg modes");
    if (cfg.decode_gpus < 1) bad("decode_gpus must be >= 1 in Disagg modes");
    if (afd) {
      const int w = cfg.attn_gpus + cfg.ffn_gpus;
      if (cfg.prefill_gpus != w || cfg.decode_gpus != w)
        bad("worker sizes must equal attn_gpus+ffn_gpus in disagg_afd");
    } else {
      if (cfg.prefill_gpus % cfg.tp != 0) bad("tp must divide prefill_gpus");
      if (cfg.decode_gpus % cfg.tp != 0) bad("tp must divide decode_gpus");
    }
  } else {
    if (cfg.prefill_workers != 0 || cfg.decode_workers != 0 ||
        cfg.prefill_gpus != 0 || cfg.decode_gpus != 0)
      bad("worker fields only valid in Disagg modes");
  }

  if (cfg.mode == ServingMode::AggChunked) {
    if (cfg.chunk_size < 1) bad("chunk_size must be >= 1 for agg_chunked");
  } else if (cfg.chunk_size != 0) {
    bad("chunk_size only valid for agg_chunked");
  }

  if (cfg.microbatches != 1 && cfg.microbatches != 3 && cfg.microbatches != 4)
    bad("microbatches must be 1, 3 or 4");

  if (afd && (cfg.microbatches == 3 || cfg.microbatches == 4)) {
    // Duplex rule applies to the tier the AFD traffic rides on.
    const int worker = cfg.attn_gpus + cfg.ffn_gpus;
    const bool in_domain = worker <= cluster.scaleup_domain_size;
    const Duplex dx = in_domain ? cluster.scaleup_duplex : cluster.scaleout_duplex;
    if (cfg.microbatches == 4 && dx != Duplex::Full)
      bad("microbatches=4 requires a full-duplex AFD tier");
    if (cfg.microbatches == 3 && dx != Duplex::Half)
      bad("microbatches=3 requires a half-duplex AFD tier");
    if (!in_domain && cluster.scaleout_bw <= 0)
      bad("AFD worker exceeds scale-up domain and no scale-out tier is configured");
  }

  if (cfg.total_gpus() > cluster.num_gpus)
    bad("replicas * per-replica GPUs exceeds cluster.num_gpus");

  return v;
}

i64 resident_tokens(const Workload& w, const MemKnobs& mem) {
  return w.prefix + w.isl + (mem.worst_case_kv_residency ? w.osl : w.osl / 2);
}

i64 uncached_input(const Workload& w, const EngineKnobs& knobs) {
  double hit = knobs.prefix_cache_hit;
  if (hit < 0.0) hit = 0.0;
  if (hit > 1.0) hit = 1.0;
  return w.isl + i64(std::llround((1.0 - hit) * double(w.prefix)));
}

}  // namespace afdx
