#include "afdx/costdb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace afdx {

const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::AttnPrefill: return "attn_prefill";
    case OpKind::AttnDecode: return "attn_decode";
    case OpKind::MoeFfn: return "moe_ffn";
    case OpKind::DenseProj: return "dense_proj";
  }
  return "?";
}

const char* to_string(CostSource s) {
  switch (s) {
    case CostSource::Analytical: return "analytical";
    case CostSource::Table: return "table";
    case CostSource::Hybrid: return "hybrid";
  }
  return "?";
}

std::optional<double> CalibrationTable::lookup(const Key& k) const {
  auto it = rows_.find(k);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

CalibrationTable CalibrationTable::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration table: " + path);
  CalibrationTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line.find("op") == 0) { first = false; continue; }
    first = false;
    std::stringstream ss(line);
    std::string op, tok, ctx, bat, pd, us;
    if (!std::getline(ss, op, ',') || !std::getline(ss, tok, ',') ||
        !std::getline(ss, ctx, ',') || !std::getline(ss, bat, ',') ||
        !std::getline(ss, pd, ',') || !std::getline(ss, us, ','))
      throw std::runtime_error("malformed calibration row: " + line);
    OpKind kind;
    if (op == "attn_prefill") kind = OpKind::AttnPrefill;
    else if (op == "attn_decode") kind = OpKind::AttnDecode;
    else if (op == "moe_ffn") kind = OpKind::MoeFfn;
    else if (op == "dense_proj") kind = OpKind::DenseProj;
    else throw std::runtime_error("unknown op in calibration row: " + op);
    t.insert({kind, std::stoll(tok), std::stoll(ctx), std::stoll(bat), std::stoi(pd)},
             std::stod(us) * kUs);
  }
  return t;
}

namespace {

struct AttnGeom {
  double proj_flops_per_token = 0.0;   // QKV/O (or q/o + latent up-down) GEMMs
  double weight_bytes = 0.0;           // per layer
  double kv_read_per_ctx_token = 0.0;  // bytes read per (query token, context token)
  double kv_write_per_token = 0.0;
  double score_flops_per_ctx_token = 0.0;  // per (query token, context token)
};

AttnGeom gqa_geom(const ModelArch& m) {
  AttnGeom g;
  const double d = double(m.hidden_dim), qh = double(m.q_heads),
               kvh = double(m.kv_heads), hd = double(m.head_dim);
  g.proj_flops_per_token = 2.0 * d * (qh + 2.0 * kvh) * hd + 2.0 * d * qh * hd;
  g.weight_bytes =
      (d * (qh + 2.0 * kvh) * hd + d * qh * hd) * m.param_bytes_per_elem;
  g.kv_read_per_ctx_token = 2.0 * kvh * hd * m.kv_bytes_per_elem;
  g.kv_write_per_token = 2.0 * kvh * hd * m.kv_bytes_per_elem;
  g.score_flops_per_ctx_token = 4.0 * qh * hd;
  return g;
}

AttnGeom mla_geom(const ModelArch& m) {
  AttnGeom g;
  const double d = double(m.hidden_dim), qh = double(m.q_heads),
               hd = double(m.head_dim), lat = double(m.attention.latent_dim);
  g.proj_flops_per_token = 4.0 * d * qh * hd + 2.0 * d * lat;
  g.weight_bytes = (2.0 * d * qh * hd + d * lat) * m.param_bytes_per_elem;
  g.kv_read_per_ctx_token = lat * m.kv_bytes_per_elem;
  g.kv_write_per_token = lat * m.kv_bytes_per_elem;
  g.score_flops_per_ctx_token = 4.0 * qh * hd;
  return g;
}

i64 effective_context(const ModelArch& m, i64 ctx) {
  switch (m.attention.variant) {
    case AttentionVariant::SlidingWindowGQA:
      return std::min(ctx, m.attention.window);
    case AttentionVariant::SparseTopK:
      return std::min(ctx, m.attention.selected);
    default:
      return ctx;
  }
}

AttnGeom variant_geom(const ModelArch& m) {
  switch (m.attention.variant) {
    case AttentionVariant::MLA:
      return mla_geom(m);
    case AttentionVariant::SparseTopK:
      return m.attention.base == SparseBase::MLA ? mla_geom(m) : gqa_geom(m);
    default:
      return gqa_geom(m);
  }
}

struct Work {
  double flops = 0.0;
  double bytes = 0.0;
};

// One attention layer, `tokens` query tokens against `ctx` visible tokens.
// For prefill the per-token visible span averages down because early tokens
// see a shorter causal window.
Work attn_layer_work(const ModelArch& m, i64 tokens, i64 ctx, bool prefill) {
  const AttnGeom g = variant_geom(m);
  const double t = double(tokens);
  const double act = 2.0 * t * double(m.hidden_dim) * m.param_bytes_per_elem;
  double ctx_eff = double(effective_context(m, ctx));
  Work w;
  if (prefill) {
    double avg = double(ctx) - (t - 1.0) / 2.0;
    avg = std::max(avg, 1.0);
    avg = std::min(avg, double(effective_context(m, ctx)));
    w.flops = t * (g.proj_flops_per_token + g.score_flops_per_ctx_token * avg);
    // KV streams through once per step; new tokens also write their KV.
    w.bytes = ctx_eff * g.kv_read_per_ctx_token + t * g.kv_write_per_token +
              g.weight_bytes + act;
  } else {
    w.flops = t * (g.proj_flops_per_token + g.score_flops_per_ctx_token * ctx_eff);
    w.bytes = t * (g.kv_read_per_ctx_token * ctx_eff + g.kv_write_per_token) +
              g.weight_bytes + act;
  }
  return w;
}

// One mixer (recurrent) layer. Per-token cost is context independent.
Work mamba_layer_work(const ModelArch& m, i64 tokens, bool prefill) {
  const double d = double(m.hidden_dim), sd = double(m.attention.state_dim);
  const double t = double(tokens);
  Work w;
  w.flops = t * (4.0 * d * d + 4.0 * d * sd);
  const double weights = 4.0 * d * d * m.param_bytes_per_elem;
  const double act = 2.0 * t * d * m.param_bytes_per_elem;
  // Decode re-reads and writes the full state every step; prefill keeps it on chip.
  const double state = prefill ? 0.0 : t * 2.0 * sd * d * m.kv_bytes_per_elem;
  w.bytes = weights + act + state;
  return w;
}

Work attention_side_work(const ModelArch& m, i64 tokens, i64 ctx, bool prefill) {
  if (m.attention.variant != AttentionVariant::MambaHybrid)
    return attn_layer_work(m, tokens, ctx, prefill);
  const i64 n_gqa = hybrid_gqa_layers(m);
  const i64 L = m.layers;
  const Work wa = n_gqa > 0 ? attn_layer_work(m, tokens, ctx, prefill) : Work{};
  const Work wm = mamba_layer_work(m, tokens, prefill);
  const double fg = double(n_gqa) / double(L);
  return {wa.flops * fg + wm.flops * (1.0 - fg),
          wa.bytes * fg + wm.bytes * (1.0 - fg)};
}

Work moe_layer_work(const ModelArch& m, i64 tokens, int ep_ranks) {
  const double d = double(m.hidden_dim), dff = double(m.expert_ffn_dim);
  const double t = double(tokens);
  Work w;
  w.flops = t * double(m.top_k) * 6.0 * d * dff +
            t * 6.0 * d * double(m.shared_expert_dim);
  const i64 hosted = (m.num_experts + ep_ranks - 1) / ep_ranks;
  const double active = expected_active_local_experts(m, tokens, hosted);
  const double expert_reads = active * expert_weight_bytes(m);
  const double shared = shared_expert_weight_bytes_per_layer(m);
  const double act =
      2.0 * (t * double(m.top_k) / double(ep_ranks)) * d * m.param_bytes_per_elem;
  // flops and activations are stated per rank below via /parallel_degree; weight
  // reads are already per rank here, so fold the degree back in.
  w.bytes = (expert_reads + shared) * double(ep_ranks) + act * double(ep_ranks);
  return w;
}

}  // namespace

double attn_weight_bytes_per_layer(const ModelArch& m) {
  if (m.attention.variant == AttentionVariant::MambaHybrid) {
    const i64 n_gqa = hybrid_gqa_layers(m);
    const double fg = double(n_gqa) / double(m.layers);
    const double d = double(m.hidden_dim);
    const double mamba =
        (4.0 * d * d + d * double(m.attention.state_dim)) * m.param_bytes_per_elem;
    return gqa_geom(m).weight_bytes * fg + mamba * (1.0 - fg);
  }
  return variant_geom(m).weight_bytes;
}

double expert_weight_bytes(const ModelArch& m) {
  return 3.0 * double(m.hidden_dim) * double(m.expert_ffn_dim) *
         m.param_bytes_per_elem;
}

double shared_expert_weight_bytes_per_layer(const ModelArch& m) {
  return 3.0 * double(m.hidden_dim) * double(m.shared_expert_dim) *
         m.param_bytes_per_elem;
}

double model_weight_bytes_total(const ModelArch& m) {
  return double(m.layers) *
         (attn_weight_bytes_per_layer(m) +
          double(m.num_experts) * expert_weight_bytes(m) +
          shared_expert_weight_bytes_per_layer(m));
}

i64 hybrid_gqa_layers(const ModelArch& m) {
  if (m.attention.variant != AttentionVariant::MambaHybrid) return 0;
  if (m.attention.gqa_every <= 0) return 0;
  return m.layers / m.attention.gqa_every;
}

double kv_resident_bytes(const ModelArch& m, i64 tokens) {
  const double kb = m.kv_bytes_per_elem;
  const double gqa_row = 2.0 * double(m.kv_heads) * double(m.head_dim) * kb;
  switch (m.attention.variant) {
    case AttentionVariant::MHA:
    case AttentionVariant::GQA:
      return double(m.layers) * gqa_row * double(tokens);
    case AttentionVariant::SlidingWindowGQA:
      return double(m.layers) * gqa_row *
             double(std::min(tokens, m.attention.window));
    case AttentionVariant::MLA:
      return double(m.layers) * double(m.attention.latent_dim) * kb * double(tokens);
    case AttentionVariant::SparseTopK:
      // Selection prunes compute, not storage.
      return m.attention.base == SparseBase::MLA
                 ? double(m.layers) * double(m.attention.latent_dim) * kb *
                       double(tokens)
                 : double(m.layers) * gqa_row * double(tokens);
    case AttentionVariant::MambaHybrid: {
      const i64 n_gqa = hybrid_gqa_layers(m);
      const i64 n_mix = m.layers - n_gqa;
      return double(n_gqa) * gqa_row * double(tokens) +
             double(n_mix) * double(m.attention.state_dim) *
                 double(m.hidden_dim) * kb;
    }
  }
  return 0.0;
}

double kv_bytes_per_token(const ModelArch& m) {
  const double kb = m.kv_bytes_per_elem;
  const double gqa_row = 2.0 * double(m.kv_heads) * double(m.head_dim) * kb;
  switch (m.attention.variant) {
    case AttentionVariant::MLA:
      return double(m.layers) * double(m.attention.latent_dim) * kb;
    case AttentionVariant::SparseTopK:
      return m.attention.base == SparseBase::MLA
                 ? double(m.layers) * double(m.attention.latent_dim) * kb
                 : double(m.layers) * gqa_row;
    case AttentionVariant::MambaHybrid:
      return double(hybrid_gqa_layers(m)) * gqa_row;
    default:
      return double(m.layers) * gqa_row;
  }
}

int kv_tp_shard_ways(const ModelArch& m, int tp) {
  switch (m.attention.variant) {
    case AttentionVariant::MLA:
      return 1;  // latent KV is replicated across TP ranks
    case AttentionVariant::SparseTopK:
      if (m.attention.base == SparseBase::MLA) return 1;
      [[fallthrough]];
    default:
      return int(std::min<i64>(tp, m.kv_heads));
  }
}

double expected_active_local_experts(const ModelArch& m, i64 tokens, i64 hosted) {
  if (tokens <= 0 || hosted <= 0) return 0.0;
  const double p_tok = double(m.top_k) / double(m.num_experts);
  return double(hosted) * (1.0 - std::pow(1.0 - p_tok, double(tokens)));
}

OpCost CostModel::analytical(const ModelArch& m, const OpShape& s) const {
  Work w;
  switch (s.op) {
    case OpKind::AttnPrefill:
      if (s.tokens > 0) w = attention_side_work(m, s.tokens, s.context, true);
      break;
    case OpKind::AttnDecode:
      if (s.tokens > 0) w = attention_side_work(m, s.tokens, s.context, false);
      break;
    case OpKind::MoeFfn:
      if (s.tokens > 0) w = moe_layer_work(m, s.tokens, s.parallel_degree);
      break;
    case OpKind::DenseProj:
      if (s.tokens > 0) {
        const double d = double(m.hidden_dim);
        w.flops = 2.0 * double(s.tokens) * d * d;
        w.bytes = d * d * m.param_bytes_per_elem +
                  2.0 * double(s.tokens) * d * m.param_bytes_per_elem;
      }
      break;
  }
  const double pd = double(std::max(1, s.parallel_degree));
  OpCost c;
  c.flops = w.flops / pd;
  c.hbm_bytes = w.bytes / pd;
  const double t_comp = c.flops / (gpu_.peak_flops * knobs_.eta_compute);
  const double t_mem = c.hbm_bytes / (gpu_.hbm_bandwidth * knobs_.eta_memory);
  c.time = std::max(t_comp, t_mem) + knobs_.kernel_overhead;
  c.source = CostSource::Analytical;
  return c;
}

OpCost CostModel::op_cost(const ModelArch& m, const OpShape& s) const {
  if (mode_ == CostSource::Analytical) return analytical(m, s);

  std::optional<double> hit;
  if (table_)
    hit = table_->lookup({s.op, s.tokens, s.context, s.batch, s.parallel_degree});
  if (hit) {
    OpCost c = analytical(m, s);  // keep flops/bytes for reporting
    c.time = *hit;
    c.source = CostSource::Table;
    return c;
  }
  if (mode_ == CostSource::Table) {
    std::ostringstream os;
    os << "uncovered shape: op=" << to_string(s.op) << " tokens=" << s.tokens
       << " context=" << s.context << " batch=" << s.batch
       << " parallel_degree=" << s.parallel_degree;
    throw UncoveredShape(os.str());
  }
  return analytical(m, s);
}

MemoryShares CostModel::runtime_memory_breakdown(const ModelArch& m, i64 context) const {
  MemoryShares r;
  const double L = double(m.layers);
  const OpCost attn =
      op_cost(m, {OpKind::AttnDecode, /*tokens=*/1, context, /*batch=*/1, 1});
  const OpCost ffn = op_cost(m, {OpKind::MoeFfn, /*tokens=*/1, 0, /*batch=*/1, 1});
  const double ta = attn.time * L, tf = ffn.time * L;
  r.attn_time_share = ta / (ta + tf);
  r.ffn_time_share = tf / (ta + tf);
  r.weight_bytes = model_weight_bytes_total(m);
  r.kv_bytes = kv_resident_bytes(m, context);
  r.activation_bytes = 2.0 * double(m.hidden_dim) * m.param_bytes_per_elem;
  return r;
}

}  // namespace afdx
