#include "afdx/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace afdx {

std::vector<i64> partition_budget(i64 batch, i64 isl, int microbatches) {
  if (batch < 0 || isl < 0) throw std::invalid_argument("partition_budget: negative budget");
  const i64 budget = batch * isl;
  if (microbatches < 1) throw std::invalid_argument("partition_budget: microbatches < 1");
  if (budget < microbatches)
    throw std::invalid_argument("partition_budget: empty microbatch");
  std::vector<i64> out(static_cast<size_t>(microbatches));
  const i64 base = budget / microbatches, rem = budget % microbatches;
  for (int i = 0; i < microbatches; ++i) out[size_t(i)] = base + (i < rem ? 1 : 0);
  return out;
}

double pipelined_latency(const StageCosts& c) {
  if (c.stages.empty()) return 0.0;
  const double s_max = *std::max_element(c.stages.begin(), c.stages.end());
  double fill = 0.0;
  for (double s : c.stages)
    if (s != s_max) fill += s / double(c.layers);
  return double(c.microbatches) * s_max + fill;
}

double tp_allreduce_seconds(i64 tokens, const ModelArch& m, int tp, double bw) {
  if (tp <= 1 || tokens <= 0) return 0.0;
  const double bytes = double(tokens) * double(m.hidden_dim) * m.param_bytes_per_elem;
  return 2.0 * double(tp - 1) / double(tp) * bytes / bw;
}

namespace {

std::vector<SimFlow> matrix_flows(const TrafficMatrix& t, const std::vector<int>& src_ids,
                                  const std::vector<int>& dst_ids) {
  std::vector<SimFlow> flows;
  for (int s = 0; s < t.senders; ++s)
    for (int r = 0; r < t.receivers; ++r) {
      if (src_ids[size_t(s)] == dst_ids[size_t(r)]) continue;  // stays on device
      flows.push_back({src_ids[size_t(s)], dst_ids[size_t(r)], t.at(s, r)});
    }
  return flows;
}

}  // namespace

StageCosts stage_costs_for(const DeploymentConfig& cfg, const EvalContext& ctx,
                           Phase phase, i64 microbatch_tokens, i64 context,
                           StageNetInfo* net) {
  if (!is_afd(cfg.mode))
    throw std::invalid_argument("stage_costs_for: deployment has no AFD split");
  const int A = cfg.attn_gpus, F = cfg.ffn_gpus;
  const i64 L = ctx.model.layers;
  const CostModel& costs = *ctx.costs;

  // Attention stage: dp groups each take their share of the microbatch.
  const i64 per_dp = (microbatch_tokens + cfg.dp - 1) / cfg.dp;
  const OpKind attn_op = phase == Phase::Prefill ? OpKind::AttnPrefill : OpKind::AttnDecode;
  OpCost attn = costs.op_cost(
      ctx.model, {attn_op, per_dp, context, phase == Phase::Decode ? per_dp : 1, cfg.tp});
  double s_attn = double(L) * attn.time;
  s_attn += double(L) * tp_allreduce_seconds(per_dp, ctx.model, cfg.tp, ctx.cluster.scaleup_bw);

  OpCost ffn = costs.op_cost(ctx.model, {OpKind::MoeFfn, microbatch_tokens, 0,
                                         phase == Phase::Decode ? microbatch_tokens : 1, F});
  const double s_ffn = double(L) * ffn.time;

  // Worker-local wiring: GPUs 0..A-1 attention, A..A+F-1 FFN, placed from a
  // domain origin so in-domain workers ride the scale-up tier.
  Topology topo = ctx.topology();
  const int worker = A + F;
  topo.gpus = std::max(worker, topo.scaleup_domain);
  std::vector<int> attn_ids(static_cast<size_t>(A)), ffn_ids(static_cast<size_t>(F));
  for (int i = 0; i < A; ++i) attn_ids[size_t(i)] = i;
  for (int i = 0; i < F; ++i) ffn_ids[size_t(i)] = A + i;

  const TrafficMatrix a2f = build_a2f(microbatch_tokens, ctx.model, A, F, ctx.transport);
  const TrafficMatrix f2a = build_f2a(microbatch_tokens, ctx.model, A, F, ctx.transport);
  const SimResult ra = simulate(matrix_flows(a2f, attn_ids, ffn_ids), topo);
  const SimResult rf = simulate(matrix_flows(f2a, ffn_ids, attn_ids), topo);
  if (net) {
    net->a2f_bytes = a2f.total();
    net->a2f_seconds = ra.makespan;
    net->a2f_bottleneck = resource_name(topo, ra.binding_resource);
    net->f2a_bytes = f2a.total();
    net->f2a_seconds = rf.makespan;
    net->f2a_bottleneck = resource_name(topo, rf.binding_resource);
  }

  const bool in_domain = worker <= ctx.cluster.scaleup_domain_size;
  const Duplex dx = in_domain ? ctx.cluster.scaleup_duplex : ctx.cluster.scaleout_duplex;

  StageCosts sc;
  sc.layers = L;
  sc.microbatches = cfg.microbatches;
  if (dx == Duplex::Half) {
    // Dispatch and combine share the wire; schedule them as one merged stage.
    sc.stages = {s_attn, double(L) * (ra.makespan + rf.makespan), s_ffn};
  } else {
    sc.stages = {s_attn, double(L) * ra.makespan, s_ffn, double(L) * rf.makespan};
  }
  return sc;
}

}  // namespace afdx
