#include "afdx/engine.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace afdx {

EvalContext make_context(const ModelArch& model, const Workload& workload,
                         const ClusterSpec& cluster, CostSource cost_source,
                         std::optional<CalibrationTable> table) {
  EvalContext ctx;
  ctx.model = model;
  ctx.workload = workload;
  ctx.cluster = cluster;
  ctx.costs = std::make_shared<CostModel>(cluster.gpu, ctx.cost_knobs, cost_source,
                                          std::move(table));
  return ctx;
}

namespace {

i64 ceil_div(i64 a, i64 b) { return (a + b - 1) / b; }

i64 decode_context(const Workload& w) { return w.prefix + w.isl + w.osl / 2; }

// Tokens of new prefill work arriving per decode iteration at steady state.
i64 refill_tokens(i64 input_tokens, const Workload& w, i64 conc) {
  return ceil_div(conc * input_tokens, std::max<i64>(1, w.osl));
}

// One iteration of a non-AFD worker running dec_tokens decode and pre_tokens
// prefill tokens side by side. Attention runs per dp group, experts span the
// whole worker, two allreduces per layer stitch the TP group back together.
double shared_iter_seconds(const EvalContext& ctx, int worker_gpus, int tp,
                           i64 dec_tokens, i64 dec_ctx, i64 pre_tokens, i64 pre_ctx) {
  const ModelArch& m = ctx.model;
  const CostModel& costs = *ctx.costs;
  const int dp = worker_gpus / tp;
  double per_layer = 0.0;
  i64 group_tokens = 0;
  if (dec_tokens > 0) {
    const i64 per_dp = ceil_div(dec_tokens, dp);
    per_layer += costs.op_cost(m, {OpKind::AttnDecode, per_dp, dec_ctx, per_dp, tp}).time;
    group_tokens += per_dp;
  }
  if (pre_tokens > 0) {
    const i64 per_dp = ceil_div(pre_tokens, dp);
    per_layer += costs.op_cost(m, {OpKind::AttnPrefill, per_dp, pre_ctx, 1, tp}).time;
    group_tokens += per_dp;
  }
  per_layer += costs.op_cost(m, {OpKind::MoeFfn, dec_tokens + pre_tokens, 0,
                                 std::max<i64>(dec_tokens, 1), worker_gpus})
                   .time;
  per_layer += 2.0 * tp_allreduce_seconds(group_tokens, m, tp, ctx.cluster.scaleup_bw);
  return double(m.layers) * per_layer;
}

void log_net(std::vector<FlowLogEntry>& log, const std::string& phase,
             const StageNetInfo& net) {
  log.push_back({phase + ".a2f", net.a2f_bytes, net.a2f_seconds, net.a2f_bottleneck});
  log.push_back({phase + ".f2a", net.f2a_bytes, net.f2a_seconds, net.f2a_bottleneck});
}

// Latencies plus the prefill compute time that drives the xP:yD balance
// check (KV transfer excluded: it overlaps with the next prefill).
struct Latencies {
  double ttft = 0.0;
  double tpot = 0.0;
  double prefill_compute = 0.0;
};

Latencies mode_latency(const DeploymentConfig& cfg, const EvalContext& ctx,
                       i64 conc, double kv_s, EvalDetail* det) {
  const Workload& w = ctx.workload;
  const i64 ui = uncached_input(w, ctx.engine_knobs);
  const i64 dctx = decode_context(w);
  const int M = std::max(1, cfg.microbatches);
  Latencies out;

  switch (cfg.mode) {
    case ServingMode::AggChunked: {
      const i64 pre = std::min<i64>(cfg.chunk_size, refill_tokens(ui, w, conc));
      const double iter = shared_iter_seconds(ctx, cfg.unified_worker_gpus(), cfg.tp,
                                              conc, dctx, pre, ui);
      out.ttft = double(ceil_div(ui, cfg.chunk_size)) * iter;
      out.tpot = iter;
      out.prefill_compute = out.ttft;
      if (det) {
        det->prefill_s = out.ttft;
        det->decode_iter_s = iter;
      }
      break;
    }
    case ServingMode::AggAFD: {
      const int mp = int(std::min<i64>(M, ui));
      StageNetInfo net_p;
      StageCosts sp = stage_costs_for(cfg, ctx, Phase::Prefill,
                                      ceil_div(ui, mp), ui, &net_p);
      sp.microbatches = mp;
      out.ttft = pipelined_latency(sp);
      out.prefill_compute = out.ttft;

      const int md = int(std::min<i64>(M, conc));
      StageNetInfo net_d;
      StageCosts sd = stage_costs_for(cfg, ctx, Phase::Decode,
                                      ceil_div(conc, md), dctx, &net_d);
      sd.microbatches = md;
      const i64 refill = refill_tokens(ui, w, conc);
      if (refill > 0) {
        StageCosts sr = stage_costs_for(cfg, ctx, Phase::Prefill,
                                        ceil_div(refill, md), ui);
        for (size_t i = 0; i < sd.stages.size(); ++i) sd.stages[i] += sr.stages[i];
      }
      out.tpot = pipelined_latency(sd);
      if (det) {
        det->prefill_stages = sp;
        det->decode_stages = sd;
        det->prefill_s = out.ttft;
        det->decode_iter_s = out.tpot;
        log_net(det->flow_log, "prefill", net_p);
        log_net(det->flow_log, "decode", net_d);
      }
      break;
    }
    case ServingMode::DisaggPD: {
      const double t_pre = shared_iter_seconds(ctx, cfg.prefill_gpus, cfg.tp,
                                               0, 0, ui, ui);
      out.prefill_compute = t_pre;
      out.ttft = t_pre + kv_s;
      const i64 conc_d = ceil_div(conc, cfg.decode_workers);
      out.tpot = shared_iter_seconds(ctx, cfg.decode_gpus, cfg.tp, conc_d, dctx, 0, 0);
      if (det) {
        det->prefill_s = t_pre;
        det->decode_iter_s = out.tpot;
      }
      break;
    }
    case ServingMode::DisaggAFD: {
      const int mp = int(std::min<i64>(M, ui));
      StageNetInfo net_p;
      StageCosts sp = stage_costs_for(cfg, ctx, Phase::Prefill,
                                      ceil_div(ui, mp), ui, &net_p);
      sp.microbatches = mp;
      const double t_pre = pipelined_latency(sp);
      out.prefill_compute = t_pre;
      out.ttft = t_pre + kv_s;

      const i64 conc_d = ceil_div(conc, cfg.decode_workers);
      const int md = int(std::min<i64>(M, conc_d));
      StageNetInfo net_d;
      StageCosts sd = stage_costs_for(cfg, ctx, Phase::Decode,
                                      ceil_div(conc_d, md), dctx, &net_d);
      sd.microbatches = md;
      out.tpot = pipelined_latency(sd);
      if (det) {
        det->prefill_stages = sp;
        det->decode_stages = sd;
        det->prefill_s = t_pre;
        det->decode_iter_s = out.tpot;
        log_net(det->flow_log, "prefill", net_p);
        log_net(det->flow_log, "decode", net_d);
      }
      break;
    }
  }
  return out;
}

std::string gib(double bytes) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << bytes / kGiB << " GiB";
  return os.str();
}

std::string ms(double seconds) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << seconds * 1e3 << " ms";
  return os.str();
}

struct FeasCheck {
  bool ok = false;
  InfeasibleReason reason = InfeasibleReason::None;
  std::string detail;
  Latencies lat;
  MemVerdict mem;
};

FeasCheck check_at(const DeploymentConfig& cfg, const EvalContext& ctx, i64 conc,
                   double kv_s) {
  FeasCheck r;
  const auto fps = footprint(cfg, ctx, conc);
  r.mem = check_memory(fps, ctx.cluster.gpu);
  if (!r.mem.feasible) {
    r.reason = InfeasibleReason::MemoryExceeded;
    std::ostringstream os;
    os << "memory-exceeded on " << to_string(r.mem.limiting_worker) << "/"
       << to_string(r.mem.limiting) << " gpu: over budget by " << gib(-r.mem.headroom)
       << " at concurrency " << conc;
    r.detail = os.str();
    return r;
  }
  r.lat = mode_latency(cfg, ctx, conc, kv_s, nullptr);
  const Workload& w = ctx.workload;
  if (w.slo_ttft > 0 && r.lat.ttft > w.slo_ttft) {
    r.reason = InfeasibleReason::SloViolated;
    r.detail = "ttft " + ms(r.lat.ttft) + " > slo " + ms(w.slo_ttft);
    return r;
  }
  if (w.slo_tpot > 0 && r.lat.tpot > w.slo_tpot) {
    r.reason = InfeasibleReason::SloViolated;
    r.detail = "tpot " + ms(r.lat.tpot) + " > slo " + ms(w.slo_tpot);
    return r;
  }
  if (is_disagg(cfg.mode)) {
    // x prefill workers must absorb the arrival rate the decode side sustains.
    const double need = double(conc) * r.lat.prefill_compute;
    const double have = double(cfg.prefill_workers) * double(w.osl) * r.lat.tpot;
    if (need > have) {
      r.reason = InfeasibleReason::SloViolated;
      std::ostringstream os;
      os << "prefill workers saturated: need " << std::fixed << std::setprecision(2)
         << need / (double(w.osl) * r.lat.tpot) << " workers, have "
         << cfg.prefill_workers;
      r.detail = os.str();
      return r;
    }
  }
  r.ok = true;
  return r;
}

}  // namespace

LatencyPoint latency_at(const DeploymentConfig& cfg, const EvalContext& ctx,
                        i64 concurrency, EvalDetail* detail) {
  const Verdict v = validate_config(cfg, ctx.model, ctx.cluster,
                                    ctx.engine_knobs.allow_uneven_experts);
  if (!v.ok()) throw std::invalid_argument("latency_at: " + v.violations.front());
  const Topology topo = ctx.topology();
  WorkerLayout layout = place(cfg, topo, ctx.policy);
  double kv_s = 0.0;
  if (is_disagg(cfg.mode)) {
    Flow f;
    f.bytes = kv_resident_bytes(ctx.model, ctx.workload.prefix + ctx.workload.isl);
    kv_s = kv_transfer_time(layout, f, topo);
    if (detail) detail->flow_log.push_back({"kv", f.bytes, kv_s, ""});
  }
  const Latencies lat = mode_latency(cfg, ctx, concurrency, kv_s, detail);
  if (detail) {
    detail->layout = std::move(layout);
    detail->kv_transfer_s = kv_s;
    detail->footprints = footprint(cfg, ctx, concurrency);
  }
  return {lat.ttft, lat.tpot};
}

PerfEstimate evaluate(const DeploymentConfig& cfg, const EvalContext& ctx,
                      EvalDetail* detail) {
  PerfEstimate est;
  const Verdict v = validate_config(cfg, ctx.model, ctx.cluster,
                                    ctx.engine_knobs.allow_uneven_experts);
  if (!v.ok()) {
    est.feasible = false;
    est.reason = InfeasibleReason::InvalidLayout;
    std::string d;
    for (const auto& s : v.violations) {
      if (!d.empty()) d += "; ";
      d += s;
    }
    est.detail = d;
    return est;
  }

  const Topology topo = ctx.topology();
  WorkerLayout layout;
  try {
    layout = place(cfg, topo, ctx.policy);
  } catch (const std::invalid_argument& e) {
    est.feasible = false;
    est.reason = InfeasibleReason::InvalidLayout;
    est.detail = e.what();
    return est;
  }

  double kv_s = 0.0;
  double kv_bytes = 0.0;
  if (is_disagg(cfg.mode)) {
    Flow f;
    f.bytes = kv_resident_bytes(ctx.model, ctx.workload.prefix + ctx.workload.isl);
    kv_bytes = f.bytes;
    kv_s = kv_transfer_time(layout, f, topo);
  }

  const FeasCheck base = check_at(cfg, ctx, 1, kv_s);
  if (!base.ok) {
    est.feasible = false;
    est.reason = base.reason;
    est.detail = base.detail;
    est.ttft = base.lat.ttft;
    est.tpot = base.lat.tpot;
    if (detail) {
      detail->layout = std::move(layout);
      detail->kv_transfer_s = kv_s;
      detail->footprints = footprint(cfg, ctx, 1);
      if (is_disagg(cfg.mode))
        detail->flow_log.push_back({"kv", kv_bytes, kv_s, ""});
      mode_latency(cfg, ctx, 1, kv_s, detail);
    }
    return est;
  }

  i64 lo = 1, hi = ctx.engine_knobs.max_concurrency;
  while (lo < hi) {
    const i64 mid = lo + (hi - lo + 1) / 2;
    if (check_at(cfg, ctx, mid, kv_s).ok)
      lo = mid;
    else
      hi = mid - 1;
  }

  if (detail) {
    detail->layout = std::move(layout);
    detail->kv_transfer_s = kv_s;
    detail->footprints = footprint(cfg, ctx, lo);
    if (is_disagg(cfg.mode)) detail->flow_log.push_back({"kv", kv_bytes, kv_s, ""});
  }
  const Latencies lat = mode_latency(cfg, ctx, lo, kv_s, detail);

  est.feasible = true;
  est.reason = InfeasibleReason::None;
  est.concurrency = lo;
  est.ttft = lat.ttft;
  est.tpot = lat.tpot;
  est.per_user_rate = 1.0 / lat.tpot;
  double sys = double(cfg.replicas) * double(lo) / lat.tpot;
  if (ctx.engine_knobs.count_input_tokens)
    sys *= 1.0 + double(ctx.workload.isl) / double(std::max<i64>(1, ctx.workload.osl));
  est.system_rate = sys;
  return est;
}

}  // namespace afdx
