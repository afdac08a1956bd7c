#include "afdx/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "afdx/svg.hpp"
#include "json.hpp"

namespace afdx {

namespace {

using json = nlohmann::ordered_json;

json cfg_json(const DeploymentConfig& cfg) {
  json j;
  j["mode"] = to_string(cfg.mode);
  j["replicas"] = cfg.replicas;
  if (is_disagg(cfg.mode)) {
    j["prefill_workers"] = cfg.prefill_workers;
    j["decode_workers"] = cfg.decode_workers;
    j["prefill_gpus"] = cfg.prefill_gpus;
    j["decode_gpus"] = cfg.decode_gpus;
  }
  if (is_afd(cfg.mode)) {
    j["attn_gpus"] = cfg.attn_gpus;
    j["ffn_gpus"] = cfg.ffn_gpus;
    j["microbatches"] = cfg.microbatches;
  }
  j["tp"] = cfg.tp;
  j["dp"] = cfg.dp;
  j["ep"] = cfg.ep;
  if (cfg.mode == ServingMode::AggChunked) j["chunk_size"] = cfg.chunk_size;
  j["gpus_per_replica"] = cfg.per_replica_gpus();
  j["total_gpus"] = cfg.total_gpus();
  return j;
}

json perf_json(const PerfEstimate& p) {
  json j;
  j["feasible"] = p.feasible;
  if (!p.feasible) {
    j["reason"] = to_string(p.reason);
    j["detail"] = p.detail;
  }
  j["ttft_ms"] = p.ttft / kMs;
  j["tpot_ms"] = p.tpot / kMs;
  j["tokens_s_user"] = p.per_user_rate;
  j["system_tokens_s"] = p.system_rate;
  j["concurrency"] = p.concurrency;
  return j;
}

}  // namespace

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string layout_string(const DeploymentConfig& cfg) {
  std::ostringstream o;
  o << cfg.replicas << "x";
  if (is_disagg(cfg.mode)) {
    o << "[" << cfg.prefill_workers << "Px" << cfg.prefill_gpus << "+"
      << cfg.decode_workers << "Dx" << cfg.decode_gpus << "]";
  } else {
    o << cfg.unified_worker_gpus() << "gpu";
  }
  if (is_afd(cfg.mode)) o << " A" << cfg.attn_gpus << "F" << cfg.ffn_gpus;
  o << " tp" << cfg.tp;
  if (is_afd(cfg.mode)) o << " M" << cfg.microbatches;
  if (cfg.mode == ServingMode::AggChunked) o << " chunk" << cfg.chunk_size;
  return o.str();
}

std::string frontier_csv(const SearchOutcome& o) {
  std::ostringstream out;
  out << "mode,layout,attn_gpus,ffn_gpus,tp,ep,microbatches,concurrency,"
         "ttft_ms,tpot_ms,tokens_s_user,system_tokens_s\n";
  for (size_t i : o.frontier) {
    const auto& r = o.rows[i];
    out << to_string(r.cfg.mode) << "," << layout_string(r.cfg) << ","
        << r.cfg.attn_gpus << "," << r.cfg.ffn_gpus << "," << r.cfg.tp << ","
        << r.cfg.ep << "," << r.cfg.microbatches << "," << r.perf.concurrency << ","
        << fmt_g(r.perf.ttft / kMs) << "," << fmt_g(r.perf.tpot / kMs) << ","
        << fmt_g(r.perf.per_user_rate) << "," << fmt_g(r.perf.system_rate) << "\n";
  }
  return out.str();
}

std::string all_points_jsonl(const SearchOutcome& o) {
  std::ostringstream out;
  for (const auto& r : o.rows) {
    json j;
    j["cfg"] = cfg_json(r.cfg);
    j["perf"] = perf_json(r.perf);
    out << j.dump() << "\n";
  }
  return out.str();
}

std::string search_summary(const Scenario& s, const SearchOutcome& o, int top) {
  std::ostringstream out;
  out << "scenario: model=" << s.model.name << " workload=" << s.workload.name
      << " cluster=" << s.cluster.num_gpus << "x" << s.cluster.gpu.name << "\n";
  out << "slo: ttft<=" << fmt_g(s.workload.slo_ttft / kMs) << "ms tpot<="
      << fmt_g(s.workload.slo_tpot / kMs) << "ms\n";
  out << "configs: " << o.enumerated << (o.truncated ? " (truncated)" : "") << "\n";
  i64 feasible = 0;
  for (const auto& r : o.rows)
    if (r.perf.feasible) ++feasible;
  out << "feasible: " << feasible << "\n";
  out << "infeasible:";
  if (o.infeasible.empty()) out << " none";
  for (const auto& [reason, count] : o.infeasible) out << " " << reason << "=" << count;
  out << "\n";
  for (const auto& w : o.warnings) out << "warning: " << w << "\n";
  out << "frontier: " << o.frontier.size() << " configs\n";
  int shown = 0;
  for (size_t i : o.frontier) {
    if (shown++ >= top) break;
    const auto& r = o.rows[i];
    out << "  " << to_string(r.cfg.mode) << " " << layout_string(r.cfg) << " conc="
        << r.perf.concurrency << " ttft=" << fmt_g(r.perf.ttft / kMs) << "ms tpot="
        << fmt_g(r.perf.tpot / kMs) << "ms user=" << fmt_g(r.perf.per_user_rate)
        << "tok/s system=" << fmt_g(r.perf.system_rate) << "tok/s\n";
  }
  return out.str();
}

std::string search_summary_json(const Scenario& s, const SearchOutcome& o) {
  json j;
  j["scenario"]["model"] = s.model.name;
  j["scenario"]["workload"] = s.workload.name;
  j["scenario"]["num_gpus"] = s.cluster.num_gpus;
  j["scenario"]["gpu"] = s.cluster.gpu.name;
  j["slo"]["ttft_ms"] = s.workload.slo_ttft / kMs;
  j["slo"]["tpot_ms"] = s.workload.slo_tpot / kMs;
  j["enumerated"] = o.enumerated;
  j["truncated"] = o.truncated;
  i64 feasible = 0;
  for (const auto& r : o.rows)
    if (r.perf.feasible) ++feasible;
  j["feasible"] = feasible;
  json hist = json::object();
  for (const auto& [reason, count] : o.infeasible) hist[reason] = count;
  j["infeasible"] = hist;
  j["warnings"] = o.warnings;
  j["frontier_size"] = o.frontier.size();

  const SearchRow* best_sys = nullptr;
  const SearchRow* best_user = nullptr;
  for (size_t i : o.frontier) {
    const auto& r = o.rows[i];
    if (!best_sys || r.perf.system_rate > best_sys->perf.system_rate) best_sys = &r;
    if (!best_user || r.perf.per_user_rate > best_user->perf.per_user_rate)
      best_user = &r;
  }
  auto row_json = [](const SearchRow& r) {
    json e;
    e["layout"] = layout_string(r.cfg);
    e["cfg"] = cfg_json(r.cfg);
    e["perf"] = perf_json(r.perf);
    return e;
  };
  j["best_throughput"] = best_sys ? row_json(*best_sys) : json(nullptr);
  j["best_interactivity"] = best_user ? row_json(*best_user) : json(nullptr);
  return j.dump(2) + "\n";
}

std::string frontier_svg_doc(const SearchOutcome& o) {
  SvgPlot plot;
  plot.title = "latency-throughput frontier";
  plot.x_label = "per-user tokens/s";
  plot.y_label = "system tokens/s";

  SvgSeries all;
  all.label = "feasible";
  all.color = "#9ca3af";
  for (const auto& r : o.rows)
    if (r.perf.feasible) all.points.push_back({r.perf.per_user_rate, r.perf.system_rate});

  SvgSeries front;
  front.label = "pareto";
  front.color = "#dc2626";
  front.line = true;
  for (size_t i : o.frontier)
    front.points.push_back({o.rows[i].perf.per_user_rate, o.rows[i].perf.system_rate});

  plot.series.push_back(all);
  plot.series.push_back(front);
  return render_svg(plot);
}

std::string eval_json(const DeploymentConfig& cfg, const PerfEstimate& perf,
                      const EvalDetail& det) {
  json j;
  j["cfg"] = cfg_json(cfg);
  j["perf"] = perf_json(perf);

  json fps = json::array();
  for (const auto& f : det.footprints) {
    json e;
    e["worker"] = to_string(f.worker);
    e["role"] = to_string(f.role);
    e["weights_gib"] = f.weights / kGiB;
    e["activations_gib"] = f.activations / kGiB;
    e["kv_cache_gib"] = f.kv_cache / kGiB;
    e["comm_buffers_gib"] = f.comm_buffers / kGiB;
    e["overhead_gib"] = f.overhead / kGiB;
    e["total_gib"] = f.total() / kGiB;
    fps.push_back(e);
  }
  j["footprints"] = fps;

  auto stages_json = [](const StageCosts& sc) {
    json e;
    json arr = json::array();
    for (double s : sc.stages) arr.push_back(s / kMs);
    e["stages_ms"] = arr;
    e["layers"] = sc.layers;
    e["microbatches"] = sc.microbatches;
    return e;
  };
  if (!det.prefill_stages.stages.empty()) j["prefill_stages"] = stages_json(det.prefill_stages);
  if (!det.decode_stages.stages.empty()) j["decode_stages"] = stages_json(det.decode_stages);
  j["prefill_ms"] = det.prefill_s / kMs;
  j["decode_iter_ms"] = det.decode_iter_s / kMs;
  if (det.kv_transfer_s > 0) j["kv_transfer_ms"] = det.kv_transfer_s / kMs;

  json flows = json::array();
  for (const auto& f : det.flow_log) {
    json e;
    e["label"] = f.label;
    e["bytes"] = f.bytes;
    e["seconds"] = f.seconds;
    if (!f.bottleneck.empty()) e["bottleneck"] = f.bottleneck;
    flows.push_back(e);
  }
  j["flows"] = flows;

  json workers = json::array();
  for (const auto& wk : det.layout.workers) {
    json e;
    e["role"] = to_string(wk.role);
    e["replica"] = wk.replica;
    e["index"] = wk.index;
    e["attn_gpus"] = wk.attn_gpus;
    e["ffn_gpus"] = wk.ffn_gpus;
    e["node"] = wk.node;
    if (wk.tier_degraded) e["tier_degraded"] = true;
    workers.push_back(e);
  }
  j["layout"] = workers;
  return j.dump(2) + "\n";
}

std::string flows_jsonl(const EvalDetail& det) {
  std::ostringstream out;
  for (const auto& f : det.flow_log) {
    json e;
    e["label"] = f.label;
    e["bytes"] = f.bytes;
    e["seconds"] = f.seconds;
    if (!f.bottleneck.empty()) e["bottleneck"] = f.bottleneck;
    out << e.dump() << "\n";
  }
  return out.str();
}

std::string traffic_csv(const TrafficMatrix& t) {
  std::ostringstream out;
  out << "sender";
  for (int r = 0; r < t.receivers; ++r) out << ",recv" << r;
  out << ",row_sum\n";
  for (int s = 0; s < t.senders; ++s) {
    out << s;
    for (int r = 0; r < t.receivers; ++r) out << "," << fmt_g(t.at(s, r));
    out << "," << fmt_g(t.row_sum(s)) << "\n";
  }
  out << "col_sum";
  for (int r = 0; r < t.receivers; ++r) out << "," << fmt_g(t.col_sum(r));
  out << "," << fmt_g(t.total()) << "\n";
  return out.str();
}

std::string breakdown_text(const Scenario& s, const EvalContext& ctx,
                           std::uint64_t seed) {
  const ModelArch& m = ctx.model;
  const Workload& w = ctx.workload;
  const CostModel& costs = *ctx.costs;
  std::ostringstream out;

  out << "model " << m.name << ": layers=" << m.layers << " hidden=" << m.hidden_dim
      << " experts=" << m.num_experts << " top_k=" << m.top_k << " attention="
      << to_string(m.attention.variant) << "\n";
  out << "weights: total=" << fmt_g(model_weight_bytes_total(m) / kGiB)
      << "GiB attn/layer=" << fmt_g(attn_weight_bytes_per_layer(m) / kGiB)
      << "GiB expert=" << fmt_g(expert_weight_bytes(m) / kGiB) << "GiB\n";
  const i64 dctx = w.prefix + w.isl + w.osl / 2;
  out << "kv: per-token=" << fmt_g(kv_bytes_per_token(m)) << "B resident@"
      << dctx << "=" << fmt_g(kv_resident_bytes(m, dctx) / kGiB) << "GiB\n";

  const MemoryShares shares = costs.runtime_memory_breakdown(m, dctx);
  out << "decode time split @ctx=" << dctx << ": attn="
      << fmt_g(shares.attn_time_share * 100) << "% ffn="
      << fmt_g(shares.ffn_time_share * 100) << "%\n";

  out << "op costs (per layer per device, time in us):\n";
  out << "  op tokens context batch pd time_us source\n";
  const i64 batches[] = {1, 16, s.search.rate_match_batch};
  for (i64 b : batches) {
    const OpCost d = costs.op_cost(m, {OpKind::AttnDecode, b, dctx, b, 1});
    out << "  attn_decode " << b << " " << dctx << " " << b << " 1 "
        << fmt_g(d.time / kUs) << " " << to_string(d.source) << "\n";
  }
  const OpCost p = costs.op_cost(m, {OpKind::AttnPrefill, w.isl, w.isl, 1, 1});
  out << "  attn_prefill " << w.isl << " " << w.isl << " 1 1 " << fmt_g(p.time / kUs)
      << " " << to_string(p.source) << "\n";
  for (i64 b : batches) {
    const OpCost f = costs.op_cost(m, {OpKind::MoeFfn, b, 0, b, 1});
    out << "  moe_ffn " << b << " 0 " << b << " 1 " << fmt_g(f.time / kUs) << " "
        << to_string(f.source) << "\n";
  }

  const int g = ctx.cluster.scaleup_domain_size;
  int tp_pick = 1;
  for (int tp : s.search.tp_set)
    if (tp >= 1 && g % tp == 0) {
      tp_pick = tp;
      break;
    }
  const int A = rate_match_split(ctx, g, tp_pick, s.search.rate_match_batch);
  out << "rate-matched split @worker=" << g << " tp=" << tp_pick << " batch="
      << s.search.rate_match_batch << ": ";
  if (A > 0)
    out << "A=" << A << " F=" << (g - A) << "\n";
  else
    out << "none (attention never keeps up within this worker)\n";

  if (A > 0 && m.num_experts % (g - A) == 0) {
    const int F = g - A;
    const double prob = activation_probability(m.num_experts, m.top_k, F);
    out << "activation probability E=" << m.num_experts << " k=" << m.top_k
        << " ranks=" << F << ": p=" << fmt_g(prob) << "\n";
    const i64 tokens = 100000;
    const auto hits = sample_rank_hits(m.num_experts, m.top_k, F, tokens, seed);
    out << "sampled rank hit rates (tokens=" << tokens << " seed=" << seed << "):";
    for (i64 h : hits) out << " " << fmt_g(double(h) / double(tokens));
    out << "\n";
  }
  return out.str();
}

BreakdownSweep breakdown_sweep(const EvalContext& ctx) {
  const Workload& w = ctx.workload;
  BreakdownSweep sw;
  const i64 end = std::max<i64>(1, w.prefix + w.isl + w.osl);
  for (i64 c = 1024; c < end; c *= 2) sw.contexts.push_back(c);
  sw.contexts.push_back(end);

  for (i64 c : sw.contexts) {
    const MemoryShares ms = ctx.costs->runtime_memory_breakdown(ctx.model, c);
    sw.attn_time_share.push_back(ms.attn_time_share);
    sw.ffn_time_share.push_back(ms.ffn_time_share);
    const double total = ms.weight_bytes + ms.kv_bytes + ms.activation_bytes;
    sw.weight_mem_share.push_back(total > 0 ? ms.weight_bytes / total : 0.0);
    sw.kv_mem_share.push_back(total > 0 ? ms.kv_bytes / total : 0.0);
    sw.act_mem_share.push_back(total > 0 ? ms.activation_bytes / total : 0.0);
  }
  return sw;
}

std::string breakdown_csv(const BreakdownSweep& sw) {
  std::ostringstream out;
  out << "context,attn_time_share,ffn_time_share,weight_mem_share,"
         "kv_mem_share,activation_mem_share\n";
  for (size_t i = 0; i < sw.contexts.size(); ++i)
    out << sw.contexts[i] << "," << fmt_g(sw.attn_time_share[i]) << ","
        << fmt_g(sw.ffn_time_share[i]) << "," << fmt_g(sw.weight_mem_share[i]) << ","
        << fmt_g(sw.kv_mem_share[i]) << "," << fmt_g(sw.act_mem_share[i]) << "\n";
  return out.str();
}

std::string breakdown_svg_doc(const BreakdownSweep& sw) {
  SvgPlot plot;
  plot.title = "decode time and memory composition vs context";
  plot.x_label = "context tokens";
  plot.y_label = "share";
  plot.x_log = true;

  auto series = [&](const char* label, const char* color,
                    const std::vector<double>& ys) {
    SvgSeries s;
    s.label = label;
    s.color = color;
    s.line = true;
    for (size_t i = 0; i < sw.contexts.size(); ++i)
      s.points.push_back({double(sw.contexts[i]), ys[i]});
    plot.series.push_back(std::move(s));
  };
  series("attn time", "#dc2626", sw.attn_time_share);
  series("ffn time", "#2563eb", sw.ffn_time_share);
  series("weights", "#6b7280", sw.weight_mem_share);
  series("kv", "#16a34a", sw.kv_mem_share);
  series("activations", "#d97706", sw.act_mem_share);
  return render_svg(plot);
}

}  // namespace afdx
