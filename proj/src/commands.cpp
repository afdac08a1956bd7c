#include "afdx/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "afdx/context.hpp"
#include "afdx/costdb.hpp"
#include "afdx/engine.hpp"
#include "afdx/placement.hpp"
#include "afdx/report.hpp"
#include "afdx/scenario.hpp"
#include "afdx/search.hpp"
#include "afdx/svg.hpp"
#include "afdx/traffic.hpp"

namespace afdx {
namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw ScenarioError("cannot write " + p.string());
  f << content;
}

struct Loaded {
  Scenario scenario;
  EvalContext ctx;
};

Loaded load_with_costs(const CommonOpts& o) {
  if (o.scenario_path.empty()) throw ScenarioError("--scenario is required");
  Scenario s = load_scenario(o.scenario_path);
  if (o.count_input_tokens) s.engine_knobs.count_input_tokens = true;

  CostSource source = CostSource::Analytical;
  std::optional<CalibrationTable> table;
  if (o.cost_source == "analytical") {
    source = CostSource::Analytical;
  } else if (o.cost_source == "table" || o.cost_source == "hybrid") {
    source = o.cost_source == "table" ? CostSource::Table : CostSource::Hybrid;
    if (o.calibration_path.empty())
      throw ScenarioError("--cost-source " + o.cost_source +
                          " needs --calibration-table");
    table = CalibrationTable::load_csv(o.calibration_path);
  } else {
    throw ScenarioError("unknown cost source '" + o.cost_source +
                        "' (want analytical|table|hybrid)");
  }
  EvalContext ctx = context_for(s, source, std::move(table));
  return {std::move(s), std::move(ctx)};
}

int fail(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kExitBadInput;
}

int fail_verdict(const Verdict& v) {
  std::cerr << "error: invalid deployment:\n";
  for (const auto& s : v.violations) std::cerr << "  - " << s << "\n";
  return kExitBadInput;
}

}  // namespace

DeploymentConfig to_config(const ConfigOpts& o, const ModelArch& model) {
  DeploymentConfig cfg;
  cfg.mode = parse_serving_mode(o.mode);
  cfg.replicas = o.replicas;
  cfg.tp = o.tp;

  const bool afd = is_afd(cfg.mode);
  const bool disagg = is_disagg(cfg.mode);

  if (afd) {
    if (o.attn_gpus < 1 || o.ffn_gpus < 1)
      throw ScenarioError(o.mode + " needs --attn-gpus and --ffn-gpus");
    if (o.attn_gpus % o.tp != 0)
      throw ScenarioError("--tp must divide --attn-gpus");
    cfg.attn_gpus = o.attn_gpus;
    cfg.ffn_gpus = o.ffn_gpus;
    cfg.dp = o.attn_gpus / o.tp;
    cfg.ep = o.ffn_gpus;
    cfg.microbatches = o.microbatches;
  }

  if (disagg) {
    if (o.prefill_workers < 1 || o.decode_workers < 1)
      throw ScenarioError(o.mode +
                          " needs --prefill-workers and --decode-workers");
    cfg.prefill_workers = o.prefill_workers;
    cfg.decode_workers = o.decode_workers;
    if (afd) {
      cfg.prefill_gpus = cfg.decode_gpus = o.attn_gpus + o.ffn_gpus;
    } else {
      if (o.prefill_gpus < 1 || o.decode_gpus < 1)
        throw ScenarioError(o.mode + " needs --prefill-gpus and --decode-gpus");
      if (o.prefill_gpus % o.tp != 0 || o.decode_gpus % o.tp != 0)
        throw ScenarioError("--tp must divide --prefill-gpus and --decode-gpus");
      cfg.prefill_gpus = o.prefill_gpus;
      cfg.decode_gpus = o.decode_gpus;
      cfg.dp = o.decode_gpus / o.tp;
    }
  }

  if (cfg.mode == ServingMode::AggChunked) {
    int worker = o.worker_gpus > 0 ? o.worker_gpus : o.tp;
    if (worker % o.tp != 0) throw ScenarioError("--tp must divide --worker-gpus");
    cfg.dp = worker / o.tp;
    cfg.chunk_size = o.chunk_size > 0 ? o.chunk_size : 2048;
  }

  (void)model;
  return cfg;
}

int run_search_cmd(const SearchOpts& o) {
  try {
    Loaded l = load_with_costs(o.common);
    SearchSpace& sp = l.scenario.search;
    if (!o.modes.empty()) {
      sp.modes.clear();
      for (const auto& m : o.modes) sp.modes.push_back(parse_serving_mode(m));
    }
    if (o.replica_min > 0) sp.replica_min = o.replica_min;
    if (o.replica_max >= 0) sp.replica_max = o.replica_max;
    if (!o.tp_set.empty()) sp.tp_set = o.tp_set;

    SearchOutcome out = run_search(sp, l.ctx);

    std::cout << search_summary(l.scenario, out, o.top);
    if (!o.common.out_dir.empty()) {
      fs::create_directories(o.common.out_dir);
      const fs::path dir = o.common.out_dir;
      write_file(dir / "frontier.csv", frontier_csv(out));
      write_file(dir / "frontier.svg", frontier_svg_doc(out));
      write_file(dir / "all_points.jsonl", all_points_jsonl(out));
      write_file(dir / "summary.json", search_summary_json(l.scenario, out));
    }

    if (out.frontier.empty()) {
      std::cerr << "no feasible deployment in the search space\n";
      return kExitNoFeasible;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int run_eval_cmd(const EvalOpts& o) {
  try {
    Loaded l = load_with_costs(o.common);
    const EvalContext& ctx = l.ctx;
    DeploymentConfig cfg = to_config(o.config, ctx.model);

    Verdict v = validate_config(cfg, ctx.model, ctx.cluster,
                                ctx.engine_knobs.allow_uneven_experts);
    if (!v.ok()) return fail_verdict(v);

    if ((o.dump_traffic || o.dump_flows) && o.common.out_dir.empty())
      return fail("--dump-traffic/--dump-flows need --out");

    EvalDetail det;
    PerfEstimate perf;
    if (o.concurrency > 0) {
      LatencyPoint lp = latency_at(cfg, ctx, o.concurrency, &det);
      perf.concurrency = o.concurrency;
      perf.ttft = lp.ttft;
      perf.tpot = lp.tpot;
      perf.per_user_rate = lp.tpot > 0 ? 1.0 / lp.tpot : 0.0;
      double factor = 1.0;
      if (ctx.engine_knobs.count_input_tokens)
        factor += double(ctx.workload.isl) /
                  double(std::max<i64>(1, ctx.workload.osl));
      perf.system_rate = lp.tpot > 0 ? double(cfg.replicas) *
                                           double(o.concurrency) / lp.tpot * factor
                                     : 0.0;
      MemVerdict mv = check_memory(det.footprints, ctx.cluster.gpu);
      const Workload& w = ctx.workload;
      if (!mv.feasible) {
        perf.reason = InfeasibleReason::MemoryExceeded;
        perf.detail = "memory-exceeded on " + std::string(to_string(mv.limiting_worker)) +
                      "/" + to_string(mv.limiting) + " gpu: over budget by " +
                      fmt_g(-mv.headroom / kGiB) + " GiB at concurrency " +
                      std::to_string(o.concurrency);
      } else if (w.slo_ttft > 0 && lp.ttft > w.slo_ttft) {
        perf.reason = InfeasibleReason::SloViolated;
        perf.detail = "ttft " + fmt_g(lp.ttft / kMs) + " ms > slo " +
                      fmt_g(w.slo_ttft / kMs) + " ms";
      } else if (w.slo_tpot > 0 && lp.tpot > w.slo_tpot) {
        perf.reason = InfeasibleReason::SloViolated;
        perf.detail = "tpot " + fmt_g(lp.tpot / kMs) + " ms > slo " +
                      fmt_g(w.slo_tpot / kMs) + " ms";
      } else {
        perf.feasible = true;
      }
    } else {
      perf = evaluate(cfg, ctx, &det);
    }

    std::cout << eval_json(cfg, perf, det) << "\n";

    if (!o.common.out_dir.empty() && (o.dump_traffic || o.dump_flows)) {
      fs::create_directories(o.common.out_dir);
      const fs::path dir = o.common.out_dir;
      if (o.dump_flows) write_file(dir / "flows.jsonl", flows_jsonl(det));
      if (o.dump_traffic) {
        if (is_afd(cfg.mode)) {
          i64 step = std::max<i64>(1, perf.concurrency);
          write_file(dir / "traffic_a2f.csv",
                     traffic_csv(build_a2f(step, ctx.model, cfg.attn_gpus,
                                           cfg.ffn_gpus, ctx.transport)));
          write_file(dir / "traffic_f2a.csv",
                     traffic_csv(build_f2a(step, ctx.model, cfg.attn_gpus,
                                           cfg.ffn_gpus, ctx.transport)));
        } else {
          std::cerr << "traffic dump skipped: " << to_string(cfg.mode)
                    << " has no attention/FFN traffic\n";
        }
      }
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int run_breakdown_cmd(const BreakdownOpts& o) {
  try {
    Loaded l = load_with_costs(o.common);
    std::cout << breakdown_text(l.scenario, l.ctx, o.common.seed);
    if (!o.common.out_dir.empty()) {
      fs::create_directories(o.common.out_dir);
      const BreakdownSweep sweep = breakdown_sweep(l.ctx);
      write_file(fs::path(o.common.out_dir) / "breakdown.csv", breakdown_csv(sweep));
      write_file(fs::path(o.common.out_dir) / "breakdown.svg",
                 breakdown_svg_doc(sweep));
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

int run_placement_cmd(const PlacementOpts& o) {
  try {
    Loaded l = load_with_costs(o.common);
    const EvalContext& ctx = l.ctx;
    DeploymentConfig cfg = to_config(o.config, ctx.model);
    if (!is_disagg(cfg.mode))
      return fail("placement-study needs a disagg mode (KV moves between workers)");

    Verdict v = validate_config(cfg, ctx.model, ctx.cluster,
                                ctx.engine_knobs.allow_uneven_experts);
    if (!v.ok()) return fail_verdict(v);

    Topology topo = ctx.topology();
    WorkerLayout seg = place(cfg, topo, PlacePolicy::Segregated);
    WorkerLayout pair = place(cfg, topo, PlacePolicy::Paired);

    std::string csv = "kv_bytes,segregated_s,paired_s,ratio\n";
    SvgSeries s_seg{"segregated", "#dc2626", true, {}};
    SvgSeries s_pair{"paired", "#2563eb", true, {}};
    for (double gb = 0.5; gb <= 4.0; gb += 0.5) {
      Flow flow;
      flow.bytes = gb * 1e9;
      double ts = kv_transfer_time(seg, flow, topo);
      double tp = kv_transfer_time(pair, flow, topo);
      csv += fmt_g(flow.bytes) + "," + fmt_g(ts) + "," + fmt_g(tp) + "," +
             fmt_g(tp > 0 ? ts / tp : 0.0) + "\n";
      s_seg.points.emplace_back(flow.bytes, ts);
      s_pair.points.emplace_back(flow.bytes, tp);
    }

    std::cout << csv;
    if (!o.common.out_dir.empty()) {
      fs::create_directories(o.common.out_dir);
      const fs::path dir = o.common.out_dir;
      write_file(dir / "kv_latency.csv", csv);
      SvgPlot plot;
      plot.title = "KV transfer time vs payload (" + layout_string(cfg) + ")";
      plot.x_label = "kv bytes per request";
      plot.y_label = "transfer seconds";
      plot.x_log = true;
      plot.y_log = true;
      plot.series = {s_seg, s_pair};
      write_file(dir / "kv_latency.svg", render_svg(plot));
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

}  // namespace afdx
