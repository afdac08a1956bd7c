#include <string>

#include "CLI11.hpp"
#include "afdx/commands.hpp"

namespace {

void add_common(CLI::App* app, afdx::CommonOpts& o) {
  app->add_option("--scenario", o.scenario_path, "scenario JSON file")->required();
  app->add_option("--out", o.out_dir, "directory for artifacts");
  app->add_option("--cost-source", o.cost_source, "analytical|table|hybrid")
      ->capture_default_str();
  app->add_option("--calibration-table", o.calibration_path,
                  "measured op times CSV (table/hybrid sources)");
  app->add_option("--seed", o.seed, "seed for sampled routing checks")
      ->capture_default_str();
  app->add_flag("--count-input-tokens", o.count_input_tokens,
                "count prefill tokens in the system rate");
}

void add_config(CLI::App* app, afdx::ConfigOpts& c) {
  app->add_option("--mode", c.mode, "agg_chunked|agg_afd|disagg_pd|disagg_afd")
      ->required();
  app->add_option("--replicas", c.replicas, "replica count")->capture_default_str();
  app->add_option("--worker-gpus", c.worker_gpus,
                  "GPUs per unified worker (agg_chunked; default tp)");
  app->add_option("--attn-gpus", c.attn_gpus, "attention GPUs per worker (AFD)");
  app->add_option("--ffn-gpus", c.ffn_gpus, "FFN GPUs per worker (AFD)");
  app->add_option("--prefill-workers", c.prefill_workers, "prefill workers per replica");
  app->add_option("--decode-workers", c.decode_workers, "decode workers per replica");
  app->add_option("--prefill-gpus", c.prefill_gpus, "GPUs per prefill worker");
  app->add_option("--decode-gpus", c.decode_gpus, "GPUs per decode worker");
  app->add_option("--tp", c.tp, "tensor parallel degree")->capture_default_str();
  app->add_option("--microbatches", c.microbatches, "pipeline depth (AFD: 1, 3 or 4)")
      ->capture_default_str();
  app->add_option("--chunk", c.chunk_size, "prefill chunk tokens (agg_chunked; default 2048)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"design-space exploration for disaggregated MoE serving"};
  app.require_subcommand(1);

  afdx::SearchOpts so;
  CLI::App* search = app.add_subcommand(
      "search", "enumerate deployments and report the Pareto frontier");
  add_common(search, so.common);
  search->add_option("--modes", so.modes, "serving modes to keep")->delimiter(',');
  search->add_option("--replica-min", so.replica_min, "min GPUs per replica");
  search->add_option("--replica-max", so.replica_max, "max GPUs per replica");
  search->add_option("--tp-set", so.tp_set, "tensor parallel candidates")->delimiter(',');
  search->add_option("--top", so.top, "frontier rows shown in the summary")
      ->capture_default_str();

  afdx::EvalOpts eo;
  CLI::App* eval = app.add_subcommand("eval", "evaluate one deployment");
  add_common(eval, eo.common);
  add_config(eval, eo.config);
  eval->add_option("--concurrency", eo.concurrency,
                   "evaluate at this concurrency instead of searching the max");
  eval->add_flag("--dump-traffic", eo.dump_traffic, "write dispatch/combine matrices");
  eval->add_flag("--dump-flows", eo.dump_flows, "write the simulated flow log");

  afdx::BreakdownOpts bo;
  CLI::App* breakdown = app.add_subcommand(
      "breakdown", "cost, memory and traffic anatomy of a scenario");
  add_common(breakdown, bo.common);

  afdx::PlacementOpts po;
  CLI::App* placement = app.add_subcommand(
      "placement-study", "KV handoff latency under segregated vs paired placement");
  add_common(placement, po.common);
  add_config(placement, po.config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : afdx::kExitBadInput;
  }

  if (search->parsed()) return afdx::run_search_cmd(so);
  if (eval->parsed()) return afdx::run_eval_cmd(eo);
  if (breakdown->parsed()) return afdx::run_breakdown_cmd(bo);
  if (placement->parsed()) return afdx::run_placement_cmd(po);
  return afdx::kExitBadInput;
}
