#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <vector>

#include "afdx/report.hpp"
#include "afdx/scenario.hpp"
#include "json.hpp"

using namespace afdx;
using nlohmann::json;

namespace {

Scenario mla_desk() {
  return load_scenario(std::string(SCENARIO_DIR) + "/ratematch_mla_desk.json");
}

DeploymentConfig afd_cfg() {
  DeploymentConfig cfg;
  cfg.mode = ServingMode::AggAFD;
  cfg.attn_gpus = 4;
  cfg.ffn_gpus = 4;
  cfg.tp = 2;
  cfg.dp = 2;
  cfg.ep = 4;
  cfg.microbatches = 4;
  return cfg;
}

}  // namespace

TEST_CASE("fmt_g prints round-trippable shortest decimals") {
  CHECK(fmt_g(0.5) == "0.5");
  CHECK(fmt_g(1346.5) == "1346.5");
  CHECK(fmt_g(18.0) == "18");
  CHECK(fmt_g(1e-06) == "1e-06");
  for (double v : {0.1, 3.25e-5, 123456.0, 7.0 / 8.0}) {
    CHECK(std::strtod(fmt_g(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("layout strings are stable tokens") {
  DeploymentConfig agg;
  agg.mode = ServingMode::AggChunked;
  agg.replicas = 2;
  agg.tp = 2;
  agg.dp = 4;
  agg.chunk_size = 2048;
  CHECK(layout_string(agg) == "2x8gpu tp2 chunk2048");

  CHECK(layout_string(afd_cfg()) == "1x8gpu A4F4 tp2 M4");

  DeploymentConfig pd;
  pd.mode = ServingMode::DisaggPD;
  pd.prefill_workers = 2;
  pd.prefill_gpus = 4;
  pd.decode_workers = 2;
  pd.decode_gpus = 4;
  pd.tp = 2;
  pd.dp = 2;
  CHECK(layout_string(pd) == "1x[2Px4+2Dx4] tp2");

  DeploymentConfig dafd;
  dafd.mode = ServingMode::DisaggAFD;
  dafd.prefill_workers = 1;
  dafd.prefill_gpus = 8;
  dafd.decode_workers = 1;
  dafd.decode_gpus = 8;
  dafd.attn_gpus = 4;
  dafd.ffn_gpus = 4;
  dafd.tp = 1;
  dafd.dp = 4;
  dafd.ep = 4;
  dafd.microbatches = 4;
  CHECK(layout_string(dafd) == "1x[1Px8+1Dx8] A4F4 tp1 M4");
}

TEST_CASE("frontier csv lists exactly the frontier rows") {
  SearchOutcome o;
  SearchRow a;
  a.cfg = afd_cfg();
  a.perf.feasible = true;
  a.perf.concurrency = 32;
  a.perf.ttft = 0.125;          // 125 ms
  a.perf.tpot = 0.01;           // 10 ms
  a.perf.per_user_rate = 100.0;
  a.perf.system_rate = 3200.0;
  SearchRow b = a;
  b.perf.system_rate = 1.0;  // not on the frontier
  o.rows = {b, a};
  o.frontier = {1};

  const std::string csv = frontier_csv(o);
  CHECK(csv ==
        "mode,layout,attn_gpus,ffn_gpus,tp,ep,microbatches,concurrency,"
        "ttft_ms,tpot_ms,tokens_s_user,system_tokens_s\n"
        "agg_afd,1x8gpu A4F4 tp2 M4,4,4,2,4,4,32,125,10,100,3200\n");
}

TEST_CASE("traffic csv carries row, column and grand totals") {
  TrafficMatrix t;
  t.senders = 2;
  t.receivers = 3;
  t.payload = {1, 2, 3, 10, 20, 30};
  CHECK(traffic_csv(t) ==
        "sender,recv0,recv1,recv2,row_sum\n"
        "0,1,2,3,6\n"
        "1,10,20,30,60\n"
        "col_sum,11,22,33,66\n");
}

TEST_CASE("eval json is machine readable and complete") {
  const Scenario s = mla_desk();
  const EvalContext ctx = context_for(s);
  DeploymentConfig cfg;
  cfg.mode = ServingMode::DisaggPD;
  cfg.prefill_workers = 1;
  cfg.prefill_gpus = 8;
  cfg.decode_workers = 1;
  cfg.decode_gpus = 8;
  cfg.tp = 1;
  cfg.dp = 8;

  EvalDetail det;
  const PerfEstimate perf = evaluate(cfg, ctx, &det);
  const json j = json::parse(eval_json(cfg, perf, det));

  CHECK(j["cfg"]["mode"] == "disagg_pd");
  CHECK(j["perf"]["feasible"].is_boolean());
  CHECK(j["footprints"].size() == det.footprints.size());
  CHECK(j["layout"].size() == det.layout.workers.size());
  CHECK(j["layout"][0].contains("node"));
  CHECK(j["prefill_ms"].get<double>() == det.prefill_s / 1e-3);
  CHECK(j.contains("kv_transfer_ms"));  // disagg always moves kv

  const std::string lines = flows_jsonl(det);
  CHECK(!lines.empty());
  size_t start = 0, n_lines = 0;
  while (start < lines.size()) {
    const size_t end = lines.find('\n', start);
    const json fl = json::parse(lines.substr(start, end - start));
    CHECK(fl.contains("label"));
    CHECK(fl.contains("seconds"));
    ++n_lines;
    start = end + 1;
  }
  CHECK(n_lines == det.flow_log.size());
}

TEST_CASE("search summary json reports counts and best picks") {
  const Scenario s = mla_desk();
  const EvalContext ctx = context_for(s);
  const SearchOutcome o = run_search(s.search, ctx);
  const json j = json::parse(search_summary_json(s, o));

  CHECK(j["enumerated"].get<i64>() == o.enumerated);
  CHECK(j["truncated"] == o.truncated);
  i64 feas = 0;
  for (const auto& r : o.rows)
    if (r.perf.feasible) ++feas;
  CHECK(j["feasible"].get<i64>() == feas);
  REQUIRE(feas > 0);
  CHECK(j["best_throughput"]["layout"].is_string());
  CHECK(j["best_interactivity"]["perf"]["feasible"] == true);

  double best_sys = 0, best_user = 0;
  for (const auto& r : o.rows)
    if (r.perf.feasible) {
      best_sys = std::max(best_sys, r.perf.system_rate);
      best_user = std::max(best_user, r.perf.per_user_rate);
    }
  CHECK(j["best_throughput"]["perf"]["system_tokens_s"].get<double>() == best_sys);
  CHECK(j["best_interactivity"]["perf"]["tokens_s_user"].get<double>() == best_user);

  const std::string jsonl = all_points_jsonl(o);
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == i64(o.rows.size()));

  const std::string svg = frontier_svg_doc(o);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("pareto") != std::string::npos);
  CHECK(svg.find("system tokens/s") != std::string::npos);
}

TEST_CASE("breakdown sweep doubles context up to the horizon") {
  const Scenario s = mla_desk();  // prefix 2048 + isl 4096 + osl 1024 = 7168
  const EvalContext ctx = context_for(s);
  const BreakdownSweep sw = breakdown_sweep(ctx);
  CHECK(sw.contexts == std::vector<i64>{1024, 2048, 4096, 7168});
  for (size_t i = 0; i < sw.contexts.size(); ++i) {
    CHECK(sw.attn_time_share[i] + sw.ffn_time_share[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sw.weight_mem_share[i] + sw.kv_mem_share[i] + sw.act_mem_share[i] ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  const std::string csv = breakdown_csv(sw);
  CHECK(csv.rfind("context,attn_time_share,ffn_time_share,weight_mem_share,"
                  "kv_mem_share,activation_mem_share\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == i64(sw.contexts.size()) + 1);

  const std::string svg = breakdown_svg_doc(sw);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("attn time") != std::string::npos);
  CHECK(svg.find("context tokens") != std::string::npos);
}

TEST_CASE("breakdown text names the rate-matched split") {
  const Scenario s = mla_desk();
  const EvalContext ctx = context_for(s);
  const std::string text = breakdown_text(s, ctx, 0);
  CHECK(text.find("rate-matched split") != std::string::npos);
  CHECK(text.find("weights: total=") != std::string::npos);
  CHECK(text.find(s.model.name) != std::string::npos);
}
