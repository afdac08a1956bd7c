#include "doctest.h"

#include <string>

#include "afdx/scenario.hpp"

using namespace afdx;
using doctest::Contains;

namespace {

// smallest scenario that passes validation, used as the error-path baseline
std::string minimal_json() {
  return R"({
    "model": {
      "name": "m", "layers": 4, "hidden_dim": 1024, "q_heads": 16, "kv_heads": 4,
      "head_dim": 64, "attention": { "kind": "gqa" },
      "num_experts": 8, "top_k": 2, "expert_ffn_dim": 2048
    },
    "workload": { "isl": 512, "osl": 128 },
    "cluster": {
      "gpu": { "peak_tflops": 100, "hbm_capacity_gib": 40, "hbm_bandwidth_gbs": 1000 },
      "num_gpus": 8, "scaleup_domain_size": 8, "scaleup_bw_gbs": 400
    }
  })";
}

}  // namespace

TEST_CASE("parse fills defaults and converts units") {
  const Scenario s = parse_scenario(minimal_json());

  CHECK(s.model.param_bytes_per_elem == 1.0);
  CHECK(s.model.kv_bytes_per_elem == 2.0);
  CHECK(s.model.shared_expert_dim == 0);
  CHECK(s.model.attention.variant == AttentionVariant::GQA);

  CHECK(s.workload.prefix == 0);
  CHECK(s.workload.slo_ttft == 0.0);
  CHECK(s.workload.slo_tpot == 0.0);

  CHECK(s.cluster.gpu.peak_flops == 100e12);
  CHECK(s.cluster.gpu.hbm_capacity == 40.0 * 1024 * 1024 * 1024);
  CHECK(s.cluster.gpu.hbm_bandwidth == 1000e9);
  CHECK(s.cluster.scaleup_bw == 400e9);
  CHECK(s.cluster.scaleout_bw == 0.0);
  CHECK(s.cluster.scaleup_duplex == Duplex::Full);

  CHECK(s.transport == Transport::Sparse);
  CHECK(s.cost_knobs.eta_compute == 0.7);
  CHECK(s.cost_knobs.eta_memory == 0.8);
  CHECK(s.cost_knobs.kernel_overhead == 5e-6);
  CHECK(s.net_knobs.latency_floor == 2e-6);
  CHECK(s.engine_knobs.prefix_cache_hit == 1.0);
  CHECK(!s.engine_knobs.count_input_tokens);

  CHECK(s.search.chunk_sizes == std::vector<i64>{2048});
  CHECK(s.search.modes.size() == 4);
}

TEST_CASE("workload and knob units are human scale") {
  std::string j = minimal_json();
  j.replace(j.find("\"isl\": 512, \"osl\": 128"), 22,
            "\"isl\": 512, \"osl\": 128, \"slo_ttft_ms\": 250, \"slo_tpot_ms\": 12.5");
  j.insert(j.rfind('}'), R"(,
    "search": {
      "modes": ["agg_afd"], "tp_set": [1, 2], "max_concurrency": 1234,
      "transport": "dense", "allow_uneven_experts": true,
      "knobs": {
        "eta_compute": 0.5, "kernel_overhead_us": 10, "latency_floor_us": 3,
        "runtime_overhead_gib": 2, "worst_case_kv_residency": true,
        "count_input_tokens": true, "prefix_cache_hit": 0.75
      }
    })");

  const Scenario s = parse_scenario(j);
  CHECK(s.workload.slo_ttft == 0.25);
  CHECK(s.workload.slo_tpot == 0.0125);
  CHECK(s.search.modes == std::vector<ServingMode>{ServingMode::AggAFD});
  CHECK(s.search.tp_set == std::vector<int>{1, 2});
  CHECK(s.engine_knobs.max_concurrency == 1234);
  CHECK(s.transport == Transport::Dense);
  CHECK(s.search.allow_uneven_experts);
  CHECK(s.engine_knobs.allow_uneven_experts);  // mirrored for evaluate()
  CHECK(s.cost_knobs.eta_compute == 0.5);
  CHECK(s.cost_knobs.kernel_overhead == doctest::Approx(10e-6).epsilon(1e-12));
  CHECK(s.net_knobs.latency_floor == doctest::Approx(3e-6).epsilon(1e-12));
  CHECK(s.mem_knobs.runtime_overhead == 2.0 * 1024 * 1024 * 1024);
  CHECK(s.mem_knobs.worst_case_kv_residency);
  CHECK(s.engine_knobs.count_input_tokens);
  CHECK(s.engine_knobs.prefix_cache_hit == 0.75);
}

TEST_CASE("serving mode names round trip") {
  CHECK(parse_serving_mode("agg_chunked") == ServingMode::AggChunked);
  CHECK(parse_serving_mode("agg_afd") == ServingMode::AggAFD);
  CHECK(parse_serving_mode("disagg_pd") == ServingMode::DisaggPD);
  CHECK(parse_serving_mode("disagg_afd") == ServingMode::DisaggAFD);
  CHECK_THROWS_WITH_AS(parse_serving_mode("afd"), Contains("unknown serving mode"),
                       ScenarioError);
}

TEST_CASE("every bundled scenario round trips through emit") {
  for (const char* name :
       {"qwen3_chat.json", "gptoss_chat.json", "nemotron_agentic.json",
        "deepseek_coding.json", "longprefix_flip_desk.json", "placement_study.json",
        "ratematch_mla_desk.json", "ratematch_mamba_desk.json"}) {
    CAPTURE(name);
    const Scenario s = load_scenario(std::string(SCENARIO_DIR) + "/" + name);
    const std::string once = emit_scenario(s);
    const Scenario back = parse_scenario(once);
    CHECK(emit_scenario(back) == once);
    CHECK(back.model.layers == s.model.layers);
    CHECK(back.model.attention.variant == s.model.attention.variant);
    CHECK(back.workload.slo_tpot == s.workload.slo_tpot);
    CHECK(back.cluster.gpu.hbm_bandwidth == s.cluster.gpu.hbm_bandwidth);
    CHECK(back.cluster.num_gpus == s.cluster.num_gpus);
    CHECK(back.search.modes == s.search.modes);
    CHECK(back.search.tp_set == s.search.tp_set);
    CHECK(back.engine_knobs.prefix_cache_hit == s.engine_knobs.prefix_cache_hit);
  }
}

TEST_CASE("strictness: unknown keys are rejected, note is not") {
  std::string j = minimal_json();
  j.insert(j.rfind('}'), R"(, "note": "top", "search": { "note": "inner" })");
  CHECK_NOTHROW(parse_scenario(j));

  std::string bad_top = minimal_json();
  bad_top.insert(bad_top.rfind('}'), R"(, "models": {})");
  CHECK_THROWS_WITH_AS(parse_scenario(bad_top),
                       Contains("unknown key 'models' in scenario"), ScenarioError);

  std::string bad_model = minimal_json();
  bad_model.replace(bad_model.find("\"name\": \"m\""), 11, "\"nam\": \"m\"");
  CHECK_THROWS_WITH_AS(parse_scenario(bad_model), Contains("unknown key 'nam' in model"),
                       ScenarioError);

  std::string bad_attn = minimal_json();
  bad_attn.replace(bad_attn.find("\"kind\": \"gqa\""), 13,
                   "\"kind\": \"gqa\", \"widow\": 4");
  CHECK_THROWS_WITH_AS(parse_scenario(bad_attn),
                       Contains("unknown key 'widow' in model.attention"), ScenarioError);
}

TEST_CASE("missing and malformed fields carry their location") {
  std::string no_layers = minimal_json();
  no_layers.replace(no_layers.find("\"layers\": 4,"), 12, "");
  CHECK_THROWS_WITH_AS(parse_scenario(no_layers),
                       Contains("model is missing required key 'layers'"), ScenarioError);

  std::string no_osl = minimal_json();
  no_osl.replace(no_osl.find(", \"osl\": 128"), 12, "");
  CHECK_THROWS_WITH_AS(parse_scenario(no_osl),
                       Contains("workload is missing required key 'osl'"), ScenarioError);

  CHECK_THROWS_WITH_AS(parse_scenario("{ nope"), Contains("scenario is not valid JSON"),
                       ScenarioError);

  std::string wrong_type = minimal_json();
  wrong_type.replace(wrong_type.find("\"layers\": 4"), 11, "\"layers\": \"four\"");
  CHECK_THROWS_WITH_AS(parse_scenario(wrong_type),
                       Contains("scenario field has wrong type"), ScenarioError);

  std::string bad_kind = minimal_json();
  bad_kind.replace(bad_kind.find("\"kind\": \"gqa\""), 13, "\"kind\": \"flash\"");
  CHECK_THROWS_WITH_AS(parse_scenario(bad_kind), Contains("unknown attention kind 'flash'"),
                       ScenarioError);

  std::string bad_duplex = minimal_json();
  bad_duplex.replace(bad_duplex.find("\"scaleup_bw_gbs\": 400"), 21,
                     "\"scaleup_bw_gbs\": 400, \"scaleup_duplex\": \"both\"");
  CHECK_THROWS_WITH_AS(parse_scenario(bad_duplex), Contains("unknown duplex 'both'"),
                       ScenarioError);
}

TEST_CASE("semantic validation runs inside parse") {
  std::string bad = minimal_json();
  bad.replace(bad.find("\"top_k\": 2"), 10, "\"top_k\": 99");
  try {
    parse_scenario(bad);
    FAIL("expected ScenarioError");
  } catch (const ScenarioError& e) {
    const std::string what = e.what();
    CHECK(what.find("scenario invalid:") != std::string::npos);
    CHECK(what.find("\n  - ") != std::string::npos);
    CHECK(what.find("top_k") != std::string::npos);
  }

  CHECK_THROWS_WITH_AS(load_scenario("/nonexistent/x.json"),
                       Contains("cannot open scenario file"), ScenarioError);
}
