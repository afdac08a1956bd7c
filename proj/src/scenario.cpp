#include "afdx/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace afdx {

namespace {

using json = nlohmann::ordered_json;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ScenarioError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key == "note") continue;
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw ScenarioError("unknown key '" + key + "' in " + where);
  }
}

const json& require(const json& j, const std::string& where, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(where + " is missing required key '" + key + "'");
  return *it;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return it->get<T>();
}

AttentionVariant parse_variant(const std::string& s) {
  if (s == "mha") return AttentionVariant::MHA;
  if (s == "gqa") return AttentionVariant::GQA;
  if (s == "swa_gqa") return AttentionVariant::SlidingWindowGQA;
  if (s == "mla") return AttentionVariant::MLA;
  if (s == "sparse_topk") return AttentionVariant::SparseTopK;
  if (s == "mamba_hybrid") return AttentionVariant::MambaHybrid;
  throw ScenarioError("unknown attention kind '" + s + "'");
}

SparseBase parse_base(const std::string& s) {
  if (s == "mla") return SparseBase::MLA;
  if (s == "gqa") return SparseBase::GQA;
  throw ScenarioError("unknown sparse base '" + s + "'");
}

Duplex parse_duplex(const std::string& s) {
  if (s == "full") return Duplex::Full;
  if (s == "half") return Duplex::Half;
  throw ScenarioError("unknown duplex '" + s + "' (want full|half)");
}

ServingMode parse_mode(const std::string& s) { return parse_serving_mode(s); }

Transport parse_transport(const std::string& s) {
  if (s == "sparse") return Transport::Sparse;
  if (s == "dense") return Transport::Dense;
  throw ScenarioError("unknown transport '" + s + "' (want sparse|dense)");
}

const char* transport_name(Transport t) {
  return t == Transport::Sparse ? "sparse" : "dense";
}

ModelArch parse_model(const json& j) {
  check_keys(j, "model",
             {"name", "layers", "hidden_dim", "q_heads", "kv_heads", "head_dim",
              "attention", "num_experts", "top_k", "expert_ffn_dim",
              "shared_expert_dim", "param_bytes_per_elem", "kv_bytes_per_elem"});
  ModelArch m;
  m.name = get_or<std::string>(j, "name", "");
  m.layers = require(j, "model", "layers").get<i64>();
  m.hidden_dim = require(j, "model", "hidden_dim").get<i64>();
  m.q_heads = require(j, "model", "q_heads").get<i64>();
  m.kv_heads = require(j, "model", "kv_heads").get<i64>();
  m.head_dim = require(j, "model", "head_dim").get<i64>();
  m.num_experts = require(j, "model", "num_experts").get<i64>();
  m.top_k = require(j, "model", "top_k").get<i64>();
  m.expert_ffn_dim = require(j, "model", "expert_ffn_dim").get<i64>();
  m.shared_expert_dim = get_or<i64>(j, "shared_expert_dim", 0);
  m.param_bytes_per_elem = get_or<double>(j, "param_bytes_per_elem", 1.0);
  m.kv_bytes_per_elem = get_or<double>(j, "kv_bytes_per_elem", 2.0);

  const json& a = require(j, "model", "attention");
  check_keys(a, "model.attention",
             {"kind", "window", "latent_dim", "selected", "base", "state_dim",
              "gqa_every"});
  m.attention.variant = parse_variant(require(a, "model.attention", "kind").get<std::string>());
  m.attention.window = get_or<i64>(a, "window", 0);
  m.attention.latent_dim = get_or<i64>(a, "latent_dim", 0);
  m.attention.selected = get_or<i64>(a, "selected", 0);
  m.attention.state_dim = get_or<i64>(a, "state_dim", 0);
  m.attention.gqa_every = get_or<i64>(a, "gqa_every", 0);
  if (a.contains("base")) m.attention.base = parse_base(a["base"].get<std::string>());
  return m;
}

Workload parse_workload(const json& j) {
  check_keys(j, "workload",
             {"name", "prefix", "isl", "osl", "slo_ttft_ms", "slo_tpot_ms"});
  Workload w;
  w.name = get_or<std::string>(j, "name", "");
  w.prefix = get_or<i64>(j, "prefix", 0);
  w.isl = require(j, "workload", "isl").get<i64>();
  w.osl = require(j, "workload", "osl").get<i64>();
  w.slo_ttft = get_or<double>(j, "slo_ttft_ms", 0.0) * kMs;
  w.slo_tpot = get_or<double>(j, "slo_tpot_ms", 0.0) * kMs;
  return w;
}

ClusterSpec parse_cluster(const json& j) {
  check_keys(j, "cluster",
             {"gpu", "num_gpus", "scaleup_domain_size", "scaleup_bw_gbs",
              "scaleout_bw_gbs", "scaleup_duplex", "scaleout_duplex"});
  ClusterSpec c;
  const json& g = require(j, "cluster", "gpu");
  check_keys(g, "cluster.gpu",
             {"name", "peak_tflops", "hbm_capacity_gib", "hbm_bandwidth_gbs"});
  c.gpu.name = get_or<std::string>(g, "name", "");
  c.gpu.peak_flops = require(g, "cluster.gpu", "peak_tflops").get<double>() * kTFlops;
  c.gpu.hbm_capacity = require(g, "cluster.gpu", "hbm_capacity_gib").get<double>() * kGiB;
  c.gpu.hbm_bandwidth = require(g, "cluster.gpu", "hbm_bandwidth_gbs").get<double>() * kGB;
  c.num_gpus = require(j, "cluster", "num_gpus").get<int>();
  c.scaleup_domain_size = require(j, "cluster", "scaleup_domain_size").get<int>();
  c.scaleup_bw = require(j, "cluster", "scaleup_bw_gbs").get<double>() * kGB;
  c.scaleout_bw = get_or<double>(j, "scaleout_bw_gbs", 0.0) * kGB;
  c.scaleup_duplex = parse_duplex(get_or<std::string>(j, "scaleup_duplex", "full"));
  c.scaleout_duplex = parse_duplex(get_or<std::string>(j, "scaleout_duplex", "full"));
  return c;
}

void parse_search(const json& j, Scenario& s) {
  check_keys(j, "search",
             {"modes", "replica_min", "replica_max", "tp_set", "microbatch_set",
              "chunk_sizes", "max_configs", "allow_uneven_experts",
              "rate_match_batch", "pd_ref_concurrency", "transport",
              "max_concurrency", "knobs"});
  SearchSpace& sp = s.search;
  if (j.contains("modes")) {
    sp.modes.clear();
    for (const auto& e : j["modes"]) sp.modes.push_back(parse_mode(e.get<std::string>()));
  }
  sp.replica_min = get_or<int>(j, "replica_min", sp.replica_min);
  sp.replica_max = get_or<int>(j, "replica_max", sp.replica_max);
  if (j.contains("tp_set")) sp.tp_set = j["tp_set"].get<std::vector<int>>();
  if (j.contains("microbatch_set"))
    sp.microbatch_set = j["microbatch_set"].get<std::vector<int>>();
  if (j.contains("chunk_sizes")) sp.chunk_sizes = j["chunk_sizes"].get<std::vector<i64>>();
  sp.max_configs = get_or<i64>(j, "max_configs", sp.max_configs);
  sp.allow_uneven_experts = get_or<bool>(j, "allow_uneven_experts", false);
  sp.rate_match_batch = get_or<i64>(j, "rate_match_batch", sp.rate_match_batch);
  sp.pd_ref_concurrency = get_or<i64>(j, "pd_ref_concurrency", sp.pd_ref_concurrency);
  if (j.contains("transport"))
    s.transport = parse_transport(j["transport"].get<std::string>());
  s.engine_knobs.max_concurrency =
      get_or<i64>(j, "max_concurrency", s.engine_knobs.max_concurrency);

  if (j.contains("knobs")) {
    const json& k = j["knobs"];
    check_keys(k, "search.knobs",
               {"eta_compute", "eta_memory", "kernel_overhead_us", "latency_floor_us",
                "runtime_overhead_gib", "worst_case_kv_residency",
                "count_input_tokens", "prefix_cache_hit"});
    s.cost_knobs.eta_compute = get_or<double>(k, "eta_compute", s.cost_knobs.eta_compute);
    s.cost_knobs.eta_memory = get_or<double>(k, "eta_memory", s.cost_knobs.eta_memory);
    s.cost_knobs.kernel_overhead =
        get_or<double>(k, "kernel_overhead_us", s.cost_knobs.kernel_overhead / kUs) * kUs;
    s.net_knobs.latency_floor =
        get_or<double>(k, "latency_floor_us", s.net_knobs.latency_floor / kUs) * kUs;
    s.mem_knobs.runtime_overhead =
        get_or<double>(k, "runtime_overhead_gib", s.mem_knobs.runtime_overhead / kGiB) * kGiB;
    s.mem_knobs.worst_case_kv_residency =
        get_or<bool>(k, "worst_case_kv_residency", s.mem_knobs.worst_case_kv_residency);
    s.engine_knobs.count_input_tokens =
        get_or<bool>(k, "count_input_tokens", s.engine_knobs.count_input_tokens);
    s.engine_knobs.prefix_cache_hit =
        get_or<double>(k, "prefix_cache_hit", s.engine_knobs.prefix_cache_hit);
  }
  s.engine_knobs.allow_uneven_experts = sp.allow_uneven_experts;
}

}  // namespace

ServingMode parse_serving_mode(const std::string& s) {
  if (s == "agg_chunked") return ServingMode::AggChunked;
  if (s == "agg_afd") return ServingMode::AggAFD;
  if (s == "disagg_pd") return ServingMode::DisaggPD;
  if (s == "disagg_afd") return ServingMode::DisaggAFD;
  throw ScenarioError("unknown serving mode '" + s + "'");
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    check_keys(j, "scenario", {"model", "workload", "cluster", "search"});
    Scenario s;
    s.model = parse_model(require(j, "scenario", "model"));
    s.workload = parse_workload(require(j, "scenario", "workload"));
    s.cluster = parse_cluster(require(j, "scenario", "cluster"));
    if (j.contains("search")) parse_search(j["search"], s);

    const Verdict v = validate_scenario(s.model, s.workload, s.cluster);
    if (!v.ok()) {
      std::string msg = "scenario invalid:";
      for (const auto& s2 : v.violations) msg += "\n  - " + s2;
      throw ScenarioError(msg);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("scenario field has wrong type: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string emit_scenario(const Scenario& s) {
  json j;
  json m;
  if (!s.model.name.empty()) m["name"] = s.model.name;
  m["layers"] = s.model.layers;
  m["hidden_dim"] = s.model.hidden_dim;
  m["q_heads"] = s.model.q_heads;
  m["kv_heads"] = s.model.kv_heads;
  m["head_dim"] = s.model.head_dim;
  json a;
  a["kind"] = to_string(s.model.attention.variant);
  if (s.model.attention.window) a["window"] = s.model.attention.window;
  if (s.model.attention.latent_dim) a["latent_dim"] = s.model.attention.latent_dim;
  if (s.model.attention.selected) a["selected"] = s.model.attention.selected;
  if (s.model.attention.variant == AttentionVariant::SparseTopK)
    a["base"] = s.model.attention.base == SparseBase::MLA ? "mla" : "gqa";
  if (s.model.attention.state_dim) a["state_dim"] = s.model.attention.state_dim;
  if (s.model.attention.gqa_every) a["gqa_every"] = s.model.attention.gqa_every;
  m["attention"] = a;
  m["num_experts"] = s.model.num_experts;
  m["top_k"] = s.model.top_k;
  m["expert_ffn_dim"] = s.model.expert_ffn_dim;
  m["shared_expert_dim"] = s.model.shared_expert_dim;
  m["param_bytes_per_elem"] = s.model.param_bytes_per_elem;
  m["kv_bytes_per_elem"] = s.model.kv_bytes_per_elem;
  j["model"] = m;

  json w;
  if (!s.workload.name.empty()) w["name"] = s.workload.name;
  w["prefix"] = s.workload.prefix;
  w["isl"] = s.workload.isl;
  w["osl"] = s.workload.osl;
  w["slo_ttft_ms"] = s.workload.slo_ttft / kMs;
  w["slo_tpot_ms"] = s.workload.slo_tpot / kMs;
  j["workload"] = w;

  json c;
  json g;
  if (!s.cluster.gpu.name.empty()) g["name"] = s.cluster.gpu.name;
  g["peak_tflops"] = s.cluster.gpu.peak_flops / kTFlops;
  g["hbm_capacity_gib"] = s.cluster.gpu.hbm_capacity / kGiB;
  g["hbm_bandwidth_gbs"] = s.cluster.gpu.hbm_bandwidth / kGB;
  c["gpu"] = g;
  c["num_gpus"] = s.cluster.num_gpus;
  c["scaleup_domain_size"] = s.cluster.scaleup_domain_size;
  c["scaleup_bw_gbs"] = s.cluster.scaleup_bw / kGB;
  c["scaleout_bw_gbs"] = s.cluster.scaleout_bw / kGB;
  c["scaleup_duplex"] = to_string(s.cluster.scaleup_duplex);
  c["scaleout_duplex"] = to_string(s.cluster.scaleout_duplex);
  j["cluster"] = c;

  json sp;
  json modes = json::array();
  for (ServingMode mode : s.search.modes) modes.push_back(to_string(mode));
  sp["modes"] = modes;
  sp["replica_min"] = s.search.replica_min;
  sp["replica_max"] = s.search.replica_max;
  sp["tp_set"] = s.search.tp_set;
  sp["microbatch_set"] = s.search.microbatch_set;
  sp["chunk_sizes"] = s.search.chunk_sizes;
  sp["max_configs"] = s.search.max_configs;
  sp["allow_uneven_experts"] = s.search.allow_uneven_experts;
  sp["rate_match_batch"] = s.search.rate_match_batch;
  sp["pd_ref_concurrency"] = s.search.pd_ref_concurrency;
  sp["transport"] = transport_name(s.transport);
  sp["max_concurrency"] = s.engine_knobs.max_concurrency;
  json k;
  k["eta_compute"] = s.cost_knobs.eta_compute;
  k["eta_memory"] = s.cost_knobs.eta_memory;
  k["kernel_overhead_us"] = s.cost_knobs.kernel_overhead / kUs;
  k["latency_floor_us"] = s.net_knobs.latency_floor / kUs;
  k["runtime_overhead_gib"] = s.mem_knobs.runtime_overhead / kGiB;
  k["worst_case_kv_residency"] = s.mem_knobs.worst_case_kv_residency;
  k["count_input_tokens"] = s.engine_knobs.count_input_tokens;
  k["prefix_cache_hit"] = s.engine_knobs.prefix_cache_hit;
  sp["knobs"] = k;
  j["search"] = sp;

  return j.dump(2) + "\n";
}

EvalContext context_for(const Scenario& s, CostSource source,
                        std::optional<CalibrationTable> table) {
  EvalContext ctx;
  ctx.model = s.model;
  ctx.workload = s.workload;
  ctx.cluster = s.cluster;
  ctx.cost_knobs = s.cost_knobs;
  ctx.net_knobs = s.net_knobs;
  ctx.mem_knobs = s.mem_knobs;
  ctx.engine_knobs = s.engine_knobs;
  ctx.transport = s.transport;
  ctx.costs = std::make_shared<CostModel>(s.cluster.gpu, s.cost_knobs, source,
                                          std::move(table));
  return ctx;
}

}  // namespace afdx
