#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afdx/types.hpp"

namespace afdx {

// Exit codes shared by every subcommand:
//   0  ran and produced a result (eval reports infeasible configs with 0)
//   2  bad input: scenario/config/flag errors
//   3  search only: no feasible deployment in the space
constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitNoFeasible = 3;

struct CommonOpts {
  std::string scenario_path;
  std::string out_dir;                    // empty = stdout only, no artifacts
  std::string cost_source = "analytical"; // analytical|table|hybrid
  std::string calibration_path;           // required for table/hybrid
  std::uint64_t seed = 0;
  bool count_input_tokens = false;
};

struct SearchOpts {
  CommonOpts common;
  std::vector<std::string> modes;  // empty = scenario's mode list
  int replica_min = 0;             // 0 = keep scenario value
  int replica_max = -1;            // -1 = keep scenario value
  std::vector<int> tp_set;         // empty = keep scenario value
  int top = 10;                    // frontier rows shown in the summary
};

// Deployment spelled out on the command line. Derived fields (dp, ep,
// disagg worker sizes for AFD) are filled in by to_config().
struct ConfigOpts {
  std::string mode = "agg_chunked";
  int replicas = 1;
  int worker_gpus = 0;  // Agg modes: GPUs per unified worker
  int attn_gpus = 0;
  int ffn_gpus = 0;
  int prefill_workers = 0;
  int decode_workers = 0;
  int prefill_gpus = 0;
  int decode_gpus = 0;
  int tp = 1;
  int microbatches = 1;
  i64 chunk_size = 0;
};

struct EvalOpts {
  CommonOpts common;
  ConfigOpts config;
  i64 concurrency = 0;  // 0 = search the max feasible concurrency
  bool dump_traffic = false;
  bool dump_flows = false;
};

struct BreakdownOpts {
  CommonOpts common;
};

struct PlacementOpts {
  CommonOpts common;
  ConfigOpts config;
};

// Throws ScenarioError when the flags do not describe the chosen mode.
DeploymentConfig to_config(const ConfigOpts& o, const ModelArch& model);

int run_search_cmd(const SearchOpts& o);
int run_eval_cmd(const EvalOpts& o);
int run_breakdown_cmd(const BreakdownOpts& o);
int run_placement_cmd(const PlacementOpts& o);

}  // namespace afdx
