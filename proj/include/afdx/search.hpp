#pragma once

#include <map>
#include <string>
#include <vector>

#include "afdx/engine.hpp"

namespace afdx {

struct SearchSpace {
  std::vector<ServingMode> modes = {ServingMode::AggChunked, ServingMode::AggAFD,
                                    ServingMode::DisaggPD, ServingMode::DisaggAFD};
  int replica_min = 1;   // per-replica GPU count bounds
  int replica_max = 0;   // 0 = whole cluster
  std::vector<int> tp_set = {1, 2, 4, 8};
  std::vector<int> microbatch_set = {1, 3, 4};
  std::vector<i64> chunk_sizes = {2048};
  i64 max_configs = 200000;
  bool allow_uneven_experts = false;
  i64 rate_match_batch = 64;
  i64 pd_ref_concurrency = 32;
};

struct SearchRow {
  DeploymentConfig cfg;
  PerfEstimate perf;
};

struct SearchOutcome {
  std::vector<SearchRow> rows;
  std::vector<size_t> frontier;  // indices into rows, Pareto-optimal feasible
  i64 enumerated = 0;
  bool truncated = false;
  std::map<std::string, i64> infeasible;  // reason -> count
  std::vector<std::string> warnings;
};

// Candidate worker sizes for disagg fleets: divisors of the replica size plus
// powers of two, so off-grid replica sizes still get sensible workers.
std::vector<int> worker_size_candidates(int replica_gpus);

std::vector<DeploymentConfig> enumerate_configs(const SearchSpace& space,
                                                const EvalContext& ctx,
                                                bool* truncated = nullptr);

// Smallest attention-side size whose decode stage keeps up with the FFN side
// at the reference batch, with the attention footprint fitting in HBM.
// Returns -1 when no split qualifies.
int rate_match_split(const EvalContext& ctx, int worker_gpus, int tp, i64 batch);

// Prefill workers needed to absorb the arrival rate n_d decode workers
// sustain at the given per-worker concurrency.
i64 rate_match_prefill_workers(double prefill_s, double tpot_s, i64 concurrency,
                               i64 osl, i64 decode_workers);

// Indices of rows on the (per_user_rate, system_rate) Pareto frontier.
// Only feasible rows participate; exact ties on both axes are all kept.
std::vector<size_t> pareto_indices(const std::vector<SearchRow>& rows);

// Enumerate + evaluate (parallel over AFDX_THREADS) + frontier extraction.
SearchOutcome run_search(const SearchSpace& space, const EvalContext& ctx);

}  // namespace afdx
