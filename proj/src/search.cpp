#include "afdx/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>

namespace afdx {

std::vector<int> worker_size_candidates(int replica_gpus) {
  std::set<int> s;
  for (int d = 1; d <= replica_gpus; ++d)
    if (replica_gpus % d == 0) s.insert(d);
  for (int p = 1; p <= replica_gpus; p *= 2) s.insert(p);
  return {s.begin(), s.end()};
}

namespace {

bool microbatch_valid(int M, int worker_gpus, const ClusterSpec& c) {
  if (M == 1) return true;
  const bool in_domain = worker_gpus <= c.scaleup_domain_size;
  if (!in_domain && c.scaleout_bw <= 0) return false;
  const Duplex dx = in_domain ? c.scaleup_duplex : c.scaleout_duplex;
  if (M == 4) return dx == Duplex::Full;
  if (M == 3) return dx == Duplex::Half;
  return false;
}

bool ffn_side_ok(int F, const ModelArch& m, bool uneven) {
  if (F < 1 || F > m.num_experts) return false;
  return uneven || m.num_experts % F == 0;
}

}  // namespace

std::vector<DeploymentConfig> enumerate_configs(const SearchSpace& sp,
                                                const EvalContext& ctx,
                                                bool* truncated) {
  const ClusterSpec& c = ctx.cluster;
  const ModelArch& m = ctx.model;
  const int n = c.num_gpus;
  const int gmin = std::max(1, sp.replica_min);
  const int gmax = sp.replica_max > 0 ? std::min(sp.replica_max, n) : n;

  std::vector<DeploymentConfig> out;
  bool trunc = false;
  auto push = [&](const DeploymentConfig& cfg) {
    if (i64(out.size()) >= sp.max_configs) {
      trunc = true;
      return false;
    }
    out.push_back(cfg);
    return true;
  };
  auto wants = [&](ServingMode mode) {
    return std::find(sp.modes.begin(), sp.modes.end(), mode) != sp.modes.end();
  };

  for (int g = gmin; g <= gmax && !trunc; ++g) {
    const int replicas = n / g;
    if (replicas < 1) continue;

    if (wants(ServingMode::AggChunked)) {
      for (int tp : sp.tp_set) {
        if (tp < 1 || g % tp != 0) continue;
        for (i64 chunk : sp.chunk_sizes) {
          DeploymentConfig cfg;
          cfg.mode = ServingMode::AggChunked;
          cfg.replicas = replicas;
          cfg.tp = tp;
          cfg.dp = g / tp;
          cfg.chunk_size = chunk;
          if (!push(cfg)) break;
        }
        if (trunc) break;
      }
    }

    if (wants(ServingMode::AggAFD) && !trunc) {
      for (int A = 1; A < g && !trunc; ++A) {
        const int F = g - A;
        if (!ffn_side_ok(F, m, sp.allow_uneven_experts)) continue;
        for (int tp : sp.tp_set) {
          if (tp < 1 || A % tp != 0) continue;
          for (int M : sp.microbatch_set) {
            if (!microbatch_valid(M, g, c)) continue;
            DeploymentConfig cfg;
            cfg.mode = ServingMode::AggAFD;
            cfg.replicas = replicas;
            cfg.attn_gpus = A;
            cfg.ffn_gpus = F;
            cfg.tp = tp;
            cfg.dp = A / tp;
            cfg.ep = F;
            cfg.microbatches = M;
            if (!push(cfg)) break;
          }
          if (trunc) break;
        }
      }
    }

    const std::vector<int> sizes = worker_size_candidates(g);

    if (wants(ServingMode::DisaggPD) && !trunc) {
      for (int wp : sizes) {
        for (int wd : sizes) {
          for (int tp : sp.tp_set) {
            if (tp < 1 || wp % tp != 0 || wd % tp != 0) continue;
            for (int x = 1; x * wp < g; ++x) {
              const int rest = g - x * wp;
              if (rest % wd != 0) continue;
              const int y = rest / wd;
              DeploymentConfig cfg;
              cfg.mode = ServingMode::DisaggPD;
              cfg.replicas = replicas;
              cfg.prefill_workers = x;
              cfg.decode_workers = y;
              cfg.prefill_gpus = wp;
              cfg.decode_gpus = wd;
              cfg.tp = tp;
              cfg.dp = wd / tp;
              if (!push(cfg)) break;
            }
            if (trunc) break;
          }
          if (trunc) break;
        }
        if (trunc) break;
      }
    }

    if (wants(ServingMode::DisaggAFD) && !trunc) {
      for (int w : sizes) {
        if (g % w != 0) continue;
        const int units = g / w;
        if (units < 2) continue;
        for (int x = 1; x < units && !trunc; ++x) {
          const int y = units - x;
          for (int A = 1; A < w && !trunc; ++A) {
            const int F = w - A;
            if (!ffn_side_ok(F, m, sp.allow_uneven_experts)) continue;
            for (int tp : sp.tp_set) {
              if (tp < 1 || A % tp != 0) continue;
              for (int M : sp.microbatch_set) {
                if (!microbatch_valid(M, w, c)) continue;
                DeploymentConfig cfg;
                cfg.mode = ServingMode::DisaggAFD;
                cfg.replicas = replicas;
                cfg.prefill_workers = x;
                cfg.decode_workers = y;
                cfg.prefill_gpus = w;
                cfg.decode_gpus = w;
                cfg.attn_gpus = A;
                cfg.ffn_gpus = F;
                cfg.tp = tp;
                cfg.dp = A / tp;
                cfg.ep = F;
                cfg.microbatches = M;
                if (!push(cfg)) break;
              }
              if (trunc) break;
            }
          }
        }
        if (trunc) break;
      }
    }
  }

  if (truncated) *truncated = trunc;
  return out;
}

int rate_match_split(const EvalContext& ctx, int worker_gpus, int tp, i64 batch) {
  const ModelArch& m = ctx.model;
  const CostModel& costs = *ctx.costs;
  const Workload& w = ctx.workload;
  const i64 dctx = w.prefix + w.isl + w.osl / 2;
  const i64 L = m.layers;

  for (int A = tp; A < worker_gpus; A += tp) {
    const int F = worker_gpus - A;
    if (!ffn_side_ok(F, m, ctx.engine_knobs.allow_uneven_experts)) continue;
    const int dp = A / tp;
    const i64 per_dp = (batch + dp - 1) / dp;
    double s_attn =
        double(L) * costs.op_cost(m, {OpKind::AttnDecode, per_dp, dctx, per_dp, tp}).time;
    s_attn += double(L) *
              tp_allreduce_seconds(per_dp, m, tp, ctx.cluster.scaleup_bw);
    const double s_ffn =
        double(L) * costs.op_cost(m, {OpKind::MoeFfn, batch, 0, batch, F}).time;
    if (s_attn > s_ffn) continue;

    DeploymentConfig probe;
    probe.mode = ServingMode::AggAFD;
    probe.attn_gpus = A;
    probe.ffn_gpus = F;
    probe.tp = tp;
    probe.dp = dp;
    probe.ep = F;
    bool fits = true;
    for (const auto& f : footprint(probe, ctx, batch))
      if (f.role == MemRole::AttnSide && f.total() > ctx.cluster.gpu.hbm_capacity)
        fits = false;
    if (fits) return A;
  }
  return -1;
}

i64 rate_match_prefill_workers(double prefill_s, double tpot_s, i64 concurrency,
                               i64 osl, i64 decode_workers) {
  if (prefill_s <= 0 || tpot_s <= 0 || osl <= 0) return 1;
  const double need =
      prefill_s * double(decode_workers) * double(concurrency) / (double(osl) * tpot_s);
  return std::max<i64>(1, i64(std::ceil(need - 1e-9)));
}

std::vector<size_t> pareto_indices(const std::vector<SearchRow>& rows) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < rows.size(); ++i)
    if (rows[i].perf.feasible) idx.push_back(i);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    const auto& pa = rows[a].perf;
    const auto& pb = rows[b].perf;
    if (pa.per_user_rate != pb.per_user_rate) return pa.per_user_rate > pb.per_user_rate;
    if (pa.system_rate != pb.system_rate) return pa.system_rate > pb.system_rate;
    return a < b;
  });

  std::vector<size_t> front;
  double best_system = -1.0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    const double user = rows[idx[i]].perf.per_user_rate;
    const double group_max = rows[idx[i]].perf.system_rate;
    while (j < idx.size() && rows[idx[j]].perf.per_user_rate == user) ++j;
    if (group_max > best_system) {
      for (size_t k = i; k < j; ++k)
        if (rows[idx[k]].perf.system_rate == group_max) front.push_back(idx[k]);
      best_system = group_max;
    }
    i = j;
  }
  return front;
}

SearchOutcome run_search(const SearchSpace& space, const EvalContext& ctx) {
  SearchOutcome o;
  EvalContext ectx = ctx;
  ectx.engine_knobs.allow_uneven_experts = space.allow_uneven_experts;

  bool trunc = false;
  const std::vector<DeploymentConfig> cfgs = enumerate_configs(space, ectx, &trunc);
  o.enumerated = i64(cfgs.size());
  o.truncated = trunc;
  if (trunc)
    o.warnings.push_back("enumeration capped at " + std::to_string(space.max_configs) +
                         " configs; grid truncated");
  std::set<int> spanning;
  for (const auto& cfg : cfgs)
    if (cfg.tp > ctx.cluster.scaleup_domain_size) spanning.insert(cfg.tp);
  for (int tp : spanning)
    o.warnings.push_back("tp=" + std::to_string(tp) +
                         " spans scale-up domains; collectives still charged at "
                         "scale-up bandwidth");

  o.rows.resize(cfgs.size());
  unsigned threads = std::thread::hardware_concurrency();
  if (threads == 0) threads = 1;
  if (const char* e = std::getenv("AFDX_THREADS")) {
    const int v = std::atoi(e);
    if (v > 0) threads = unsigned(v);
  }
  threads = std::min<unsigned>(threads, std::max<size_t>(1, cfgs.size()));

  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cfgs.size()) return;
      SearchRow row;
      row.cfg = cfgs[i];
      try {
        row.perf = evaluate(cfgs[i], ectx);
      } catch (const UncoveredShape& e) {
        row.perf.feasible = false;
        row.perf.reason = InfeasibleReason::InvalidLayout;
        row.perf.detail = e.what();
      }
      o.rows[i] = std::move(row);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (const auto& row : o.rows)
    if (!row.perf.feasible) ++o.infeasible[to_string(row.perf.reason)];
  o.frontier = pareto_indices(o.rows);
  return o;
}

}  // namespace afdx
