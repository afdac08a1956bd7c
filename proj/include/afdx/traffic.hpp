#pragma once

#include <cstdint>
#include <vector>

#include "afdx/types.hpp"

namespace afdx {

enum class Transport { Dense, Sparse };
enum class TrafficKind { A2F, F2A, KV };

const char* to_string(Transport t);
const char* to_string(TrafficKind k);

// Bipartite payload matrix, bytes per step. Row = sender, column = receiver.
struct TrafficMatrix {
  int senders = 0;
  int receivers = 0;
  TrafficKind kind = TrafficKind::A2F;
  Transport transport = Transport::Sparse;
  std::vector<double> payload;  // senders x receivers, row major

  double& at(int s, int r) { return payload[size_t(s) * receivers + r]; }
  double at(int s, int r) const { return payload[size_t(s) * receivers + r]; }
  double row_sum(int s) const;
  double col_sum(int r) const;
  double max_row_sum() const;
  double max_col_sum() const;
  double total() const;
};

// Probability that one token's top-k expert choice touches a rank hosting
// E/N experts, under uniform routing. Exact for machine-integer binomials.
// Throws std::invalid_argument unless 1 <= k <= E, N >= 1 and N divides E.
double activation_probability(i64 num_experts, i64 top_k, i64 num_ranks);

// Same, for a rank hosting an explicit expert count (uneven layouts).
double activation_probability_hosted(i64 num_experts, i64 top_k, i64 hosted);

// Experts hosted per rank; ceil(E/N) on the low ranks when N does not divide E.
std::vector<i64> hosted_experts(i64 num_experts, i64 num_ranks);

// Routing metadata shipped alongside each dispatched token.
double meta_bytes_per_token(const ModelArch& m);

// Dispatch: attention ranks fan tokens out to FFN ranks. `tokens` is the whole
// step budget; it splits evenly over senders (remainder to low ranks).
TrafficMatrix build_a2f(i64 tokens, const ModelArch& m, int attn_ranks,
                        int ffn_ranks, Transport transport);

// Combine: FFN ranks return post-FFN activations, no metadata.
TrafficMatrix build_f2a(i64 tokens, const ModelArch& m, int attn_ranks,
                        int ffn_ranks, Transport transport);

struct Flow {
  int src_gpu = -1;
  int dst_gpu = -1;
  double bytes = 0.0;
};

// KV handoff for one request: everything materialized by prefill.
Flow kv_flow(const Workload& w, const ModelArch& m, double bytes_per_token);

// Test hook: empirical per-rank hit counts under seeded uniform top-k routing.
std::vector<i64> sample_rank_hits(i64 num_experts, i64 top_k, i64 num_ranks,
                                  i64 tokens, std::uint64_t seed);

}  // namespace afdx
