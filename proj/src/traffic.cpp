#include "afdx/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace afdx {

const char* to_string(Transport t) { return t == Transport::Dense ? "dense" : "sparse"; }

const char* to_string(TrafficKind k) {
  switch (k) {
    case TrafficKind::A2F: return "a2f";
    case TrafficKind::F2A: return "f2a";
    case TrafficKind::KV: return "kv";
  }
  return "?";
}

double TrafficMatrix::row_sum(int s) const {
  double acc = 0.0;
  for (int r = 0; r < receivers; ++r) acc += at(s, r);
  return acc;
}

double TrafficMatrix::col_sum(int r) const {
  double acc = 0.0;
  for (int s = 0; s < senders; ++s) acc += at(s, r);
  return acc;
}

double TrafficMatrix::max_row_sum() const {
  double best = 0.0;
  for (int s = 0; s < senders; ++s) best = std::max(best, row_sum(s));
  return best;
}

double TrafficMatrix::max_col_sum() const {
  double best = 0.0;
  for (int r = 0; r < receivers; ++r) best = std::max(best, col_sum(r));
  return best;
}

double TrafficMatrix::total() const {
  return std::accumulate(payload.begin(), payload.end(), 0.0);
}

namespace {

// C(n, k) exactly when it fits 128 bits, otherwise a long-double fallback.
// The exact path keeps miss/total ratios bit-identical to brute enumeration.
bool binom_u128(i64 n, i64 k, unsigned __int128* out) {
  if (k < 0 || k > n) { *out = 0; return true; }
  k = std::min(k, n - k);
  unsigned __int128 acc = 1;
  for (i64 i = 1; i <= k; ++i) {
    unsigned __int128 num = acc * (unsigned __int128)(n - k + i);
    if (num / (unsigned __int128)(n - k + i) != acc) return false;  // overflow
    acc = num / (unsigned __int128)i;
  }
  *out = acc;
  return true;
}

long double binom_ld(i64 n, i64 k) {
  if (k < 0 || k > n) return 0.0L;
  k = std::min(k, n - k);
  long double acc = 1.0L;
  for (i64 i = 1; i <= k; ++i)
    acc = acc * (long double)(n - k + i) / (long double)i;
  return acc;
}

double miss_ratio(i64 E, i64 k, i64 hosted) {
  // C(E - hosted, k) / C(E, k)
  unsigned __int128 num, den;
  if (binom_u128(E - hosted, k, &num) && binom_u128(E, k, &den) && den != 0) {
    return double((long double)(den - num) / (long double)den);
  }
  const long double r = binom_ld(E - hosted, k) / binom_ld(E, k);
  return double(1.0L - r);
}

}  // namespace

double activation_probability(i64 E, i64 k, i64 N) {
  if (E < 1 || k < 1 || k > E || N < 1)
    throw std::invalid_argument("activation_probability: need 1 <= k <= E, N >= 1");
  if (E % N != 0)
    throw std::invalid_argument("activation_probability: N must divide E");
  return miss_ratio(E, k, E / N);
}

double activation_probability_hosted(i64 E, i64 k, i64 hosted) {
  if (E < 1 || k < 1 || k > E || hosted < 0 || hosted > E)
    throw std::invalid_argument("activation_probability_hosted: bad arguments");
  if (hosted == 0) return 0.0;
  return miss_ratio(E, k, hosted);
}

std::vector<i64> hosted_experts(i64 E, i64 N) {
  if (E < 1 || N < 1) throw std::invalid_argument("hosted_experts: bad arguments");
  std::vector<i64> h(size_t(N), 0);
  const i64 base = E / N, rem = E % N;
  for (i64 r = 0; r < N; ++r) h[size_t(r)] = base + (r < rem ? 1 : 0);
  return h;
}

double meta_bytes_per_token(const ModelArch& m) {
  // token id + per-choice (expert id, fp16 gate weight)
  return 4.0 + double(m.top_k) * (2.0 + 2.0);
}

namespace {

std::vector<i64> split_tokens(i64 tokens, int ranks) {
  std::vector<i64> t(size_t(ranks), 0);
  const i64 base = tokens / ranks, rem = tokens % ranks;
  for (int s = 0; s < ranks; ++s) t[size_t(s)] = base + (s < rem ? 1 : 0);
  return t;
}

}  // namespace

TrafficMatrix build_a2f(i64 tokens, const ModelArch& m, int A, int F,
                        Transport transport) {
  if (A < 1 || F < 1) throw std::invalid_argument("build_a2f: empty GPU group");
  if (tokens < 0) throw std::invalid_argument("build_a2f: negative tokens");
  TrafficMatrix t;
  t.senders = A;
  t.receivers = F;
  t.kind = TrafficKind::A2F;
  t.transport = transport;
  t.payload.assign(size_t(A) * F, 0.0);

  const double per_token =
      double(m.hidden_dim) * m.param_bytes_per_elem + meta_bytes_per_token(m);
  const auto sent = split_tokens(tokens, A);
  const auto hosted = hosted_experts(m.num_experts, F);
  for (int s = 0; s < A; ++s) {
    for (int r = 0; r < F; ++r) {
      const double p =
          transport == Transport::Dense
              ? 1.0
              : activation_probability_hosted(m.num_experts, m.top_k, hosted[size_t(r)]);
      t.at(s, r) = double(sent[size_t(s)]) * p * per_token;
    }
  }
  return t;
}

TrafficMatrix build_f2a(i64 tokens, const ModelArch& m, int A, int F,
                        Transport transport) {
  if (A < 1 || F < 1) throw std::invalid_argument("build_f2a: empty GPU group");
  if (tokens < 0) throw std::invalid_argument("build_f2a: negative tokens");
  TrafficMatrix t;
  t.senders = F;
  t.receivers = A;
  t.kind = TrafficKind::F2A;
  t.transport = transport;
  t.payload.assign(size_t(F) * A, 0.0);

  const double per_token = double(m.hidden_dim) * m.param_bytes_per_elem;
  const auto owned = split_tokens(tokens, A);
  const auto hosted = hosted_experts(m.num_experts, F);
  for (int f = 0; f < F; ++f) {
    const double p =
        transport == Transport::Dense
            ? 1.0
            : activation_probability_hosted(m.num_experts, m.top_k, hosted[size_t(f)]);
    for (int a = 0; a < A; ++a)
      t.at(f, a) = double(owned[size_t(a)]) * p * per_token;
  }
  return t;
}

Flow kv_flow(const Workload& w, const ModelArch&, double bytes_per_token) {
  Flow f;
  f.bytes = double(w.prefix + w.isl) * bytes_per_token;
  return f;
}

std::vector<i64> sample_rank_hits(i64 E, i64 k, i64 N, i64 tokens,
                                  std::uint64_t seed) {
  if (E % N != 0) throw std::invalid_argument("sample_rank_hits: N must divide E");
  std::mt19937_64 rng(seed);
  std::vector<i64> experts(static_cast<size_t>(E));
  std::iota(experts.begin(), experts.end(), 0);
  std::vector<i64> hits(size_t(N), 0);
  const i64 per_rank = E / N;
  std::vector<char> touched(size_t(N), 0);
  for (i64 t = 0; t < tokens; ++t) {
    // partial Fisher-Yates: first k entries become this token's expert set
    for (i64 i = 0; i < k; ++i) {
      std::uniform_int_distribution<i64> pick(i, E - 1);
      std::swap(experts[size_t(i)], experts[size_t(pick(rng))]);
    }
    std::fill(touched.begin(), touched.end(), 0);
    for (i64 i = 0; i < k; ++i) touched[size_t(experts[size_t(i)] / per_rank)] = 1;
    for (i64 r = 0; r < N; ++r) hits[size_t(r)] += touched[size_t(r)];
  }
  return hits;
}

}  // namespace afdx
