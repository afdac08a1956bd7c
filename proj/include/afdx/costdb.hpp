#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>

#include "afdx/types.hpp"

namespace afdx {

enum class OpKind { AttnPrefill, AttnDecode, MoeFfn, DenseProj };

enum class CostSource { Analytical, Table, Hybrid };

const char* to_string(OpKind k);
const char* to_string(CostSource s);

struct OpShape {
  OpKind op = OpKind::AttnDecode;
  i64 tokens = 1;          // query tokens in the step (== batch for decode)
  i64 context = 0;         // KV tokens visible per sequence
  i64 batch = 1;           // sequences
  int parallel_degree = 1; // tp for attention ops, ep group size for MoeFfn
};

struct OpCost {
  double time = 0.0;       // seconds, per layer, per device
  double flops = 0.0;      // per layer, per device
  double hbm_bytes = 0.0;  // per layer, per device
  CostSource source = CostSource::Analytical;
};

struct MemoryShares {
  double attn_time_share = 0.0;
  double ffn_time_share = 0.0;
  double weight_bytes = 0.0;      // whole model
  double kv_bytes = 0.0;          // one sequence at the given context
  double activation_bytes = 0.0;  // one token in flight
};

// Measured (op, tokens, context, batch, parallel_degree) -> seconds. Exact-match only.
class CalibrationTable {
 public:
  using Key = std::tuple<OpKind, i64, i64, i64, int>;
  void insert(const Key& k, double seconds) { rows_[k] = seconds; }
  std::optional<double> lookup(const Key& k) const;
  size_t size() const { return rows_.size(); }
  // CSV columns: op,tokens,context,batch,parallel_degree,time_us
  static CalibrationTable load_csv(const std::string& path);

 private:
  std::map<Key, double> rows_;
};

struct UncoveredShape : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class CostModel {
 public:
  CostModel(GpuSpec gpu, CostKnobs knobs, CostSource mode = CostSource::Analytical,
            std::optional<CalibrationTable> table = std::nullopt)
      : gpu_(std::move(gpu)), knobs_(knobs), mode_(mode), table_(std::move(table)) {}

  // Per-layer, per-device cost. Throws UncoveredShape in pure table mode when the
  // shape is absent.
  OpCost op_cost(const ModelArch& model, const OpShape& shape) const;

  // Single decoding token at the given context: where does the time and the
  // memory go, split between attention-side and FFN-side work.
  MemoryShares runtime_memory_breakdown(const ModelArch& model, i64 context) const;

  const GpuSpec& gpu() const { return gpu_; }
  const CostKnobs& knobs() const { return knobs_; }

 private:
  OpCost analytical(const ModelArch& model, const OpShape& shape) const;

  GpuSpec gpu_;
  CostKnobs knobs_;
  CostSource mode_;
  std::optional<CalibrationTable> table_;
};

// Architecture byte math shared by the cost and memory models. All values are
// bytes unless named otherwise; "per layer" means one transformer layer.
double attn_weight_bytes_per_layer(const ModelArch& m);
double expert_weight_bytes(const ModelArch& m);         // one expert, one layer
double shared_expert_weight_bytes_per_layer(const ModelArch& m);
double model_weight_bytes_total(const ModelArch& m);

// KV bytes held by one sequence across all layers at the given length.
// Includes the constant recurrent-state term for hybrid mixers; window and
// latent compression applied per variant.
double kv_resident_bytes(const ModelArch& m, i64 tokens);
// Marginal KV bytes per additional resident token (all layers).
double kv_bytes_per_token(const ModelArch& m);
// How many ways TP can split one sequence's KV (heads for GQA, 1 for latent).
int kv_tp_shard_ways(const ModelArch& m, int tp);

// Hybrid layer split: number of attention (GQA) layers vs mixer layers.
i64 hybrid_gqa_layers(const ModelArch& m);

// Expected number of distinct experts that see traffic on a rank hosting
// `hosted` experts when `tokens` tokens each pick top_k of num_experts.
double expected_active_local_experts(const ModelArch& m, i64 tokens, i64 hosted);

}  // namespace afdx
