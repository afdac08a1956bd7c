#pragma once

#include <vector>

#include "afdx/netsim.hpp"
#include "afdx/traffic.hpp"
#include "afdx/types.hpp"

namespace afdx {

enum class PlacePolicy { Segregated, Paired, Auto };
enum class WorkerRole { Unified, Prefill, Decode };

const char* to_string(PlacePolicy p);
const char* to_string(WorkerRole r);

struct PlacedWorker {
  WorkerRole role = WorkerRole::Unified;
  int replica = 0;
  int index = 0;                // per-role ordinal within the replica
  std::vector<int> attn_gpus;   // non-AFD workers keep every GPU here
  std::vector<int> ffn_gpus;
  int node = -1;                // node of the first GPU
  bool tier_degraded = false;   // worker spans scale-up domains

  int size() const { return int(attn_gpus.size() + ffn_gpus.size()); }
};

struct WorkerLayout {
  std::vector<PlacedWorker> workers;
  bool tier_degraded = false;

  const PlacedWorker* find(WorkerRole role, int replica, int index) const;
};

// Assign GPU ids to every worker of every replica.
//  segregated: all prefill workers first, then all decode workers.
//  paired:     P_i and D_i of a replica placed adjacently (KV stays in-node
//              when a pair fits in one scale-up domain).
//  auto:       paired for Disagg modes, packed order otherwise.
// Workers never split across nodes unless they exceed the node size
// (tier_degraded). Throws std::invalid_argument when the fleet does not fit.
WorkerLayout place(const DeploymentConfig& cfg, const Topology& topo, PlacePolicy policy);

// Transfer one request's KV between a prefill and a decode worker. Endpoints
// default to the first attention GPU of P0 and D0 of replica 0 when the flow
// carries none. Returns seconds.
double kv_transfer_time(const WorkerLayout& layout, const Flow& flow, const Topology& topo);

}  // namespace afdx
