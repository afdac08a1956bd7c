#pragma once

#include <string>
#include <vector>

#include "afdx/types.hpp"

namespace afdx {

// Flow-level fabric model. Scale-up domains are non-blocking internally; the
// scale-out tier is a non-blocking fabric bounded by per-GPU NIC capacity.
struct Topology {
  int gpus = 0;
  int scaleup_domain = 1;
  double scaleup_bw = 0.0;   // bytes/s per GPU per direction
  double scaleout_bw = 0.0;  // 0 = tier absent
  Duplex scaleup_duplex = Duplex::Full;
  Duplex scaleout_duplex = Duplex::Full;
  double latency_floor = 2e-6;

  int node_of(int gpu) const { return gpu / scaleup_domain; }
  static Topology from_cluster(const ClusterSpec& c, const NetKnobs& k);
};

struct SimFlow {
  int src = -1;
  int dst = -1;
  double bytes = 0.0;
};

struct FlowResult {
  double time = 0.0;  // completion, latency floor included
  int bottleneck = -1;  // resource index binding the flow in its final epoch
};

struct SimResult {
  std::vector<FlowResult> flows;  // same order as input
  double makespan = 0.0;
  int binding_resource = -1;  // highest load/capacity resource overall
};

// Resource index -> human-readable name ("gpu3.scaleup.egress").
std::string resource_name(const Topology& topo, int resource);

// Progressive-filling max-min fair bandwidth sharing, advanced over
// completion epochs. Deterministic: ties resolve in flow-id order.
// Throws std::runtime_error for cross-node flows when no scale-out tier
// exists, and std::invalid_argument for malformed flows.
SimResult simulate(const std::vector<SimFlow>& flows, const Topology& topo);

}  // namespace afdx
