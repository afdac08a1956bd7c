#pragma once

#include <memory>

#include "afdx/costdb.hpp"
#include "afdx/netsim.hpp"
#include "afdx/placement.hpp"
#include "afdx/traffic.hpp"
#include "afdx/types.hpp"

namespace afdx {

// Everything an evaluation needs besides the deployment itself.
struct EvalContext {
  ModelArch model;
  Workload workload;
  ClusterSpec cluster;
  CostKnobs cost_knobs;
  NetKnobs net_knobs;
  MemKnobs mem_knobs;
  EngineKnobs engine_knobs;
  Transport transport = Transport::Sparse;
  PlacePolicy policy = PlacePolicy::Auto;
  std::shared_ptr<const CostModel> costs;  // built by make_context

  Topology topology() const { return Topology::from_cluster(cluster, net_knobs); }
};

EvalContext make_context(const ModelArch& model, const Workload& workload,
                         const ClusterSpec& cluster,
                         CostSource cost_source = CostSource::Analytical,
                         std::optional<CalibrationTable> table = std::nullopt);

}  // namespace afdx
