#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "afdx/context.hpp"
#include "afdx/search.hpp"
#include "afdx/types.hpp"

namespace afdx {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One self-contained study: what to serve, where, and how to search.
// File units are human-scale (ms, GiB, GB/s, TFLOPS); fields here are SI.
struct Scenario {
  ModelArch model;
  Workload workload;
  ClusterSpec cluster;
  SearchSpace search;
  Transport transport = Transport::Sparse;
  CostKnobs cost_knobs;
  NetKnobs net_knobs;
  MemKnobs mem_knobs;
  EngineKnobs engine_knobs;
};

// Throws ScenarioError on unknown names.
ServingMode parse_serving_mode(const std::string& s);

// Strict parse: unknown keys are errors at every level ("note" is allowed
// everywhere), and the result must pass validate_scenario.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

// Inverse of parse_scenario, stable key order, parse(emit(s)) == s.
std::string emit_scenario(const Scenario& s);

EvalContext context_for(const Scenario& s, CostSource source = CostSource::Analytical,
                        std::optional<CalibrationTable> table = std::nullopt);

}  // namespace afdx
