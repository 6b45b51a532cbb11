#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "brwlab/model.hpp"

namespace brw {

using ParamMap = std::map<std::string, std::string>;

struct ScenarioParam {
  std::string name;
  std::string default_value;
  std::string description;
};

struct ScenarioInfo {
  std::string name;
  std::string anchor;  // where the construction comes from
  std::string summary;
  std::vector<ScenarioParam> params;
};

// Registered scenarios in a fixed order.
const std::vector<ScenarioInfo>& scenario_registry();
const ScenarioInfo& scenario_info(std::string_view name);  // throws ScenarioError

// Builds a registered scenario. Unknown names, unknown keys and invalid
// values throw ScenarioError. Every model records its parameters (defaults
// filled in) and an "origin" vertex in its metadata.
BrwModel build_scenario(std::string_view name, const ParamMap& params = {});

// The "origin" recorded by build_scenario, or the first vertex.
VertexId model_origin(const BrwModel& model);

// Graph-distance balls around `center` in the undirected reproduction graph.
std::vector<std::vector<VertexId>> ball_exhaustion(
    const BrwModel& model, VertexId center,
    const std::vector<std::size_t>& radii);

// Birth rates k_xy of a continuous-time BRW on a finite window. Rate that
// leaves the window is kept in lost_rate so that counterpart laws are the
// restrictions of the full-space laws.
struct RateMatrix {
  std::vector<VertexId> vertices;
  std::vector<Row> rows;
  std::vector<double> lost_rate;
  std::vector<VertexId> interior;
  ModelMetadata metadata;
  // Optional finite quotient of the untruncated rates.
  std::shared_ptr<const RateMatrix> quotient;
  std::function<VertexId(VertexId)> quotient_map;
};

// Discrete-time counterpart at parameter lambda, one law per row.
BrwModel counterpart_model(const RateMatrix& rates, double lambda);

// Rates for the continuous-time scenarios (gw with a self-rate,
// tree_counterpart). Throws ScenarioError for other names.
RateMatrix scenario_rates(std::string_view name, const ParamMap& params = {});

// Height relative to the end along the child-0 ray from the root, for the
// tree_counterpart window of the given degree and depth. Targets are the
// heights of interior vertices.
Projection horocycle_projection(std::size_t degree, std::size_t depth);

// First coordinate of the ids used by zd_translation (dim 2) and zdrift.
Projection first_coordinate_projection(const BrwModel& model);

// Children counts for the line_noext construction. n[0] = n0 and n[k+1] is
// the smallest n >= n[k] for which the minimal solution of the partial
// system on {0..k+1} stays at or above 1 - slack/(k+2) on every coordinate.
// slack = 1 gives the schedule (k+1)/(k+2); smaller slack pushes the
// extinction bound towards 1 faster at the price of larger n.
std::vector<Count> noext_sequence(std::size_t count, Count n0 = 4,
                                  double slack = 1.0);

// Same search for the irreducible variant, which also needs
// 2/n < (1-eps)/4 at every level. n0 = 0 picks the smallest valid value.
std::vector<Count> noext_irreducible_sequence(std::size_t count,
                                              double eps = 0.5, Count n0 = 0,
                                              double slack = 1.0);

// Minimal solution of the partial system for line_noext given n[0..k+1]:
// z(k+1) = 1 - 2/n[k+1], then z(i) = p_i z(i+1)^n_i + 1 - p_i downwards.
// Returned as 1 - z to keep precision near 1.
std::vector<double> noext_partial_deficits(const std::vector<Count>& n);

// P(a particle at 0 dies out before reaching level n.size()) for line_noext,
// a lower bound on the extinction probability of the untruncated chain.
double noext_escape_bound(const std::vector<Count>& n);

}  // namespace brw
