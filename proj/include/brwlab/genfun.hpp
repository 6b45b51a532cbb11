#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/model.hpp"
#include "brwlab/scenarios.hpp"
#include "brwlab/spectral.hpp"

namespace brw {

// G(z|x) = sum_f mu_x(f) prod_y z(y)^f(y), for every vertex x.
FieldVector eval_G(const BrwModel& model, const FieldVector& z);

// 1 / (1 + M(1 - z)) coordinatewise: G for geometric counterpart laws.
FieldVector eval_G_geometric(const MomentMatrix& m, const FieldVector& z);

struct ExtinctionTarget {
  // Empty means global extinction.
  std::vector<VertexId> set;
  bool global = true;

  static ExtinctionTarget everywhere() { return {}; }
  static ExtinctionTarget in_set(std::vector<VertexId> a) { return {std::move(a), false}; }
};

struct ExtinctionOptions {
  double tol = 1e-12;
  std::size_t max_iter = 1'000'000;
  // Coordinates held fixed during the iteration (boundary conditions).
  std::vector<std::pair<VertexId, double>> pinned;
  // Keep the residual of every k-th iteration.
  std::size_t history_every = 0;
};

struct ExtinctionResult {
  FieldVector q;
  bool converged = false;
  std::size_t iterations = 0;
  double last_step = 0.0;
  double residual = 0.0;
  // Largest decrease seen between consecutive iterates (rounding only).
  double monotonicity_slack = 0.0;
  std::vector<std::pair<std::size_t, double>> residual_history;
};

// Global target: z_{n+1} = G(z_n) from 0, converging up to q_bar.
// Set target A: first the probability r of never visiting A (decreasing
// iteration of z -> 1_{A^c} G(z) from 1_{A^c}), then z_{n+1} = G(z_n) from r,
// which increases to q(.,A). Stops when both the step and the residual
// |G(z) - z| drop below tol.
ExtinctionResult iterate_extinction(const BrwModel& model,
                                    const ExtinctionTarget& target = {},
                                    const ExtinctionOptions& opts = {});

struct SubsolutionVerdict {
  bool ok = false;
  double max_violation = 0.0;  // max_x G(z|x) - z(x), clipped at 0
  std::optional<VertexId> worst;
  bool x0_below_one = false;
  // Boundary vertices of a truncation. Their laws lose the children that
  // leave the window, so the inequality is not checked there.
  std::vector<VertexId> skipped;
};

// G(z) <= z + tol on every interior vertex and z(x0) < 1 - tol.
SubsolutionVerdict check_subsolution(const BrwModel& model, const FieldVector& z,
                                     VertexId x0, double tol = 1e-12);

struct MeanConditionVerdict {
  bool ok = false;
  double max_violation = 0.0;  // max_x v(x) - (Mv)(x), clipped at 0
  bool v_x0_positive = false;
  // Per t in {0, 0.5}: vertices where G(1-(1-t)v) = 1-(1-t)v within 1e-10.
  std::vector<std::pair<double, std::vector<VertexId>>> equality_vertices;
};

// Mv >= v - 1e-12 and v(x0) > 0. With a model, also reports the equality
// clause at t = 0 and t = 0.5.
MeanConditionVerdict check_mean_condition(const MomentMatrix& m, const FieldVector& v,
                                          VertexId x0, const BrwModel* model = nullptr);

// Largest v in [0,1]^X with Mv >= v (limit of v <- min(v, Mv) from 1).
FieldVector mean_condition_witness(const MomentMatrix& m, std::size_t max_iter = 100000);

enum class Verdict { survives, dies, inconclusive };
const char* to_string(Verdict v);

struct StrongLocalVerdict {
  VertexId y = 0;
  Verdict strong = Verdict::inconclusive;  // survives = "yes", dies = "no"
  double q_x0_y = 1.0;
  double qbar_x0 = 1.0;
};

// Strong local survival at y from x0: |q(x0,y) - q_bar(x0)| <= tol and
// q_bar(x0) < 1 - tol.
StrongLocalVerdict strong_local_compare(const BrwModel& model, VertexId x0, VertexId y,
                                        double tol = 1e-6,
                                        const ExtinctionOptions& opts = {});

struct ClassifyOptions {
  double growth_margin = 1e-3;
  double q_tol = 1e-6;
  GrowthOptions growth;
  ExtinctionOptions extinction;
  // Use a registered finite quotient to decide global survival.
  bool use_quotient = true;
  // Extra truncations for the global verdict when no shortcut applies.
  std::vector<BrwModel> ladder;
  std::vector<VertexId> strong_targets;
};

struct SurvivalReport {
  VertexId x0 = 0;
  Verdict local = Verdict::inconclusive;
  GrowthEstimate local_evidence;
  Verdict global = Verdict::inconclusive;
  std::string global_method;
  GrowthEstimate global_evidence;
  std::optional<double> qbar_x0;
  std::vector<double> ladder_qbar;
  bool mean_condition_holds = false;
  std::vector<StrongLocalVerdict> strong_local;
  std::size_t extinction_iterations = 0;
  double extinction_residual = 0.0;
  std::vector<std::string> notes;

  std::string to_text() const;
  // Evidence table: kind,n,value (growth terms, then ladder q values).
  std::string evidence_csv() const;
};

SurvivalReport classify_survival(const BrwModel& model, VertexId x0,
                                 const ClassifyOptions& opts = {});

struct SweepOptions {
  double lo = 1e-3;
  double hi = 10.0;
  double width = 1e-4;
  // Lambdas for the q_bar table (may be empty).
  std::vector<double> grid;
  GrowthOptions growth;
  ExtinctionOptions extinction;
  // Skip the model's own q_bar in the table above this many vertices.
  std::size_t qbar_size_limit = 20000;
};

struct LambdaRow {
  double lambda = 0.0;
  double local_rate = 0.0;
  double global_rate = 0.0;
  std::optional<double> qbar_model;     // q_bar of the truncation at x0
  std::optional<double> qbar_quotient;  // q_bar of the untruncated model via its quotient
};

struct LambdaSweepResult {
  double lambda_s = 0.0;
  double lambda_w = 0.0;
  std::pair<double, double> lambda_s_bracket;
  std::pair<double, double> lambda_w_bracket;
  std::string lambda_w_method;
  std::vector<LambdaRow> table;
  bool qbar_nonincreasing = true;

  std::string table_csv() const;
};

// Bisects lambda_s (local growth of the counterpart model at x0 crossing 1)
// and lambda_w (global growth crossing 1, through the quotient when the
// rates carry one). Throws ValidationError when [lo, hi] does not bracket.
LambdaSweepResult lambda_sweep(const RateMatrix& rates, VertexId x0,
                               const SweepOptions& opts = {});

}  // namespace brw
