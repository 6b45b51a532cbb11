#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/genfun.hpp"
#include "brwlab/model.hpp"
#include "brwlab/scenarios.hpp"
#include "brwlab/simulate.hpp"
#include "brwlab/spectral.hpp"

namespace brw {

// Mean offspring rho_bar and the projected one-dimensional kernel
// {+1: p, -1: q, 0: 1-p-q}.
struct DriftParams {
  double rho_bar = 1.0;
  double p = 0.0;
  double q = 0.0;

  void validate() const;  // throws ValidationError
};

// Q(alpha, beta) = rho_bar p^b q^(b-a) r^(1-2b+a) / (b^b (b-a)^(b-a) (1-2b+a)^(1-2b+a))
// with r = 1-p-q, computed in log space with 0^0 = 1. Needs b >= 0,
// b >= a and 1-2b+a >= 0; throws ValidationError otherwise.
double q_value(const DriftParams& d, double alpha, double beta);

struct DriftSelection {
  double alpha1 = 0, alpha2 = 0, beta1 = 0, beta2 = 0;
  long long d1 = 0, d2 = 0, d3 = 0, n = 0;
  double q1 = 0, q2 = 0;  // Q(d1/n, d3/n), Q(d2/n, d3/n)
};

struct RegionPoint {
  double alpha = 0;
  double beta = 0;
  double q = 0;
  bool inside = false;
};

struct SupercriticalRegion {
  std::size_t resolution = 0;
  // Every admissible grid point, with Q and whether Q > 1.
  std::vector<RegionPoint> grid;
  std::size_t inside_count = 0;
  std::optional<DriftSelection> selection;
  std::string message;

  bool empty() const { return inside_count == 0 && !selection; }
  std::string grid_csv() const;
};

// Grid of step 1/resolution over alpha in [-1,1], beta in [0,1]. The
// rectangle is the largest square of half-width j/resolution centred at
// (p-q, p) whose corners have Q > 1 and with alpha2 <= beta1; Q is
// log-concave, so the whole rectangle then has Q > 1. N is the smallest
// integer admitting d1 < d2 < d3 with alpha1 N <= d1 < d2 <= alpha2 N and
// beta1 N <= d3 <= beta2 N. rho_bar <= 1 gives an empty region; a
// supercritical drift with no square at this resolution throws
// ValidationError with a refinement hint.
SupercriticalRegion supercritical_region(const DriftParams& d, std::size_t resolution = 100);

// Smallest integer k >= 0 with sigma2 / (D^2 k + sigma2) <= eps.
long long chebyshev_k(double sigma2, double D, double eps);
// The inequality chebyshev_k solves, as used by its minimality check.
bool chebyshev_bound_holds(double sigma2, double D, double eps, long long k);

// E(rho)^(n-1) var(rho).
double variance_bound(const IntDistribution& rho, std::size_t n);

// Exact variance of generation n of a Galton-Watson process with offspring
// law rho started from one particle:
// var(rho) m^(n-1) (m^n - 1)/(m - 1), or n var(rho) when m = 1.
double second_moment_bound(const IntDistribution& rho, std::size_t n);

struct PercolationConfig {
  enum class Base { z_window, n_window, custom };
  Base base = Base::z_window;
  // z_window: sites -radius..radius; n_window: sites 0..radius.
  long long radius = 10;
  // custom: sites 0..sites-1 and undirected edges.
  long long sites = 0;
  std::vector<std::pair<long long, long long>> edges;
  double p = 0.5;
  std::size_t horizon = 100;
  long long origin = 0;
};

struct PercolationReplica {
  bool survived = false;
  std::size_t revisits = 0;  // levels 1..horizon where (origin, l) is wet
  std::size_t max_level = 0;
};

struct PercolationResult {
  double p = 0;
  std::size_t replicas = 0;
  std::size_t survived = 0;
  double frequency = 0;
  Interval ci;
  double mean_revisits = 0;
  std::size_t min_revisits = 0;
  std::size_t max_revisits = 0;
  std::vector<PercolationReplica> per_replica;
};

// Oriented site-to-site percolation on I x N: (x,l) -> (y,l+1) for each
// edge {x,y} of I and for y = x. Each oriented edge is open with
// probability p, decided by the uniform from stream (seed, replica, l, x),
// so runs at different p with one seed are coupled monotonically.
PercolationResult oriented_percolation(const PercolationConfig& config, std::size_t replicas,
                                       std::uint64_t seed, unsigned threads = 0);

struct SpatialOptions {
  GrowthOptions growth;
  double growth_margin = 1e-3;
  // Monte Carlo on each restricted model when replicas > 0.
  std::size_t replicas = 0;
  std::size_t horizon = 100;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  Count pop_cap = 1'000'000;
};

struct SpatialRow {
  std::size_t index = 0;
  std::size_t size = 0;
  GrowthEstimate growth;
  Verdict verdict = Verdict::inconclusive;
  std::optional<SurvivalEstimate> mc;
};

struct SpatialTable {
  VertexId x0 = 0;
  GrowthEstimate full_growth;
  Verdict full_verdict = Verdict::inconclusive;
  std::vector<SpatialRow> rows;
  // First row whose restricted growth exceeds 1 + margin, when the full
  // model survives locally.
  std::optional<std::size_t> crossing;

  std::string csv() const;
};

SpatialTable spatial_experiment(const BrwModel& model,
                                const std::vector<std::vector<VertexId>>& exhaustion,
                                VertexId x0, const SpatialOptions& opts = {});

struct SweepRow {
  Count cap = kUnboundedCap;
  SurvivalEstimate estimate;
  double mean_total_born = 0;
};

struct TruncationSweep {
  std::vector<SweepRow> rows;  // caps ascending, then the m = infinity baseline
  // Replicas where a smaller cap survived but a larger one did not. Zero
  // under the shared-stream coupling.
  std::size_t coupling_violations = 0;
  bool monotone = true;          // frequencies nondecreasing in m
  bool overlapping_cis = true;   // each CI overlaps the next one

  // scenario,params,m,horizon,replicas,frequency,ci_low,ci_high,...
  std::string csv(const std::string& scenario, const std::string& params,
                  std::size_t horizon) const;
};

// BRW_m for every cap plus the untruncated walk, all with the streams
// (seed, r), so replica r of every row is one coupled trajectory family.
TruncationSweep truncation_sweep(const Sampler& sampler, std::vector<Count> caps,
                                 const TrialSpec& spec, std::size_t replicas,
                                 std::uint64_t seed, unsigned threads = 0);

struct ReportOptions {
  ParamMap params;
  bool spatial = true;
  bool sweep = true;
  std::vector<std::size_t> radii;  // empty: 1..min(8, model extent)
  std::vector<Count> caps{1, 2, 4, 8, 16};
  std::size_t horizon = 100;
  std::size_t replicas = 500;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  Count pop_cap = 1'000'000;
  std::size_t resolution = 100;
  double eps = 0.1;
  double D = 1.0;
  std::size_t nbar = 5;
};

struct ApproximationReport {
  std::string scenario;
  std::string model_hash;
  // Section name -> CSV body, in a fixed order.
  std::vector<std::pair<std::string, std::string>> sections;
  std::string summary;
  bool overflow = false;
};

// Runs the analytic sections (Q region for drifting models, chebyshev k
// and variance bounds for the dominating law) plus spatial and truncation
// experiments. Throws ScenarioError for unknown scenarios.
ApproximationReport approximation_report(const std::string& scenario,
                                         const ReportOptions& opts = {});

}  // namespace brw
