#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "brwlab/graph.hpp"
#include "brwlab/model.hpp"

namespace brw {

// Sparse first-moment matrix m_xy.
class MomentMatrix {
 public:
  explicit MomentMatrix(const BrwModel& model);
  MomentMatrix(std::vector<VertexId> vertices, const std::vector<Row>& rows);
  // Vertices are 0..n-1.
  static MomentMatrix from_dense(const std::vector<std::vector<double>>& m);

  std::size_t size() const { return vertices_.size(); }
  const std::vector<VertexId>& vertices() const { return vertices_; }
  std::size_t index_of(VertexId v) const;  // throws ValidationError
  bool contains(VertexId v) const { return index_.count(v) > 0; }

  double at(std::size_t i, std::size_t j) const;
  double row_sum(std::size_t i) const { return row_sums_[i]; }
  double max_row_sum() const;
  const std::vector<std::size_t>& offsets() const { return offsets_; }
  const std::vector<std::uint32_t>& columns() const { return cols_; }
  const std::vector<double>& weights() const { return weights_; }

  const Digraph& graph() const { return graph_; }
  const Components& components() const { return comps_; }
  // Period of the communicating class of vertex index i (0 if the class
  // has no cycle).
  std::size_t period(std::size_t i) const { return periods_[comps_.component[i]]; }

  // out = v M (row vector times matrix).
  void left_multiply(const std::vector<double>& v, std::vector<double>& out) const;
  // out = M v.
  void right_multiply(const std::vector<double>& v, std::vector<double>& out) const;

  // (m_xy) restricted to x, y in subset.
  MomentMatrix submatrix(const std::vector<VertexId>& subset) const;

 private:
  void finish();

  std::vector<VertexId> vertices_;
  std::unordered_map<VertexId, std::size_t> index_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> cols_;
  std::vector<double> weights_;
  std::vector<double> row_sums_;
  Digraph graph_;
  Components comps_;
  std::vector<std::size_t> periods_;
};

MomentMatrix moment_matrix(const BrwModel& model);

// eta0 M^n as a field over the vertices, by n sparse products.
std::vector<double> expected_population(const MomentMatrix& m,
                                        const std::vector<double>& eta0,
                                        std::size_t n);

struct GrowthTerm {
  std::size_t n = 0;
  double term = 0.0;        // (a_n)^(1/n)
  bool on_subsequence = false;
};

struct GrowthEstimate {
  double value = 0.0;
  std::vector<GrowthTerm> sequence;
  std::size_t period = 1;
  std::string subsequence_rule;
  bool converged = false;
  double tolerance = 1e-3;
  std::size_t steps = 0;

  // Rows "n,term,subsequence" with a header line.
  std::string to_csv() const;
};

struct GrowthOptions {
  std::size_t n_max = 4000;
  // Convergence flag: last three ratio estimates agree to this relative
  // tolerance.
  double rel_tol = 1e-3;
  // Iteration stops early once successive estimates agree to this.
  double stop_tol = 1e-13;
  // Keep every k-th term in the reported sequence (the tail is always kept).
  std::size_t record_every = 1;
};

// limsup_n (m^(n)_{x0 x0})^(1/n), read off the n = 0 mod period
// subsequence inside the communicating class of x0. The value is the ratio
// estimate (a_n / a_{n-d})^(1/d), with an Aitken step when the ratios
// converge geometrically.
GrowthEstimate local_growth_rate(const MomentMatrix& m, VertexId x0,
                                 const GrowthOptions& opts = {});

// liminf_n (sum_x m^(n)_{x0 x})^(1/n) from row sums of x0 M^n. When the
// row sums vanish (a nilpotent truncation) the estimate uses the nonzero
// terms and says so in subsequence_rule.
GrowthEstimate global_growth_rate(const MomentMatrix& m, VertexId x0,
                                  const GrowthOptions& opts = {});

struct SeriesResult {
  double value = 0.0;
  bool diverged = false;
  std::size_t terms = 0;
  // Bound on the neglected tail (infinity when none is available).
  double remainder_bound = 0.0;
};

// Phi(x,x|lambda) = sum_{n>=1} phi^(n)_xx lambda^n over paths that avoid x
// at intermediate steps.
SeriesResult first_return_series(const MomentMatrix& m, VertexId x,
                                 double lambda, std::size_t n_max = 100000);

// Gamma(x,x|lambda) = sum_{n>=0} m^(n)_xx lambda^n.
SeriesResult green_series(const MomentMatrix& m, VertexId x, double lambda,
                          std::size_t n_max = 100000);

// Local growth rate at x0 of (m_xy) restricted to each set of the
// exhaustion.
std::vector<GrowthEstimate> seneta_sequence(
    const BrwModel& model, const std::vector<std::vector<VertexId>>& exhaustion,
    VertexId x0, const GrowthOptions& opts = {});

}  // namespace brw
