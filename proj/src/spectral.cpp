#include "brwlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace brw {

MomentMatrix::MomentMatrix(const BrwModel& model) : vertices_(model.vertices()) {
  for (std::size_t i = 0; i < size(); ++i) index_.emplace(vertices_[i], i);
  for (std::size_t i = 0; i < size(); ++i) {
    for (const auto& e : model.law(i).mean_row()) {
      if (e.weight <= 0.0) continue;
      cols_.push_back(static_cast<std::uint32_t>(index_.at(e.vertex)));
      weights_.push_back(e.weight);
    }
    offsets_.push_back(cols_.size());
  }
  finish();
}

MomentMatrix::MomentMatrix(std::vector<VertexId> vertices,
                           const std::vector<Row>& rows)
    : vertices_(std::move(vertices)) {
  if (rows.size() != vertices_.size())
    throw ValidationError("moment matrix needs one row per vertex");
  for (std::size_t i = 0; i < size(); ++i)
    if (!index_.emplace(vertices_[i], i).second)
      throw ValidationError("duplicate vertex in moment matrix");
  for (const Row& raw : rows) {
    for (const auto& e : normalize_row(raw)) {
      if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
        throw ValidationError("moment weights must be finite and nonnegative");
      if (e.weight == 0.0) continue;
      auto it = index_.find(e.vertex);
      if (it == index_.end())
        throw ValidationError("moment row points outside the vertex set");
      cols_.push_back(static_cast<std::uint32_t>(it->second));
      weights_.push_back(e.weight);
    }
    offsets_.push_back(cols_.size());
  }
  finish();
}

MomentMatrix MomentMatrix::from_dense(const std::vector<std::vector<double>>& m) {
  std::vector<VertexId> ids(m.size());
  std::iota(ids.begin(), ids.end(), VertexId{0});
  std::vector<Row> rows(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != m.size()) throw ValidationError("dense matrix is not square");
    for (std::size_t j = 0; j < m.size(); ++j)
      if (m[i][j] != 0.0) rows[i].push_back({static_cast<VertexId>(j), m[i][j]});
  }
  return MomentMatrix(std::move(ids), rows);
}

void MomentMatrix::finish() {
  row_sums_.assign(size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) row_sums_[i] += weights_[k];
  graph_.offsets = offsets_;
  graph_.targets = cols_;
  comps_ = strongly_connected_components(graph_);
  periods_.resize(comps_.members.size());
  for (std::size_t c = 0; c < comps_.members.size(); ++c)
    periods_[c] = component_period(graph_, comps_, comps_.members[c].front());
}

std::size_t MomentMatrix::index_of(VertexId v) const {
  auto it = index_.find(v);
  if (it == index_.end())
    throw ValidationError("vertex " + std::to_string(v) + " not in matrix");
  return it->second;
}

double MomentMatrix::at(std::size_t i, std::size_t j) const {
  for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k)
    if (cols_[k] == j) return weights_[k];
  return 0.0;
}

double MomentMatrix::max_row_sum() const {
  return row_sums_.empty() ? 0.0 : *std::max_element(row_sums_.begin(), row_sums_.end());
}

void MomentMatrix::left_multiply(const std::vector<double>& v,
                                 std::vector<double>& out) const {
  out.assign(size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k)
      out[cols_[k]] += vi * weights_[k];
  }
}

void MomentMatrix::right_multiply(const std::vector<double>& v,
                                  std::vector<double>& out) const {
  out.assign(size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) acc += weights_[k] * v[cols_[k]];
    out[i] = acc;
  }
}

MomentMatrix MomentMatrix::submatrix(const std::vector<VertexId>& subset) const {
  std::unordered_map<VertexId, std::size_t> keep;
  for (VertexId v : subset) {
    index_of(v);
    keep.emplace(v, keep.size());
  }
  std::vector<VertexId> ids(subset.begin(), subset.end());
  std::vector<Row> rows(ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const std::size_t i = index_of(ids[r]);
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      VertexId y = vertices_[cols_[k]];
      if (keep.count(y)) rows[r].push_back({y, weights_[k]});
    }
  }
  return MomentMatrix(std::move(ids), rows);
}

MomentMatrix moment_matrix(const BrwModel& model) { return MomentMatrix(model); }

std::vector<double> expected_population(const MomentMatrix& m,
                                        const std::vector<double>& eta0,
                                        std::size_t n) {
  if (eta0.size() != m.size()) throw ValidationError("eta0 has the wrong length");
  std::vector<double> v = eta0, next;
  for (std::size_t k = 0; k < n; ++k) {
    m.left_multiply(v, next);
    v.swap(next);
  }
  return v;
}

std::string GrowthEstimate::to_csv() const {
  std::ostringstream out;
  out << "n,term,subsequence\n";
  char buf[64];
  for (const auto& t : sequence) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%d\n", t.n, t.term, t.on_subsequence ? 1 : 0);
    out << buf;
  }
  return out.str();
}

namespace {

// Ratio estimates r_k with a guarded Aitken step on the last three.
double extrapolate(const std::vector<double>& r) {
  if (r.empty()) return 0.0;
  const std::size_t k = r.size();
  if (k < 3) return r.back();
  const double d1 = r[k - 2] - r[k - 3];
  const double d2 = r[k - 1] - r[k - 2];
  if (std::abs(d2) <= 1e-12 * std::abs(r[k - 1]) || d1 == 0.0) return r.back();
  const double q = d2 / d1;
  if (!(q > 0.0 && q < 0.99)) return r.back();
  return r[k - 1] + d2 * q / (1.0 - q);
}

bool agree(const std::vector<double>& r, double value, double tol) {
  if (r.size() < 3) return false;
  for (std::size_t i = r.size() - 3; i < r.size(); ++i)
    if (std::abs(r[i] - value) > tol * std::max(std::abs(value), 1e-300)) return false;
  return true;
}

// Tracks log a_n for a nonnegative vector iteration kept at unit max norm.
struct LogScaled {
  std::vector<double> v, next;
  double log_scale = 0.0;

  // Returns false once the vector is identically zero.
  bool renormalize() {
    double s = 0.0;
    for (double x : v) s = std::max(s, x);
    if (s == 0.0) return false;
    for (double& x : v) x /= s;
    log_scale += std::log(s);
    return true;
  }
};

}  // namespace

GrowthEstimate local_growth_rate(const MomentMatrix& m, VertexId x0,
                                 const GrowthOptions& opts) {
  const std::size_t i0 = m.index_of(x0);
  GrowthEstimate est;
  est.tolerance = opts.rel_tol;
  const std::size_t d = m.period(i0);
  est.period = d;
  if (d == 0) {
    est.value = 0.0;
    est.converged = true;
    est.subsequence_rule = "no return paths to x0; every m^(n)_x0x0 is 0";
    return est;
  }
  char rule[128];
  std::snprintf(rule, sizeof rule, "n = 0 mod %zu inside the class of x0", d);
  est.subsequence_rule = rule;

  // Work on the class of x0 only; returns never leave it.
  const auto& members = m.components().members[m.components().component[i0]];
  std::vector<std::uint32_t> local(m.size(), ~std::uint32_t{0});
  for (std::size_t k = 0; k < members.size(); ++k) local[members[k]] = static_cast<std::uint32_t>(k);
  std::vector<std::size_t> off{0};
  std::vector<std::uint32_t> col;
  std::vector<double> w;
  for (auto u : members) {
    for (std::size_t k = m.offsets()[u]; k < m.offsets()[u + 1]; ++k) {
      auto c = local[m.columns()[k]];
      if (c == ~std::uint32_t{0}) continue;
      col.push_back(c);
      w.push_back(m.weights()[k]);
    }
    off.push_back(col.size());
  }
  const std::size_t n_local = members.size();
  const std::uint32_t s0 = local[i0];

  LogScaled it;
  it.v.assign(n_local, 0.0);
  it.v[s0] = 1.0;
  std::vector<double> ratios;
  double prev_log = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
  while (n < opts.n_max) {
    ++n;
    it.next.assign(n_local, 0.0);
    for (std::size_t u = 0; u < n_local; ++u) {
      const double vu = it.v[u];
      if (vu == 0.0) continue;
      for (std::size_t k = off[u]; k < off[u + 1]; ++k) it.next[col[k]] += vu * w[k];
    }
    it.v.swap(it.next);
    if (!it.renormalize()) break;
    if (n % d != 0) {
      if (opts.record_every <= 1)
        est.sequence.push_back({n, 0.0, false});
      continue;
    }
    const double a = it.v[s0];
    if (a <= 0.0) {
      est.sequence.push_back({n, 0.0, true});
      continue;
    }
    const double log_a = std::log(a) + it.log_scale;
    if ((n / d) % std::max<std::size_t>(opts.record_every, 1) == 0)
      est.sequence.push_back({n, std::exp(log_a / static_cast<double>(n)), true});
    if (!std::isnan(prev_log))
      ratios.push_back(std::exp((log_a - prev_log) / static_cast<double>(d)));
    prev_log = log_a;
    const std::size_t k = ratios.size();
    if (k >= 3 &&
        std::abs(ratios[k - 1] - ratios[k - 2]) <= opts.stop_tol * ratios[k - 1] &&
        std::abs(ratios[k - 2] - ratios[k - 3]) <= opts.stop_tol * ratios[k - 1])
      break;
  }
  est.steps = n;
  if (!est.sequence.empty() && est.sequence.back().n != n && !std::isnan(prev_log))
    est.sequence.push_back({n - n % d, std::exp(prev_log / static_cast<double>(n - n % d)), true});
  if (ratios.empty()) {
    double best = 0.0;
    for (const auto& t : est.sequence) best = std::max(best, t.term);
    est.value = best;
    est.converged = false;
    return est;
  }
  est.value = extrapolate(ratios);
  est.converged = agree(ratios, est.value, opts.rel_tol);
  return est;
}

GrowthEstimate global_growth_rate(const MomentMatrix& m, VertexId x0,
                                  const GrowthOptions& opts) {
  const std::size_t i0 = m.index_of(x0);
  GrowthEstimate est;
  est.tolerance = opts.rel_tol;
  // Window: lcm of the periods of reachable classes, capped.
  auto reach = reachable_from(m.graph(), static_cast<std::uint32_t>(i0));
  std::size_t d = 1;
  for (std::size_t c = 0; c < m.components().members.size(); ++c) {
    const auto u = m.components().members[c].front();
    if (!reach[u]) continue;
    const std::size_t p = m.period(u);
    if (p > 0) d = std::lcm(d, p);
    if (d > 64) {
      d = 1;
      break;
    }
  }
  est.period = d;

  LogScaled it;
  it.v.assign(m.size(), 0.0);
  it.v[i0] = 1.0;
  std::vector<double> log_s{0.0};  // log of the row sum at n = 0, 1, ...
  std::vector<double> ratios;
  std::size_t n = 0;
  bool nilpotent = false;
  while (n < opts.n_max) {
    ++n;
    m.left_multiply(it.v, it.next);
    it.v.swap(it.next);
    if (!it.renormalize()) {
      nilpotent = true;
      --n;
      break;
    }
    double s = 0.0;
    for (double x : it.v) s += x;
    const double ls = std::log(s) + it.log_scale;
    log_s.push_back(ls);
    if (n % std::max<std::size_t>(opts.record_every, 1) == 0)
      est.sequence.push_back({n, std::exp(ls / static_cast<double>(n)), true});
    if (n >= d) ratios.push_back(std::exp((ls - log_s[n - d]) / static_cast<double>(d)));
    const std::size_t k = ratios.size();
    if (k >= 3 &&
        std::abs(ratios[k - 1] - ratios[k - 2]) <= opts.stop_tol * ratios[k - 1] &&
        std::abs(ratios[k - 2] - ratios[k - 3]) <= opts.stop_tol * ratios[k - 1])
      break;
  }
  est.steps = n;
  if (!est.sequence.empty() && est.sequence.back().n != n && n > 0)
    est.sequence.push_back({n, std::exp(log_s[n] / static_cast<double>(n)), true});
  char rule[160];
  if (nilpotent) {
    std::snprintf(rule, sizeof rule,
                  "row sums vanish after n = %zu; estimate from the nonzero terms", n);
  } else {
    std::snprintf(rule, sizeof rule, "row sums of x0 M^n, ratios over windows of %zu", d);
  }
  est.subsequence_rule = rule;
  if (n == 0) {
    est.value = 0.0;
    est.converged = true;
    return est;
  }
  if (ratios.empty()) {
    est.value = std::exp(log_s[n] / static_cast<double>(n));
    est.converged = false;
    return est;
  }
  est.value = extrapolate(ratios);
  est.converged = agree(ratios, est.value, opts.rel_tol);
  return est;
}

namespace {

// Shared driver for the two series; taboo zeroes the x coordinate after
// reading each term.
SeriesResult walk_series(const MomentMatrix& m, VertexId x, double lambda,
                         std::size_t n_max, bool taboo) {
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be nonnegative");
  const std::size_t ix = m.index_of(x);
  SeriesResult res;
  std::vector<double> v(m.size(), 0.0), next;
  v[ix] = 1.0;
  double sum = taboo ? 0.0 : 1.0;
  const double contraction = lambda * m.max_row_sum();
  double prev_mass = 1.0;
  double last_ratio = 1.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    if (taboo) v[ix] = n == 1 ? 1.0 : 0.0;
    m.left_multiply(v, next);
    for (double& y : next) y *= lambda;
    v.swap(next);
    const double term = v[ix];
    sum += term;
    res.terms = n;
    if (!std::isfinite(sum) || sum > 1e300) {
      res.diverged = true;
      res.value = sum;
      res.remainder_bound = std::numeric_limits<double>::infinity();
      return res;
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(taboo && i == ix)) mass += v[i];
    // Future terms are bounded by the live mass times contraction^k.
    if (contraction < 1.0) {
      res.remainder_bound = mass * contraction / (1.0 - contraction);
    } else {
      last_ratio = prev_mass > 0.0 ? mass / prev_mass : 0.0;
      res.remainder_bound = last_ratio < 1.0
                                ? mass * last_ratio / (1.0 - last_ratio)
                                : std::numeric_limits<double>::infinity();
    }
    prev_mass = mass;
    if (mass == 0.0) {
      res.remainder_bound = 0.0;
      break;
    }
    if (res.remainder_bound <= 1e-17 * std::max(sum, 1e-300)) break;
  }
  res.value = sum;
  if (!std::isfinite(res.remainder_bound) && res.terms >= n_max) res.diverged = true;
  return res;
}

}  // namespace

SeriesResult first_return_series(const MomentMatrix& m, VertexId x, double lambda,
                                 std::size_t n_max) {
  return walk_series(m, x, lambda, n_max, true);
}

SeriesResult green_series(const MomentMatrix& m, VertexId x, double lambda,
                          std::size_t n_max) {
  return walk_series(m, x, lambda, n_max, false);
}

std::vector<GrowthEstimate> seneta_sequence(
    const BrwModel& model, const std::vector<std::vector<VertexId>>& exhaustion,
    VertexId x0, const GrowthOptions& opts) {
  const MomentMatrix full(model);
  std::vector<GrowthEstimate> out;
  for (const auto& set : exhaustion) {
    if (std::find(set.begin(), set.end(), x0) == set.end())
      throw ValidationError("x0 missing from an exhaustion set");
    out.push_back(local_growth_rate(full.submatrix(set), x0, opts));
  }
  return out;
}

}  // namespace brw
