#include "brwlab/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "brwlab/csv.hpp"
#include "brwlab/serialize.hpp"

namespace brw {

void DriftParams::validate() const {
  if (!(rho_bar > 0.0) || !std::isfinite(rho_bar)) throw ValidationError("rho_bar must be positive");
  if (!(p >= 0.0) || !(q >= 0.0) || p + q > 1.0 + 1e-15)
    throw ValidationError("need p, q >= 0 and p + q <= 1");
}

namespace {

// e * log(x / e) with the conventions 0 log 0 = 0 and e log 0 = -inf.
double xlog_ratio(double x, double e) {
  if (e == 0.0) return 0.0;
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return e * (std::log(x) - std::log(e));
}

}  // namespace

double q_value(const DriftParams& d, double alpha, double beta) {
  d.validate();
  const double e1 = beta, e2 = beta - alpha, e3 = 1.0 - 2.0 * beta + alpha;
  constexpr double slack = 1e-15;
  if (e1 < -slack || e2 < -slack || e3 < -slack)
    throw ValidationError("Q needs beta >= 0, beta >= alpha and 1 - 2 beta + alpha >= 0");
  const double r = std::max(0.0, 1.0 - d.p - d.q);
  const double log_q = std::log(d.rho_bar) + xlog_ratio(d.p, std::max(0.0, e1)) +
                       xlog_ratio(d.q, std::max(0.0, e2)) + xlog_ratio(r, std::max(0.0, e3));
  return std::exp(log_q);
}

namespace {

bool admissible(double a, double b) {
  return b >= 0.0 && b >= a && 1.0 - 2.0 * b + a >= 0.0 && a >= -1.0 && a <= 1.0;
}

bool q_above_one(const DriftParams& d, double a, double b) {
  return admissible(a, b) && q_value(d, a, b) > 1.0;
}

std::optional<DriftSelection> pick_integers(const DriftParams& d, double a1, double a2, double b1,
                                            double b2) {
  for (long long n = 1; n <= 100'000'000; ++n) {
    const double nn = static_cast<double>(n);
    const long long d1 = static_cast<long long>(std::ceil(a1 * nn));
    const long long d2 = d1 + 1;
    if (static_cast<double>(d2) > a2 * nn) continue;
    const long long d3 = std::max(static_cast<long long>(std::ceil(b1 * nn)), d2 + 1);
    if (static_cast<double>(d3) > b2 * nn) continue;
    DriftSelection s{a1, a2, b1, b2, d1, d2, d3, n, 0, 0};
    if (!admissible(d1 / nn, d3 / nn) || !admissible(d2 / nn, d3 / nn)) continue;
    s.q1 = q_value(d, d1 / nn, d3 / nn);
    s.q2 = q_value(d, d2 / nn, d3 / nn);
    return s;
  }
  return std::nullopt;
}

}  // namespace

SupercriticalRegion supercritical_region(const DriftParams& d, std::size_t resolution) {
  d.validate();
  if (resolution < 1) throw ValidationError("resolution must be at least 1");
  SupercriticalRegion out;
  out.resolution = resolution;
  const double h = 1.0 / static_cast<double>(resolution);
  const long long res = static_cast<long long>(resolution);
  for (long long i = -res; i <= res; ++i) {
    for (long long j = 0; j <= res; ++j) {
      const double a = static_cast<double>(i) * h, b = static_cast<double>(j) * h;
      if (!admissible(a, b)) continue;
      RegionPoint pt{a, b, q_value(d, a, b), false};
      pt.inside = pt.q > 1.0;
      out.inside_count += pt.inside;
      out.grid.push_back(pt);
    }
  }
  if (d.rho_bar <= 1.0) {
    out.message = "rho_bar <= 1: Q <= rho_bar <= 1 everywhere, region empty";
    return out;
  }
  const double ac = d.p - d.q, bc = d.p;
  std::optional<DriftSelection> best;
  for (long long k = 1; k <= res; ++k) {
    const double w = static_cast<double>(k) * h;
    const double a1 = ac - w, a2 = ac + w, b1 = bc - w, b2 = bc + w;
    if (a2 > b1) break;
    if (!(q_above_one(d, a1, b1) && q_above_one(d, a1, b2) && q_above_one(d, a2, b1) &&
          q_above_one(d, a2, b2)))
      break;
    best = pick_integers(d, a1, a2, b1, b2);
    if (best) break;  // the smallest square already gives the smallest N we look for
  }
  if (!best) {
    throw ValidationError("no rectangle with Q > 1 at resolution " + std::to_string(resolution) +
                          "; increase the resolution");
  }
  const DriftSelection& s = *best;
  const double nn = static_cast<double>(s.n);
  const bool ok = s.alpha1 * nn <= static_cast<double>(s.d1) && s.d1 < s.d2 &&
                  static_cast<double>(s.d2) <= s.alpha2 * nn &&
                  s.beta1 * nn <= static_cast<double>(s.d3) &&
                  static_cast<double>(s.d3) <= s.beta2 * nn && s.q1 > 1.0 && s.q2 > 1.0 &&
                  s.d3 != s.d1 && s.d3 != s.d2;
  if (!ok) throw InvariantViolation("selected (d1, d2, d3, N) fails its inequalities");
  out.selection = s;
  out.message = "rectangle found";
  return out;
}

std::string SupercriticalRegion::grid_csv() const {
  CsvTable t({"alpha", "beta", "Q", "inside"});
  for (const auto& pt : grid)
    t.add_row({format_double(pt.alpha), format_double(pt.beta), format_double(pt.q),
               pt.inside ? "1" : "0"});
  return t.str();
}

bool chebyshev_bound_holds(double sigma2, double D, double eps, long long k) {
  if (sigma2 == 0.0) return true;
  return sigma2 / (D * D * static_cast<double>(k) + sigma2) <= eps;
}

long long chebyshev_k(double sigma2, double D, double eps) {
  if (!(sigma2 >= 0.0) || !(D >= 1.0) || !(eps > 0.0 && eps < 1.0))
    throw ValidationError("chebyshev_k needs sigma2 >= 0, D >= 1, eps in (0,1)");
  if (sigma2 == 0.0) return 0;
  double guess = std::ceil(sigma2 * (1.0 - eps) / (eps * D * D));
  if (!(guess < 9e18)) throw ValidationError("chebyshev_k overflows");
  long long k = std::max(0LL, static_cast<long long>(guess));
  // The closed form can be off by one after rounding; settle on the exact
  // minimum of the inequality as evaluated.
  while (k > 0 && chebyshev_bound_holds(sigma2, D, eps, k - 1)) --k;
  while (!chebyshev_bound_holds(sigma2, D, eps, k)) ++k;
  return k;
}

double variance_bound(const IntDistribution& rho, std::size_t n) {
  if (n < 1) throw ValidationError("variance_bound needs n >= 1");
  return std::pow(rho.mean(), static_cast<double>(n - 1)) * rho.variance();
}

double second_moment_bound(const IntDistribution& rho, std::size_t n) {
  if (n < 1) throw ValidationError("second_moment_bound needs n >= 1");
  const double m = rho.mean(), v = rho.variance();
  const double nn = static_cast<double>(n);
  if (std::abs(m - 1.0) < 1e-12) return nn * v;
  return v * std::pow(m, nn - 1.0) * (std::pow(m, nn) - 1.0) / (m - 1.0);
}

namespace {

struct PercolationGraph {
  std::vector<long long> labels;
  std::vector<std::vector<std::uint32_t>> out;  // self first, then neighbours
  std::uint32_t origin = 0;
};

PercolationGraph percolation_graph(const PercolationConfig& c) {
  PercolationGraph g;
  std::vector<std::pair<long long, long long>> edges;
  long long lo = 0, hi = 0;
  switch (c.base) {
    case PercolationConfig::Base::z_window:
      lo = -c.radius;
      hi = c.radius;
      break;
    case PercolationConfig::Base::n_window:
      lo = 0;
      hi = c.radius;
      break;
    case PercolationConfig::Base::custom:
      lo = 0;
      hi = c.sites - 1;
      break;
  }
  if (hi < lo) throw ValidationError("percolation window is empty");
  for (long long x = lo; x <= hi; ++x) g.labels.push_back(x);
  if (c.base == PercolationConfig::Base::custom) {
    edges = c.edges;
  } else {
    for (long long x = lo; x < hi; ++x) edges.emplace_back(x, x + 1);
  }
  const std::size_t n = g.labels.size();
  g.out.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.out[i].push_back(static_cast<std::uint32_t>(i));
  for (auto [a, b] : edges) {
    if (a < lo || a > hi || b < lo || b > hi) throw ValidationError("percolation edge leaves I");
    const auto ia = static_cast<std::uint32_t>(a - lo), ib = static_cast<std::uint32_t>(b - lo);
    if (ia == ib) continue;
    g.out[ia].push_back(ib);
    g.out[ib].push_back(ia);
  }
  for (auto& o : g.out) {
    std::sort(o.begin() + 1, o.end());
    o.erase(std::unique(o.begin() + 1, o.end()), o.end());
  }
  if (c.origin < lo || c.origin > hi) throw ValidationError("percolation origin outside I");
  g.origin = static_cast<std::uint32_t>(c.origin - lo);
  return g;
}

}  // namespace

PercolationResult oriented_percolation(const PercolationConfig& config, std::size_t replicas,
                                       std::uint64_t seed, unsigned threads) {
  if (!(config.p >= 0.0 && config.p <= 1.0)) throw ValidationError("p must lie in [0,1]");
  if (config.horizon < 1) throw ValidationError("horizon must be at least 1");
  if (replicas < 1) throw ValidationError("replicas must be at least 1");
  const PercolationGraph g = percolation_graph(config);
  const std::size_t n = g.labels.size();
  PercolationResult res;
  res.p = config.p;
  res.replicas = replicas;
  res.per_replica.resize(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    std::vector<char> wet(n, 0), next(n, 0);
    wet[g.origin] = 1;
    PercolationReplica rep;
    for (std::size_t level = 0; level < config.horizon; ++level) {
      std::fill(next.begin(), next.end(), 0);
      bool any = false;
      for (std::size_t x = 0; x < n; ++x) {
        if (!wet[x]) continue;
        CounterStream s(seed, kDomainPercolation, static_cast<std::uint32_t>(r),
                        static_cast<std::uint32_t>(level), static_cast<std::uint32_t>(x));
        for (auto y : g.out[x]) {
          // One uniform per oriented edge, always drawn, so edge e reads
          // the same number whatever the state.
          if (s.uniform() < config.p) {
            next[y] = 1;
            any = true;
          }
        }
      }
      wet.swap(next);
      if (!any) break;
      rep.max_level = level + 1;
      if (wet[g.origin]) ++rep.revisits;
    }
    rep.survived = rep.max_level == config.horizon;
    res.per_replica[r] = rep;
  });
  res.min_revisits = std::numeric_limits<std::size_t>::max();
  double total = 0;
  for (const auto& rep : res.per_replica) {
    res.survived += rep.survived;
    total += static_cast<double>(rep.revisits);
    res.min_revisits = std::min(res.min_revisits, rep.revisits);
    res.max_revisits = std::max(res.max_revisits, rep.revisits);
  }
  res.frequency = static_cast<double>(res.survived) / static_cast<double>(replicas);
  res.ci = wilson_interval(res.survived, replicas);
  res.mean_revisits = total / static_cast<double>(replicas);
  return res;
}

namespace {

Verdict growth_verdict(const GrowthEstimate& g, double margin) {
  if (g.value > 1.0 + margin) return Verdict::survives;
  if (g.value < 1.0 - margin) return Verdict::dies;
  return Verdict::inconclusive;
}

}  // namespace

SpatialTable spatial_experiment(const BrwModel& model,
                                const std::vector<std::vector<VertexId>>& exhaustion, VertexId x0,
                                const SpatialOptions& opts) {
  if (!model.contains(x0)) throw ValidationError("x0 is not a model vertex");
  SpatialTable t;
  t.x0 = x0;
  const MomentMatrix full(model);
  t.full_growth = local_growth_rate(full, x0, opts.growth);
  t.full_verdict = growth_verdict(t.full_growth, opts.growth_margin);
  const auto seq = seneta_sequence(model, exhaustion, x0, opts.growth);
  for (std::size_t i = 0; i < exhaustion.size(); ++i) {
    SpatialRow row;
    row.index = i;
    row.size = exhaustion[i].size();
    row.growth = seq[i];
    row.verdict = growth_verdict(row.growth, opts.growth_margin);
    if (opts.replicas > 0) {
      const Sampler sampler(restrict_model(model, exhaustion[i]));
      TrialSpec spec;
      spec.eta0 = {{x0, 1}};
      spec.horizon = opts.horizon;
      spec.target = x0;
      spec.pop_cap = opts.pop_cap;
      row.mc = estimate_survival(sampler, spec, opts.replicas, opts.seed, opts.threads);
    }
    if (!t.crossing && t.full_verdict == Verdict::survives && row.verdict == Verdict::survives)
      t.crossing = i;
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string SpatialTable::csv() const {
  CsvTable t({"index", "size", "local_growth", "converged", "verdict", "mc_frequency", "mc_ci_low",
              "mc_ci_high", "mc_visit_frequency"});
  for (const auto& r : rows) {
    t.add_row({std::to_string(r.index), std::to_string(r.size), format_double(r.growth.value),
               r.growth.converged ? "1" : "0", to_string(r.verdict),
               r.mc ? format_double(r.mc->frequency) : "",
               r.mc ? format_double(r.mc->ci.low) : "", r.mc ? format_double(r.mc->ci.high) : "",
               r.mc ? format_double(r.mc->visit_frequency) : ""});
  }
  return t.str();
}

TruncationSweep truncation_sweep(const Sampler& sampler, std::vector<Count> caps,
                                 const TrialSpec& spec, std::size_t replicas, std::uint64_t seed,
                                 unsigned threads) {
  if (!std::is_sorted(caps.begin(), caps.end())) throw ValidationError("caps must be ascending");
  for (Count c : caps)
    if (c == 0) throw ValidationError("caps must be at least 1");
  if (caps.empty() || caps.back() != kUnboundedCap) caps.push_back(kUnboundedCap);
  TruncationSweep out;
  for (Count c : caps) {
    TrialSpec s = spec;
    s.cap = c;
    SweepRow row;
    row.cap = c;
    row.estimate = estimate_survival(sampler, s, replicas, seed, threads);
    double born = 0;
    for (const auto& o : row.estimate.outcomes) born += static_cast<double>(o.total_born);
    row.mean_total_born = born / static_cast<double>(replicas);
    out.rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i + 1 < out.rows.size(); ++i) {
    const auto& a = out.rows[i].estimate;
    const auto& b = out.rows[i + 1].estimate;
    for (std::size_t r = 0; r < replicas; ++r)
      if (a.outcomes[r].alive && !b.outcomes[r].alive) ++out.coupling_violations;
    if (a.frequency > b.frequency) out.monotone = false;
    if (a.ci.low > b.ci.high) out.overlapping_cis = false;
  }
  return out;
}

std::string TruncationSweep::csv(const std::string& scenario, const std::string& params,
                                 std::size_t horizon) const {
  CsvTable t({"scenario", "params", "m", "horizon", "replicas", "frequency", "ci_low", "ci_high",
              "visit_frequency", "visit_ci_low", "visit_ci_high", "overflows", "mean_N_horizon"});
  for (const auto& r : rows) {
    const auto& e = r.estimate;
    t.add_row({scenario, params, r.cap == kUnboundedCap ? "inf" : std::to_string(r.cap),
               std::to_string(horizon), std::to_string(e.replicas), format_double(e.frequency),
               format_double(e.ci.low), format_double(e.ci.high), format_double(e.visit_frequency),
               format_double(e.visit_ci.low), format_double(e.visit_ci.high),
               std::to_string(e.overflows), format_double(r.mean_total_born)});
  }
  return t.str();
}

namespace {

std::string param_of(const BrwModel& model, const std::string& key) {
  for (const auto& [k, v] : model.metadata().params)
    if (k == key) return v;
  return "";
}

std::string params_text(const BrwModel& model) {
  std::string s;
  for (const auto& [k, v] : model.metadata().params) {
    if (!s.empty()) s += ';';
    s += k + "=" + v;
  }
  return s;
}

}  // namespace

ApproximationReport approximation_report(const std::string& scenario, const ReportOptions& opts) {
  scenario_info(scenario);  // throws ScenarioError for unknown names
  const BrwModel model = build_scenario(scenario, opts.params);
  ApproximationReport rep;
  rep.scenario = scenario;
  rep.model_hash = model_hash(model);
  std::ostringstream summary;
  summary << "scenario " << scenario << " (" << model.size() << " vertices)\n";
  const VertexId x0 = model_origin(model);

  if (scenario == "zdrift") {
    const std::string rho_text = param_of(model, "rho");
    DriftParams d;
    d.rho_bar = rho_text.empty() ? std::stod(param_of(model, "rho_bar"))
                                 : IntDistribution::parse(rho_text).mean();
    d.p = std::stod(param_of(model, "p"));
    d.q = std::stod(param_of(model, "q"));
    const auto region = supercritical_region(d, opts.resolution);
    rep.sections.emplace_back("q_region", region.grid_csv());
    CsvTable sel({"alpha1", "alpha2", "beta1", "beta2", "d1", "d2", "d3", "N", "Q1", "Q2"});
    if (region.selection) {
      const auto& s = *region.selection;
      sel.add_row({format_double(s.alpha1), format_double(s.alpha2), format_double(s.beta1),
                   format_double(s.beta2), std::to_string(s.d1), std::to_string(s.d2),
                   std::to_string(s.d3), std::to_string(s.n), format_double(s.q1),
                   format_double(s.q2)});
    }
    rep.sections.emplace_back("q_selection", sel.str());
    summary << "Q region: " << region.inside_count << " grid points with Q > 1; "
            << region.message << "\n";
  }

  const IntDistribution rho = dominating_law(model);
  CsvTable bounds({"n", "variance_bound", "second_moment_bound", "chebyshev_k_variance_bound",
                   "chebyshev_k_second_moment"});
  for (std::size_t n = 1; n <= opts.nbar; ++n) {
    const double vb = variance_bound(rho, n), sm = second_moment_bound(rho, n);
    bounds.add_row({std::to_string(n), format_double(vb), format_double(sm),
                    std::to_string(chebyshev_k(vb, opts.D, opts.eps)),
                    std::to_string(chebyshev_k(sm, opts.D, opts.eps))});
  }
  rep.sections.emplace_back("bounds", bounds.str());
  summary << "dominating law " << rho.to_string() << ", chebyshev k at n=" << opts.nbar
          << ": " << chebyshev_k(variance_bound(rho, opts.nbar), opts.D, opts.eps) << "\n";

  if (opts.spatial && model.size() > 1) {
    std::vector<std::size_t> radii = opts.radii;
    if (radii.empty())
      for (std::size_t r = 1; r <= 8; ++r) radii.push_back(r);
    const auto exhaustion = ball_exhaustion(model, x0, radii);
    const auto table = spatial_experiment(model, exhaustion, x0);
    rep.sections.emplace_back("spatial", table.csv());
    summary << "spatial: full local growth " << format_double(table.full_growth.value);
    if (table.crossing) summary << ", restricted growth exceeds 1 from radius " << radii[*table.crossing];
    summary << "\n";
  } else if (opts.spatial) {
    summary << "spatial: skipped (single vertex)\n";
  }

  if (opts.sweep) {
    const Sampler sampler(model);
    TrialSpec spec;
    spec.eta0 = {{x0, 1}};
    spec.horizon = opts.horizon;
    spec.target = x0;
    spec.pop_cap = opts.pop_cap;
    std::vector<Count> caps = opts.caps;
    std::sort(caps.begin(), caps.end());
    const auto sweep = truncation_sweep(sampler, caps, spec, opts.replicas, opts.seed, opts.threads);
    rep.sections.emplace_back("sweep", sweep.csv(scenario, params_text(model), opts.horizon));
    for (const auto& r : sweep.rows) rep.overflow = rep.overflow || r.estimate.overflows > 0;
    summary << "sweep: " << (sweep.monotone ? "monotone" : "not monotone") << " in m, "
            << sweep.coupling_violations << " coupling violations\n";
  }
  rep.summary = summary.str();
  return rep;
}

}  // namespace brw
