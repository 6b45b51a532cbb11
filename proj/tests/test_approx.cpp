#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "brwlab/approx.hpp"
#include "brwlab/scenarios.hpp"
#include "doctest.h"

using namespace brw;

namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

// Direct product formula in 50-digit arithmetic, 0^0 = 1.
double q_oracle(double rho_bar, double p, double q, double a, double b) {
  auto pw = [](Big base, Big e) { return e == 0 ? Big(1) : boost::multiprecision::pow(base, e); };
  const Big A(a), B(b), r = 1 - Big(p) - Big(q), c = 1 - 2 * B + A;
  Big num = Big(rho_bar) * pw(Big(p), B) * pw(Big(q), B - A) * pw(r, c);
  Big den = pw(B, B) * pw(B - A, B - A) * pw(c, c);
  return static_cast<double>(num / den);
}

// Largest eigenvalue of the symmetric tridiagonal path matrix of size n
// with off-diagonal c.
double path_root(std::size_t n, double c) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(n));
  for (std::size_t i = 0; i + 1 < n; ++i)
    a(static_cast<long>(i), static_cast<long>(i + 1)) = a(static_cast<long>(i + 1), static_cast<long>(i)) = c;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().maxCoeff();
}

std::vector<VertexId> window(long long r) {
  std::vector<VertexId> out;
  for (long long i = -r; i <= r; ++i) out.push_back(i);
  return out;
}

}  // namespace

TEST_CASE("Q at the identity point is rho_bar") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    DriftParams d;
    d.rho_bar = 0.5 + 2.5 * u(gen);
    d.p = u(gen);
    d.q = (1.0 - d.p) * u(gen);
    CHECK(std::abs(q_value(d, d.p - d.q, d.p) - d.rho_bar) <= 1e-12);
  }
  CHECK(q_value({1.2, 0.25, 0.25}, 0.0, 0.25) == doctest::Approx(1.2).epsilon(1e-14));
  // Degenerate corners: q = 0 forces beta = alpha, no lateral steps forces
  // 1 - 2 beta + alpha = 0.
  CHECK(q_value({1.3, 0.6, 0.0}, 0.6, 0.6) == doctest::Approx(1.3).epsilon(1e-14));
  CHECK(q_value({1.3, 0.7, 0.3}, 0.4, 0.7) == doctest::Approx(1.3).epsilon(1e-14));
}

TEST_CASE("Q against an extended-precision oracle") {
  CHECK(q_value({1.2, 0.25, 0.25}, 0.05, 0.3) == doctest::Approx(1.1912906768972015125).epsilon(1e-14));
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int tested = 0;
  while (tested < 200) {
    const double p = 0.05 + 0.5 * u(gen), q = (0.9 - p) * u(gen) + 0.01;
    const double a = -0.5 + u(gen), b = u(gen);
    if (b < 0 || b < a || 1 - 2 * b + a < 0) continue;
    ++tested;
    CHECK(q_value({1.4, p, q}, a, b) == doctest::Approx(q_oracle(1.4, p, q, a, b)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(q_value({1.2, 0.25, 0.25}, 0.3, 0.2), ValidationError);
  CHECK_THROWS_AS(q_value({1.2, 0.25, 0.25}, 0.0, 0.6), ValidationError);
  CHECK_THROWS_AS(q_value({1.2, 0.7, 0.5}, 0.0, 0.3), ValidationError);
}

TEST_CASE("supercritical region") {
  auto empty = supercritical_region({0.95, 0.25, 0.25});
  CHECK(empty.empty());
  CHECK_FALSE(empty.message.empty());

  auto r = supercritical_region({1.2, 0.25, 0.25});
  REQUIRE(r.selection);
  const auto& s = *r.selection;
  CHECK(s.alpha1 <= 0.0);
  CHECK(s.alpha2 >= 0.0);
  CHECK(s.beta1 <= 0.25);
  CHECK(s.beta2 >= 0.25);
  CHECK(r.grid_csv().rfind("alpha,beta,Q,inside", 0) == 0);

  // Every returned selection satisfies the integer constraints.
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    DriftParams d;
    d.rho_bar = 1.05 + u(gen);
    d.p = 0.1 + 0.7 * u(gen);
    d.q = 0.1 + (0.8 - d.p) * u(gen);
    if (1 - d.p - d.q < 0.1) continue;
    auto reg = supercritical_region(d);
    REQUIRE(reg.selection);
    const auto& x = *reg.selection;
    const double n = static_cast<double>(x.n);
    CHECK(x.d1 < x.d2);
    CHECK(x.d2 < x.d3);
    CHECK(x.alpha1 * n <= x.d1 + 1e-9);
    CHECK(x.d2 <= x.alpha2 * n + 1e-9);
    CHECK(x.beta1 * n <= x.d3 + 1e-9);
    CHECK(x.d3 <= x.beta2 * n + 1e-9);
    CHECK(q_value(d, x.d1 / n, x.d3 / n) > 1.0);
    CHECK(q_value(d, x.d2 / n, x.d3 / n) > 1.0);
  }
}

TEST_CASE("chebyshev k") {
  CHECK(chebyshev_k(4.0, 1.0, 0.1) == 36);
  CHECK(chebyshev_k(0.0, 3.0, 0.2) == 0);
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double s2 = 100.0 * u(gen), D = 1.0 + 10.0 * u(gen), eps = 0.001 + 0.998 * u(gen);
    const long long k = chebyshev_k(s2, D, eps);
    CHECK(chebyshev_bound_holds(s2, D, eps, k));
    if (k > 0) CHECK_FALSE(chebyshev_bound_holds(s2, D, eps, k - 1));
  }
  // Halving eps roughly doubles k for small eps.
  const long long k1 = chebyshev_k(50.0, 1.0, 0.01), k2 = chebyshev_k(50.0, 1.0, 0.005);
  CHECK(k2 >= k1);
  CHECK(static_cast<double>(k2) / k1 == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("variance bounds") {
  auto point = IntDistribution::point_mass(3);
  for (std::size_t n : {1u, 4u}) CHECK(variance_bound(point, n) == 0.0);
  // Mean 2, variance 1.
  auto law = IntDistribution::parse("1:0.5,3:0.5");
  CHECK(variance_bound(law, 3) == doctest::Approx(4.0));

  // Exact Galton-Watson variance var(Z_n) = s^2 m^(n-1) (m^n - 1)/(m - 1).
  auto gw = IntDistribution::parse("0:0.4,2:0.6");
  const double m = gw.mean(), s2 = gw.variance();
  for (std::size_t n = 1; n <= 6; ++n) {
    const double exact = s2 * std::pow(m, n - 1.0) * (std::pow(m, static_cast<double>(n)) - 1) / (m - 1);
    CHECK(second_moment_bound(gw, n) == doctest::Approx(exact).epsilon(1e-12));
  }
  CHECK(second_moment_bound(IntDistribution::parse("0:0.5,2:0.5"), 5) == doctest::Approx(5.0));
  // The stated bound only matches the exact variance at n = 1 and is
  // smaller from n = 2 on.
  CHECK(variance_bound(gw, 1) == doctest::Approx(second_moment_bound(gw, 1)));
  CHECK(variance_bound(gw, 2) < second_moment_bound(gw, 2));

  // Empirical variance of Z_3 from a simulated GW stays under the exact
  // value plus noise.
  auto model = build_scenario("gw", {{"rho", "0:0.4,2:0.6"}});
  Sampler s(model);
  const std::size_t replicas = 10000, n = 3;
  double sum = 0, sum2 = 0;
  for (std::uint32_t r = 0; r < replicas; ++r) {
    auto st = PopulationState::from_vertices(model, {{0, 1}});
    for (std::size_t k = 0; k < n; ++k) st = step(st, s, {12, r});
    const double z = static_cast<double>(st.population());
    sum += z;
    sum2 += z * z;
  }
  const double mu = sum / replicas, var = sum2 / replicas - mu * mu;
  const double exact = second_moment_bound(gw, n);
  // Relative standard error of a sample variance is about sqrt(2/R) for
  // light tails; allow a wide band.
  CHECK(var <= exact * 1.15);
  CHECK(var >= exact * 0.85);
}

TEST_CASE("oriented percolation") {
  PercolationConfig cfg;
  cfg.radius = 5;
  cfg.horizon = 50;
  cfg.p = 1.0;
  auto all = oriented_percolation(cfg, 20, 1, 2);
  CHECK(all.frequency == 1.0);
  CHECK(all.min_revisits == 50);
  CHECK(all.max_revisits == 50);

  cfg.p = 0.0;
  auto none = oriented_percolation(cfg, 20, 1, 2);
  CHECK(none.survived == 0);
  CHECK(none.max_revisits == 0);
  for (const auto& r : none.per_replica) CHECK(r.max_level == 0);

  // Common random numbers: every replica's survival is monotone in p.
  cfg.horizon = 200;
  cfg.radius = 10;
  std::vector<PercolationResult> runs;
  for (double p : {0.2, 0.4, 0.5, 0.6, 0.7, 0.9}) {
    cfg.p = p;
    runs.push_back(oriented_percolation(cfg, 200, 7, 0));
  }
  for (std::size_t i = 1; i < runs.size(); ++i) {
    CHECK(runs[i].survived >= runs[i - 1].survived);
    for (std::size_t r = 0; r < 200; ++r) {
      CHECK(runs[i].per_replica[r].max_level >= runs[i - 1].per_replica[r].max_level);
      if (runs[i - 1].per_replica[r].survived) CHECK(runs[i].per_replica[r].survived);
    }
  }

  // Thread count does not change results.
  cfg.p = 0.55;
  auto a = oriented_percolation(cfg, 64, 3, 1), b = oriented_percolation(cfg, 64, 3, 4);
  CHECK(a.survived == b.survived);
  CHECK(a.mean_revisits == b.mean_revisits);

  PercolationConfig custom;
  custom.base = PercolationConfig::Base::custom;
  custom.sites = 3;
  custom.edges = {{0, 1}, {1, 2}};
  custom.p = 1.0;
  custom.horizon = 10;
  CHECK(oriented_percolation(custom, 5, 1, 1).frequency == 1.0);

  PercolationConfig bad;
  bad.p = 1.5;
  CHECK_THROWS_AS(oriented_percolation(bad, 1, 1, 1), ValidationError);
  bad.p = 0.5;
  bad.horizon = 0;
  CHECK_THROWS_AS(oriented_percolation(bad, 1, 1, 1), ValidationError);
}

TEST_CASE("spatial exhaustion") {
  // Symmetric nearest-neighbour walk with mean 1.5: restriction to a
  // window of 2r+1 sites has local growth 1.5 cos(pi/(2r+2)).
  auto model = build_scenario("zd_translation", {{"radius", "12"}});
  std::vector<std::vector<VertexId>> ex;
  for (long long r = 1; r <= 12; ++r) ex.push_back(window(r));
  auto t = spatial_experiment(model, ex, 0);
  REQUIRE(t.rows.size() == 12);
  double prev = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double oracle = path_root(2 * (i + 1) + 1, 0.75);
    CHECK(t.rows[i].growth.value == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(t.rows[i].growth.value == doctest::Approx(1.5 * std::cos(std::numbers::pi / (2.0 * (i + 1) + 2))).epsilon(1e-6));
    CHECK(t.rows[i].growth.value >= prev - 1e-9);
    prev = t.rows[i].growth.value;
  }
  CHECK(t.full_verdict == Verdict::survives);
  REQUIRE(t.crossing);
  CHECK(*t.crossing == 0);  // radius 1 already gives 1.5 cos(pi/4) > 1
  CHECK(t.csv().find("index") != std::string::npos);

  // A subcritical full model: every restriction dies.
  auto sub = build_scenario("zd_translation", {{"radius", "8"}, {"rho", "0:0.6,2:0.4"}});
  std::vector<std::vector<VertexId>> ex2{window(2), window(4), window(8)};
  auto d = spatial_experiment(sub, ex2, 0);
  for (const auto& row : d.rows) CHECK(row.verdict == Verdict::dies);
  CHECK_FALSE(d.crossing);

  // The constant exhaustion reproduces the full verdict.
  auto c = spatial_experiment(model, {model.vertices(), model.vertices()}, 0);
  for (const auto& row : c.rows) {
    CHECK(row.verdict == c.full_verdict);
    CHECK(row.growth.value == doctest::Approx(c.full_growth.value).epsilon(1e-9));
  }

  SpatialOptions mc;
  mc.replicas = 200;
  mc.horizon = 30;
  mc.seed = 5;
  auto w = spatial_experiment(model, {window(1), window(4)}, 0, mc);
  REQUIRE(w.rows[0].mc);
  CHECK(w.rows[0].mc->frequency <= w.rows[1].mc->frequency + 0.1);
}

TEST_CASE("truncation sweep") {
  auto model = build_scenario("zd_translation", {{"radius", "10"}});
  Sampler s(model);
  TrialSpec spec;
  spec.eta0 = {{0, 1}};
  spec.horizon = 40;
  spec.target = 0;
  spec.pop_cap = 20000;
  CHECK_THROWS_AS(truncation_sweep(s, {4, 1, 2}, spec, 10, 9, 0), ValidationError);
  auto sw = truncation_sweep(s, {1, 2, 4}, spec, 300, 9, 0);
  REQUIRE(sw.rows.size() == 4);
  CHECK(sw.rows[0].cap == 1);
  CHECK(sw.rows[2].cap == 4);
  CHECK(sw.rows[3].cap == kUnboundedCap);
  CHECK(sw.coupling_violations == 0);
  CHECK(sw.monotone);
  for (std::size_t i = 1; i < sw.rows.size(); ++i)
    CHECK(sw.rows[0].estimate.successes <= sw.rows[i].estimate.successes);
  // The baseline row is the plain simulation under the same seed.
  auto base = estimate_survival(s, spec, 300, 9, 1);
  CHECK(base.outcomes == sw.rows[3].estimate.outcomes);
  auto csv = sw.csv("zd_translation", "radius=10", 40);
  CHECK(csv.rfind("scenario,params,m,horizon,replicas,frequency,ci_low,ci_high", 0) == 0);
  CHECK(csv.find(",inf,") != std::string::npos);

  auto sub = build_scenario("gw", {{"rho", "0:0.7,2:0.3"}});
  Sampler ss(sub);
  spec.target = std::nullopt;
  spec.horizon = 100;
  auto dead = truncation_sweep(ss, {1, 2}, spec, 200, 1, 0);
  for (const auto& row : dead.rows) CHECK(row.estimate.frequency <= 0.02);
}

TEST_CASE("approximation report") {
  ReportOptions opts;
  opts.replicas = 50;
  opts.horizon = 20;
  opts.params = {{"radius", "8"}};
  auto z = approximation_report("zdrift", opts);
  std::vector<std::string> names;
  for (const auto& [n, body] : z.sections) names.push_back(n);
  auto has = [&](const std::string& n) { return std::find(names.begin(), names.end(), n) != names.end(); };
  CHECK(has("q_region"));
  CHECK(has("q_selection"));
  CHECK(has("bounds"));
  CHECK(has("spatial"));
  CHECK(has("sweep"));
  CHECK(z.model_hash.size() == 40);

  ReportOptions g;
  g.replicas = 20;
  g.horizon = 10;
  auto r = approximation_report("gw", g);
  names.clear();
  for (const auto& [n, body] : r.sections) names.push_back(n);
  CHECK_FALSE(has("spatial"));
  CHECK_FALSE(has("q_region"));
  CHECK(has("bounds"));

  CHECK_THROWS_AS(approximation_report("nope"), ScenarioError);
}
