#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "brwlab/scenarios.hpp"
#include "brwlab/spectral.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace brw;

namespace {

double perron_root(const MomentMatrix& m) {
  const std::size_t n = m.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(static_cast<long>(i), static_cast<long>(j)) = m.at(i, j);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  double best = 0;
  for (long k = 0; k < es.eigenvalues().size(); ++k) best = std::max(best, std::abs(es.eigenvalues()(k)));
  return best;
}

// Symmetric tridiagonal path matrix with off-diagonal c.
double path_root(std::size_t n, double c) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(n));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    a(static_cast<long>(i), static_cast<long>(i + 1)) = c;
    a(static_cast<long>(i + 1), static_cast<long>(i)) = c;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

BrwModel gw_model(const std::string& rho) { return build_scenario("gw", {{"rho", rho}}); }

}  // namespace

TEST_CASE("moment matrix entries") {
  const BrwModel doubling({0}, {build_offspring_law({Atom{OffspringConfig{{0, 2}}, 1.0}})});
  CHECK(MomentMatrix(doubling).at(0, 0) == 2.0);

  const BrwModel split({0, 1, 2}, {build_offspring_law({Atom{OffspringConfig{}, 0.5},
                                                        Atom{OffspringConfig{{1, 1}, {2, 1}}, 0.5}}),
                                   OffspringLaw(), OffspringLaw()});
  const MomentMatrix m(split);
  CHECK(m.at(0, 1) == 0.5);
  CHECK(m.at(0, 2) == 0.5);
  CHECK(m.at(0, 0) == 0.0);

  const auto rates = scenario_rates("tree_counterpart", {{"depth", "3"}});
  const double lambda = 0.3;
  const MomentMatrix cm(counterpart_model(rates, lambda));
  for (std::size_t i = 0; i < rates.vertices.size(); ++i)
    for (const auto& e : rates.rows[i])
      CHECK(std::abs(cm.at(i, cm.index_of(e.vertex)) - lambda * e.weight) < 1e-10);

  for (std::uint64_t seed = 1; seed < 10; ++seed) {
    const auto model = testing::random_atom_model(7, seed);
    const MomentMatrix mm(model);
    for (std::size_t i = 0; i < model.size(); ++i)
      CHECK(std::abs(mm.row_sum(i) - model.law(i).mean_children()) < 1e-12);
  }
}

TEST_CASE("expected population") {
  const BrwModel doubling({0}, {build_offspring_law({Atom{OffspringConfig{{0, 2}}, 1.0}})});
  const MomentMatrix m(doubling);
  CHECK(expected_population(m, {1.0}, 0) == std::vector<double>{1.0});
  CHECK(expected_population(m, {1.0}, 10)[0] == 1024.0);

  const auto chain = MomentMatrix::from_dense({{0, 1}, {1, 0}});
  const auto e = expected_population(chain, {1.0, 0.0}, 3);
  CHECK(e[0] == 0.0);
  CHECK(e[1] == 1.0);
}

TEST_CASE("local growth rate") {
  for (double mean : {0.5, 1.0, 2.0}) {
    const MomentMatrix m = MomentMatrix::from_dense({{mean}});
    const auto g = local_growth_rate(m, 0);
    CHECK(std::abs(g.value - mean) < 1e-12);
    CHECK(g.converged);
  }
  // Path of 41 vertices, product-form mean 1.5, nearest neighbours.
  const auto zd = build_scenario("zd_translation", {{"radius", "20"}, {"rho", "0:0.25,2:0.75"}});
  const MomentMatrix m(zd);
  const auto g = local_growth_rate(m, 0);
  const double oracle = path_root(41, 0.75);
  CHECK(std::abs(oracle - 1.5 * std::cos(std::numbers::pi / 42)) < 1e-12);
  CHECK(std::abs(g.value - oracle) < 1e-6);
  CHECK(g.period == 2);

  const MomentMatrix bip = MomentMatrix::from_dense({{0, 2}, {2, 0}});
  const auto b = local_growth_rate(bip, 0);
  CHECK(b.period == 2);
  CHECK(std::abs(b.value - 2.0) < 1e-12);
  for (const auto& t : b.sequence)
    if (t.on_subsequence) CHECK(t.n % 2 == 0);
  CHECK_THROWS_AS(local_growth_rate(bip, 7), ValidationError);
}

TEST_CASE("local growth equals the Perron root on irreducible matrices") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto model = testing::random_product_model(5, seed);
    const MomentMatrix m(model);
    const auto g = local_growth_rate(m, 0);
    CHECK(std::abs(g.value - perron_root(m)) < 1e-6);
    // Supermultiplicativity: the total population grows at least as fast.
    const auto gl = global_growth_rate(m, 0);
    CHECK(gl.value >= g.value - 1e-6);
  }
}

TEST_CASE("global growth rate") {
  const MomentMatrix gw(gw_model("0:0.4,2:0.6"));
  CHECK(std::abs(global_growth_rate(gw, 0).value - 1.2) < 1e-12);

  const MomentMatrix noext(build_scenario("line_noext", {{"size", "48"}}));
  GrowthOptions o;
  o.n_max = 60;
  const auto g = global_growth_rate(noext, 0, o);
  CHECK(std::abs(g.value - 2.0) < 0.05);

  // zdrift: the quotient carries sum_y m^(n)_xy = rho_bar^n exactly; a
  // finite window loses a little at its edges.
  const auto drift = build_scenario("zdrift", {{"rho_bar", "1.5"}, {"radius", "30"}});
  const MomentMatrix q(*drift.quotient()->model);
  CHECK(std::abs(global_growth_rate(q, 0).value - 1.5) < 1e-12);
  const auto w = global_growth_rate(MomentMatrix(drift), 0);
  CHECK(w.value <= 1.5 + 1e-9);
  CHECK(w.value > 1.5 * 0.99);
}

TEST_CASE("first return and Green series") {
  const MomentMatrix loop = MomentMatrix::from_dense({{3.0}});
  CHECK(std::abs(first_return_series(loop, 0, 0.2).value - 0.6) < 1e-15);
  CHECK(std::abs(green_series(loop, 0, 0.2).value - 1.0 / (1.0 - 0.6)) < 1e-12);
  CHECK(first_return_series(loop, 0, 0.0).value == 0.0);

  const MomentMatrix cycle = MomentMatrix::from_dense({{0, 1}, {1, 0}});
  CHECK(std::abs(first_return_series(cycle, 0, 0.5).value - 0.25) < 1e-15);
  CHECK(std::abs(green_series(cycle, 0, 0.5).value - 4.0 / 3.0) < 1e-12);

  const auto out = green_series(loop, 0, 0.5);
  CHECK(out.diverged);

  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const MomentMatrix m(testing::random_product_model(5, seed, true, 3, 0.3));
    const double lambda = 0.5 / m.max_row_sum();
    const auto phi = first_return_series(m, 0, lambda);
    const auto gam = green_series(m, 0, lambda);
    REQUIRE_FALSE(gam.diverged);
    CHECK(std::abs(gam.value * (1.0 - phi.value) - 1.0) < 1e-10);

    // Brute-force Green function: (I - lambda M)^{-1}_00.
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) a(i, j) -= lambda * m.at(i, j);
    CHECK(std::abs(a.inverse()(0, 0) - gam.value) < 1e-10);
  }
}

TEST_CASE("Seneta sequence") {
  const auto zd = build_scenario("zd_translation", {{"radius", "30"}, {"rho", "0:0.25,2:0.75"}});
  std::vector<std::size_t> radii;
  for (std::size_t r = 1; r <= 12; ++r) radii.push_back(r);
  const auto balls = ball_exhaustion(zd, 0, radii);
  const auto seq = seneta_sequence(zd, balls, 0);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double oracle = path_root(2 * radii[i] + 1, 0.75);
    CHECK(std::abs(seq[i].value - oracle) < 1e-6);
    if (i > 0) CHECK(seq[i].value >= seq[i - 1].value - 1e-12);
  }

  const std::vector<std::vector<VertexId>> same(3, zd.vertices());
  const auto flat = seneta_sequence(zd, same, 0);
  CHECK(flat[0].value == flat[1].value);
  CHECK(flat[1].value == flat[2].value);

  // Alternating windows: not nested, but still converging to the full value.
  std::vector<std::vector<VertexId>> alt;
  for (std::size_t r = 2; r <= 28; r += 2) {
    std::vector<VertexId> w;
    const auto left = static_cast<long>(r % 4 == 0 ? r : r / 2);
    for (long i = -left; i <= static_cast<long>(r); ++i) w.push_back(i);
    alt.push_back(w);
  }
  const auto s = seneta_sequence(zd, alt, 0);
  const double full = local_growth_rate(MomentMatrix(zd), 0).value;
  CHECK(std::abs(s.back().value - full) < 0.01);
  CHECK(std::abs(s.back().value - full) < std::abs(s.front().value - full));
}
