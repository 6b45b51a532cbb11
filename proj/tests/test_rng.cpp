#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <set>
#include <vector>

#include "brwlab/rng.hpp"
#include "doctest.h"

using namespace brw;

namespace {

// Pearson statistic of observed counts against expected probabilities.
double chi_square(const std::vector<std::size_t>& observed, const std::vector<double>& p,
                  std::size_t n) {
  double stat = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = p[i] * static_cast<double>(n);
    const double d = static_cast<double>(observed[i]) - e;
    stat += d * d / e;
  }
  return stat;
}

double chi_square_critical(std::size_t dof, double alpha) {
  boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

}  // namespace

TEST_CASE("Philox known-answer vectors") {
  // Published Random123 test vectors for philox4x32-10.
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  CounterStream a(42, kDomainTest, 1, 2, 3), b(42, kDomainTest, 1, 2, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(a.blocks_used() == 50);

  std::set<std::uint64_t> firsts;
  for (std::uint32_t r = 0; r < 8; ++r)
    for (std::uint32_t g = 0; g < 8; ++g)
      for (std::uint32_t v = 0; v < 8; ++v)
        firsts.insert(CounterStream(7, kDomainTest, r, g, v).next_u64());
  firsts.insert(CounterStream(8, kDomainTest, 0, 0, 0).next_u64());
  firsts.insert(CounterStream(7, kDomainBranching, 0, 0, 0).next_u64());
  firsts.insert(CounterStream(7, kDomainPercolation, 0, 0, 0).next_u64());
  CHECK(firsts.size() == 8 * 8 * 8 + 3);
}

TEST_CASE("uniforms lie in [0,1) and look uniform") {
  CounterStream s(123, kDomainTest, 0, 0, 0);
  const std::size_t n = 200000, bins = 50;
  std::vector<std::size_t> counts(bins, 0);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    ++counts[static_cast<std::size_t>(u * bins)];
  }
  CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(chi_square(counts, std::vector<double>(bins, 1.0 / bins), n) <
        chi_square_critical(bins - 1, 0.001));
}

TEST_CASE("alias table reproduces its weights") {
  const std::vector<std::vector<double>> laws = {
      {1.0},
      {0.5, 0.5},
      {0.1, 0.0, 0.3, 0.6},
      {3.0, 1.0, 1.0, 5.0, 0.25, 0.75},
      {1e-3, 1.0 - 1e-3},
  };
  std::uint32_t stream_id = 0;
  for (const auto& w : laws) {
    AliasTable t(w);
    REQUIRE(t.size() == w.size());
    double total = 0.0;
    for (double x : w) total += x;
    std::vector<double> p;
    for (double x : w) p.push_back(x / total);

    CounterStream s(99, kDomainTest, stream_id++, 0, 0);
    const std::size_t n = 100000;
    std::vector<std::size_t> counts(w.size(), 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[t.sample(s)];
    std::vector<std::size_t> obs;
    std::vector<double> exp;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (p[i] == 0.0) {
        CHECK(counts[i] == 0);
        continue;
      }
      obs.push_back(counts[i]);
      exp.push_back(p[i]);
    }
    if (exp.size() > 1) CHECK(chi_square(obs, exp, n) < chi_square_critical(exp.size() - 1, 0.01));
  }

  CHECK_THROWS(AliasTable(std::vector<double>{}));
  CHECK_THROWS(AliasTable(std::vector<double>{0.0, 0.0}));
  CHECK_THROWS(AliasTable(std::vector<double>{1.0, -0.5}));
}

TEST_CASE("single-column table consumes no draws") {
  AliasTable t(std::vector<double>{2.0});
  CounterStream s(1, kDomainTest, 0, 0, 0), ref(1, kDomainTest, 0, 0, 0);
  CHECK(t.sample(s) == 0);
  CHECK(s.next_u64() == ref.next_u64());
}
