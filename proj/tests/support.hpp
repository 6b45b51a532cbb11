#pragma once

// Random model generators shared by the test suites.

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "brwlab/model.hpp"

namespace brw::testing {

// n vertices 0..n-1, product-form laws with random child-count laws on
// {0..3} and random dispersal rows over `fanout` targets. With
// irreducible, every row also hits (i+1) mod n.
inline BrwModel random_product_model(std::size_t n, std::uint64_t seed, bool irreducible = true,
                                     std::size_t fanout = 3, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<VertexId> vertices;
  std::vector<OffspringLaw> laws;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p(4);
    double s = 0;
    for (auto& x : p) s += (x = u(gen));
    // Push some mass to zero children so the mean spreads around 1.
    p[0] += scale * s * u(gen);
    s = 0;
    for (double x : p) s += x;
    for (auto& x : p) x /= s;
    auto rho = std::make_shared<const IntDistribution>(p);
    std::map<VertexId, double> row;
    if (irreducible) row[static_cast<VertexId>((i + 1) % n)] += u(gen);
    for (std::size_t k = 0; k < fanout; ++k) row[static_cast<VertexId>(pick(gen))] += u(gen);
    double total = 0;
    for (auto& [v, w] : row) total += w;
    Row r;
    for (auto& [v, w] : row) r.push_back({v, w / total});
    vertices.push_back(static_cast<VertexId>(i));
    laws.push_back(OffspringLaw::product(rho, r));
  }
  return BrwModel(vertices, laws);
}

// n vertices with explicit atom laws: up to `atoms` configurations each,
// 0..2 children per listed target.
inline BrwModel random_atom_model(std::size_t n, std::uint64_t seed, std::size_t atoms = 4) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<int> cnt(0, 2);
  std::vector<VertexId> vertices;
  std::vector<OffspringLaw> laws;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<OffspringConfig, double> acc;
    for (std::size_t a = 0; a < atoms; ++a) {
      std::vector<std::pair<VertexId, std::int64_t>> items;
      for (int k = 0; k < 2; ++k) items.emplace_back(static_cast<VertexId>(pick(gen)), cnt(gen));
      acc[OffspringConfig::from_signed(items)] += u(gen);
    }
    double total = 0;
    for (auto& [c, w] : acc) total += w;
    std::vector<Atom> list;
    for (auto& [c, w] : acc) list.push_back(Atom{c, w / total});
    vertices.push_back(static_cast<VertexId>(i));
    laws.push_back(build_offspring_law(list));
  }
  return BrwModel(vertices, laws);
}

}  // namespace brw::testing
