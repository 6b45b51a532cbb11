#pragma once

#include <compare>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <utility>
#include <vector>

#include "brwlab/int_distribution.hpp"
#include "brwlab/types.hpp"

namespace brw {

// Finitely supported map vertex -> child count. Entries are kept sorted by
// vertex with zero counts dropped, so equal configurations compare equal.
class OffspringConfig {
 public:
  using Entry = std::pair<VertexId, Count>;

  OffspringConfig() = default;
  // Duplicate vertices are summed. Negative counts throw ValidationError.
  OffspringConfig(std::initializer_list<std::pair<VertexId, std::int64_t>> items);
  static OffspringConfig from_signed(
      const std::vector<std::pair<VertexId, std::int64_t>>& items);
  static OffspringConfig from_counts(std::vector<Entry> items);

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  Count total() const;
  Count at(VertexId v) const;

  auto operator<=>(const OffspringConfig&) const = default;

 private:
  void normalize();
  std::vector<Entry> entries_;
};

struct Atom {
  OffspringConfig config;
  double probability = 0.0;
};

struct RowEntry {
  VertexId vertex = 0;
  double weight = 0.0;
  friend bool operator==(const RowEntry&, const RowEntry&) = default;
};
// Sparse row sorted by vertex.
using Row = std::vector<RowEntry>;

// Sorts by vertex and merges duplicates. Zero weights are dropped.
Row normalize_row(Row row);

// Law mu_x of the offspring configuration of one particle. Two storage
// forms: an explicit atom list, or a child-count law rho together with a
// dispersal row, where each child independently picks its target. Product
// form never materializes atoms unless asked, which keeps geometric laws on
// large graphs cheap. A product-form row may lose mass to "void" when the
// law was restricted; children sent there are simply not born.
class OffspringLaw {
 public:
  enum class Form { atoms, product };

  static constexpr double kSumTolerance = 1e-12;

  OffspringLaw();  // deterministic death

  // Validates probabilities in (0,1], distinct configurations and a total of
  // 1 within kSumTolerance.
  static OffspringLaw from_atoms(std::vector<Atom> atoms);
  // dispersal weights plus void_mass must sum to 1.
  static OffspringLaw product(std::shared_ptr<const IntDistribution> rho,
                              Row dispersal, double void_mass = 0.0);

  Form form() const { return form_; }
  // Child-count law rho_x (children actually born).
  const IntDistribution& child_count_law() const { return child_count_; }
  double mean_children() const { return mean_children_; }
  // m_x. as a sparse row.
  const Row& mean_row() const { return mean_row_; }
  double mean(VertexId y) const;
  // Vertices that can receive a child.
  std::vector<VertexId> support() const;

  // Atom list. Product-form laws are expanded with the multinomial formula;
  // throws ValidationError if more than max_atoms would be produced.
  std::vector<Atom> atoms(std::size_t max_atoms = 1'000'000) const;
  // Upper bound on atoms() size without expanding.
  double atom_count_estimate() const;

  const std::vector<Atom>& explicit_atoms() const { return atoms_; }
  const std::shared_ptr<const IntDistribution>& rho() const { return rho_; }
  const Row& dispersal() const { return dispersal_; }
  double void_mass() const { return void_mass_; }

  // sum_f mu(f) prod_y z(y)^f(y) for a callable z: VertexId -> double.
  template <class Z>
  double generating(Z&& z) const {
    if (form_ == Form::product) {
      double s = void_mass_;
      for (const auto& e : dispersal_) s += e.weight * z(e.vertex);
      return rho_->pgf(s);
    }
    double acc = 0.0;
    for (const auto& a : atoms_) {
      double term = a.probability;
      for (const auto& [v, k] : a.config.entries())
        term *= std::pow(z(v), static_cast<double>(k));
      acc += term;
    }
    return acc;
  }

  // Law of pi_g(f) under f ~ mu.
  OffspringLaw pushforward(const std::function<VertexId(VertexId)>& g) const;
  // Law of f restricted to {keep(y)}.
  OffspringLaw restricted(const std::function<bool(VertexId)>& keep) const;

 private:
  void finish();

  Form form_ = Form::atoms;
  std::vector<Atom> atoms_;
  std::shared_ptr<const IntDistribution> rho_;
  Row dispersal_;
  double void_mass_ = 0.0;

  IntDistribution child_count_;
  double mean_children_ = 0.0;
  Row mean_row_;
};

OffspringLaw build_offspring_law(std::vector<Atom> atoms);

// Each of N ~ rho children goes to y with probability dispersal(y).
// The row must sum to 1 within 1e-12.
OffspringLaw product_form_law(const IntDistribution& rho, Row dispersal);

// Generation law of the continuous-time walk with birth rates lambda*k_xy:
// geometric child count with mean lambda*k(x) and dispersal k_xy/k(x).
// lost_rate is rate towards vertices outside the model; those children are
// dropped, giving the restricted law. tail_cap = 0 picks the cut point
// automatically (tail mass below 1e-12).
OffspringLaw continuous_counterpart(double lambda, const Row& rates,
                                    std::size_t tail_cap = 0,
                                    double lost_rate = 0.0);

// Total-variation distance. Exact when both laws expand to at most
// max_atoms atoms, otherwise a coupling upper bound for product forms.
double total_variation(const OffspringLaw& a, const OffspringLaw& b,
                       std::size_t max_atoms = 200'000);

}  // namespace brw
