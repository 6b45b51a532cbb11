#include "brwlab/offspring_law.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace brw {

OffspringConfig::OffspringConfig(
    std::initializer_list<std::pair<VertexId, std::int64_t>> items) {
  *this = from_signed(std::vector<std::pair<VertexId, std::int64_t>>(items));
}

OffspringConfig OffspringConfig::from_signed(
    const std::vector<std::pair<VertexId, std::int64_t>>& items) {
  OffspringConfig c;
  c.entries_.reserve(items.size());
  for (auto [v, k] : items) {
    if (k < 0)
      throw ValidationError("negative child count at vertex " +
                            std::to_string(v));
    c.entries_.emplace_back(v, static_cast<Count>(k));
  }
  c.normalize();
  return c;
}

OffspringConfig OffspringConfig::from_counts(std::vector<Entry> items) {
  OffspringConfig c;
  c.entries_ = std::move(items);
  c.normalize();
  return c;
}

void OffspringConfig::normalize() {
  std::sort(entries_.begin(), entries_.end());
  std::vector<Entry> merged;
  merged.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (e.second == 0) continue;
    if (!merged.empty() && merged.back().first == e.first)
      merged.back().second += e.second;
    else
      merged.push_back(e);
  }
  entries_ = std::move(merged);
}

Count OffspringConfig::total() const {
  Count t = 0;
  for (const auto& e : entries_) t += e.second;
  return t;
}

Count OffspringConfig::at(VertexId v) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(),
                             Entry{v, 0});
  return it != entries_.end() && it->first == v ? it->second : 0;
}

Row normalize_row(Row row) {
  std::sort(row.begin(), row.end(), [](const RowEntry& a, const RowEntry& b) {
    return a.vertex < b.vertex;
  });
  Row out;
  out.reserve(row.size());
  for (const auto& e : row) {
    if (!out.empty() && out.back().vertex == e.vertex)
      out.back().weight += e.weight;
    else
      out.push_back(e);
  }
  std::erase_if(out, [](const RowEntry& e) { return e.weight == 0.0; });
  return out;
}

namespace {

double binomial(Count n, Count k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (Count i = 1; i <= k; ++i)
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

std::vector<Atom> merge_atoms(std::map<OffspringConfig, double>& acc) {
  std::vector<Atom> out;
  out.reserve(acc.size());
  for (auto& [c, p] : acc)
    if (p > 0.0) out.push_back(Atom{c, p});
  return out;
}

}  // namespace

OffspringLaw::OffspringLaw() {
  atoms_.push_back(Atom{OffspringConfig{}, 1.0});
  finish();
}

OffspringLaw OffspringLaw::from_atoms(std::vector<Atom> atoms) {
  if (atoms.empty()) throw ValidationError("offspring law has no atoms");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.probability > 0.0) || a.probability > 1.0 + kSumTolerance)
      throw ValidationError("atom probability outside (0,1]");
    total += a.probability;
  }
  if (std::abs(total - 1.0) > kSumTolerance)
    throw ValidationError("atom probabilities sum to " +
                          std::to_string(total));
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
    return a.config < b.config;
  });
  for (std::size_t i = 1; i < atoms.size(); ++i)
    if (atoms[i].config == atoms[i - 1].config)
      throw ValidationError("duplicate offspring configuration");
  OffspringLaw law;
  law.form_ = Form::atoms;
  law.atoms_ = std::move(atoms);
  law.finish();
  return law;
}

OffspringLaw OffspringLaw::product(std::shared_ptr<const IntDistribution> rho,
                                   Row dispersal, double void_mass) {
  if (!rho) throw ValidationError("missing child-count law");
  dispersal = normalize_row(std::move(dispersal));
  double total = void_mass;
  for (const auto& e : dispersal) {
    if (!(e.weight >= 0.0)) throw ValidationError("negative dispersal weight");
    total += e.weight;
  }
  if (void_mass < 0.0 || std::abs(total - 1.0) > kSumTolerance)
    throw ValidationError("dispersal row sums to " + std::to_string(total));
  OffspringLaw law;
  law.form_ = Form::product;
  law.atoms_.clear();
  law.rho_ = std::move(rho);
  law.dispersal_ = std::move(dispersal);
  law.void_mass_ = std::max(0.0, void_mass);
  law.finish();
  return law;
}

void OffspringLaw::finish() {
  if (form_ == Form::atoms) {
    std::map<Count, double> counts;
    std::map<VertexId, double> mean;
    for (const auto& a : atoms_) {
      counts[a.config.total()] += a.probability;
      for (const auto& [v, k] : a.config.entries())
        mean[v] += static_cast<double>(k) * a.probability;
    }
    double total = 0.0;
    for (auto [h, p] : counts) total += p;
    std::vector<IntDistribution::Point> points;
    for (auto [h, p] : counts) points.push_back({h, p / total});
    child_count_ = IntDistribution::from_points(std::move(points));
    mean_row_.clear();
    for (auto [v, w] : mean) mean_row_.push_back(RowEntry{v, w});
  } else {
    if (void_mass_ == 0.0) {
      child_count_ = *rho_;
    } else {
      // Thinning: each child survives independently with 1 - void_mass.
      if (rho_->support_max() > IntDistribution::kDenseLimit)
        throw ValidationError("child count support too large to thin");
      const double keep = 1.0 - void_mass_;
      const auto top = static_cast<std::size_t>(rho_->support_max());
      std::vector<double> thinned(top + 1, 0.0);
      // Binomial(n, keep) rows built by Pascal's rule, which avoids pow and
      // stays accurate for large n.
      std::vector<double> row(top + 1, 0.0);
      row[0] = 1.0;
      std::size_t n = 0;
      for (const auto& pt : rho_->points()) {
        for (; n < pt.n; ++n)
          for (std::size_t k = n + 1; k-- > 0;)
            row[k] = row[k] * void_mass_ + (k ? row[k - 1] * keep : 0.0);
        for (std::size_t k = 0; k <= n; ++k) thinned[k] += pt.p * row[k];
      }
      double total = 0.0;
      for (double p : thinned) total += p;
      for (double& p : thinned) p /= total;
      child_count_ = IntDistribution(std::move(thinned));
    }
    mean_row_.clear();
    for (const auto& e : dispersal_)
      mean_row_.push_back(RowEntry{e.vertex, rho_->mean() * e.weight});
  }
  mean_children_ = 0.0;
  for (const auto& e : mean_row_) mean_children_ += e.weight;
}

double OffspringLaw::mean(VertexId y) const {
  auto it = std::lower_bound(
      mean_row_.begin(), mean_row_.end(), y,
      [](const RowEntry& e, VertexId v) { return e.vertex < v; });
  return it != mean_row_.end() && it->vertex == y ? it->weight : 0.0;
}

std::vector<VertexId> OffspringLaw::support() const {
  std::vector<VertexId> out;
  for (const auto& e : mean_row_) out.push_back(e.vertex);
  return out;
}

double OffspringLaw::atom_count_estimate() const {
  if (form_ == Form::atoms) return static_cast<double>(atoms_.size());
  // Configurations with at most N children over k targets: C(N+k, k).
  return binomial(rho_->support_max() + dispersal_.size(), dispersal_.size());
}

std::vector<Atom> OffspringLaw::atoms(std::size_t max_atoms) const {
  if (form_ == Form::atoms) return atoms_;
  if (atom_count_estimate() > static_cast<double>(max_atoms))
    throw ValidationError("product-form law too large to expand");
  std::map<OffspringConfig, double> acc;
  const std::size_t k = dispersal_.size();
  std::vector<OffspringConfig::Entry> cur;
  // Distribute `left` children over targets i..k-1 and the void.
  std::function<void(std::size_t, Count, double)> rec =
      [&](std::size_t i, Count left, double weight) {
        if (i == k) {
          double w = weight;
          if (left > 0) w *= std::pow(void_mass_, static_cast<double>(left));
          if (w > 0.0) acc[OffspringConfig::from_counts(cur)] += w;
          return;
        }
        const double p = dispersal_[i].weight;
        for (Count c = 0; c <= left; ++c) {
          double w = weight * binomial(left, c) *
                     std::pow(p, static_cast<double>(c));
          if (w == 0.0) continue;
          if (c > 0) cur.emplace_back(dispersal_[i].vertex, c);
          rec(i + 1, left - c, w);
          if (c > 0) cur.pop_back();
        }
      };
  for (const auto& pt : rho_->points()) rec(0, pt.n, pt.p);
  return merge_atoms(acc);
}

OffspringLaw OffspringLaw::pushforward(
    const std::function<VertexId(VertexId)>& g) const {
  if (form_ == Form::product) {
    Row row;
    for (const auto& e : dispersal_) row.push_back(RowEntry{g(e.vertex), e.weight});
    return product(rho_, std::move(row), void_mass_);
  }
  std::map<OffspringConfig, double> acc;
  for (const auto& a : atoms_) {
    std::vector<OffspringConfig::Entry> mapped;
    for (const auto& [v, c] : a.config.entries()) mapped.emplace_back(g(v), c);
    acc[OffspringConfig::from_counts(std::move(mapped))] += a.probability;
  }
  OffspringLaw law;
  law.atoms_ = merge_atoms(acc);
  law.finish();
  return law;
}

OffspringLaw OffspringLaw::restricted(
    const std::function<bool(VertexId)>& keep) const {
  if (form_ == Form::product) {
    Row row;
    double lost = void_mass_;
    for (const auto& e : dispersal_) {
      if (keep(e.vertex))
        row.push_back(e);
      else
        lost += e.weight;
    }
    return product(rho_, std::move(row), lost);
  }
  std::map<OffspringConfig, double> acc;
  for (const auto& a : atoms_) {
    std::vector<OffspringConfig::Entry> kept;
    for (const auto& e : a.config.entries())
      if (keep(e.first)) kept.push_back(e);
    acc[OffspringConfig::from_counts(std::move(kept))] += a.probability;
  }
  OffspringLaw law;
  law.atoms_ = merge_atoms(acc);
  law.finish();
  return law;
}

OffspringLaw build_offspring_law(std::vector<Atom> atoms) {
  return OffspringLaw::from_atoms(std::move(atoms));
}

OffspringLaw product_form_law(const IntDistribution& rho, Row dispersal) {
  return OffspringLaw::product(std::make_shared<const IntDistribution>(rho),
                               std::move(dispersal), 0.0);
}

OffspringLaw continuous_counterpart(double lambda, const Row& rates,
                                    std::size_t tail_cap, double lost_rate) {
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (lost_rate < 0.0) throw ValidationError("negative lost rate");
  double k = lost_rate;
  for (const auto& e : rates) {
    if (!(e.weight >= 0.0)) throw ValidationError("negative rate");
    k += e.weight;
  }
  if (!(k > 0.0)) throw ValidationError("total rate k(x) must be positive");
  auto rho = std::make_shared<const IntDistribution>(
      IntDistribution::geometric(lambda * k, tail_cap));
  Row row;
  for (const auto& e : rates) row.push_back(RowEntry{e.vertex, e.weight / k});
  return OffspringLaw::product(std::move(rho), std::move(row), lost_rate / k);
}

double total_variation(const OffspringLaw& a, const OffspringLaw& b,
                       std::size_t max_atoms) {
  using Form = OffspringLaw::Form;
  const bool small = a.atom_count_estimate() <= static_cast<double>(max_atoms) &&
                     b.atom_count_estimate() <= static_cast<double>(max_atoms);
  if (!small) {
    if (a.form() != Form::product || b.form() != Form::product)
      throw ValidationError("laws too large for an exact comparison");
    // Couple the child counts optimally, then each shared child's target.
    double row_gap = std::abs(a.void_mass() - b.void_mass());
    const Row& ra = a.dispersal();
    const Row& rb = b.dispersal();
    std::size_t i = 0, j = 0;
    while (i < ra.size() || j < rb.size()) {
      if (j == rb.size() || (i < ra.size() && ra[i].vertex < rb[j].vertex)) {
        row_gap += ra[i++].weight;
      } else if (i == ra.size() || rb[j].vertex < ra[i].vertex) {
        row_gap += rb[j++].weight;
      } else {
        row_gap += std::abs(ra[i++].weight - rb[j++].weight);
      }
    }
    double n = std::max(a.rho()->mean(), b.rho()->mean());
    return std::min(1.0, total_variation(*a.rho(), *b.rho()) + n * row_gap / 2.0);
  }
  auto xa = a.atoms(max_atoms);
  auto xb = b.atoms(max_atoms);
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xa.size() || j < xb.size()) {
    if (j == xb.size() || (i < xa.size() && xa[i].config < xb[j].config)) {
      acc += xa[i++].probability;
    } else if (i == xa.size() || xb[j].config < xa[i].config) {
      acc += xb[j++].probability;
    } else {
      acc += std::abs(xa[i++].probability - xb[j++].probability);
    }
  }
  return acc / 2.0;
}

}  // namespace brw
