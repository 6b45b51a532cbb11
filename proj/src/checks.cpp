#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "brwlab/model.hpp"

namespace brw {

namespace {

// P(exactly one child lands in `inside`) under the law at model index i.
double single_child_probability(const BrwModel& model, std::size_t i,
                                const std::vector<char>& inside) {
  const OffspringLaw& law = model.law(i);
  if (law.form() == OffspringLaw::Form::product) {
    double a = 0.0;
    for (const auto& e : law.dispersal())
      if (inside[model.index_of(e.vertex)]) a += e.weight;
    // sum_n rho(n) n a (1-a)^(n-1)
    double acc = 0.0;
    for (const auto& pt : law.rho()->points())
      if (pt.n >= 1)
        acc += pt.p * static_cast<double>(pt.n) * a *
               std::pow(1.0 - a, static_cast<double>(pt.n - 1));
    return acc;
  }
  double acc = 0.0;
  for (const auto& atom : law.explicit_atoms()) {
    Count in = 0;
    for (const auto& [v, k] : atom.config.entries())
      if (inside[model.index_of(v)]) in += k;
    if (in == 1) acc += atom.probability;
  }
  return acc;
}

}  // namespace

std::vector<ClassVerdict> check_assumption_nonsingular(const BrwModel& model) {
  const Components comps = strongly_connected_components(model.graph());
  std::vector<ClassVerdict> out;
  std::vector<char> inside(model.size(), 0);
  for (const auto& members : comps.members) {
    for (auto u : members) inside[u] = 1;
    ClassVerdict verdict;
    for (auto u : members) {
      verdict.members.push_back(model.vertex(u));
      double p = single_child_probability(model, u, inside);
      if (p < verdict.min_single_child_probability ||
          verdict.members.size() == 1) {
        verdict.min_single_child_probability = p;
        verdict.witness = model.vertex(u);
      }
    }
    verdict.nonsingular =
        verdict.min_single_child_probability < 1.0 - 1e-12;
    std::sort(verdict.members.begin(), verdict.members.end());
    for (auto u : members) inside[u] = 0;
    out.push_back(std::move(verdict));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.members.front() < b.members.front();
  });
  return out;
}

InvarianceReport check_invariance(
    const BrwModel& model,
    const std::function<std::optional<VertexId>(VertexId)>& gamma,
    double tolerance) {
  InvarianceReport report;
  std::set<VertexId> images;
  for (VertexId x : model.interior()) {
    auto gx = gamma(x);
    if (gx && !images.insert(*gx).second)
      throw ValidationError("gamma is not injective on the interior (image " +
                            std::to_string(*gx) + ")");
  }
  for (VertexId x : model.interior()) {
    auto gx = gamma(x);
    bool usable = gx && model.is_interior(*gx);
    const OffspringLaw& law = model.law_of(x);
    if (usable)
      for (const auto& e : law.mean_row())
        usable = usable && gamma(e.vertex).has_value();
    if (!usable) {
      report.exempt.push_back(x);
      continue;
    }
    OffspringLaw moved = law.pushforward([&](VertexId v) { return *gamma(v); });
    double d = total_variation(moved, model.law_of(*gx));
    report.checked.push_back(x);
    if (d > report.max_distance || !report.worst) {
      report.max_distance = std::max(report.max_distance, d);
      if (d >= report.max_distance) report.worst = x;
    }
  }
  report.invariant = report.max_distance <= tolerance;
  if (report.invariant) report.worst.reset();
  return report;
}

}  // namespace brw
