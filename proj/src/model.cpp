#include "brwlab/model.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_set>

namespace brw {

Projection Projection::identity(const BrwModel& model) {
  return Projection{[](VertexId v) { return v; }, model.vertices()};
}

Projection Projection::from_map(const std::unordered_map<VertexId, VertexId>& g) {
  Projection p;
  auto table = std::make_shared<const std::unordered_map<VertexId, VertexId>>(g);
  p.map = [table](VertexId v) {
    auto it = table->find(v);
    if (it == table->end())
      throw ValidationError("projection undefined at vertex " + std::to_string(v));
    return it->second;
  };
  std::vector<VertexId> targets;
  for (const auto& [from, to] : g) targets.push_back(to);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  p.targets = std::move(targets);
  return p;
}

BrwModel::BrwModel(std::vector<VertexId> vertices,
                   std::vector<OffspringLaw> laws, ModelMetadata metadata) {
  if (vertices.size() != laws.size())
    throw ValidationError("vertex and law counts differ");
  if (vertices.empty()) throw ValidationError("model has no vertices");
  if (vertices.size() >= (std::size_t{1} << 32))
    throw ValidationError("model too large");
  auto data = std::make_shared<Data>();
  data->vertices = std::move(vertices);
  data->laws = std::move(laws);
  const std::size_t n = data->vertices.size();
  data->index.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!data->index.emplace(data->vertices[i], i).second)
      throw ValidationError("duplicate vertex " +
                            std::to_string(data->vertices[i]));

  auto lookup = [&](VertexId from, VertexId v) -> std::uint32_t {
    auto it = data->index.find(v);
    if (it == data->index.end())
      throw ValidationError("law at " + std::to_string(from) +
                            " places children at " + std::to_string(v) +
                            ", outside the model");
    return static_cast<std::uint32_t>(it->second);
  };

  CompiledLaws& c = data->compiled;
  c.product.resize(n);
  c.void_mass.assign(n, 0.0);
  c.rho.assign(n, nullptr);
  c.disp_offsets.assign(1, 0);
  c.atom_offsets.assign(1, 0);
  c.child_offsets.assign(1, 0);
  Digraph& g = data->graph;
  g.offsets.assign(1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const OffspringLaw& law = data->laws[i];
    const VertexId x = data->vertices[i];
    c.product[i] = law.form() == OffspringLaw::Form::product;
    if (c.product[i]) {
      c.rho[i] = law.rho().get();
      c.void_mass[i] = law.void_mass();
      for (const auto& e : law.dispersal()) {
        c.disp_index.push_back(lookup(x, e.vertex));
        c.disp_weight.push_back(e.weight);
      }
    } else {
      for (const auto& a : law.explicit_atoms()) {
        c.atom_prob.push_back(a.probability);
        for (const auto& [v, k] : a.config.entries()) {
          c.child_index.push_back(lookup(x, v));
          c.child_count.push_back(k);
        }
        c.child_offsets.push_back(c.child_index.size());
      }
    }
    c.disp_offsets.push_back(c.disp_index.size());
    c.atom_offsets.push_back(c.atom_prob.size());
    for (const auto& e : law.mean_row())
      if (e.weight > 0.0) g.targets.push_back(lookup(x, e.vertex));
    g.offsets.push_back(g.targets.size());
  }
  data_ = std::move(data);

  auto extras = std::make_shared<Extras>();
  extras->metadata = std::move(metadata);
  extras->interior = data_->vertices;
  std::sort(extras->interior.begin(), extras->interior.end());
  extras->interior_mask.assign(n, 1);
  extras_ = std::move(extras);
}

std::optional<std::size_t> BrwModel::find(VertexId v) const {
  auto it = data_->index.find(v);
  if (it == data_->index.end()) return std::nullopt;
  return it->second;
}

std::size_t BrwModel::index_of(VertexId v) const {
  auto i = find(v);
  if (!i) throw ValidationError("vertex " + std::to_string(v) + " not in model");
  return *i;
}

bool BrwModel::is_interior(VertexId v) const {
  auto i = find(v);
  return i && extras_->interior_mask[*i];
}

BrwModel BrwModel::with_metadata(ModelMetadata metadata) const {
  BrwModel copy = *this;
  auto extras = std::make_shared<Extras>(*extras_);
  extras->metadata = std::move(metadata);
  copy.extras_ = std::move(extras);
  return copy;
}

BrwModel BrwModel::with_interior(std::vector<VertexId> interior) const {
  BrwModel copy = *this;
  auto extras = std::make_shared<Extras>(*extras_);
  std::sort(interior.begin(), interior.end());
  interior.erase(std::unique(interior.begin(), interior.end()), interior.end());
  extras->interior_mask.assign(size(), 0);
  for (VertexId v : interior) extras->interior_mask[index_of(v)] = 1;
  extras->interior = std::move(interior);
  copy.extras_ = std::move(extras);
  return copy;
}

BrwModel BrwModel::with_quotient(Quotient quotient) const {
  if (!quotient.model || !quotient.map)
    throw ValidationError("incomplete quotient");
  BrwModel copy = *this;
  auto extras = std::make_shared<Extras>(*extras_);
  extras->quotient = std::move(quotient);
  copy.extras_ = std::move(extras);
  return copy;
}

IntDistribution dominating_law(const BrwModel& model) {
  // S(n) = sup_x P_x(N >= n) only changes at support points of some law.
  std::vector<Count> cand{0};
  for (const auto& law : model.laws())
    for (const auto& pt : law.child_count_law().points()) cand.push_back(pt.n);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  auto sup_tail = [&](Count n) {
    if (n == 0) return 1.0;
    double s = 0.0;
    for (const auto& law : model.laws()) s = std::max(s, law.child_count_law().tail(n));
    return s;
  };
  std::vector<IntDistribution::Point> points;
  double total = 0.0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const double hi = sup_tail(cand[i]);
    const double lo = i + 1 < cand.size() ? sup_tail(cand[i + 1]) : 0.0;
    const double p = std::max(0.0, hi - lo);
    points.push_back({cand[i], p});
    total += p;
  }
  for (auto& pt : points) pt.p /= total;
  return IntDistribution::from_points(std::move(points));
}

BrwModel project_model(const BrwModel& model, const Projection& g,
                       const std::vector<VertexId>* domain,
                       double tv_tolerance) {
  if (!g.map) throw ValidationError("projection without a map");
  const std::vector<VertexId>& dom = domain ? *domain : model.vertices();
  if (dom.empty()) throw ValidationError("empty projection domain");

  std::map<VertexId, std::size_t> representative;  // target -> dom index
  for (std::size_t i = 0; i < dom.size(); ++i)
    representative.emplace(g.map(dom[i]), i);
  std::set<VertexId> targets(g.targets.begin(), g.targets.end());
  for (VertexId t : targets)
    if (!representative.count(t))
      throw ValidationError("projection not surjective onto target " +
                            std::to_string(t));
  for (const auto& [t, i] : representative)
    if (!targets.count(t))
      throw ValidationError("vertex " + std::to_string(dom[i]) +
                            " maps outside the target list");

  std::unordered_set<VertexId> image;
  for (const auto& [t, i] : representative) image.insert(t);
  auto keep = [&](VertexId v) { return image.count(v) > 0; };

  std::map<VertexId, OffspringLaw> pushed;
  for (VertexId x : dom) {
    VertexId y = g.map(x);
    OffspringLaw law = model.law_of(x).pushforward(g.map).restricted(keep);
    auto it = pushed.find(y);
    if (it == pushed.end()) {
      pushed.emplace(y, std::move(law));
      continue;
    }
    double tv = total_variation(it->second, law);
    if (tv > tv_tolerance)
      throw ValidationError("fiber of " + std::to_string(y) +
                            " is inconsistent: vertex " + std::to_string(x) +
                            " differs by total variation " + std::to_string(tv));
  }
  std::vector<VertexId> vertices;
  std::vector<OffspringLaw> laws;
  for (auto& [y, law] : pushed) {
    vertices.push_back(y);
    laws.push_back(std::move(law));
  }
  ModelMetadata meta = model.metadata();
  meta.scenario += meta.scenario.empty() ? "projected" : " (projected)";
  return BrwModel(std::move(vertices), std::move(laws), std::move(meta));
}

BrwModel restrict_model(const BrwModel& model,
                        const std::vector<VertexId>& subset) {
  if (subset.empty()) throw ValidationError("restriction to an empty set");
  std::unordered_set<VertexId> keep_set(subset.begin(), subset.end());
  auto keep = [&](VertexId v) { return keep_set.count(v) > 0; };
  std::vector<VertexId> vertices;
  std::vector<OffspringLaw> laws;
  std::vector<VertexId> interior;
  for (VertexId v : model.vertices()) {
    if (!keep(v)) continue;
    const OffspringLaw& law = model.law_of(v);
    bool cut = false;
    for (const auto& e : law.mean_row()) cut = cut || !keep(e.vertex);
    vertices.push_back(v);
    laws.push_back(cut ? law.restricted(keep) : law);
    if (!cut && model.is_interior(v)) interior.push_back(v);
  }
  if (vertices.size() != keep_set.size())
    throw ValidationError("restriction subset contains vertices outside the model");
  BrwModel out(std::move(vertices), std::move(laws), model.metadata());
  return out.with_interior(std::move(interior));
}

}  // namespace brw
