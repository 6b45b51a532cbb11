#include "brwlab/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace brw {

namespace {

const std::vector<ScenarioInfo> kRegistry = {
    {"gw", "single-vertex Galton-Watson process",
     "one vertex; every child stays put",
     {{"rho", "0:0.4,2:0.6", "child-count law n:p,..."},
      {"mean", "", "geometric child count with this mean (overrides rho)"},
      {"rate", "1", "self birth rate (lambda sweeps only)"}}},
    {"line_noext", "noext construction, reducible chain on N",
     "particle at i has n_i children at i+1 w.p. 2/n_i, none otherwise",
     {{"size", "8", "vertices 0..size-1"},
      {"n0", "4", "children at level 0"},
      {"slack", "1", "search target 1 - slack/(k+2) for the n_i helper"},
      {"n", "", "explicit n_0,n_1,... (overrides the helper)"}}},
    {"line_noext_irreducible", "noext construction, irreducible variant",
     "at i>=1: n_i children at i+1 plus one at i-1 w.p. 2/n_i, none otherwise",
     {{"size", "8", "vertices 0..size-1"},
      {"eps", "0.5", "requires 2/n_i < (1-eps)/4"},
      {"n0", "0", "children at level 0 (0 = smallest valid)"},
      {"slack", "1", "search target 1 - slack/(k+2) for the n_i helper"},
      {"n", "", "explicit n_0,n_1,... (overrides the helper)"}}},
    {"line_ex45", "subcritical means with global survival",
     "one child at n+1 w.p. p_n; irreducible variant adds a step back",
     {{"size", "64", "vertices 0..size-1"},
      {"variant", "irreducible", "irreducible | reducible"},
      {"p_base", "2", "p_n = 1 - p_base^-(n+2)"}}},
    {"zd_translation", "translation-invariant product-form BRW on Z^d",
     "nearest-neighbour dispersal on the box [-radius,radius]^d",
     {{"dim", "1", "1 or 2"},
      {"radius", "20", "box half-width"},
      {"rho", "0:0.25,2:0.75", "child-count law"},
      {"stay", "0", "probability a child stays at its parent's site"}}},
    {"tree_counterpart", "continuous-time BRW on the homogeneous tree",
     "ball in the regular tree, geometric counterpart laws, unit edge rates",
     {{"degree", "4", "tree degree r >= 3"},
      {"depth", "8", "ball radius"},
      {"lambda", "0.3", "birth-rate parameter"},
      {"rate", "1", "rate per edge"}}},
    {"zdrift", "drifting BRW on Z x cycle",
     "steps +1 w.p. p, -1 w.p. q, lateral otherwise; mean rho_bar",
     {{"rho_bar", "1.5", "mean children (binary law on {0,2})"},
      {"rho", "", "explicit child-count law (overrides rho_bar)"},
      {"p", "0.25", "forward step"},
      {"q", "0.25", "backward step"},
      {"width", "1", "cycle length of the lateral factor"},
      {"radius", "30", "first coordinate in [-radius,radius]"}}},
};

class Params {
 public:
  Params(const ScenarioInfo& info, const ParamMap& given) : info_(info) {
    for (const auto& p : info.params) values_[p.name] = p.default_value;
    for (const auto& [k, v] : given) {
      if (!values_.count(k))
        throw ScenarioError("scenario " + info.name + " has no parameter '" +
                            k + "'");
      values_[k] = v;
    }
  }

  const std::string& str(const std::string& key) const { return values_.at(key); }

  double real(const std::string& key) const {
    const std::string& s = str(key);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(v))
      throw ScenarioError(info_.name + ": '" + key + "' is not a number: " + s);
    return v;
  }

  std::int64_t integer(const std::string& key) const {
    const std::string& s = str(key);
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0')
      throw ScenarioError(info_.name + ": '" + key + "' is not an integer: " + s);
    return v;
  }

  std::vector<Count> counts(const std::string& key) const {
    std::vector<Count> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      char* end = nullptr;
      unsigned long long v = std::strtoull(item.c_str(), &end, 10);
      if (*end != '\0' || v == 0)
        throw ScenarioError(info_.name + ": bad entry in '" + key + "': " + item);
      out.push_back(v);
    }
    return out;
  }

  IntDistribution distribution(const std::string& key) const {
    try {
      return IntDistribution::parse(str(key));
    } catch (const ValidationError& e) {
      throw ScenarioError(info_.name + ": '" + key + "': " + e.what());
    }
  }

  ModelMetadata metadata(VertexId origin, std::string labeling) const {
    ModelMetadata m;
    m.scenario = info_.name;
    for (const auto& p : info_.params) m.params.emplace_back(p.name, values_.at(p.name));
    m.params.emplace_back("origin", std::to_string(origin));
    m.labeling = std::move(labeling);
    return m;
  }

 private:
  const ScenarioInfo& info_;
  std::map<std::string, std::string> values_;
};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

BrwModel singleton_gw(std::shared_ptr<const IntDistribution> rho) {
  std::vector<OffspringLaw> laws{OffspringLaw::product(std::move(rho), Row{{0, 1.0}})};
  ModelMetadata m;
  m.scenario = "gw";
  m.params.emplace_back("origin", "0");
  return BrwModel({0}, std::move(laws), m);
}

Quotient gw_quotient(std::shared_ptr<const IntDistribution> rho) {
  return Quotient{std::make_shared<const BrwModel>(singleton_gw(std::move(rho))),
                  [](VertexId) { return VertexId{0}; },
                  "constant map onto a single vertex"};
}

// Product-form law at `x` with the given dispersal, restricted to `inside`.
OffspringLaw windowed_law(const std::shared_ptr<const IntDistribution>& rho,
                          const Row& dispersal,
                          const std::function<bool(VertexId)>& inside) {
  Row kept;
  double lost = 0.0;
  for (const auto& e : dispersal) {
    if (inside(e.vertex))
      kept.push_back(e);
    else
      lost += e.weight;
  }
  return OffspringLaw::product(rho, std::move(kept), lost);
}

BrwModel build_gw(const Params& p) {
  std::shared_ptr<const IntDistribution> rho;
  if (p.str("mean").empty()) {
    rho = std::make_shared<const IntDistribution>(p.distribution("rho"));
  } else {
    const double mean = p.real("mean");
    if (!(mean > 0.0)) throw ScenarioError("gw: mean must be positive");
    rho = std::make_shared<const IntDistribution>(IntDistribution::geometric(mean));
  }
  std::vector<OffspringLaw> laws{OffspringLaw::product(rho, Row{{0, 1.0}})};
  return BrwModel({0}, std::move(laws), p.metadata(0, "single vertex 0"))
      .with_quotient(gw_quotient(rho));
}

std::vector<Count> noext_counts(const Params& p, std::size_t size,
                                bool irreducible) {
  std::vector<Count> n = p.counts("n");
  if (!n.empty()) {
    if (n.size() < size)
      throw ScenarioError("n lists " + std::to_string(n.size()) +
                          " values, size needs " + std::to_string(size));
    n.resize(size);
    for (Count v : n)
      if (v < 2) throw ScenarioError("every n_i must be at least 2");
    return n;
  }
  const double slack = p.real("slack");
  if (!(slack > 0.0) || slack > 1.0) throw ScenarioError("slack must be in (0,1]");
  if (irreducible) {
    const double eps = p.real("eps");
    if (!(eps > 0.0 && eps < 1.0)) throw ScenarioError("eps must be in (0,1)");
    std::int64_t n0 = p.integer("n0");
    if (n0 < 0) throw ScenarioError("n0 must be nonnegative");
    return noext_irreducible_sequence(size, eps, static_cast<Count>(n0), slack);
  }
  std::int64_t n0 = p.integer("n0");
  if (n0 < 2) throw ScenarioError("n0 must be at least 2");
  return noext_sequence(size, static_cast<Count>(n0), slack);
}

BrwModel build_line_noext(const Params& p, bool irreducible) {
  std::int64_t size = p.integer("size");
  if (size < 1) throw ScenarioError("size must be positive");
  const auto n = noext_counts(p, static_cast<std::size_t>(size), irreducible);
  std::vector<VertexId> vertices;
  std::vector<OffspringLaw> laws;
  for (std::int64_t i = 0; i < size; ++i) {
    const double pi = 2.0 / static_cast<double>(n[i]);
    std::vector<std::pair<VertexId, Count>> kids;
    if (i + 1 < size) kids.emplace_back(i + 1, n[i]);
    if (irreducible && i >= 1) kids.emplace_back(i - 1, 1);
    std::vector<Atom> atoms;
    OffspringConfig birth = OffspringConfig::from_counts(kids);
    if (birth.empty()) {
      atoms.push_back(Atom{OffspringConfig{}, 1.0});
    } else {
      atoms.push_back(Atom{OffspringConfig{}, 1.0 - pi});
      atoms.push_back(Atom{birth, pi});
    }
    vertices.push_back(i);
    laws.push_back(OffspringLaw::from_atoms(std::move(atoms)));
  }
  std::vector<VertexId> interior(vertices.begin(), vertices.end() - 1);
  ModelMetadata meta = p.metadata(0, "vertex i is level i");
  std::string list;
  for (Count v : n) list += (list.empty() ? "" : ",") + std::to_string(v);
  meta.params.emplace_back("n_used", list);
  meta.truncation_index = static_cast<std::size_t>(size - 1);
  return BrwModel(std::move(vertices), std::move(laws), std::move(meta))
      .with_interior(std::move(interior));
}

BrwModel build_line_ex45(const Params& p) {
  std::int64_t size = p.integer("size");
  if (size < 2) throw ScenarioError("size must be at least 2");
  const double base = p.real("p_base");
  if (!(base > 1.0)) throw ScenarioError("p_base must exceed 1");
  const std::string& variant = p.str("variant");
  if (variant != "irreducible" && variant != "reducible")
    throw ScenarioError("variant must be irreducible or reducible");
  const bool irreducible = variant == "irreducible";
  std::vector<VertexId> vertices;
  std::vector<OffspringLaw> laws;
  for (std::int64_t i = 0; i < size; ++i) {
    const double pi = 1.0 - std::pow(base, -static_cast<double>(i + 2));
    std::vector<Atom> atoms;
    double none = 1.0 - pi;
    if (i + 1 < size)
      atoms.push_back(Atom{OffspringConfig{{i + 1, 1}}, pi});
    else
      none += pi;
    if (irreducible) {
      atoms.push_back(Atom{OffspringConfig{{i >= 1 ? i - 1 : 0, 1}}, (1.0 - pi) / 2});
      none -= (1.0 - pi) / 2;
    }
    atoms.push_back(Atom{OffspringConfig{}, none});
    std::erase_if(atoms, [](const Atom& a) { return a.probability <= 0.0; });
    vertices.push_back(i);
    laws.push_back(OffspringLaw::from_atoms(std::move(atoms)));
  }
  std::vector<VertexId> interior(vertices.begin(), vertices.end() - 1);
  ModelMetadata meta = p.metadata(0, "vertex n is the integer n");
  meta.truncation_index = static_cast<std::size_t>(size - 1);
  return BrwModel(std::move(vertices), std::move(laws), std::move(meta))
      .with_interior(std::move(interior));
}

BrwModel build_zd(const Params& p) {
  const std::int64_t dim = p.integer("dim");
  const std::int64_t r = p.integer("radius");
  const double stay = p.real("stay");
  if (dim != 1 && dim != 2) throw ScenarioError("dim must be 1 or 2");
  if (r < 0) throw ScenarioError("radius must be nonnegative");
  if (!(stay >= 0.0 && stay <= 1.0)) throw ScenarioError("stay must be in [0,1]");
  auto rho = std::make_shared<const IntDistribution>(p.distribution("rho"));
  const std::int64_t w = 2 * r + 1;
  const std::int64_t jr = dim == 1 ? 0 : r;
  auto id = [&](std::int64_t i, std::int64_t j) { return dim == 1 ? i : i * w + j; };
  auto in_box = [&](std::int64_t i, std::int64_t j) {
    return i >= -r && i <= r && j >= -jr && j <= jr;
  };
  const double step = (1.0 - stay) / static_cast<double>(2 * dim);
  std::vector<VertexId> vertices, interior;
  std::vector<OffspringLaw> laws;
  for (std::int64_t i = -r; i <= r; ++i) {
    for (std::int64_t j = -jr; j <= jr; ++j) {
      Row row;
      double lost = 0.0;
      auto add = [&](std::int64_t a, std::int64_t b, double weight) {
        if (weight == 0.0) return;
        if (in_box(a, b))
          row.push_back({id(a, b), weight});
        else
          lost += weight;
      };
      add(i, j, stay);
      add(i - 1, j, step);
      add(i + 1, j, step);
      if (dim == 2) {
        add(i, j - 1, step);
        add(i, j + 1, step);
      }
      vertices.push_back(id(i, j));
      laws.push_back(OffspringLaw::product(rho, std::move(row), lost));
      if (lost == 0.0) interior.push_back(id(i, j));
    }
  }
  std::string labeling = dim == 1 ? "vertex i is the integer i"
                                  : "vertex i*(2*radius+1)+j is the site (i,j)";
  ModelMetadata meta = p.metadata(0, labeling);
  meta.truncation_index = static_cast<std::size_t>(r);
  return BrwModel(std::move(vertices), std::move(laws), std::move(meta))
      .with_interior(std::move(interior))
      .with_quotient(gw_quotient(rho));
}

BrwModel build_zdrift(const Params& p) {
  const double fwd = p.real("p");
  const double back = p.real("q");
  const std::int64_t width = p.integer("width");
  const std::int64_t r = p.integer("radius");
  if (fwd < 0.0 || back < 0.0 || fwd + back > 1.0 + 1e-15)
    throw ScenarioError("zdrift needs p, q >= 0 and p + q <= 1");
  if (width < 1) throw ScenarioError("width must be positive");
  if (r < 0) throw ScenarioError("radius must be nonnegative");
  std::shared_ptr<const IntDistribution> rho;
  if (!p.str("rho").empty()) {
    rho = std::make_shared<const IntDistribution>(p.distribution("rho"));
  } else {
    const double mean = p.real("rho_bar");
    if (!(mean >= 0.0 && mean <= 2.0))
      throw ScenarioError("rho_bar outside [0,2]; pass an explicit rho");
    rho = std::make_shared<const IntDistribution>(
        std::vector<double>{1.0 - mean / 2.0, 0.0, mean / 2.0});
  }
  const double side = std::max(0.0, 1.0 - fwd - back);
  auto id = [&](std::int64_t i, std::int64_t y) { return i * width + y; };
  auto inside = [&](VertexId v) {
    std::int64_t i = floor_div(v, width);
    return i >= -r && i <= r;
  };
  std::vector<VertexId> vertices, interior;
  std::vector<OffspringLaw> laws;
  for (std::int64_t i = -r; i <= r; ++i) {
    for (std::int64_t y = 0; y < width; ++y) {
      Row row{{id(i + 1, y), fwd}, {id(i - 1, y), back}};
      if (width == 1) {
        row.push_back({id(i, y), side});
      } else {
        row.push_back({id(i, (y + 1) % width), side / 2});
        row.push_back({id(i, (y + width - 1) % width), side / 2});
      }
      std::erase_if(row, [](const RowEntry& e) { return e.weight == 0.0; });
      bool cut = (std::abs(i) == r) && (fwd > 0.0 || back > 0.0);
      vertices.push_back(id(i, y));
      laws.push_back(windowed_law(rho, row, inside));
      if (!cut) interior.push_back(id(i, y));
    }
  }
  ModelMetadata meta = p.metadata(0, "vertex i*width+y is the site (i,y)");
  meta.truncation_index = static_cast<std::size_t>(r);
  return BrwModel(std::move(vertices), std::move(laws), std::move(meta))
      .with_interior(std::move(interior))
      .with_quotient(gw_quotient(rho));
}

struct TreeLayout {
  std::vector<std::uint32_t> parent;
  std::vector<std::uint32_t> depth;
  std::vector<std::uint32_t> first_child;  // 0 when the vertex has none
  std::vector<std::uint32_t> children;
  std::vector<std::int64_t> height;
};

TreeLayout tree_layout(std::size_t degree, std::size_t depth) {
  if (degree < 3) throw ScenarioError("tree degree must be at least 3");
  double total = 1.0, level = 1.0;
  for (std::size_t d = 1; d <= depth; ++d) {
    level *= static_cast<double>(d == 1 ? degree : degree - 1);
    total += level;
  }
  if (total > 5e7) throw ScenarioError("tree window too large");
  TreeLayout t;
  const auto n = static_cast<std::size_t>(total);
  t.parent.assign(n, 0);
  t.depth.assign(n, 0);
  t.first_child.assign(n, 0);
  t.children.assign(n, 0);
  t.height.assign(n, 0);
  std::vector<char> on_ray(n, 0);
  on_ray[0] = 1;
  std::uint32_t next = 1;
  for (std::uint32_t v = 0; v < n; ++v) {
    if (v > 0) {
      std::uint32_t u = t.parent[v];
      on_ray[v] = on_ray[u] && t.first_child[u] == v;
      t.height[v] = on_ray[v] ? t.height[u] - 1 : t.height[u] + 1;
    }
    if (t.depth[v] == depth) continue;
    t.children[v] = static_cast<std::uint32_t>(v == 0 ? degree : degree - 1);
    t.first_child[v] = next;
    for (std::uint32_t c = 0; c < t.children[v]; ++c, ++next) {
      t.parent[next] = v;
      t.depth[next] = t.depth[v] + 1;
    }
  }
  return t;
}

RateMatrix tree_rates(const Params& p) {
  const std::int64_t degree = p.integer("degree");
  const std::int64_t depth = p.integer("depth");
  const double rate = p.real("rate");
  if (depth < 1) throw ScenarioError("depth must be positive");
  if (!(rate > 0.0)) throw ScenarioError("rate must be positive");
  const TreeLayout t = tree_layout(static_cast<std::size_t>(degree),
                                   static_cast<std::size_t>(depth));
  RateMatrix m;
  const std::size_t n = t.parent.size();
  m.vertices.resize(n);
  m.rows.resize(n);
  m.lost_rate.assign(n, 0.0);
  for (std::uint32_t v = 0; v < n; ++v) {
    m.vertices[v] = v;
    Row& row = m.rows[v];
    if (v > 0) row.push_back({t.parent[v], rate});
    for (std::uint32_t c = 0; c < t.children[v]; ++c)
      row.push_back({t.first_child[v] + c, rate});
    if (t.depth[v] == static_cast<std::uint32_t>(depth))
      m.lost_rate[v] = rate * static_cast<double>(degree - 1);
    else
      m.interior.push_back(v);
    row = normalize_row(std::move(row));
  }
  m.metadata = p.metadata(0, "breadth-first order from the root; the children "
                             "of a vertex are consecutive, child 0 first");
  m.metadata.truncation_index = static_cast<std::size_t>(depth);
  auto q = std::make_shared<RateMatrix>();
  q->vertices = {0};
  q->rows = {Row{{0, rate * static_cast<double>(degree)}}};
  q->lost_rate = {0.0};
  q->interior = {0};
  q->metadata.scenario = "gw";
  q->metadata.params.emplace_back("origin", "0");
  m.quotient = std::move(q);
  m.quotient_map = [](VertexId) { return VertexId{0}; };
  return m;
}

RateMatrix gw_rates(const Params& p) {
  const double rate = p.real("rate");
  if (!(rate > 0.0)) throw ScenarioError("rate must be positive");
  RateMatrix m;
  m.vertices = {0};
  m.rows = {Row{{0, rate}}};
  m.lost_rate = {0.0};
  m.interior = {0};
  m.metadata = p.metadata(0, "single vertex 0");
  return m;
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_registry() { return kRegistry; }

const ScenarioInfo& scenario_info(std::string_view name) {
  for (const auto& s : kRegistry)
    if (s.name == name) return s;
  throw ScenarioError("unknown scenario '" + std::string(name) + "'");
}

BrwModel build_scenario(std::string_view name, const ParamMap& params) {
  const ScenarioInfo& info = scenario_info(name);
  Params p(info, params);
  try {
    if (name == "gw") return build_gw(p);
    if (name == "line_noext") return build_line_noext(p, false);
    if (name == "line_noext_irreducible") return build_line_noext(p, true);
    if (name == "line_ex45") return build_line_ex45(p);
    if (name == "zd_translation") return build_zd(p);
    if (name == "zdrift") return build_zdrift(p);
    if (name == "tree_counterpart")
      return counterpart_model(tree_rates(p), p.real("lambda"));
  } catch (const ValidationError& e) {
    throw ScenarioError(std::string(name) + ": " + e.what());
  }
  throw ScenarioError("scenario '" + std::string(name) + "' has no builder");
}

VertexId model_origin(const BrwModel& model) {
  for (const auto& [k, v] : model.metadata().params)
    if (k == "origin") return std::stoll(v);
  return model.vertex(0);
}

std::vector<std::vector<VertexId>> ball_exhaustion(
    const BrwModel& model, VertexId center,
    const std::vector<std::size_t>& radii) {
  const Digraph& g = model.graph();
  const std::size_t n = model.size();
  std::vector<std::vector<std::uint32_t>> undirected(n);
  for (std::uint32_t u = 0; u < n; ++u)
    for (const std::uint32_t* it = g.begin(u); it != g.end(u); ++it) {
      undirected[u].push_back(*it);
      undirected[*it].push_back(u);
    }
  constexpr std::size_t kFar = ~std::size_t{0};
  std::vector<std::size_t> dist(n, kFar);
  const auto src = static_cast<std::uint32_t>(model.index_of(center));
  std::vector<std::uint32_t> queue{src};
  dist[src] = 0;
  for (std::size_t h = 0; h < queue.size(); ++h)
    for (std::uint32_t v : undirected[queue[h]])
      if (dist[v] == kFar) {
        dist[v] = dist[queue[h]] + 1;
        queue.push_back(v);
      }
  std::vector<std::vector<VertexId>> out;
  for (std::size_t r : radii) {
    std::vector<VertexId> ball;
    for (std::size_t i = 0; i < n; ++i)
      if (dist[i] <= r) ball.push_back(model.vertex(i));
    std::sort(ball.begin(), ball.end());
    out.push_back(std::move(ball));
  }
  return out;
}

BrwModel counterpart_model(const RateMatrix& rates, double lambda) {
  if (rates.rows.size() != rates.vertices.size() ||
      rates.lost_rate.size() != rates.vertices.size())
    throw ValidationError("rate matrix shape mismatch");
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  std::map<double, std::shared_ptr<const IntDistribution>> geometric;
  std::vector<OffspringLaw> laws;
  laws.reserve(rates.vertices.size());
  for (std::size_t i = 0; i < rates.vertices.size(); ++i) {
    double k = rates.lost_rate[i];
    for (const auto& e : rates.rows[i]) k += e.weight;
    if (!(k > 0.0))
      throw ValidationError("vertex " + std::to_string(rates.vertices[i]) +
                            " has zero total rate");
    auto& rho = geometric[k];
    if (!rho)
      rho = std::make_shared<const IntDistribution>(
          IntDistribution::geometric(lambda * k));
    Row row;
    for (const auto& e : rates.rows[i]) row.push_back({e.vertex, e.weight / k});
    laws.push_back(OffspringLaw::product(rho, std::move(row), rates.lost_rate[i] / k));
  }
  ModelMetadata meta = rates.metadata;
  bool has_lambda = false;
  for (auto& [key, value] : meta.params)
    if (key == "lambda") {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", lambda);
      value = buf;
      has_lambda = true;
    }
  if (!has_lambda) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", lambda);
    meta.params.emplace_back("lambda", buf);
  }
  BrwModel model(rates.vertices, std::move(laws), std::move(meta));
  if (!rates.interior.empty()) model = model.with_interior(rates.interior);
  if (rates.quotient && rates.quotient_map) {
    auto q = std::make_shared<const BrwModel>(counterpart_model(*rates.quotient, lambda));
    model = model.with_quotient(Quotient{q, rates.quotient_map,
                                         "constant map onto a single vertex"});
  }
  return model;
}

RateMatrix scenario_rates(std::string_view name, const ParamMap& params) {
  const ScenarioInfo& info = scenario_info(name);
  Params p(info, params);
  if (name == "tree_counterpart") return tree_rates(p);
  if (name == "gw") return gw_rates(p);
  throw ScenarioError("scenario '" + std::string(name) +
                      "' is not a continuous-time scenario");
}

Projection horocycle_projection(std::size_t degree, std::size_t depth) {
  auto t = std::make_shared<const TreeLayout>(tree_layout(degree, depth));
  Projection g;
  g.map = [t](VertexId v) {
    if (v < 0 || static_cast<std::size_t>(v) >= t->height.size())
      throw ValidationError("vertex outside the tree window");
    return VertexId{t->height[static_cast<std::size_t>(v)]};
  };
  std::set<VertexId> heights;
  for (std::size_t v = 0; v < t->height.size(); ++v)
    if (t->depth[v] < depth) heights.insert(t->height[v]);
  g.targets.assign(heights.begin(), heights.end());
  return g;
}

Projection first_coordinate_projection(const BrwModel& model) {
  const auto& meta = model.metadata();
  auto param = [&](const std::string& key) -> std::int64_t {
    for (const auto& [k, v] : meta.params)
      if (k == key) return std::stoll(v);
    throw ValidationError("model has no parameter '" + key + "'");
  };
  std::function<VertexId(VertexId)> map;
  if (meta.scenario == "zd_translation") {
    const std::int64_t r = param("radius");
    if (param("dim") == 1)
      map = [](VertexId v) { return v; };
    else
      map = [r](VertexId v) { return floor_div(v + r, 2 * r + 1); };
  } else if (meta.scenario == "zdrift") {
    const std::int64_t w = param("width");
    map = [w](VertexId v) { return floor_div(v, w); };
  } else {
    throw ValidationError("no first coordinate for scenario '" + meta.scenario + "'");
  }
  std::set<VertexId> targets;
  for (VertexId v : model.vertices()) targets.insert(map(v));
  return Projection{map, std::vector<VertexId>(targets.begin(), targets.end())};
}

std::vector<double> noext_partial_deficits(const std::vector<Count>& n) {
  if (n.empty()) return {};
  std::vector<double> w(n.size());
  w.back() = 2.0 / static_cast<double>(n.back());
  for (std::size_t i = n.size() - 1; i-- > 0;) {
    const double p = 2.0 / static_cast<double>(n[i]);
    const double next = w[i + 1];
    w[i] = next >= 1.0 ? p
                       : p * -std::expm1(static_cast<double>(n[i]) * std::log1p(-next));
  }
  return w;
}

double noext_escape_bound(const std::vector<Count>& n) {
  double w = 1.0;  // reaching level n.size() counts as escape
  for (std::size_t i = n.size(); i-- > 0;) {
    const double p = 2.0 / static_cast<double>(n[i]);
    w = w >= 1.0 ? p : p * -std::expm1(static_cast<double>(n[i]) * std::log1p(-w));
  }
  return 1.0 - w;
}

namespace {

// Smallest n >= lo with ok(n); ok is monotone in n.
Count monotone_search(Count lo, const std::function<bool(Count)>& ok) {
  if (ok(lo)) return lo;
  Count bad = lo, hi = lo;
  do {
    bad = hi;
    if (hi > (Count{1} << 62)) throw ScenarioError("noext search overflowed");
    hi *= 2;
  } while (!ok(hi));
  while (hi - bad > 1) {
    Count mid = bad + (hi - bad) / 2;
    if (ok(mid))
      hi = mid;
    else
      bad = mid;
  }
  return hi;
}

// Minimal solution, as deficits 1 - z, of the irreducible partial system on
// levels 0..k+1 with z(k+1) = 1 - p_{k+1}.
std::vector<double> irreducible_deficits(const std::vector<Count>& n) {
  const std::size_t m = n.size();
  std::vector<double> w(m, 1.0);
  w.back() = 2.0 / static_cast<double>(n.back());
  for (int it = 0; it < 100000; ++it) {
    double change = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const double p = 2.0 / static_cast<double>(n[i]);
      // z(i) = p z(i+1)^n_i z(i-1) + 1 - p
      double log_keep = w[i + 1] >= 1.0
                            ? -INFINITY
                            : static_cast<double>(n[i]) * std::log1p(-w[i + 1]);
      if (i > 0) log_keep += w[i - 1] >= 1.0 ? -INFINITY : std::log1p(-w[i - 1]);
      double nw = p * -std::expm1(log_keep);
      change = std::max(change, std::abs(nw - w[i]));
      w[i] = nw;
    }
    if (change <= 1e-13 * *std::min_element(w.begin(), w.end())) break;
  }
  return w;
}

}  // namespace

std::vector<Count> noext_sequence(std::size_t count, Count n0, double slack) {
  if (count == 0) return {};
  std::vector<Count> n{n0};
  while (n.size() < count) {
    const std::size_t k = n.size() - 1;
    const double target_deficit = slack / static_cast<double>(k + 2);
    n.push_back(monotone_search(n.back(), [&](Count c) {
      auto trial = n;
      trial.push_back(c);
      auto w = noext_partial_deficits(trial);
      return *std::max_element(w.begin(), w.end()) <= target_deficit;
    }));
  }
  return n;
}

std::vector<Count> noext_irreducible_sequence(std::size_t count, double eps,
                                              Count n0, double slack) {
  if (count == 0) return {};
  // 2/n < (1-eps)/4  <=>  n > 8/(1-eps)
  const Count floor_n = static_cast<Count>(std::floor(8.0 / (1.0 - eps))) + 1;
  if (n0 == 0) n0 = floor_n;
  if (n0 < floor_n)
    throw ScenarioError("n0 too small for eps: need n0 >= " + std::to_string(floor_n));
  std::vector<Count> n{n0};
  while (n.size() < count) {
    const std::size_t k = n.size() - 1;
    const double target_deficit = slack / static_cast<double>(k + 2);
    n.push_back(monotone_search(n.back(), [&](Count c) {
      auto trial = n;
      trial.push_back(c);
      auto w = irreducible_deficits(trial);
      return *std::max_element(w.begin(), w.end()) <= target_deficit;
    }));
  }
  return n;
}

}  // namespace brw
