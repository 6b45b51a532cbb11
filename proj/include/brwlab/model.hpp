#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "brwlab/graph.hpp"
#include "brwlab/int_distribution.hpp"
#include "brwlab/offspring_law.hpp"

namespace brw {

struct ModelMetadata {
  std::string scenario;
  std::vector<std::pair<std::string, std::string>> params;
  // Index n of the truncation X_n this model represents (0 if not part of
  // a ladder).
  std::size_t truncation_index = 0;
  // How vertex ids encode geometry, for humans.
  std::string labeling;
};

class BrwModel;

// Surjective map g from source vertices onto a target vertex list.
struct Projection {
  std::function<VertexId(VertexId)> map;
  std::vector<VertexId> targets;

  static Projection identity(const BrwModel& model);
  static Projection from_map(const std::unordered_map<VertexId, VertexId>& g);
};

// Finite quotient describing the untruncated model: a projection that is a
// local isomorphism onto a finite model.
struct Quotient {
  std::shared_ptr<const BrwModel> model;
  std::function<VertexId(VertexId)> map;
  std::string description;
};

// Index-based view of the laws, built once per model for the hot loops.
struct CompiledLaws {
  // Per vertex: true if product form.
  std::vector<char> product;
  // Product form: dispersal targets as model indices; void mass per vertex.
  std::vector<std::size_t> disp_offsets;
  std::vector<std::uint32_t> disp_index;
  std::vector<double> disp_weight;
  std::vector<double> void_mass;
  std::vector<const IntDistribution*> rho;
  // Atom form: atoms per vertex, children per atom.
  std::vector<std::size_t> atom_offsets;
  std::vector<double> atom_prob;
  std::vector<std::size_t> child_offsets;
  std::vector<std::uint32_t> child_index;
  std::vector<Count> child_count;
};

// Finite truncation of a BRW: vertices plus one law per vertex. Every
// vertex a law can place children on must belong to the model. Copies are
// cheap and share the immutable payload.
class BrwModel {
 public:
  BrwModel(std::vector<VertexId> vertices, std::vector<OffspringLaw> laws,
           ModelMetadata metadata = {});

  std::size_t size() const { return data_->vertices.size(); }
  const std::vector<VertexId>& vertices() const { return data_->vertices; }
  VertexId vertex(std::size_t i) const { return data_->vertices[i]; }
  std::optional<std::size_t> find(VertexId v) const;
  std::size_t index_of(VertexId v) const;  // throws ValidationError
  bool contains(VertexId v) const { return find(v).has_value(); }

  const OffspringLaw& law(std::size_t i) const { return data_->laws[i]; }
  const OffspringLaw& law_of(VertexId v) const { return law(index_of(v)); }
  const std::vector<OffspringLaw>& laws() const { return data_->laws; }
  const CompiledLaws& compiled() const { return data_->compiled; }
  // Edges x -> y with m_xy > 0.
  const Digraph& graph() const { return data_->graph; }

  const ModelMetadata& metadata() const { return extras_->metadata; }
  // Vertices whose law was not cut by the truncation. Defaults to all.
  const std::vector<VertexId>& interior() const { return extras_->interior; }
  bool is_interior(VertexId v) const;
  const Quotient* quotient() const {
    return extras_->quotient ? &*extras_->quotient : nullptr;
  }

  BrwModel with_metadata(ModelMetadata metadata) const;
  BrwModel with_interior(std::vector<VertexId> interior) const;
  BrwModel with_quotient(Quotient quotient) const;

 private:
  struct Data {
    std::vector<VertexId> vertices;
    std::vector<OffspringLaw> laws;
    std::unordered_map<VertexId, std::size_t> index;
    CompiledLaws compiled;
    Digraph graph;
  };
  struct Extras {
    ModelMetadata metadata;
    std::vector<VertexId> interior;
    std::vector<char> interior_mask;
    std::optional<Quotient> quotient;
  };

  std::shared_ptr<const Data> data_;
  std::shared_ptr<const Extras> extras_;
};

// Stochastically dominating child-count law:
// rho(n) = sup_x rho_x([n,inf)) - sup_x rho_x([n+1,inf)).
IntDistribution dominating_law(const BrwModel& model);

// Pushes every law in `domain` (default: all vertices) through g. The
// target model has vertex set g(domain); children landing elsewhere are
// dropped. Throws ValidationError when two vertices of one fiber push
// forward to laws farther apart than tv_tolerance.
BrwModel project_model(const BrwModel& model, const Projection& g,
                       const std::vector<VertexId>* domain = nullptr,
                       double tv_tolerance = 1e-12);

// Suppresses all reproduction outside `subset`.
BrwModel restrict_model(const BrwModel& model,
                        const std::vector<VertexId>& subset);

struct ClassVerdict {
  std::vector<VertexId> members;
  bool nonsingular = false;
  // Vertex achieving the smallest P(exactly one child inside the class).
  VertexId witness = 0;
  double min_single_child_probability = 1.0;
};

// Per communicating class of this truncation: whether some vertex y has
// mu_y(f : sum over the class of f = 1) < 1. Classes are those of the
// truncation, which may differ from the untruncated space.
std::vector<ClassVerdict> check_assumption_nonsingular(const BrwModel& model);

struct InvarianceReport {
  bool invariant = true;
  std::vector<VertexId> checked;
  std::vector<VertexId> exempt;
  double max_distance = 0.0;
  std::optional<VertexId> worst;
};

// Tests mu_x(f) = mu_{gamma x}(f o gamma^{-1}) on interior vertices. A
// vertex is exempt when gamma(x) is not interior or gamma is undefined on
// part of its offspring support. Throws ValidationError if gamma is not
// injective on the interior.
InvarianceReport check_invariance(
    const BrwModel& model,
    const std::function<std::optional<VertexId>(VertexId)>& gamma,
    double tolerance = 1e-12);

}  // namespace brw
