#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/model.hpp"
#include "brwlab/rng.hpp"

namespace brw {

// Particles per site as a sparse count vector over model indices.
struct PopulationState {
  // (model index, count), sorted by index, counts > 0.
  std::vector<std::pair<std::uint32_t, Count>> counts;
  std::size_t generation = 0;
  // Particles ever born, generation 0 included (after caps).
  Count total_born = 0;

  Count population() const;
  Count at(std::uint32_t index) const;
  bool empty() const { return counts.empty(); }

  static PopulationState from_vertices(
      const BrwModel& model, const std::vector<std::pair<VertexId, Count>>& eta0);
  std::vector<std::pair<VertexId, Count>> to_vertices(const BrwModel& model) const;
};

// True if a(i) <= b(i) at every index.
bool dominated_by(const PopulationState& a, const PopulationState& b);

enum class SamplingScheme {
  // One alias draw over the atoms of mu_x.
  direct,
  // Total H ~ rho_x first, then a configuration conditioned on H.
  two_stage,
};

// Child of one particle: (model index, count). Entries may repeat.
using ChildList = std::vector<std::pair<std::uint32_t, Count>>;

// Alias tables for every vertex of a model, built once.
class Sampler {
 public:
  explicit Sampler(BrwModel model, SamplingScheme scheme = SamplingScheme::direct);

  const BrwModel& model() const { return model_; }
  SamplingScheme scheme() const { return scheme_; }

  // Children of one particle at model index i.
  void sample(std::uint32_t i, CounterStream& stream, ChildList& out) const;

 private:
  struct VertexTable {
    bool product = false;
    AliasTable main;  // atoms (direct), totals (two_stage) or rho (product)
    // two_stage: per total, the atoms with that total.
    std::vector<AliasTable> by_total;
    std::vector<std::vector<std::uint32_t>> by_total_atoms;
    // product form: dispersal, last column is void when void_mass > 0.
    AliasTable dispersal;
    bool has_void = false;
    // product form: child count for each column of `main`.
    std::vector<Count> rho_values;
  };

  BrwModel model_;
  SamplingScheme scheme_;
  std::vector<VertexTable> tables_;
};

// Randomness for one replica. Vertex x at generation n of replica r reads
// the stream (seed, r, n, index of x); its particles consume it in order.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t replica = 0;
};

inline constexpr Count kDefaultPopulationCap = 100'000'000;

// One generation of the BRW. Throws PopulationOverflow when the number of
// children born exceeds pop_cap.
PopulationState step(const PopulationState& state, const Sampler& sampler,
                     StreamKey key, Count pop_cap = kDefaultPopulationCap);

// BRW_m: as step, then every site count is replaced by min(count, m) once
// all arrivals are summed. m = kUnboundedCap is step itself.
PopulationState step_truncated(const PopulationState& state, Count m,
                               const Sampler& sampler, StreamKey key,
                               Count pop_cap = kDefaultPopulationCap);

// Per-vertex map F_x with F_x(f) <= f, applied to the lower process.
struct Coupling {
  enum class Kind { identity, restriction, custom };
  Kind kind = Kind::identity;
  std::vector<char> keep;  // restriction: model indices of Y
  // custom: rewrites the (sorted, merged) configuration of a particle at x.
  std::function<void(std::uint32_t x, ChildList& config)> map;

  static Coupling identity() { return {}; }
  static Coupling restriction(const BrwModel& model, const std::vector<VertexId>& subset);
  static Coupling custom(std::function<void(std::uint32_t, ChildList&)> f);
};

struct CoupledState {
  PopulationState upper;
  PopulationState lower;
};

// Upper runs BRW_m. The first lower(x) particles at x reuse the upper
// draws passed through F_x, then the lower process is capped at k. Throws
// InvariantViolation if lower <= upper ever fails or F increases a count.
CoupledState step_coupled(const CoupledState& pair, Count m, Count k,
                          const Sampler& sampler, const Coupling& coupling,
                          StreamKey key, Count pop_cap = kDefaultPopulationCap);

struct TrialSpec {
  std::vector<std::pair<VertexId, Count>> eta0;
  std::size_t horizon = 100;
  std::optional<VertexId> target;
  Count cap = kUnboundedCap;
  Count pop_cap = kDefaultPopulationCap;
  // A replica counts as a late visit if the target is occupied at some
  // generation in (horizon - window, horizon]. 0 means horizon / 2.
  std::size_t visit_window = 0;
};

struct TrialOutcome {
  std::uint32_t replica = 0;
  std::uint64_t seed = 0;
  // An overflowed trial counts as alive (conservative).
  bool alive = false;
  bool overflow = false;
  Count visits = 0;  // generations 1..horizon with the target occupied
  std::optional<std::size_t> last_visit;
  bool late_visit = false;
  Count peak = 0;
  std::size_t generations = 0;
  Count total_born = 0;

  friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

// Simulates to the horizon or to global extinction. horizon >= 1.
TrialOutcome run_survival_trial(const Sampler& sampler, const TrialSpec& spec,
                                std::uint64_t seed, std::uint32_t replica = 0);

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

// Wilson score interval at the given normal quantile (default 95%).
Interval wilson_interval(std::size_t successes, std::size_t n,
                         double z = 1.959963984540054);

struct SurvivalEstimate {
  std::size_t replicas = 0;
  std::size_t successes = 0;
  double frequency = 0.0;
  Interval ci;
  std::size_t late_visits = 0;
  double visit_frequency = 0.0;
  Interval visit_ci;
  std::size_t overflows = 0;
  std::vector<TrialOutcome> outcomes;

  // replica,seed,alive_flag,last_target_visit,peak_population,N_horizon,overflow
  std::string replica_csv() const;
};

// Runs replicas 0..replicas-1 with streams (seed, r) on `threads` workers
// (0 = hardware concurrency). The result does not depend on the worker
// count. horizon 0 reports every replica alive.
SurvivalEstimate estimate_survival(const Sampler& sampler, const TrialSpec& spec,
                                   std::size_t replicas, std::uint64_t seed,
                                   unsigned threads = 0);

// Runs fn(i) for i in [0, n) on a pool of workers, each index exactly once.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace brw
