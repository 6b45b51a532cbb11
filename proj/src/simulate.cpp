#include "brwlab/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "brwlab/csv.hpp"

namespace brw {

Count PopulationState::population() const {
  Count s = 0;
  for (const auto& e : counts) s += e.second;
  return s;
}

Count PopulationState::at(std::uint32_t index) const {
  auto it = std::lower_bound(counts.begin(), counts.end(), index,
                             [](const auto& e, std::uint32_t i) { return e.first < i; });
  return (it != counts.end() && it->first == index) ? it->second : 0;
}

PopulationState PopulationState::from_vertices(
    const BrwModel& model, const std::vector<std::pair<VertexId, Count>>& eta0) {
  std::map<std::uint32_t, Count> acc;
  for (const auto& [v, c] : eta0)
    if (c > 0) acc[static_cast<std::uint32_t>(model.index_of(v))] += c;
  PopulationState s;
  s.counts.assign(acc.begin(), acc.end());
  s.total_born = s.population();
  return s;
}

std::vector<std::pair<VertexId, Count>> PopulationState::to_vertices(const BrwModel& model) const {
  std::vector<std::pair<VertexId, Count>> out;
  out.reserve(counts.size());
  for (const auto& [i, c] : counts) out.emplace_back(model.vertex(i), c);
  return out;
}

bool dominated_by(const PopulationState& a, const PopulationState& b) {
  std::size_t j = 0;
  for (const auto& [i, c] : a.counts) {
    while (j < b.counts.size() && b.counts[j].first < i) ++j;
    if (j == b.counts.size() || b.counts[j].first != i || b.counts[j].second < c) return false;
  }
  return true;
}

Sampler::Sampler(BrwModel model, SamplingScheme scheme)
    : model_(std::move(model)), scheme_(scheme), tables_(model_.size()) {
  const CompiledLaws& cl = model_.compiled();
  for (std::size_t i = 0; i < model_.size(); ++i) {
    VertexTable& t = tables_[i];
    if (cl.product[i]) {
      t.product = true;
      std::vector<double> w0;
      for (const auto& pt : cl.rho[i]->points()) {
        w0.push_back(pt.p);
        t.rho_values.push_back(pt.n);
      }
      t.main = AliasTable(w0);
      std::vector<double> w(cl.disp_weight.begin() + cl.disp_offsets[i],
                            cl.disp_weight.begin() + cl.disp_offsets[i + 1]);
      if (cl.void_mass[i] > 0.0) {
        w.push_back(cl.void_mass[i]);
        t.has_void = true;
      }
      if (!w.empty()) t.dispersal = AliasTable(w);
      continue;
    }
    const std::size_t a0 = cl.atom_offsets[i], a1 = cl.atom_offsets[i + 1];
    if (scheme_ == SamplingScheme::direct) {
      t.main = AliasTable(std::vector<double>(cl.atom_prob.begin() + a0, cl.atom_prob.begin() + a1));
      continue;
    }
    std::map<Count, std::vector<std::uint32_t>> groups;
    for (std::size_t a = a0; a < a1; ++a) {
      Count h = 0;
      for (std::size_t c = cl.child_offsets[a]; c < cl.child_offsets[a + 1]; ++c) h += cl.child_count[c];
      groups[h].push_back(static_cast<std::uint32_t>(a - a0));
    }
    std::vector<double> totals;
    for (const auto& [h, members] : groups) {
      double mass = 0.0;
      std::vector<double> w;
      for (auto a : members) {
        w.push_back(cl.atom_prob[a0 + a]);
        mass += cl.atom_prob[a0 + a];
      }
      totals.push_back(mass);
      t.by_total.emplace_back(w);
      t.by_total_atoms.push_back(members);
    }
    t.main = AliasTable(totals);
  }
}

void Sampler::sample(std::uint32_t i, CounterStream& stream, ChildList& out) const {
  out.clear();
  const VertexTable& t = tables_[i];
  const CompiledLaws& cl = model_.compiled();
  if (t.product) {
    const Count n = t.rho_values[t.main.sample(stream)];
    const std::size_t base = cl.disp_offsets[i];
    const std::size_t width = cl.disp_offsets[i + 1] - base;
    for (Count c = 0; c < n; ++c) {
      const std::uint32_t col = t.dispersal.sample(stream);
      if (col < width) out.emplace_back(cl.disp_index[base + col], 1);
    }
    return;
  }
  std::uint32_t atom;
  if (scheme_ == SamplingScheme::direct) {
    atom = t.main.sample(stream);
  } else {
    const std::uint32_t g = t.main.sample(stream);
    atom = t.by_total_atoms[g][t.by_total[g].sample(stream)];
  }
  const std::size_t a = cl.atom_offsets[i] + atom;
  for (std::size_t c = cl.child_offsets[a]; c < cl.child_offsets[a + 1]; ++c)
    out.emplace_back(cl.child_index[c], cl.child_count[c]);
}

namespace {

// Dense scratch counts that reset themselves, so thread-local storage can be
// reused even when a step throws.
class Accumulator {
 public:
  Accumulator(std::vector<Count>& dense, std::vector<std::uint32_t>& touched, std::size_t n)
      : dense_(dense), touched_(touched) {
    if (dense_.size() < n) dense_.resize(n, 0);
    touched_.clear();
  }
  ~Accumulator() {
    for (auto i : touched_) dense_[i] = 0;
    touched_.clear();
  }
  Accumulator(const Accumulator&) = delete;
  Accumulator& operator=(const Accumulator&) = delete;

  void add(std::uint32_t i, Count c) {
    if (dense_[i] == 0) touched_.push_back(i);
    dense_[i] += c;
    total_ += c;
  }
  Count total() const { return total_; }

  // Applies the cap after all arrivals are in.
  void emit(PopulationState& out, Count cap) {
    std::sort(touched_.begin(), touched_.end());
    out.counts.clear();
    out.counts.reserve(touched_.size());
    for (auto i : touched_) {
      if (dense_[i] == 0) continue;
      out.counts.emplace_back(i, std::min(dense_[i], cap));
    }
  }

 private:
  std::vector<Count>& dense_;
  std::vector<std::uint32_t>& touched_;
  Count total_ = 0;
};

thread_local std::vector<Count> tl_dense_a, tl_dense_b;
thread_local std::vector<std::uint32_t> tl_touched_a, tl_touched_b;

void overflow(Count total, Count cap) {
  throw PopulationOverflow("population " + std::to_string(total) + " exceeds cap " +
                           std::to_string(cap));
}

CounterStream vertex_stream(StreamKey key, std::size_t generation, std::uint32_t i) {
  return CounterStream(key.seed, kDomainBranching, key.replica,
                       static_cast<std::uint32_t>(generation), i);
}

void merge_config(ChildList& c) {
  std::sort(c.begin(), c.end());
  std::size_t w = 0;
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (c[r].second == 0) continue;
    if (w > 0 && c[w - 1].first == c[r].first) {
      c[w - 1].second += c[r].second;
    } else {
      c[w++] = c[r];
    }
  }
  c.resize(w);
}

}  // namespace

PopulationState step_truncated(const PopulationState& state, Count m, const Sampler& sampler,
                               StreamKey key, Count pop_cap) {
  if (m == 0) throw ValidationError("cap m must be at least 1");
  Accumulator acc(tl_dense_a, tl_touched_a, sampler.model().size());
  ChildList buf;
  for (const auto& [i, c] : state.counts) {
    CounterStream s = vertex_stream(key, state.generation, i);
    for (Count j = 0; j < c; ++j) {
      sampler.sample(i, s, buf);
      for (const auto& [y, k] : buf) acc.add(y, k);
      if (acc.total() > pop_cap) overflow(acc.total(), pop_cap);
    }
  }
  PopulationState next;
  acc.emit(next, m);
  next.generation = state.generation + 1;
  next.total_born = state.total_born + next.population();
  return next;
}

PopulationState step(const PopulationState& state, const Sampler& sampler, StreamKey key,
                     Count pop_cap) {
  return step_truncated(state, kUnboundedCap, sampler, key, pop_cap);
}

Coupling Coupling::restriction(const BrwModel& model, const std::vector<VertexId>& subset) {
  Coupling c;
  c.kind = Kind::restriction;
  c.keep.assign(model.size(), 0);
  for (VertexId v : subset) c.keep[model.index_of(v)] = 1;
  return c;
}

Coupling Coupling::custom(std::function<void(std::uint32_t, ChildList&)> f) {
  Coupling c;
  c.kind = Kind::custom;
  c.map = std::move(f);
  return c;
}

CoupledState step_coupled(const CoupledState& pair, Count m, Count k, const Sampler& sampler,
                          const Coupling& coupling, StreamKey key, Count pop_cap) {
  if (k == 0 || m < k) throw ValidationError("coupled caps need m >= k >= 1");
  if (pair.upper.generation != pair.lower.generation)
    throw ValidationError("coupled states are at different generations");
  if (!dominated_by(pair.lower, pair.upper))
    throw ValidationError("coupled step needs lower <= upper");
  const std::size_t n = sampler.model().size();
  if (coupling.kind == Coupling::Kind::restriction && coupling.keep.size() != n)
    throw ValidationError("restriction mask does not match the model");

  Accumulator up(tl_dense_a, tl_touched_a, n);
  Accumulator lo(tl_dense_b, tl_touched_b, n);
  ChildList buf, mapped;
  std::size_t li = 0;
  for (const auto& [i, cu] : pair.upper.counts) {
    while (li < pair.lower.counts.size() && pair.lower.counts[li].first < i) ++li;
    const Count cl = (li < pair.lower.counts.size() && pair.lower.counts[li].first == i)
                         ? pair.lower.counts[li].second
                         : 0;
    CounterStream s = vertex_stream(key, pair.upper.generation, i);
    for (Count j = 0; j < cu; ++j) {
      sampler.sample(i, s, buf);
      for (const auto& [y, c] : buf) up.add(y, c);
      if (up.total() > pop_cap) overflow(up.total(), pop_cap);
      if (j >= cl) continue;
      switch (coupling.kind) {
        case Coupling::Kind::identity:
          for (const auto& [y, c] : buf) lo.add(y, c);
          break;
        case Coupling::Kind::restriction:
          for (const auto& [y, c] : buf)
            if (coupling.keep[y]) lo.add(y, c);
          break;
        case Coupling::Kind::custom: {
          merge_config(buf);
          mapped = buf;
          coupling.map(i, mapped);
          merge_config(mapped);
          std::size_t b = 0;
          for (const auto& [y, c] : mapped) {
            while (b < buf.size() && buf[b].first < y) ++b;
            if (b == buf.size() || buf[b].first != y || buf[b].second < c)
              throw InvariantViolation("coupling map increased a child count");
            lo.add(y, c);
          }
          break;
        }
      }
    }
  }
  CoupledState next;
  up.emit(next.upper, m);
  lo.emit(next.lower, k);
  next.upper.generation = next.lower.generation = pair.upper.generation + 1;
  next.upper.total_born = pair.upper.total_born + next.upper.population();
  next.lower.total_born = pair.lower.total_born + next.lower.population();
  if (!dominated_by(next.lower, next.upper))
    throw InvariantViolation("coupled domination violated at generation " +
                             std::to_string(next.upper.generation));
  return next;
}

namespace {

TrialOutcome trial(const Sampler& sampler, const TrialSpec& spec, std::uint64_t seed,
                   std::uint32_t replica) {
  if (spec.cap == 0) throw ValidationError("cap m must be at least 1");
  const BrwModel& model = sampler.model();
  TrialOutcome out;
  out.seed = seed;
  out.replica = replica;
  PopulationState state = PopulationState::from_vertices(model, spec.eta0);
  for (auto& e : state.counts) e.second = std::min(e.second, spec.cap);
  state.total_born = state.population();
  std::optional<std::uint32_t> target;
  if (spec.target) target = static_cast<std::uint32_t>(model.index_of(*spec.target));
  const std::size_t window =
      spec.visit_window ? spec.visit_window : std::max<std::size_t>(1, spec.horizon / 2);
  out.peak = state.population();
  out.total_born = state.total_born;
  const StreamKey key{seed, replica};
  for (std::size_t n = 1; n <= spec.horizon && !state.empty(); ++n) {
    try {
      state = step_truncated(state, spec.cap, sampler, key, spec.pop_cap);
    } catch (const PopulationOverflow&) {
      out.overflow = true;
      out.alive = true;
      out.late_visit = true;
      out.generations = n;
      return out;
    }
    const Count pop = state.population();
    out.peak = std::max(out.peak, pop);
    out.total_born = state.total_born;
    if (target && state.at(*target) > 0) {
      ++out.visits;
      out.last_visit = n;
      if (n + window > spec.horizon) out.late_visit = true;
    }
  }
  out.generations = state.generation;
  out.alive = !state.empty();
  if (spec.horizon == 0 && target && state.at(*target) > 0) out.late_visit = true;
  return out;
}

}  // namespace

TrialOutcome run_survival_trial(const Sampler& sampler, const TrialSpec& spec, std::uint64_t seed,
                                std::uint32_t replica) {
  if (spec.horizon < 1) throw ValidationError("horizon must be at least 1");
  return trial(sampler, spec, seed, replica);
}

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  if (successes > n) throw ValidationError("more successes than trials");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The bounds at 0 and n are exactly 0 and 1; rounding must not move them.
  return {successes == 0 ? 0.0 : std::max(0.0, center - half),
          successes == n ? 1.0 : std::min(1.0, center + half)};
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

SurvivalEstimate estimate_survival(const Sampler& sampler, const TrialSpec& spec,
                                   std::size_t replicas, std::uint64_t seed, unsigned threads) {
  if (replicas < 1) throw ValidationError("replicas must be at least 1");
  SurvivalEstimate est;
  est.replicas = replicas;
  est.outcomes.resize(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    est.outcomes[r] = trial(sampler, spec, seed, static_cast<std::uint32_t>(r));
  });
  for (const auto& o : est.outcomes) {
    est.successes += o.alive;
    est.late_visits += o.late_visit;
    est.overflows += o.overflow;
  }
  est.frequency = static_cast<double>(est.successes) / static_cast<double>(replicas);
  est.ci = wilson_interval(est.successes, replicas);
  est.visit_frequency = static_cast<double>(est.late_visits) / static_cast<double>(replicas);
  est.visit_ci = wilson_interval(est.late_visits, replicas);
  return est;
}

std::string SurvivalEstimate::replica_csv() const {
  CsvTable t({"replica", "seed", "alive_flag", "last_target_visit", "peak_population",
              "N_horizon", "overflow"});
  for (const auto& o : outcomes) {
    t.add_row({std::to_string(o.replica), std::to_string(o.seed), o.alive ? "1" : "0",
               o.last_visit ? std::to_string(*o.last_visit) : "-1", std::to_string(o.peak),
               std::to_string(o.total_born), o.overflow ? "1" : "0"});
  }
  return t.str();
}

}  // namespace brw
