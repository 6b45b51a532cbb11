#include "brwlab/genfun.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace brw {

namespace {

double g_at(const CompiledLaws& c, std::size_t i, const double* z) {
  if (c.product[i]) {
    double s = c.void_mass[i];
    for (std::size_t k = c.disp_offsets[i]; k < c.disp_offsets[i + 1]; ++k)
      s += c.disp_weight[k] * z[c.disp_index[k]];
    return c.rho[i]->pgf(s);
  }
  double acc = 0.0;
  for (std::size_t a = c.atom_offsets[i]; a < c.atom_offsets[i + 1]; ++a) {
    double term = c.atom_prob[a];
    for (std::size_t k = c.child_offsets[a]; k < c.child_offsets[a + 1]; ++k) {
      const double zy = z[c.child_index[k]];
      const Count n = c.child_count[k];
      term *= n == 1 ? zy : std::pow(zy, static_cast<double>(n));
    }
    acc += term;
  }
  return acc;
}

void check_field(const BrwModel& model, const FieldVector& z) {
  if (z.size() != model.size()) throw ValidationError("field vector has the wrong length");
}

struct Pins {
  std::vector<std::pair<std::size_t, double>> at;
  std::vector<char> mask;

  Pins(const BrwModel& model, const ExtinctionOptions& opts) : mask(model.size(), 0) {
    for (auto [v, value] : opts.pinned) {
      if (!(value >= 0.0 && value <= 1.0)) throw ValidationError("pinned value outside [0,1]");
      const std::size_t i = model.index_of(v);
      at.emplace_back(i, value);
      mask[i] = 1;
    }
  }
  void apply(FieldVector& z) const {
    for (auto [i, value] : at) z[i] = value;
  }
};

}  // namespace

FieldVector eval_G(const BrwModel& model, const FieldVector& z) {
  check_field(model, z);
  FieldVector out(model.size());
  const CompiledLaws& c = model.compiled();
  for (std::size_t i = 0; i < model.size(); ++i) out[i] = g_at(c, i, z.data());
  return out;
}

FieldVector eval_G_geometric(const MomentMatrix& m, const FieldVector& z) {
  if (z.size() != m.size()) throw ValidationError("field vector has the wrong length");
  FieldVector one_minus(z.size()), mz;
  for (std::size_t i = 0; i < z.size(); ++i) one_minus[i] = 1.0 - z[i];
  m.right_multiply(one_minus, mz);
  for (double& v : mz) v = 1.0 / (1.0 + v);
  return mz;
}

ExtinctionResult iterate_extinction(const BrwModel& model, const ExtinctionTarget& target,
                                    const ExtinctionOptions& opts) {
  if (!(opts.tol > 0.0)) throw ValidationError("tolerance must be positive");
  const std::size_t n = model.size();
  const CompiledLaws& c = model.compiled();
  const Pins pins(model, opts);
  ExtinctionResult res;
  FieldVector z(n, 0.0), next(n);

  if (!target.global) {
    // Probability of never visiting A: decreasing iteration from 1_{A^c}.
    std::vector<char> in_a(n, 0);
    for (VertexId v : target.set) in_a[model.index_of(v)] = 1;
    for (std::size_t i = 0; i < n; ++i) z[i] = in_a[i] ? 0.0 : 1.0;
    pins.apply(z);
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
      double step = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] = in_a[i] || pins.mask[i] ? z[i] : g_at(c, i, z.data());
        step = std::max(step, std::abs(next[i] - z[i]));
      }
      z.swap(next);
      res.iterations++;
      if (step < opts.tol) break;
    }
  } else {
    pins.apply(z);
  }

  double prev_step = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    double step = 0.0, slack = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = pins.mask[i] ? z[i] : std::min(1.0, g_at(c, i, z.data()));
      const double d = next[i] - z[i];
      step = std::max(step, std::abs(d));
      slack = std::max(slack, -d);
    }
    res.monotonicity_slack = std::max(res.monotonicity_slack, slack);
    // Rounding, plus the stopping error of the first phase for set targets.
    if (slack > std::max(1e-12, 100.0 * opts.tol))
      throw InvariantViolation("extinction iterates decreased by " + std::to_string(slack));
    if (opts.history_every > 0 && it % opts.history_every == 0)
      res.residual_history.emplace_back(it, step);
    // step is the residual |G(z) - z| of the current z.
    if (prev_step < opts.tol && step < opts.tol) {
      res.converged = true;
      res.last_step = prev_step;
      res.residual = step;
      res.q = std::move(z);
      return res;
    }
    prev_step = step;
    z.swap(next);
    res.iterations++;
  }
  res.converged = false;
  res.last_step = prev_step;
  FieldVector g = eval_G(model, z);
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (!pins.mask[i]) r = std::max(r, std::abs(g[i] - z[i]));
  res.residual = r;
  res.q = std::move(z);
  return res;
}

SubsolutionVerdict check_subsolution(const BrwModel& model, const FieldVector& z,
                                     VertexId x0, double tol) {
  check_field(model, z);
  SubsolutionVerdict v;
  const FieldVector g = eval_G(model, z);
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (!model.is_interior(model.vertex(i))) {
      v.skipped.push_back(model.vertex(i));
      continue;
    }
    const double over = g[i] - z[i];
    if (over > v.max_violation) {
      v.max_violation = over;
      v.worst = model.vertex(i);
    }
  }
  v.x0_below_one = z[model.index_of(x0)] < 1.0 - tol;
  v.ok = v.max_violation <= tol && v.x0_below_one;
  return v;
}

MeanConditionVerdict check_mean_condition(const MomentMatrix& m, const FieldVector& v,
                                          VertexId x0, const BrwModel* model) {
  if (v.size() != m.size()) throw ValidationError("field vector has the wrong length");
  MeanConditionVerdict out;
  FieldVector mv;
  m.right_multiply(v, mv);
  for (std::size_t i = 0; i < v.size(); ++i)
    out.max_violation = std::max(out.max_violation, v[i] - mv[i]);
  out.v_x0_positive = v[m.index_of(x0)] > 0.0;
  out.ok = out.max_violation <= 1e-12 && out.v_x0_positive;
  if (model) {
    check_field(*model, v);
    for (double t : {0.0, 0.5}) {
      FieldVector w(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) w[i] = 1.0 - (1.0 - t) * v[i];
      const FieldVector g = eval_G(*model, w);
      std::vector<VertexId> eq;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (std::abs(g[i] - w[i]) <= 1e-10) eq.push_back(model->vertex(i));
      out.equality_vertices.emplace_back(t, std::move(eq));
    }
  }
  return out;
}

FieldVector mean_condition_witness(const MomentMatrix& m, std::size_t max_iter) {
  FieldVector v(m.size(), 1.0), mv;
  for (std::size_t it = 0; it < max_iter; ++it) {
    m.right_multiply(v, mv);
    double change = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double nv = std::min(v[i], mv[i]);
      change = std::max(change, v[i] - nv);
      v[i] = nv;
    }
    if (change < 1e-15) break;
  }
  return v;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::survives: return "survives";
    case Verdict::dies: return "dies";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

StrongLocalVerdict strong_local_compare(const BrwModel& model, VertexId x0, VertexId y,
                                        double tol, const ExtinctionOptions& opts) {
  StrongLocalVerdict out;
  out.y = y;
  const std::size_t i0 = model.index_of(x0);
  const auto global = iterate_extinction(model, ExtinctionTarget::everywhere(), opts);
  const auto local = iterate_extinction(model, ExtinctionTarget::in_set({y}), opts);
  out.qbar_x0 = global.q[i0];
  out.q_x0_y = local.q[i0];
  if (out.qbar_x0 >= 1.0 - tol)
    out.strong = Verdict::dies;
  else if (std::abs(out.q_x0_y - out.qbar_x0) <= tol)
    out.strong = Verdict::survives;
  else
    out.strong = Verdict::dies;
  return out;
}

namespace {

Verdict compare_to_one(double value, double margin) {
  if (value > 1.0 + margin) return Verdict::survives;
  if (value < 1.0 - margin) return Verdict::dies;
  return Verdict::inconclusive;
}

bool irreducible(const MomentMatrix& m) {
  return m.components().members.size() == 1 && m.period(0) > 0;
}

}  // namespace

SurvivalReport classify_survival(const BrwModel& model, VertexId x0,
                                 const ClassifyOptions& opts) {
  SurvivalReport r;
  r.x0 = x0;
  const std::size_t i0 = model.index_of(x0);
  const MomentMatrix m(model);

  r.local_evidence = local_growth_rate(m, x0, opts.growth);
  r.local = compare_to_one(r.local_evidence.value, opts.growth_margin);
  r.global_evidence = global_growth_rate(m, x0, opts.growth);
  r.mean_condition_holds = r.global_evidence.value > 1.0 + opts.growth_margin;

  for (const auto& cls : check_assumption_nonsingular(model)) {
    if (std::binary_search(cls.members.begin(), cls.members.end(), x0) && !cls.nonsingular)
      r.notes.push_back("the class of x0 is singular: each particle has exactly one "
                        "child in the class a.s., so growth cannot decide local survival");
  }

  auto run_qbar = [&](const BrwModel& target, VertexId v) {
    auto res = iterate_extinction(target, ExtinctionTarget::everywhere(), opts.extinction);
    r.extinction_iterations += res.iterations;
    r.extinction_residual = std::max(r.extinction_residual, res.residual);
    if (!res.converged) r.notes.push_back("extinction iteration hit max_iter");
    return res.q[target.index_of(v)];
  };

  const Quotient* quotient = opts.use_quotient ? model.quotient() : nullptr;
  if (quotient) {
    const BrwModel& q = *quotient->model;
    const VertexId gx0 = quotient->map(x0);
    const MomentMatrix qm(q);
    r.global_method = "finite quotient (" + quotient->description + ")";
    if (irreducible(qm)) {
      const auto g = global_growth_rate(qm, gx0, opts.growth);
      r.global = compare_to_one(g.value, opts.growth_margin);
      r.global_method += ", growth of the quotient";
      r.mean_condition_holds = g.value > 1.0 + opts.growth_margin;
    } else {
      const double qb = run_qbar(q, gx0);
      r.global = qb < 1.0 - opts.q_tol ? Verdict::survives : Verdict::dies;
      r.global_method += ", extinction fixed point of the quotient";
    }
    r.notes.push_back("global verdict refers to the untruncated model through its quotient");
    if (model.size() <= 20000) r.qbar_x0 = run_qbar(model, x0);
  } else if (irreducible(m)) {
    r.global = compare_to_one(r.global_evidence.value, opts.growth_margin);
    r.global_method = "global growth of a finite irreducible model";
    if (model.size() <= 20000) r.qbar_x0 = run_qbar(model, x0);
  } else {
    const double qb = run_qbar(model, x0);
    r.qbar_x0 = qb;
    r.global_method = "extinction fixed point on the truncation";
    bool all_die = qb >= 1.0 - opts.q_tol;
    for (const auto& t : opts.ladder) {
      if (!t.contains(x0)) continue;
      const double v = run_qbar(t, x0);
      r.ladder_qbar.push_back(v);
      all_die = all_die && v >= 1.0 - opts.q_tol;
    }
    if (!all_die) {
      r.global = Verdict::survives;
    } else {
      r.global = Verdict::dies;
      r.global_method += r.ladder_qbar.empty() ? " (dies on this truncation)"
                                               : " (dies on every tested truncation)";
      if (r.mean_condition_holds)
        r.notes.push_back("mean condition holds, extinction a.s. on all truncations");
    }
  }
  (void)i0;

  if (r.local == Verdict::survives && r.global != Verdict::survives) {
    r.notes.push_back("global verdict raised to survives: implied by local survival");
    r.global = Verdict::survives;
  }

  for (VertexId y : opts.strong_targets)
    r.strong_local.push_back(strong_local_compare(model, x0, y, opts.q_tol, opts.extinction));
  return r;
}

std::string SurvivalReport::to_text() const {
  std::ostringstream out;
  char buf[160];
  out << "x0=" << x0 << "\n";
  out << "local=" << to_string(local) << "\n";
  std::snprintf(buf, sizeof buf, "local_growth=%.10g converged=%d steps=%zu rule=%s\n",
                local_evidence.value, local_evidence.converged ? 1 : 0, local_evidence.steps,
                local_evidence.subsequence_rule.c_str());
  out << buf;
  out << "global=" << to_string(global) << "\n";
  out << "global_method=" << global_method << "\n";
  std::snprintf(buf, sizeof buf, "global_growth=%.10g converged=%d rule=%s\n",
                global_evidence.value, global_evidence.converged ? 1 : 0,
                global_evidence.subsequence_rule.c_str());
  out << buf;
  out << "mean_condition=" << (mean_condition_holds ? "holds" : "fails") << "\n";
  if (qbar_x0) {
    std::snprintf(buf, sizeof buf, "qbar_x0=%.12g\n", *qbar_x0);
    out << buf;
  }
  for (std::size_t k = 0; k < ladder_qbar.size(); ++k) {
    std::snprintf(buf, sizeof buf, "ladder_qbar[%zu]=%.12g\n", k, ladder_qbar[k]);
    out << buf;
  }
  for (const auto& s : strong_local) {
    std::snprintf(buf, sizeof buf, "strong_local[%lld]=%s q_x0_y=%.12g qbar_x0=%.12g\n",
                  static_cast<long long>(s.y), s.strong == Verdict::survives ? "yes" : "no",
                  s.q_x0_y, s.qbar_x0);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "extinction_iterations=%zu extinction_residual=%.3g\n",
                extinction_iterations, extinction_residual);
  out << buf;
  for (const auto& n : notes) out << "note=" << n << "\n";
  return out.str();
}

std::string SurvivalReport::evidence_csv() const {
  std::ostringstream out;
  out << "kind,n,value\n";
  char buf[96];
  for (const auto& t : local_evidence.sequence) {
    if (!t.on_subsequence) continue;
    std::snprintf(buf, sizeof buf, "local_term,%zu,%.17g\n", t.n, t.term);
    out << buf;
  }
  for (const auto& t : global_evidence.sequence) {
    std::snprintf(buf, sizeof buf, "global_term,%zu,%.17g\n", t.n, t.term);
    out << buf;
  }
  for (std::size_t k = 0; k < ladder_qbar.size(); ++k) {
    std::snprintf(buf, sizeof buf, "ladder_qbar,%zu,%.17g\n", k, ladder_qbar[k]);
    out << buf;
  }
  return out.str();
}

namespace {

double bisect(double lo, double hi, double width, const std::function<bool(double)>& above,
              std::pair<double, double>& bracket, const char* what) {
  if (above(lo) || !above(hi))
    throw ValidationError(std::string("lambda range does not bracket ") + what);
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    if (above(mid))
      hi = mid;
    else
      lo = mid;
  }
  bracket = {lo, hi};
  return 0.5 * (lo + hi);
}

}  // namespace

LambdaSweepResult lambda_sweep(const RateMatrix& rates, VertexId x0, const SweepOptions& opts) {
  LambdaSweepResult out;
  auto local_rate = [&](double lambda) {
    const BrwModel model = counterpart_model(rates, lambda);
    return local_growth_rate(MomentMatrix(model), x0, opts.growth).value;
  };
  auto global_rate = [&](double lambda) {
    if (rates.quotient && rates.quotient_map) {
      const BrwModel q = counterpart_model(*rates.quotient, lambda);
      return global_growth_rate(MomentMatrix(q), rates.quotient_map(x0), opts.growth).value;
    }
    const BrwModel model = counterpart_model(rates, lambda);
    return global_growth_rate(MomentMatrix(model), x0, opts.growth).value;
  };
  out.lambda_w_method = rates.quotient ? "global growth of the quotient"
                                       : "global growth of the truncation";
  out.lambda_s = bisect(opts.lo, opts.hi, opts.width,
                        [&](double l) { return local_rate(l) > 1.0; }, out.lambda_s_bracket,
                        "lambda_s");
  out.lambda_w = bisect(opts.lo, opts.hi, opts.width,
                        [&](double l) { return global_rate(l) > 1.0; }, out.lambda_w_bracket,
                        "lambda_w");

  std::vector<double> grid = opts.grid;
  std::sort(grid.begin(), grid.end());
  for (double lambda : grid) {
    LambdaRow row;
    row.lambda = lambda;
    const BrwModel model = counterpart_model(rates, lambda);
    const MomentMatrix m(model);
    row.local_rate = local_growth_rate(m, x0, opts.growth).value;
    row.global_rate = global_rate(lambda);
    if (model.size() <= opts.qbar_size_limit)
      row.qbar_model = iterate_extinction(model, {}, opts.extinction).q[model.index_of(x0)];
    if (const Quotient* q = model.quotient())
      row.qbar_quotient =
          iterate_extinction(*q->model, {}, opts.extinction).q[q->model->index_of(q->map(x0))];
    out.table.push_back(row);
  }
  for (std::size_t k = 1; k < out.table.size(); ++k) {
    const auto& a = out.table[k - 1];
    const auto& b = out.table[k];
    // Near-critical iterations converge slowly; allow their error band.
    const double slack = 1e-6;
    if (a.qbar_model && b.qbar_model && *b.qbar_model > *a.qbar_model + slack)
      out.qbar_nonincreasing = false;
    if (a.qbar_quotient && b.qbar_quotient && *b.qbar_quotient > *a.qbar_quotient + slack)
      out.qbar_nonincreasing = false;
  }
  return out;
}

std::string LambdaSweepResult::table_csv() const {
  std::ostringstream out;
  out << "lambda,local_rate,global_rate,qbar_model,qbar_quotient\n";
  char buf[200];
  auto opt = [](const std::optional<double>& v) {
    char b[40];
    if (!v) return std::string();
    std::snprintf(b, sizeof b, "%.12g", *v);
    return std::string(b);
  };
  for (const auto& r : table) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,", r.lambda, r.local_rate, r.global_rate);
    out << buf << opt(r.qbar_model) << ',' << opt(r.qbar_quotient) << "\n";
  }
  return out.str();
}

}  // namespace brw
