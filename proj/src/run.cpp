#include "brwlab/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "brwlab/approx.hpp"
#include "brwlab/csv.hpp"
#include "brwlab/genfun.hpp"
#include "brwlab/serialize.hpp"
#include "brwlab/simulate.hpp"
#include "brwlab/spectral.hpp"

namespace brw {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

unsigned long long parse_unsigned(const std::string& key, const std::string& v) {
  if (v.empty() || v[0] == '-') throw ValidationError(key + ": expected a nonnegative integer, got '" + v + "'");
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos, 10);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size()) throw ValidationError(key + ": expected a nonnegative integer, got '" + v + "'");
  return out;
}

long long parse_signed(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos, 10);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (v.empty() || pos != v.size()) throw ValidationError(key + ": expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (v.empty() || pos != v.size() || !std::isfinite(out))
    throw ValidationError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ValidationError(key + ": expected a boolean, got '" + v + "'");
}

bool* toggle(RunConfig& c, const std::string& name) {
  if (name == "classify") return &c.classify;
  if (name == "extinction") return &c.extinction;
  if (name == "spectral") return &c.spectral;
  if (name == "spatial") return &c.spatial;
  if (name == "sweep") return &c.sweep;
  if (name == "percolation" || name == "percolate") return &c.percolation;
  return nullptr;
}

}  // namespace

const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> commands{"classify", "extinction", "spectral", "spatial",
                                                 "sweep",    "percolate",  "scenarios"};
  return commands;
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key), v = trim(raw_value);
  if (key == "command") {
    c.command = v;
  } else if (key == "scenario") {
    c.scenario = v;
  } else if (key == "param") {
    const auto eq = v.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("param: expected name=value, got '" + v + "'");
    c.params[trim(v.substr(0, eq))] = trim(v.substr(eq + 1));
  } else if (key.rfind("param.", 0) == 0 && key.size() > 6) {
    c.params[key.substr(6)] = v;
  } else if (bool* t = toggle(c, key)) {
    *t = parse_bool(key, v);
  } else if (key == "analyses") {
    for (const auto& name : split(v, ',')) {
      bool* t = toggle(c, name);
      if (!t) throw ValidationError("analyses: unknown analysis '" + name + "'");
      *t = true;
    }
  } else if (key == "horizon") {
    c.horizon = parse_unsigned(key, v);
  } else if (key == "replicas") {
    c.replicas = parse_unsigned(key, v);
  } else if (key == "caps") {
    c.caps.clear();
    for (const auto& item : split(v, ',')) {
      if (item == "inf")
        c.caps.push_back(kUnboundedCap);
      else
        c.caps.push_back(parse_unsigned(key, item));
    }
  } else if (key == "seed") {
    c.seed = parse_unsigned(key, v);
  } else if (key == "output") {
    if (v.empty()) throw ValidationError("output: empty path");
    c.output = v;
  } else if (key == "threads") {
    c.threads = static_cast<unsigned>(parse_unsigned(key, v));
  } else if (key == "pop_cap") {
    c.pop_cap = parse_unsigned(key, v);
  } else if (key == "x0") {
    c.x0 = parse_signed(key, v);
  } else if (key == "radii") {
    c.radii.clear();
    for (const auto& item : split(v, ',')) c.radii.push_back(parse_unsigned(key, item));
  } else if (key == "perc_base") {
    if (v != "z" && v != "n") throw ValidationError("perc_base: expected z or n");
    c.perc_base = v;
  } else if (key == "perc_radius") {
    c.perc_radius = parse_signed(key, v);
  } else if (key == "perc_p") {
    c.perc_p.clear();
    for (const auto& item : split(v, ',')) c.perc_p.push_back(parse_real(key, item));
  } else {
    throw ValidationError("unknown setting '" + key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> parse_settings(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

void finalize_config(RunConfig& c) {
  const auto& cmds = known_commands();
  if (std::find(cmds.begin(), cmds.end(), c.command) == cmds.end())
    throw ValidationError("unknown command '" + c.command + "'");
  if (bool* t = toggle(c, c.command)) *t = true;
  if (c.replicas < 1) throw ValidationError("replicas must be at least 1");
  if (c.sweep && c.caps.empty()) throw ValidationError("sweep needs a nonempty caps list");
  for (Count m : c.caps)
    if (m == 0) throw ValidationError("caps must be at least 1");
  std::sort(c.caps.begin(), c.caps.end());
  c.caps.erase(std::unique(c.caps.begin(), c.caps.end()), c.caps.end());
  for (double p : c.perc_p)
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("perc_p values must lie in [0,1]");
  if (c.percolation && c.perc_p.empty()) throw ValidationError("perc_p is empty");
  if ((c.percolation || c.sweep || c.spatial) && c.horizon < 1)
    throw ValidationError("horizon must be at least 1");
  if (c.perc_radius < 0) throw ValidationError("perc_radius must be nonnegative");
}

std::string list_scenarios() {
  std::ostringstream out;
  for (const auto& s : scenario_registry()) {
    out << s.name << "\n  anchor:  " << s.anchor << "\n  summary: " << s.summary << "\n";
    for (const auto& p : s.params) {
      out << "  " << p.name << " (default '" << p.default_value << "'): " << p.description << "\n";
    }
  }
  return out.str();
}

namespace {

class Writer {
 public:
  Writer(std::filesystem::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {
    std::filesystem::create_directories(dir_);
  }

  // Every table starts with the model hash from the manifest.
  void table(const std::string& name, const std::string& csv) {
    write(name, "# model_hash=" + hash_ + "\n" + csv);
  }
  void write(const std::string& name, const std::string& body) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir_ / name).string());
    f << body;
    files.push_back(name);
  }

  std::vector<std::string> files;

 private:
  std::filesystem::path dir_;
  std::string hash_;
};

std::string params_text(const ParamMap& p) {
  std::string s;
  for (const auto& [k, v] : p) {
    if (!s.empty()) s += ';';
    s += k + "=" + v;
  }
  return s;
}

std::string cap_text(Count m) { return m == kUnboundedCap ? "inf" : std::to_string(m); }

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool run_analyses(const RunConfig& c, Writer& w, std::ostringstream& digest) {
  bool overflow = false;
  std::optional<BrwModel> model;
  auto get_model = [&]() -> const BrwModel& {
    if (!model) model = build_scenario(c.scenario, c.params);
    return *model;
  };
  const bool needs_model = c.classify || c.extinction || c.spectral || c.spatial || c.sweep;
  VertexId x0 = 0;
  if (needs_model) {
    x0 = c.x0 ? *c.x0 : model_origin(get_model());
    if (!get_model().contains(x0)) throw ValidationError("x0 is not a vertex of the model");
    digest << "scenario " << c.scenario << " (" << get_model().size() << " vertices), x0 = " << x0
           << "\n";
  }

  if (c.classify) {
    const SurvivalReport r = classify_survival(get_model(), x0);
    CsvTable t({"x0", "local", "global", "global_method", "qbar_x0", "local_growth",
                "global_growth", "mean_condition"});
    t.add_row({std::to_string(x0), to_string(r.local), to_string(r.global), r.global_method,
               r.qbar_x0 ? format_double(*r.qbar_x0) : "", format_double(r.local_evidence.value),
               format_double(r.global_evidence.value), r.mean_condition_holds ? "1" : "0"});
    w.table("classify.csv", t.str());
    w.table("classify_evidence.csv", r.evidence_csv());
    digest << "local=" << to_string(r.local) << ", global=" << to_string(r.global);
    if (r.qbar_x0) digest << ", qbar=" << format_double(*r.qbar_x0);
    digest << "\n";
  }

  if (c.extinction) {
    const BrwModel& m = get_model();
    const ExtinctionResult global = iterate_extinction(m);
    const ExtinctionResult local = iterate_extinction(m, ExtinctionTarget::in_set({x0}));
    CsvTable t({"vertex", "qbar", "q_local_x0"});
    for (std::size_t i = 0; i < m.size(); ++i)
      t.add_row({std::to_string(m.vertex(i)), format_double(global.q[i]), format_double(local.q[i])});
    w.table("extinction.csv", t.str());
    const std::size_t i0 = m.index_of(x0);
    digest << "extinction: qbar(x0)=" << format_double(global.q[i0])
           << ", q(x0,x0)=" << format_double(local.q[i0]) << " after " << global.iterations << "+"
           << local.iterations << " iterations" << (global.converged && local.converged ? "" : " (not converged)")
           << "\n";
  }

  if (c.spectral) {
    const MomentMatrix mm(get_model());
    const GrowthEstimate loc = local_growth_rate(mm, x0);
    const GrowthEstimate glob = global_growth_rate(mm, x0);
    w.table("spectral_local.csv", loc.to_csv());
    w.table("spectral_global.csv", glob.to_csv());
    CsvTable t({"quantity", "value", "period", "converged", "rule"});
    t.add_row({"local_growth", format_double(loc.value), std::to_string(loc.period),
               loc.converged ? "1" : "0", loc.subsequence_rule});
    t.add_row({"global_growth", format_double(glob.value), std::to_string(glob.period),
               glob.converged ? "1" : "0", glob.subsequence_rule});
    w.table("spectral.csv", t.str());
    digest << "spectral: local growth " << format_double(loc.value) << ", global growth "
           << format_double(glob.value) << "\n";
  }

  if (c.spatial) {
    std::vector<std::size_t> radii = c.radii;
    if (radii.empty())
      for (std::size_t r = 1; r <= 8; ++r) radii.push_back(r);
    const auto exhaustion = ball_exhaustion(get_model(), x0, radii);
    SpatialOptions so;
    so.replicas = c.replicas;
    so.horizon = c.horizon;
    so.seed = c.seed;
    so.threads = c.threads;
    so.pop_cap = c.pop_cap;
    const SpatialTable t = spatial_experiment(get_model(), exhaustion, x0, so);
    for (const auto& r : t.rows) overflow = overflow || (r.mc && r.mc->overflows > 0);
    w.table("spatial.csv", t.csv());
    digest << "spatial: full local growth " << format_double(t.full_growth.value) << " ("
           << to_string(t.full_verdict) << ")";
    if (t.crossing) digest << ", restricted growth exceeds 1 from radius " << radii[*t.crossing];
    digest << "\n";
  }

  if (c.sweep) {
    const Sampler sampler(get_model());
    TrialSpec spec;
    spec.eta0 = {{x0, 1}};
    spec.horizon = c.horizon;
    spec.target = x0;
    spec.pop_cap = c.pop_cap;
    const TruncationSweep s = truncation_sweep(sampler, c.caps, spec, c.replicas, c.seed, c.threads);
    w.table("sweep.csv", s.csv(c.scenario, params_text(c.params), c.horizon));
    for (const auto& r : s.rows) {
      w.table("sweep_replicas_m" + cap_text(r.cap) + ".csv", r.estimate.replica_csv());
      overflow = overflow || r.estimate.overflows > 0;
    }
    digest << "sweep (horizon " << c.horizon << ", " << c.replicas << " replicas):\n";
    for (const auto& r : s.rows)
      digest << "  m=" << cap_text(r.cap) << "  frequency " << format_double(r.estimate.frequency)
             << "  [" << format_double(r.estimate.ci.low) << ", " << format_double(r.estimate.ci.high)
             << "]" << (r.estimate.overflows ? "  overflows " + std::to_string(r.estimate.overflows) : "")
             << "\n";
    digest << "  " << (s.monotone ? "monotone" : "NOT monotone") << " in m\n";
  }

  if (c.percolation) {
    CsvTable t({"p", "base", "radius", "horizon", "replicas", "survived", "frequency", "ci_low",
                "ci_high", "mean_revisits", "min_revisits", "max_revisits"});
    for (double p : c.perc_p) {
      PercolationConfig pc;
      pc.base = c.perc_base == "n" ? PercolationConfig::Base::n_window : PercolationConfig::Base::z_window;
      pc.radius = c.perc_radius;
      pc.p = p;
      pc.horizon = c.horizon;
      const PercolationResult r = oriented_percolation(pc, c.replicas, c.seed, c.threads);
      t.add_row({format_double(p), c.perc_base, std::to_string(c.perc_radius), std::to_string(c.horizon),
                 std::to_string(r.replicas), std::to_string(r.survived), format_double(r.frequency),
                 format_double(r.ci.low), format_double(r.ci.high), format_double(r.mean_revisits),
                 std::to_string(r.min_revisits), std::to_string(r.max_revisits)});
      digest << "percolation p=" << format_double(p) << ": frequency " << format_double(r.frequency)
             << ", mean revisits " << format_double(r.mean_revisits) << "\n";
    }
    w.table("percolation.csv", t.str());
  }
  return overflow;
}

}  // namespace

RunResult run(const RunConfig& config) {
  RunResult result;
  std::ostringstream digest;
  try {
    RunConfig c = config;
    finalize_config(c);
    if (c.command == "scenarios") {
      result.digest = list_scenarios();
      return result;
    }
    // The hash names what the tables were computed from: the model text,
    // or the percolation settings when no model is involved.
    std::string hash;
    if (c.classify || c.extinction || c.spectral || c.spatial || c.sweep) {
      hash = model_hash(build_scenario(c.scenario, c.params));
    } else {
      std::ostringstream desc;
      desc << "percolation base=" << c.perc_base << " radius=" << c.perc_radius;
      hash = content_hash(desc.str());
    }
    Writer w(c.output, hash);
    const bool overflow = run_analyses(c, w, digest);
    std::ostringstream manifest;
    manifest << "command=" << c.command << "\nscenario=" << c.scenario
             << "\nparams=" << params_text(c.params) << "\nseed=" << c.seed
             << "\nhorizon=" << c.horizon << "\nreplicas=" << c.replicas << "\nmodel_hash=" << hash
             << "\noverflow=" << (overflow ? 1 : 0) << "\nfiles=";
    for (std::size_t i = 0; i < w.files.size(); ++i) manifest << (i ? "," : "") << w.files[i];
    manifest << "\ncreated=" << timestamp() << "\n";
    w.write("manifest.txt", manifest.str());
    result.files = w.files;
    if (overflow) {
      digest << "warning: some trials hit the population cap " << c.pop_cap
             << " and were counted as surviving\n";
      result.exit_code = kExitOverflow;
    }
  } catch (const ScenarioError& e) {
    result.exit_code = kExitScenarioError;
    result.error = e.what();
  } catch (const ValidationError& e) {
    result.exit_code = kExitInvalidConfig;
    result.error = e.what();
  } catch (const Error& e) {
    result.exit_code = kExitScenarioError;
    result.error = e.what();
  } catch (const std::filesystem::filesystem_error& e) {
    result.exit_code = kExitInvalidConfig;
    result.error = e.what();
  }
  result.digest = digest.str();
  return result;
}

}  // namespace brw
