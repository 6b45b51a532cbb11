#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/scenarios.hpp"
#include "brwlab/types.hpp"

namespace brw {

// Everything one CLI invocation does. Keys of the flat text format are the
// field names below; see apply_setting.
struct RunConfig {
  std::string command;
  std::string scenario = "gw";
  ParamMap params;

  bool classify = false;
  bool extinction = false;
  bool spectral = false;
  bool spatial = false;
  bool sweep = false;
  bool percolation = false;

  std::size_t horizon = 100;
  std::size_t replicas = 1000;
  std::vector<Count> caps;
  std::uint64_t seed = 0;
  std::string output = "brwlab_out";
  unsigned threads = 0;
  Count pop_cap = 1'000'000;
  std::optional<VertexId> x0;
  std::vector<std::size_t> radii;

  // Percolation.
  std::string perc_base = "z";  // z | n
  long long perc_radius = 10;
  std::vector<double> perc_p{0.5};
};

// Exit statuses of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidConfig = 1;
inline constexpr int kExitScenarioError = 2;
inline constexpr int kExitOverflow = 3;

// Sets one key. "param.<name>" (or "param" with "name=value") sets a
// scenario parameter. Throws ValidationError for unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

// Flat "key = value" lines; '#' starts a comment. Later lines win.
std::vector<std::pair<std::string, std::string>> parse_settings(const std::string& text);

// Marks the analysis named by the command and checks the invariants
// (known command, replicas >= 1, caps present for sweeps).
void finalize_config(RunConfig& config);

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::string> files;  // written, relative to the output directory
  std::string digest;
  std::string error;
};

// Runs the analyses, writes CSV files plus manifest.txt into
// config.output and returns a one-screen digest. CSV bodies depend only on
// the config; the timestamp lives in the manifest. Errors map to exit codes
// 1 (config), 2 (scenario), 3 (overflow, files still written).
RunResult run(const RunConfig& config);

// Name, anchor, summary and parameters of every scenario.
std::string list_scenarios();

// Known commands in display order.
const std::vector<std::string>& known_commands();

}  // namespace brw
