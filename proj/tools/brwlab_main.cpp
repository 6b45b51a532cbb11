// brwlab command-line entry point. Settings are applied in order:
// config file, BRWLAB_SEED, then flags, so later sources win.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "brwlab/run.hpp"

namespace {

struct Flags {
  std::string config;
  std::vector<std::pair<std::string, std::string>> settings;
};

void add_common(CLI::App* sub, Flags& f) {
  auto set = [&f](const std::string& key) {
    return [&f, key](const std::string& v) { f.settings.emplace_back(key, v); };
  };
  sub->add_option("--config", f.config, "flat key = value settings file");
  sub->add_option_function<std::string>("--scenario", set("scenario"), "scenario name");
  sub->add_option_function<std::vector<std::string>>(
         "--param,-p",
         [&f](const std::vector<std::string>& vs) {
           for (const auto& v : vs) f.settings.emplace_back("param", v);
         },
         "scenario parameter name=value (repeatable)")
      ->take_all()
      ->allow_extra_args(false);
  sub->add_option_function<std::string>("--analyses", set("analyses"),
                                         "extra analyses: classify,extinction,spectral,spatial,sweep,percolation");
  sub->add_option_function<std::string>("--horizon", set("horizon"), "generations per trial");
  sub->add_option_function<std::string>("--replicas", set("replicas"), "Monte Carlo replicas");
  sub->add_option_function<std::string>("--caps", set("caps"), "comma-separated caps m (inf allowed)");
  sub->add_option_function<std::string>("--seed", set("seed"), "base seed (default 0 or BRWLAB_SEED)");
  sub->add_option_function<std::string>("--out,-o", set("output"), "output directory");
  sub->add_option_function<std::string>("--threads", set("threads"), "worker threads (0 = all cores)");
  sub->add_option_function<std::string>("--pop-cap", set("pop_cap"), "population cap per trial");
  sub->add_option_function<std::string>("--x0", set("x0"), "start vertex (default: scenario origin)");
  sub->add_option_function<std::string>("--radii", set("radii"), "ball radii for the spatial exhaustion");
  sub->add_option_function<std::string>("--perc-base", set("perc_base"), "percolation base graph: z or n");
  sub->add_option_function<std::string>("--perc-radius", set("perc_radius"), "percolation window radius");
  sub->add_option_function<std::string>("--perc-p", set("perc_p"), "comma-separated open probabilities");
  sub->add_option_function<std::vector<std::string>>(
         "--set",
         [&f](const std::vector<std::string>& vs) {
           for (const auto& v : vs) {
             const auto eq = v.find('=');
             f.settings.emplace_back(v.substr(0, eq), eq == std::string::npos ? "" : v.substr(eq + 1));
           }
         },
         "any setting key=value (repeatable)")
      ->take_all()
      ->allow_extra_args(false);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"brwlab: branching random walk laboratory"};
  app.require_subcommand(1, 1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"classify", "local, global and strong-local survival verdicts"},
      {"extinction", "extinction probabilities q_bar and q(., x0)"},
      {"spectral", "local and global growth rates of the moment matrix"},
      {"spatial", "growth of the model restricted to balls around x0"},
      {"sweep", "survival of BRW_m for a list of caps m"},
      {"percolate", "oriented percolation sanity runs"},
      {"scenarios", "list registered scenarios"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    if (name != "scenarios") add_common(sub, flags);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return brw::kExitInvalidConfig;
  }

  brw::RunConfig config;
  config.command = app.get_subcommands().front()->get_name();
  try {
    if (!flags.config.empty()) {
      std::ifstream in(flags.config);
      if (!in) throw brw::ValidationError("cannot read config file " + flags.config);
      std::stringstream ss;
      ss << in.rdbuf();
      for (const auto& [k, v] : brw::parse_settings(ss.str())) {
        if (k == "command") continue;  // the subcommand decides
        brw::apply_setting(config, k, v);
      }
    }
    if (const char* env = std::getenv("BRWLAB_SEED")) brw::apply_setting(config, "seed", env);
    for (const auto& [k, v] : flags.settings) brw::apply_setting(config, k, v);
  } catch (const brw::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return brw::kExitInvalidConfig;
  }

  const brw::RunResult result = brw::run(config);
  std::cout << result.digest;
  if (!result.error.empty()) std::cerr << "error: " << result.error << "\n";
  if (result.exit_code == brw::kExitOk && config.command != "scenarios")
    std::cout << "wrote " << result.files.size() << " files to " << config.output << "\n";
  return result.exit_code;
}
