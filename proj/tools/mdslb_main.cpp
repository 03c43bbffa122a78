// Command-line front end for the load-balancing toolkit: computes fixed
// points and decay bounds, integrates the mean-field ODE, runs the
// finite-n simulator, and cross-checks it against the exact stationary
// solver on small capped instances.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "mdslb/errors.hpp"
#include "mdslb/experiments.hpp"

namespace {

struct FlagSpec {
  const char* name;
  const char* help;
};

// Flags mirror config keys one-to-one; values are parsed by the same typed
// setters as config-file entries.
const std::vector<FlagSpec> kKnobs = {
    {"n", "server count (simulator experiments; default unset)"},
    {"lambda", "per-server arrival rate, 0 < lambda < 1"},
    {"L", "spread factor, pieces per file"},
    {"k", "reconstruction count, 1 <= k < L"},
    {"M", "occupancy truncation length (default 64)"},
    {"K", "ODE truncation level (default 0 = first index with u_bar < 1e-14)"},
    {"dt", "integrator step (default 0 = 0.01/k)"},
    {"T", "ODE horizon / max convergence time (default 200)"},
    {"tol", "rho convergence tolerance (default 1e-6)"},
    {"warmup", "simulator warmup time (default 1000)"},
    {"measure_time", "simulator measurement time (default 20000)"},
    {"cap", "queue cap B, 0 = uncapped (default 0; oracle-check needs >= 1)"},
    {"replications", "independent simulation replications (default 1)"},
    {"thinning", "trajectory sample interval (default 0 = off / every step)"},
    {"draws", "identity-check random simplex draws (default 1000)"},
    {"n_sweep", "comma-separated n list for interchange-sweep "
                "(default 50,200,800)"},
    {"init", "ode-converge start: empty|double|half|ubar (default empty)"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Load balancing in MDS-coded storage clusters: mean-field "
               "fixed point, tail decay bounds, ODE convergence, and "
               "finite-n batch-sampling simulation."};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::string seed_value;
  bool check = false;
  app.add_option("--config", config_path, "flat YAML config file");
  app.add_option("--out", out_dir, "output directory (default results)");
  app.add_option("--seed", seed_value, "random seed (default 1)");
  app.add_flag("--check", check,
               "gate the run on its acceptance thresholds (exit 3 on fail)");

  std::vector<std::pair<std::string, std::string>> values(kKnobs.size());
  for (std::size_t i = 0; i < kKnobs.size(); ++i) {
    values[i].first = kKnobs[i].name;
    app.add_option("--" + values[i].first, values[i].second, kKnobs[i].help);
  }

  for (const std::string& name : mdslb::kExperimentNames) {
    app.add_subcommand(name, "run the " + name + " experiment");
  }

  CLI11_PARSE(app, argc, argv);

  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& sub : app.get_subcommands()) {
    overrides.emplace_back("experiment", sub->get_name());
  }
  for (const auto& [key, value] : values) {
    if (app.count("--" + key) > 0) overrides.emplace_back(key, value);
  }
  if (app.count("--seed") > 0) overrides.emplace_back("seed", seed_value);
  if (app.count("--out") > 0) overrides.emplace_back("output_dir", out_dir);

  try {
    mdslb::ExperimentConfig cfg = mdslb::load_config(
        config_path.empty() ? std::nullopt
                            : std::optional<std::string>(config_path),
        overrides);
    cfg.check = check;
    return mdslb::run_experiment(cfg);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
