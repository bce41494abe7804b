// Command-line front end for the multi-way relay beamforming simulator.
// Each subcommand runs one experiment kind and writes a CSV file; configs
// come from a key = value file or from a named figure preset.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mwrn/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct CommonOptions {
  std::string config_path;
  std::string preset_name;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  long trials = 0;
  int threads = 0;
  bool dump_config = false;
  std::string trace_out;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file");
  cmd->add_option("--preset", opts.preset_name,
                  "named preset: fig4|fig5|fig6|fig9|fig10|fig12");
  cmd->add_option("--seed", opts.seed, "master seed override")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--trials", opts.trials, "trial count override");
  cmd->add_option("--out", opts.out_path, "output CSV path");
  cmd->add_option("--threads", opts.threads, "worker thread count");
  cmd->add_option("--trace", opts.trace_out,
                  "optimizer trace CSV (first PZF run of the sweep)");
  cmd->add_flag("--dump-config", opts.dump_config,
                "print the canonical configuration and exit");
}

int run(mwrn::ExperimentKind kind, const CommonOptions& opts) {
  mwrn::ExperimentSpec spec;
  if (opts.config_path.empty() == opts.preset_name.empty()) {
    std::cerr << "error: pass exactly one of --config or --preset\n";
    return 2;
  }
  if (!opts.preset_name.empty()) {
    spec = mwrn::preset(opts.preset_name);
  } else {
    spec = mwrn::parse_config(read_file(opts.config_path));
  }
  if (spec.kind != kind) {
    std::cerr << "error: configuration is for experiment '"
              << mwrn::to_string(spec.kind) << "', not '" << mwrn::to_string(kind)
              << "'\n";
    return 2;
  }
  if (opts.seed_set) spec.seed = opts.seed;
  if (opts.trials > 0) spec.trials = opts.trials;
  if (opts.threads > 0) spec.threads = opts.threads;
  if (!opts.out_path.empty()) spec.out_path = opts.out_path;
  if (!opts.trace_out.empty()) spec.trace_out = opts.trace_out;
  spec.validate();

  if (opts.dump_config) {
    std::cout << mwrn::canonical_config_text(spec);
    return 0;
  }
  if (spec.out_path.empty()) {
    std::cout << mwrn::run_experiment(spec);
    return 0;
  }
  mwrn::run_experiment_to_file(spec);
  std::cout << "wrote " << spec.out_path << "\n";
  if (!spec.trace_out.empty()) std::cout << "wrote " << spec.trace_out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-way relay network beamforming simulator"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    mwrn::ExperimentKind kind;
  };
  const Sub subs[] = {
      {"sumrate", "sum-rate versus SNR", mwrn::ExperimentKind::SumRateSweep},
      {"ser", "symbol error rate versus SNR", mwrn::ExperimentKind::SerSweep},
      {"sweep-users", "sum-rate versus user count",
       mwrn::ExperimentKind::UserCountSweep},
      {"schedule-compare", "strategy / detection schedule comparison",
       mwrn::ExperimentKind::SchedulingCompare},
      {"reduced-compare", "M = N versus M = N-1 comparison",
       mwrn::ExperimentKind::ReducedAntennaCompare},
  };

  CommonOptions opts[5];
  for (int s = 0; s < 5; ++s) {
    CLI::App* cmd = app.add_subcommand(subs[s].name, subs[s].help);
    add_common(cmd, opts[s]);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (int s = 0; s < 5; ++s) {
      if (app.get_subcommand(subs[s].name)->parsed()) {
        return run(subs[s].kind, opts[s]);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}
