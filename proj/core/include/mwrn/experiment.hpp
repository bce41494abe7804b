#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mwrn/config.hpp"
#include "mwrn/pzf.hpp"

namespace mwrn {

enum class ExperimentKind {
  SumRateSweep,
  SerSweep,
  UserCountSweep,
  SchedulingCompare,
  ReducedAntennaCompare,
};

enum class Design { Zf, Mmse, Rzf, Mf, PzfJoint, PzfSeparate, PzfReduced };

std::string to_string(ExperimentKind kind);
std::string to_string(Design design);

/// Fully validated description of one experiment run. Built from a config
/// file (parse_config) or a named preset; canonical_config_text() renders
/// it back with every default filled in, and config_hash() fingerprints
/// that text together with the software version.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::SumRateSweep;

  int n_users = 3;
  int m_antennas = 3;
  std::vector<double> user_powers;  // broadcast to n_users when size 1
  double relay_power = 1.0;

  bool heterogeneous = false;
  std::vector<double> distances;
  double path_exponent = 2.0;

  Strategy strategy = Strategy::unicast();
  std::vector<Strategy> compare_strategies;  // SchedulingCompare
  DecodingOrder decoding_order = DecodingOrder::Clockwise;

  std::vector<Design> designs;
  std::vector<double> snr_grid_db;
  std::vector<int> user_counts;                    // UserCountSweep
  std::vector<std::pair<int, int>> network_sizes;  // ReducedAntennaCompare (N, M)

  long trials = 100;
  std::uint64_t seed = 1;
  int qam_order = 4;
  double rzf_alpha = 1.0;
  int threads = 1;

  double step_joint = 0.01;
  double step_separate = 0.03;
  double fd_step = 1e-5;
  double improvement_tol = 0.05;
  int max_iterations = 1000;

  std::string out_path;
  std::string trace_out;

  /// Throws std::invalid_argument naming the violated invariant.
  void validate() const;

  /// Network configuration for this spec at unit reference SNR.
  NetworkConfig network(int n_users_override = 0, int m_override = 0) const;
  NetworkConfig network(const Strategy& strategy_override, int n_users_override = 0,
                        int m_override = 0) const;

  OptimizerConfig optimizer(Design design) const;
};

/// Parse a key = value config document. Unknown keys, malformed values and
/// invariant violations are rejected with line/field diagnostics.
ExperimentSpec parse_config(const std::string& text);

/// Named paper-figure presets: fig4, fig5, fig6, fig9, fig10, fig12.
ExperimentSpec preset(const std::string& name);
std::vector<std::string> preset_names();

std::string canonical_config_text(const ExperimentSpec& spec);
std::uint64_t config_hash(const ExperimentSpec& spec);

/// Run the experiment and return the CSV document (RFC-4180 quoting,
/// header row, one row per design and grid point). Deterministic for a
/// fixed spec and seed, for any thread count.
std::string run_experiment(const ExperimentSpec& spec);

/// run_experiment plus file output; also writes the optimizer trace CSV
/// when the spec requests one.
void run_experiment_to_file(const ExperimentSpec& spec);

}  // namespace mwrn
