#pragma once

#include "mwrn/baselines.hpp"
#include "mwrn/config.hpp"
#include "mwrn/protocol.hpp"

namespace mwrn {

/// SINR evaluation mode. NoCancel keeps interference from every source
/// j != i; WithCancel(n) additionally removes the self term j = k and the
/// sources user k already decoded before slot n.
struct SinrMode {
  static SinrMode no_cancel() { return {false, 0}; }
  static SinrMode with_cancel(int slot) { return {true, slot}; }
  bool cancel = true;
  int slot = 1;
};

/// SINR of the link from source i to receiver k through beamformer g.
double sinr(const CMatrix& h, const CMatrix& g, int k, int i,
            const NetworkConfig& config, SinrMode mode);

/// Schedule-explicit variant (used by rate_report and by symmetry tests).
double sinr(const CMatrix& h, const CMatrix& g, int k, int i,
            const std::vector<double>& user_powers,
            const DetectionSchedule& schedule, SinrMode mode);

/// Per-pair rates R_{k,i}, per-source common rates R_i = min_{k != i}
/// R_{k,i}, and the network sum-rate (N-1)/N * sum_i R_i.
struct RateReport {
  RMatrix pair_rates;    // (k, i), diagonal unused
  RVector common_rates;  // R_i
  double sum_rate = 0.0;
};

RateReport rate_report(const CMatrix& h, const BeamformerSet& beamformers,
                       const NetworkConfig& config, bool with_cancellation = true);

RateReport rate_report(const CMatrix& h, const BeamformerSet& beamformers,
                       const std::vector<double>& user_powers,
                       const DetectionSchedule& schedule,
                       bool with_cancellation = true);

}  // namespace mwrn
