#pragma once

#include <functional>
#include <vector>

#include "mwrn/baselines.hpp"
#include "mwrn/channel.hpp"
#include "mwrn/config.hpp"

namespace mwrn {

/// Square Gray-mapped QAM with unit average symbol energy.
class QamConstellation {
 public:
  explicit QamConstellation(int order = 4);

  int order() const { return order_; }
  int bits_per_symbol() const { return bits_; }

  /// Label -> constellation point (labels are Gray-coded per axis).
  Complex map(int label) const;
  /// Nearest-neighbor decision -> label.
  int demap(Complex y) const;

 private:
  int order_;
  int bits_;
  int levels_;       // per axis
  double spacing_;   // half distance between adjacent levels
  std::vector<Complex> points_;
};

/// Whether successive interference cancellation uses the receiver's own
/// decisions (realistic) or the true transmitted symbols (genie-aided,
/// isolates error propagation).
enum class CancellationMode { Realistic, GenieAided };

/// Decode-event outcomes of one block (one channel draw, N-1 BC slots).
struct BlockOutcome {
  std::vector<long> user_events;  // decode events per receiving user
  std::vector<long> user_errors;
  long events = 0;
  long errors = 0;
};

/// Symbol-error statistics accumulated over many blocks.
struct SerResult {
  std::vector<double> per_user_ser;
  double aggregate_ser = 0.0;
  long trials = 0;
  long events = 0;
  long errors = 0;
  long failures = 0;  // channel draws where the beamformer factory threw
  CancellationMode mode = CancellationMode::Realistic;
  // First two moments of the per-block SER, for standard errors.
  double block_ser_sum = 0.0;
  double block_ser_sumsq = 0.0;
};

/// Run the full transceiver protocol once: every user transmits a fresh
/// uniformly drawn QAM symbol scaled to its power, the relay forwards
/// through the slot beamformers with fresh relay/user noise, and each
/// receiver cancels its self-interference plus previously decoded symbols
/// before equalizing and demapping. noise_scale = 0 gives the noiseless
/// diagnostic channel.
BlockOutcome simulate_block(const CMatrix& h, const BeamformerSet& beamformers,
                            const NetworkConfig& config, Rng& rng,
                            CancellationMode mode, const QamConstellation& qam,
                            double noise_scale = 1.0);

using BeamformerFactory =
    std::function<BeamformerSet(const CMatrix& h, const NetworkConfig& config)>;

/// Monte Carlo SER over independent channel draws (one draw per block).
/// Per-trial seeds are derived from the master seed, so the result is
/// byte-reproducible for any thread count.
SerResult simulate_ser(const NetworkConfig& config, const BeamformerFactory& factory,
                       long trials, std::uint64_t master_seed, CancellationMode mode,
                       const QamConstellation& qam, int threads = 1);

/// SNR-grid convenience wrapper: rescales the channel model per grid point.
std::vector<SerResult> simulate_ser_sweep(const NetworkConfig& config,
                                          const BeamformerFactory& factory,
                                          const std::vector<double>& snr_grid_db,
                                          long trials, std::uint64_t master_seed,
                                          CancellationMode mode,
                                          const QamConstellation& qam,
                                          int threads = 1);

}  // namespace mwrn
