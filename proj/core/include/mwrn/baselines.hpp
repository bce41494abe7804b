#pragma once

#include <string>
#include <vector>

#include "mwrn/config.hpp"
#include "mwrn/protocol.hpp"

namespace mwrn {

/// The N-1 relay transceive beamforming matrices of one BC phase.
struct BeamformerSet {
  std::vector<CMatrix> slots;  // G^{(1)} .. G^{(N-1)}, each M x M
  std::string design;

  int n_slots() const { return static_cast<int>(slots.size()); }
  const CMatrix& slot(int n) const { return slots[n - 1]; }
};

/// Relay transmit power tr{G (H P_s H^H + I_M) G^H} spent when forwarding
/// the MAC-phase signal through G.
double relay_power(const CMatrix& g, const CMatrix& h,
                   const std::vector<double>& user_powers);

// Closed-form transceive designs G = G_TX S G_RX. The selection matrix S
// routes each receiver to the source it decodes in the slot (P^n for
// clockwise unicasting). Every returned matrix is scaled so relay_power
// equals the budget exactly.
CMatrix zf_beamformer(const CMatrix& h, const std::vector<double>& user_powers,
                      double relay_budget, const RMatrix& selection);
CMatrix mmse_beamformer(const CMatrix& h, const std::vector<double>& user_powers,
                        double relay_budget, const RMatrix& selection);
CMatrix rzf_beamformer(const CMatrix& h, const std::vector<double>& user_powers,
                       double relay_budget, const RMatrix& selection, double alpha);
CMatrix mf_beamformer(const CMatrix& h, const std::vector<double>& user_powers,
                      double relay_budget, const RMatrix& selection);

// Config-level convenience: slot n of the configured schedule.
CMatrix zf_beamformer(const CMatrix& h, const NetworkConfig& config, int n);
CMatrix mmse_beamformer(const CMatrix& h, const NetworkConfig& config, int n);
CMatrix rzf_beamformer(const CMatrix& h, const NetworkConfig& config, int n,
                       double alpha);
CMatrix mf_beamformer(const CMatrix& h, const NetworkConfig& config, int n);

BeamformerSet zf_beamformer_set(const CMatrix& h, const NetworkConfig& config);
BeamformerSet mmse_beamformer_set(const CMatrix& h, const NetworkConfig& config);
BeamformerSet rzf_beamformer_set(const CMatrix& h, const NetworkConfig& config,
                                 double alpha);
BeamformerSet mf_beamformer_set(const CMatrix& h, const NetworkConfig& config);

}  // namespace mwrn
