#pragma once

#include "mwrn/common.hpp"
#include "mwrn/config.hpp"

namespace mwrn {

/// Draw one M x N block-fading channel matrix H = [h_1 ... h_N]. Entry
/// h_{m,i} is i.i.d. CN(0, sigma_i^2) Rayleigh fading; column i belongs to
/// user i. Reciprocal: the BC-phase channel is H^T, never re-drawn.
CMatrix generate_channel(const NetworkConfig& config, Rng& rng);

}  // namespace mwrn
