#pragma once

#include "mwrn/common.hpp"

namespace mwrn {

/// Received signal at the N users for one BC slot:
///   r = H^T G H s + H^T G z_relay + z_users.
/// Pass zero noise vectors for the noiseless end-to-end response.
CVector received_signal(const CMatrix& h, const CMatrix& g, const CVector& symbols,
                        const CVector& relay_noise, const CVector& user_noise);

}  // namespace mwrn
