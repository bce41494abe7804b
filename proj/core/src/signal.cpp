#include "mwrn/signal.hpp"

#include <stdexcept>

namespace mwrn {

CVector received_signal(const CMatrix& h, const CMatrix& g, const CVector& symbols,
                        const CVector& relay_noise, const CVector& user_noise) {
  const auto m = h.rows();
  const auto n = h.cols();
  if (g.rows() != m || g.cols() != m || symbols.size() != n ||
      relay_noise.size() != m || user_noise.size() != n) {
    throw std::invalid_argument("received_signal: dimension mismatch");
  }
  return h.transpose() * (g * (h * symbols + relay_noise)) + user_noise;
}

}  // namespace mwrn
