#include "mwrn/channel.hpp"

namespace mwrn {

CMatrix generate_channel(const NetworkConfig& config, Rng& rng) {
  const int m = config.m_antennas();
  const int n = config.n_users();
  const auto variances = config.channel_model().variances(n);
  CMatrix h(m, n);
  // Column-major draw order: all antennas of user 1, then user 2, ...
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      h(a, i) = rng.cgaussian(variances[i]);
    }
  }
  return h;
}

}  // namespace mwrn
