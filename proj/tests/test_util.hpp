#pragma once

#include <vector>

#include "mwrn/config.hpp"

namespace mwrn::test {

/// Homogeneous unicast network with unit powers, the workhorse setup.
inline NetworkConfig basic_config(int n_users, int m_antennas,
                                  double variance = 1.0,
                                  DecodingOrder order = DecodingOrder::Clockwise) {
  return NetworkConfig(n_users, m_antennas, std::vector<double>(n_users, 1.0), 1.0,
                       ChannelModel::homogeneous(variance), Strategy::unicast(),
                       order);
}

inline NetworkConfig hybrid_config(int n_users, int m_antennas, int unicast_source,
                                   std::vector<int> order, double variance = 1.0) {
  return NetworkConfig(n_users, m_antennas, std::vector<double>(n_users, 1.0), 1.0,
                       ChannelModel::homogeneous(variance),
                       Strategy::hybrid(unicast_source, std::move(order)),
                       DecodingOrder::Clockwise);
}

}  // namespace mwrn::test
