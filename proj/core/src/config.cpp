#include "mwrn/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mwrn {

ChannelModel ChannelModel::homogeneous(double variance) {
  if (!(variance > 0.0)) {
    throw std::invalid_argument("channel variance must be > 0");
  }
  ChannelModel m;
  m.homogeneous_ = true;
  m.variance_ = variance;
  return m;
}

ChannelModel ChannelModel::heterogeneous(std::vector<double> distances,
                                         double psi, double exponent) {
  if (distances.empty()) {
    throw std::invalid_argument("heterogeneous model needs distances");
  }
  for (double d : distances) {
    if (!(d > 0.0)) throw std::invalid_argument("distances must be > 0");
  }
  if (!(psi > 0.0)) throw std::invalid_argument("psi must be > 0");
  ChannelModel m;
  m.homogeneous_ = false;
  m.distances_ = std::move(distances);
  m.psi_ = psi;
  m.exponent_ = exponent;
  return m;
}

std::vector<double> ChannelModel::variances(int n_users) const {
  std::vector<double> v(n_users);
  if (homogeneous_) {
    std::fill(v.begin(), v.end(), variance_);
    return v;
  }
  if (static_cast<int>(distances_.size()) != n_users) {
    throw std::invalid_argument("distance list does not match user count");
  }
  for (int i = 0; i < n_users; ++i) {
    v[i] = std::pow(psi_ / distances_[i], exponent_);
  }
  return v;
}

ChannelModel ChannelModel::with_reference_snr(double snr_linear) const {
  if (!(snr_linear > 0.0)) {
    throw std::invalid_argument("SNR must be > 0 in linear scale");
  }
  if (homogeneous_) return homogeneous(snr_linear);
  // sigma_1^2 = (psi/d_1)^nu = snr  =>  psi = d_1 * snr^(1/nu)
  const double psi = distances_[0] * std::pow(snr_linear, 1.0 / exponent_);
  return heterogeneous(distances_, psi, exponent_);
}

Strategy Strategy::unicast() { return Strategy{}; }

Strategy Strategy::hybrid(int unicast_source, std::vector<int> multicast_order) {
  Strategy s;
  s.hybrid_ = true;
  s.unicast_source_ = unicast_source;
  s.multicast_order_ = std::move(multicast_order);
  return s;
}

std::string Strategy::label() const {
  if (!hybrid_) return "unicast";
  std::ostringstream os;
  os << "hybrid:" << unicast_source_ << ":";
  for (std::size_t q = 0; q < multicast_order_.size(); ++q) {
    if (q) os << ",";
    os << multicast_order_[q];
  }
  return os.str();
}

NetworkConfig::NetworkConfig(int n_users, int m_antennas,
                             std::vector<double> user_powers,
                             double relay_power, ChannelModel channel,
                             Strategy strategy, DecodingOrder decoding_order)
    : n_users_(n_users),
      m_antennas_(m_antennas),
      user_powers_(std::move(user_powers)),
      relay_power_(relay_power),
      channel_(std::move(channel)),
      strategy_(std::move(strategy)),
      decoding_order_(decoding_order) {
  if (n_users_ < 2) throw std::invalid_argument("need at least 2 users");
  if (m_antennas_ < n_users_ - 1) {
    throw std::invalid_argument("relay needs at least N-1 antennas");
  }
  if (static_cast<int>(user_powers_.size()) != n_users_) {
    throw std::invalid_argument("user power list does not match user count");
  }
  for (double p : user_powers_) {
    if (!(p > 0.0)) throw std::invalid_argument("user powers must be > 0");
  }
  if (!(relay_power_ > 0.0)) {
    throw std::invalid_argument("relay power must be > 0");
  }
  for (double v : channel_.variances(n_users_)) {
    if (!(v > 0.0)) throw std::invalid_argument("channel variances must be > 0");
  }
  if (strategy_.is_hybrid()) {
    const int u = strategy_.unicast_source();
    if (u < 1 || u > n_users_) {
      throw std::invalid_argument("unicast source out of range");
    }
    const auto& order = strategy_.multicast_order();
    if (static_cast<int>(order.size()) != n_users_ - 1) {
      throw std::invalid_argument(
          "multicast order must list every source except the unicast one");
    }
    std::vector<bool> seen(n_users_ + 1, false);
    for (int s : order) {
      if (s < 1 || s > n_users_ || s == u || seen[s]) {
        throw std::invalid_argument(
            "multicast order must be a permutation of the non-unicast sources");
      }
      seen[s] = true;
    }
  }
}

NetworkConfig NetworkConfig::with_channel_model(ChannelModel m) const {
  NetworkConfig c = *this;
  c.channel_ = std::move(m);
  // re-check positivity for the new model
  for (double v : c.channel_.variances(c.n_users_)) {
    if (!(v > 0.0)) throw std::invalid_argument("channel variances must be > 0");
  }
  return c;
}

}  // namespace mwrn
