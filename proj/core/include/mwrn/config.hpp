#pragma once

#include <string>
#include <vector>

#include "mwrn/common.hpp"

namespace mwrn {

enum class DecodingOrder { Clockwise, CounterClockwise };

/// Per-user channel variance model. Homogeneous networks use one variance
/// sigma_h^2 for every user; heterogeneous networks derive per-user
/// variances from path loss, sigma_i^2 = (psi / d_i)^nu.
class ChannelModel {
 public:
  static ChannelModel homogeneous(double variance);
  static ChannelModel heterogeneous(std::vector<double> distances, double psi,
                                    double exponent);

  bool is_homogeneous() const { return homogeneous_; }
  double base_variance() const { return variance_; }
  const std::vector<double>& distances() const { return distances_; }
  double psi() const { return psi_; }
  double exponent() const { return exponent_; }

  /// Per-user variances sigma_i^2, i = 1..n_users.
  std::vector<double> variances(int n_users) const;

  /// Same model rescaled so that user 1's variance equals snr_linear.
  /// This is how an SNR axis maps onto the fading statistics.
  ChannelModel with_reference_snr(double snr_linear) const;

 private:
  ChannelModel() = default;
  bool homogeneous_ = true;
  double variance_ = 1.0;
  std::vector<double> distances_;
  double psi_ = 1.0;
  double exponent_ = 2.0;
};

/// Broadcast-phase transmission strategy. Unicasting sends a distinct
/// symbol to every user in each BC slot. Hybrid uni/multicasting keeps one
/// fixed unicast symbol that rotates through receivers while a per-slot
/// multicast symbol serves everyone else; the multicast order determines
/// the detection schedule.
class Strategy {
 public:
  static Strategy unicast();
  static Strategy hybrid(int unicast_source, std::vector<int> multicast_order);

  bool is_hybrid() const { return hybrid_; }
  int unicast_source() const { return unicast_source_; }
  const std::vector<int>& multicast_order() const { return multicast_order_; }
  std::string label() const;

 private:
  Strategy() = default;
  bool hybrid_ = false;
  int unicast_source_ = 0;
  std::vector<int> multicast_order_;
};

/// Immutable description of one multi-way relay network: N single-antenna
/// users exchanging symbols through one M-antenna relay. User and slot
/// indices are 1-based everywhere in this library.
class NetworkConfig {
 public:
  NetworkConfig(int n_users, int m_antennas, std::vector<double> user_powers,
                double relay_power, ChannelModel channel, Strategy strategy,
                DecodingOrder decoding_order);

  int n_users() const { return n_users_; }
  int m_antennas() const { return m_antennas_; }
  int n_bc_slots() const { return n_users_ - 1; }
  const std::vector<double>& user_powers() const { return user_powers_; }
  double user_power(int i) const { return user_powers_[i - 1]; }
  double relay_power_budget() const { return relay_power_; }
  const ChannelModel& channel_model() const { return channel_; }
  const Strategy& strategy() const { return strategy_; }
  DecodingOrder decoding_order() const { return decoding_order_; }

  /// Copy with a different channel model (used by SNR sweeps).
  NetworkConfig with_channel_model(ChannelModel m) const;

 private:
  int n_users_;
  int m_antennas_;
  std::vector<double> user_powers_;
  double relay_power_;
  ChannelModel channel_;
  Strategy strategy_;
  DecodingOrder decoding_order_;
};

}  // namespace mwrn
