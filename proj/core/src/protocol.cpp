#include "mwrn/protocol.hpp"

#include <stdexcept>
#include <tuple>

namespace mwrn {

namespace {

void check_user(int k, int n_users, const char* what) {
  if (k < 1 || k > n_users) {
    throw std::out_of_range(std::string(what) + " index out of range");
  }
}

void check_slot(int n, int n_users) {
  if (n < 1 || n > n_users - 1) {
    throw std::out_of_range("BC slot index out of range");
  }
}

}  // namespace

int decode_target(int k, int n, const NetworkConfig& config) {
  const int N = config.n_users();
  check_user(k, N, "receiver");
  check_slot(n, N);
  if (config.strategy().is_hybrid()) {
    const int m = config.strategy().multicast_order()[n - 1];
    return k == m ? config.strategy().unicast_source() : m;
  }
  if (config.decoding_order() == DecodingOrder::Clockwise) {
    return mod_index(k + n - 1, N) + 1;
  }
  return mod_index(k - n - 1, N) + 1;
}

std::vector<int> decoded_set(int k, int n, const NetworkConfig& config) {
  const int N = config.n_users();
  check_user(k, N, "receiver");
  check_slot(n, N);
  std::vector<int> set;
  set.reserve(n - 1);
  for (int q = 1; q <= n - 1; ++q) {
    set.push_back(decode_target(k, q, config));
  }
  return set;
}

DetectionSchedule DetectionSchedule::from_config(const NetworkConfig& config) {
  const int N = config.n_users();
  std::vector<std::vector<int>> table(N, std::vector<int>(N - 1));
  for (int k = 1; k <= N; ++k) {
    for (int n = 1; n <= N - 1; ++n) {
      table[k - 1][n - 1] = decode_target(k, n, config);
    }
  }
  return from_table(std::move(table));
}

DetectionSchedule DetectionSchedule::from_table(
    std::vector<std::vector<int>> target_table) {
  DetectionSchedule s;
  s.n_users_ = static_cast<int>(target_table.size());
  const int N = s.n_users_;
  if (N < 2) throw std::invalid_argument("schedule needs at least 2 users");
  s.target_ = std::move(target_table);
  s.slot_of_.assign(N, std::vector<int>(N, 0));
  for (int k = 1; k <= N; ++k) {
    if (static_cast<int>(s.target_[k - 1].size()) != N - 1) {
      throw std::invalid_argument("schedule row has wrong slot count");
    }
    for (int n = 1; n <= N - 1; ++n) {
      const int i = s.target_[k - 1][n - 1];
      if (i < 1 || i > N || i == k) {
        throw std::invalid_argument("schedule target out of range");
      }
      if (s.slot_of_[k - 1][i - 1] != 0) {
        throw std::invalid_argument("schedule decodes a source twice");
      }
      s.slot_of_[k - 1][i - 1] = n;
    }
  }
  return s;
}

std::vector<int> DetectionSchedule::decoded_before(int k, int n) const {
  check_user(k, n_users_, "receiver");
  check_slot(n, n_users_);
  std::vector<int> set;
  set.reserve(n - 1);
  for (int q = 1; q <= n - 1; ++q) set.push_back(target(k, q));
  return set;
}

ZeroPattern ZeroPattern::from_schedule(const DetectionSchedule& schedule) {
  const int N = schedule.n_users();
  ZeroPattern p;
  p.n_users_ = N;
  p.slot_zeros_.resize(N - 1);
  p.mask_.assign(N - 1, std::vector<char>(N * N, 0));
  for (int n = 1; n <= N - 1; ++n) {
    // In slot n receiver i still has to decode the targets of slots
    // n+1..N-1; their interference is the part the relay must cancel.
    for (int i = 1; i <= N; ++i) {
      for (int q = n + 1; q <= N - 1; ++q) {
        const int j = schedule.target(i, q);
        if (!p.mask_[n - 1][(i - 1) * N + (j - 1)]) {
          p.mask_[n - 1][(i - 1) * N + (j - 1)] = 1;
        }
      }
    }
    auto& zeros = p.slot_zeros_[n - 1];
    for (int i = 1; i <= N; ++i) {
      for (int j = 1; j <= N; ++j) {
        if (p.mask_[n - 1][(i - 1) * N + (j - 1)]) zeros.emplace_back(i, j);
      }
    }
  }
  return p;
}

std::vector<std::tuple<int, int, int>> ZeroPattern::tuples() const {
  std::vector<std::tuple<int, int, int>> out;
  for (int n = 1; n <= n_slots(); ++n) {
    for (const auto& [i, j] : slot_zeros_[n - 1]) out.emplace_back(i, j, n);
  }
  return out;
}

ZeroPattern zero_pattern(const NetworkConfig& config) {
  return ZeroPattern::from_schedule(DetectionSchedule::from_config(config));
}

RMatrix permutation_matrix(int n_users, int n) {
  if (n < 0) throw std::invalid_argument("permutation power must be >= 0");
  RMatrix p = RMatrix::Zero(n_users, n_users);
  for (int i = 1; i <= n_users; ++i) {
    p(i - 1, mod_index(i + n - 1, n_users)) = 1.0;
  }
  return p;
}

RMatrix schedule_matrix(const DetectionSchedule& schedule, int n) {
  const int N = schedule.n_users();
  check_slot(n, N);
  RMatrix s = RMatrix::Zero(N, N);
  for (int k = 1; k <= N; ++k) s(k - 1, schedule.target(k, n) - 1) = 1.0;
  return s;
}

}  // namespace mwrn
