#pragma once

#include <utility>
#include <vector>

#include "mwrn/config.hpp"

namespace mwrn {

/// x modulo n, always in [0, n).
inline int mod_index(int x, int n) {
  int r = x % n;
  return r < 0 ? r + n : r;
}

/// Source index decoded by user k in BC slot n (1-based).
/// Clockwise:         i = mod_N(k+n-1)+1
/// Counter-clockwise: i = mod_N(k-n-1)+1
int decode_target(int k, int n, const NetworkConfig& config);

/// Indexes of symbols user k has already decoded before slot n
/// (the set L_{k,n}); size n-1, never contains k.
std::vector<int> decoded_set(int k, int n, const NetworkConfig& config);

/// The full detection schedule: which source each user decodes in each BC
/// slot. Everything downstream (decoded sets, zero patterns, slot binding
/// of rate terms) derives from this table, which makes unicast and hybrid
/// uni/multicasting interchangeable.
class DetectionSchedule {
 public:
  static DetectionSchedule from_config(const NetworkConfig& config);

  /// Build from an explicit target table: target_table[k-1][n-1] is the
  /// source decoded by user k in slot n. Each row must visit every source
  /// other than k exactly once.
  static DetectionSchedule from_table(std::vector<std::vector<int>> target_table);

  int n_users() const { return n_users_; }
  int n_slots() const { return n_users_ - 1; }

  /// Source decoded by user k in slot n.
  int target(int k, int n) const { return target_[k - 1][n - 1]; }

  /// Slot in which user k decodes source i (i != k).
  int slot_of(int k, int i) const { return slot_of_[k - 1][i - 1]; }

  /// Sources user k decoded before slot n (L_{k,n}).
  std::vector<int> decoded_before(int k, int n) const;

 private:
  int n_users_ = 0;
  std::vector<std::vector<int>> target_;   // [k-1][n-1] -> i
  std::vector<std::vector<int>> slot_of_;  // [k-1][i-1] -> n
};

/// The set of 3-tuple indexes (i, j, n) whose equivalent-channel entries
/// a_ij^{(n)} are forced to zero: receiver i, interferer j, BC slot n.
/// An entry is zeroed exactly when j is a source that receiver i will only
/// decode in a later slot; self-interference and already-decoded sources
/// are cancelled at the users instead.
class ZeroPattern {
 public:
  static ZeroPattern from_schedule(const DetectionSchedule& schedule);

  int n_users() const { return n_users_; }
  int n_slots() const { return static_cast<int>(slot_zeros_.size()); }
  bool contains(int i, int j, int n) const {
    return mask_[n - 1][(i - 1) * n_users_ + (j - 1)];
  }
  /// Zero positions (i, j) of slot n, row-major order.
  const std::vector<std::pair<int, int>>& slot_zeros(int n) const {
    return slot_zeros_[n - 1];
  }
  int slot_zero_count(int n) const {
    return static_cast<int>(slot_zeros_[n - 1].size());
  }
  /// All tuples (i, j, n).
  std::vector<std::tuple<int, int, int>> tuples() const;

 private:
  int n_users_ = 0;
  std::vector<std::vector<std::pair<int, int>>> slot_zeros_;
  std::vector<std::vector<char>> mask_;
};

/// Zero pattern implied by the configured strategy and decoding order.
ZeroPattern zero_pattern(const NetworkConfig& config);

/// n-th power of the cyclic permutation P (columns of I_N shifted one
/// position to the right): P^n has unit entries at (i, mod_N(i+n-1)+1).
RMatrix permutation_matrix(int n_users, int n);

/// Selection matrix S^{(n)} with a unit entry at (k, target(k, n)) for each
/// receiver k. Coincides with P^n for clockwise unicasting; for hybrid
/// schedules the columns are no longer distinct.
RMatrix schedule_matrix(const DetectionSchedule& schedule, int n);

}  // namespace mwrn
