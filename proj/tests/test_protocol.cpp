#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "mwrn/protocol.hpp"
#include "test_util.hpp"

using namespace mwrn;
using test::basic_config;
using test::hybrid_config;

TEST_CASE("decode target follows the detection order") {
  const auto cfg3 = basic_config(3, 3);
  CHECK(decode_target(1, 1, cfg3) == 2);  // u_1 decodes s_2 in slot 1
  CHECK(decode_target(3, 2, cfg3) == 2);  // u_3 decodes s_2 in slot 2
  CHECK(decode_target(2, 1, cfg3) == 3);
  CHECK(decode_target(3, 1, cfg3) == 1);

  const auto ccw = basic_config(3, 3, 1.0, DecodingOrder::CounterClockwise);
  CHECK(decode_target(1, 1, ccw) == 3);  // mod_N(k-n-1)+1
  CHECK(decode_target(1, 2, ccw) == 2);

  CHECK_THROWS_AS(decode_target(0, 1, cfg3), std::out_of_range);
  CHECK_THROWS_AS(decode_target(1, 3, cfg3), std::out_of_range);
}

TEST_CASE("decode target never returns the receiver and covers all sources") {
  for (int n_users : {2, 3, 4, 5, 8}) {
    for (auto order : {DecodingOrder::Clockwise, DecodingOrder::CounterClockwise}) {
      const auto cfg = basic_config(n_users, n_users, 1.0, order);
      for (int k = 1; k <= n_users; ++k) {
        std::set<int> seen;
        for (int n = 1; n <= n_users - 1; ++n) {
          const int i = decode_target(k, n, cfg);
          CHECK(i != k);
          seen.insert(i);
        }
        CHECK(seen.size() == static_cast<std::size_t>(n_users - 1));
      }
    }
  }
}

TEST_CASE("decoded set lists exactly the previous targets") {
  const auto cfg3 = basic_config(3, 3);
  CHECK(decoded_set(1, 1, cfg3).empty());
  CHECK(decoded_set(1, 2, cfg3) == std::vector<int>{2});

  const auto cfg4 = basic_config(4, 4);
  CHECK(decoded_set(2, 3, cfg4) == std::vector<int>{3, 4});

  for (int k = 1; k <= 4; ++k) {
    for (int n = 1; n <= 3; ++n) {
      const auto set = decoded_set(k, n, cfg4);
      CHECK(static_cast<int>(set.size()) == n - 1);
      for (int j : set) CHECK(j != k);
    }
  }
}

TEST_CASE("unicast zero pattern matches the displayed 3-user matrices") {
  const auto pattern = zero_pattern(basic_config(3, 3));
  REQUIRE(pattern.n_slots() == 2);
  const auto& slot1 = pattern.slot_zeros(1);
  REQUIRE(slot1.size() == 3);
  CHECK(pattern.contains(1, 3, 1));
  CHECK(pattern.contains(2, 1, 1));
  CHECK(pattern.contains(3, 2, 1));
  CHECK(pattern.slot_zero_count(2) == 0);  // last slot is all-free
}

TEST_CASE("hybrid zero pattern matches the displayed 3-user matrices") {
  const auto pattern = zero_pattern(hybrid_config(3, 3, 1, {2, 3}));
  CHECK(pattern.slot_zero_count(1) == 3);
  CHECK(pattern.contains(1, 3, 1));
  CHECK(pattern.contains(2, 3, 1));
  CHECK(pattern.contains(3, 1, 1));
  CHECK(pattern.slot_zero_count(2) == 0);
}

TEST_CASE("zero pattern slot counts are (N-n-1)N and never self-referential") {
  for (int n_users : {2, 3, 4, 6, 8}) {
    const auto pattern = zero_pattern(basic_config(n_users, n_users));
    for (int n = 1; n <= n_users - 1; ++n) {
      CHECK(pattern.slot_zero_count(n) == (n_users - n - 1) * n_users);
      for (const auto& [i, j] : pattern.slot_zeros(n)) CHECK(i != j);
    }
  }
}

TEST_CASE("interferers partition into relay-cancelled and user-cancelled") {
  // decoded_set + {target} + {self} + zero-pattern interferers = {1..N}
  for (int n_users : {3, 4, 5}) {
    const auto cfg = basic_config(n_users, n_users);
    const auto pattern = zero_pattern(cfg);
    for (int k = 1; k <= n_users; ++k) {
      for (int n = 1; n <= n_users - 1; ++n) {
        std::set<int> members{k, decode_target(k, n, cfg)};
        for (int j : decoded_set(k, n, cfg)) members.insert(j);
        for (int j = 1; j <= n_users; ++j) {
          if (pattern.contains(k, j, n)) {
            CHECK(members.count(j) == 0);
            members.insert(j);
          }
        }
        CHECK(members.size() == static_cast<std::size_t>(n_users));
      }
    }
  }
}

TEST_CASE("permutation matrix powers") {
  CHECK(permutation_matrix(4, 0).isApprox(RMatrix::Identity(4, 4)));
  CHECK(permutation_matrix(3, 3).isApprox(RMatrix::Identity(3, 3)));

  const RMatrix p1 = permutation_matrix(3, 1);
  CHECK(p1(0, 1) == 1.0);
  CHECK(p1(1, 2) == 1.0);
  CHECK(p1(2, 0) == 1.0);
  CHECK(p1.sum() == 3.0);

  // P^n equals n applications of P
  const RMatrix p = permutation_matrix(5, 1);
  RMatrix acc = RMatrix::Identity(5, 5);
  for (int n = 1; n <= 5; ++n) {
    acc = acc * p;
    CHECK(permutation_matrix(5, n).isApprox(acc));
  }
}

TEST_CASE("schedule matrix rows select the decode targets") {
  const auto cfg = hybrid_config(3, 3, 1, {2, 3});
  const auto schedule = DetectionSchedule::from_config(cfg);
  const RMatrix s1 = schedule_matrix(schedule, 1);
  // slot 1: u_1 and u_3 decode s_2, u_2 decodes s_1
  CHECK(s1(0, 1) == 1.0);
  CHECK(s1(1, 0) == 1.0);
  CHECK(s1(2, 1) == 1.0);
  CHECK(s1.sum() == 3.0);

  // unicast clockwise coincides with the permutation matrix
  const auto uni = basic_config(4, 4);
  const auto uni_schedule = DetectionSchedule::from_config(uni);
  for (int n = 1; n <= 3; ++n) {
    CHECK(schedule_matrix(uni_schedule, n).isApprox(permutation_matrix(4, n)));
  }
}

TEST_CASE("hybrid schedule targets and slots") {
  const auto cfg = hybrid_config(3, 3, 1, {2, 3});
  const auto schedule = DetectionSchedule::from_config(cfg);
  CHECK(schedule.target(1, 1) == 2);
  CHECK(schedule.target(2, 1) == 1);  // unicast receiver of slot 1
  CHECK(schedule.target(3, 1) == 2);
  CHECK(schedule.target(1, 2) == 3);
  CHECK(schedule.target(2, 2) == 3);
  CHECK(schedule.target(3, 2) == 1);
  CHECK(schedule.slot_of(3, 1) == 2);
  CHECK(schedule.decoded_before(3, 2) == std::vector<int>{2});
}

TEST_CASE("config invariants are enforced") {
  CHECK_THROWS_AS(basic_config(1, 3), std::invalid_argument);
  CHECK_THROWS_AS(basic_config(3, 1), std::invalid_argument);  // M >= N-1
  CHECK_THROWS_AS(ChannelModel::homogeneous(0.0), std::invalid_argument);
  CHECK_THROWS_AS(hybrid_config(3, 3, 1, {2}), std::invalid_argument);
  CHECK_THROWS_AS(hybrid_config(3, 3, 1, {1, 3}), std::invalid_argument);
  CHECK_THROWS_AS(hybrid_config(3, 3, 1, {3, 3}), std::invalid_argument);
  CHECK_NOTHROW(basic_config(3, 2));  // M = N-1 is allowed
}

TEST_CASE("heterogeneous variances follow (psi/d)^nu") {
  // d_3 = 2 d_2 = 4 d_1 with nu = 2 and psi = d_1: ratios 1, 1/4, 1/16
  const auto model = ChannelModel::heterogeneous({1.0, 2.0, 4.0}, 1.0, 2.0);
  const auto v = model.variances(3);
  CHECK(v[0] == doctest::Approx(1.0));
  CHECK(v[1] == doctest::Approx(0.25));
  CHECK(v[2] == doctest::Approx(0.0625));

  const auto scaled = model.with_reference_snr(100.0);
  const auto sv = scaled.variances(3);
  CHECK(sv[0] == doctest::Approx(100.0));
  CHECK(sv[1] == doctest::Approx(25.0));
}
