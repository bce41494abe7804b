#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mwrn/channel.hpp"
#include "mwrn/metrics.hpp"
#include "test_util.hpp"

using namespace mwrn;
using test::basic_config;

namespace {

BeamformerSet zero_set(int n_users, int m) {
  BeamformerSet set;
  set.design = "zero";
  for (int n = 1; n <= n_users - 1; ++n) set.slots.push_back(CMatrix::Zero(m, m));
  return set;
}

}  // namespace

TEST_CASE("sinr basics") {
  const auto cfg = basic_config(3, 3);
  Rng rng(2);
  const CMatrix h = generate_channel(cfg, rng);

  CHECK(sinr(h, CMatrix::Zero(3, 3), 1, 2, cfg, SinrMode::with_cancel(1)) == 0.0);
  CHECK_THROWS_AS(sinr(h, CMatrix::Zero(3, 3), 2, 2, cfg, SinrMode::no_cancel()),
                  std::invalid_argument);

  // cancellation removes nonnegative interference terms
  const CMatrix g = mf_beamformer(h, cfg, 2);
  for (int k = 1; k <= 3; ++k) {
    const int i = decode_target(k, 2, cfg);
    const double no_cancel = sinr(h, g, k, i, cfg, SinrMode::no_cancel());
    const double with_cancel = sinr(h, g, k, i, cfg, SinrMode::with_cancel(2));
    CHECK(with_cancel >= no_cancel);
  }
}

TEST_CASE("zero-forcing sinr reduces to the interference-free form") {
  const auto cfg = basic_config(3, 3);
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix h = generate_channel(cfg, rng);
    for (int n = 1; n <= 2; ++n) {
      const CMatrix g = zf_beamformer(h, cfg, n);
      for (int k = 1; k <= 3; ++k) {
        const int i = decode_target(k, n, cfg);
        const Eigen::RowVectorXcd row = h.col(k - 1).transpose() * g;
        const double gain2 = std::norm((row * h.col(i - 1)).value());
        const double expected =
            cfg.user_power(i) * gain2 / (row.squaredNorm() + 1.0);
        const double gamma = sinr(h, g, k, i, cfg, SinrMode::with_cancel(n));
        CHECK(gamma == doctest::Approx(expected).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("rate report basics") {
  const auto cfg = basic_config(3, 3);
  Rng rng(8);
  const CMatrix h = generate_channel(cfg, rng);

  SUBCASE("all-zero beamformers give zero sum-rate") {
    const auto report = rate_report(h, zero_set(3, 3), cfg);
    CHECK(report.sum_rate == 0.0);
  }

  SUBCASE("report satisfies its own invariants") {
    const auto report = rate_report(h, zf_beamformer_set(h, cfg), cfg);
    double total = 0.0;
    for (int i = 1; i <= 3; ++i) {
      double worst = std::numeric_limits<double>::infinity();
      for (int k = 1; k <= 3; ++k) {
        if (k == i) continue;
        CHECK(report.pair_rates(k - 1, i - 1) >= 0.0);
        worst = std::min(worst, report.pair_rates(k - 1, i - 1));
      }
      CHECK(report.common_rates(i - 1) == doctest::Approx(worst));
      total += worst;
    }
    CHECK(report.sum_rate == doctest::Approx(2.0 / 3.0 * total));
  }

  SUBCASE("no-cancellation diagnostics never beat cancellation") {
    for (const auto& set : {zf_beamformer_set(h, cfg), mf_beamformer_set(h, cfg),
                            mmse_beamformer_set(h, cfg)}) {
      const double with_c = rate_report(h, set, cfg, true).sum_rate;
      const double without = rate_report(h, set, cfg, false).sum_rate;
      CHECK(without <= with_c + 1e-12);
    }
  }
}

TEST_CASE("two-user prefactor is one half") {
  const auto cfg = basic_config(2, 2);
  Rng rng(12);
  const CMatrix h = generate_channel(cfg, rng);
  const auto report = rate_report(h, zf_beamformer_set(h, cfg), cfg);
  const double total = report.common_rates.sum();
  CHECK(report.sum_rate == doctest::Approx(0.5 * total));
}

TEST_CASE("zero-forcing sum-rate grows like log2 of SNR at high SNR") {
  const auto base = basic_config(3, 3);
  Rng rng(14);
  std::vector<CMatrix> channels;
  for (int t = 0; t < 60; ++t) {
    channels.push_back(generate_channel(base, rng));
  }
  // with variance sigma^2 the channel is sigma * H_unit
  const auto rate_at = [&](double variance) {
    const auto cfg = base.with_channel_model(ChannelModel::homogeneous(variance));
    double acc = 0.0;
    for (const auto& h_unit : channels) {
      const CMatrix h = std::sqrt(variance) * h_unit;
      acc += rate_report(h, zf_beamformer_set(h, cfg), cfg).sum_rate;
    }
    return acc / channels.size();
  };
  // quadrupling the SNR should add about log2(4) bits per common rate:
  // 3 sources * 2 bits * the 2/3 prefactor = 4 bits, within [50%, 150%]
  const double slope = rate_at(4e3) - rate_at(1e3);
  CHECK(slope > 0.5 * 4.0);
  CHECK(slope < 1.5 * 4.0);
}

TEST_CASE("sinr is invariant to a global channel phase") {
  const auto cfg = basic_config(3, 4);
  Rng rng(16);
  const CMatrix h = generate_channel(cfg, rng);
  const CMatrix g = mmse_beamformer(h, cfg, 1);
  const double ref = sinr(h, g, 2, 3, cfg, SinrMode::with_cancel(1));
  for (int step = 0; step < 8; ++step) {
    const double theta = step * 0.7853981633974483;
    const CMatrix hp = std::exp(Complex(0, theta)) * h;
    CHECK(sinr(hp, g, 2, 3, cfg, SinrMode::with_cancel(1)) ==
          doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("relabeling users consistently leaves the sum-rate unchanged") {
  const auto cfg = NetworkConfig(4, 5, {1.0, 2.0, 0.5, 1.5}, 1.0,
                                 ChannelModel::homogeneous(4.0), Strategy::unicast(),
                                 DecodingOrder::Clockwise);
  Rng rng(18);
  const CMatrix h = generate_channel(cfg, rng);
  const auto schedule = DetectionSchedule::from_config(cfg);
  const auto set = mmse_beamformer_set(h, cfg);
  const double ref = rate_report(h, set, cfg.user_powers(), schedule).sum_rate;

  std::mt19937 perm_rng(99);
  std::vector<int> perm{1, 2, 3, 4};  // perm[old-1] = new label
  for (int round = 0; round < 6; ++round) {
    std::shuffle(perm.begin(), perm.end(), perm_rng);
    CMatrix hp(5, 4);
    std::vector<double> powers(4);
    std::vector<std::vector<int>> table(4, std::vector<int>(3));
    for (int old = 1; old <= 4; ++old) {
      hp.col(perm[old - 1] - 1) = h.col(old - 1);
      powers[perm[old - 1] - 1] = cfg.user_power(old);
      for (int n = 1; n <= 3; ++n) {
        table[perm[old - 1] - 1][n - 1] = perm[schedule.target(old, n) - 1];
      }
    }
    const auto permuted = DetectionSchedule::from_table(table);
    const double value = rate_report(hp, set, powers, permuted).sum_rate;
    CHECK(value == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("hybrid rate report uses the schedule's slot binding") {
  const auto cfg = test::hybrid_config(3, 3, 1, {2, 3});
  Rng rng(21);
  const CMatrix h = generate_channel(cfg, rng);
  const auto set = zf_beamformer_set(h, cfg);
  const auto report = rate_report(h, set, cfg);
  CHECK(report.sum_rate > 0.0);

  // source 2 is multicast in slot 1: receivers 1 and 3 decode it there
  const auto schedule = DetectionSchedule::from_config(cfg);
  CHECK(schedule.slot_of(1, 2) == 1);
  CHECK(schedule.slot_of(3, 2) == 1);
  // the unicast source 1 is decoded by u_2 in slot 1 and u_3 in slot 2
  CHECK(schedule.slot_of(2, 1) == 1);
  CHECK(schedule.slot_of(3, 1) == 2);
}
