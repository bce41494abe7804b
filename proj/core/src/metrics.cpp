#include "mwrn/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mwrn {

namespace {

double pair_sinr(const CMatrix& h, const CMatrix& g, int k, int i,
                 const std::vector<double>& user_powers,
                 const DetectionSchedule* schedule, SinrMode mode) {
  const int n_users = static_cast<int>(h.cols());
  if (k == i) throw std::invalid_argument("sinr: receiver equals source");
  if (k < 1 || k > n_users || i < 1 || i > n_users) {
    throw std::out_of_range("sinr: user index out of range");
  }
  if (g.rows() != h.rows() || g.cols() != h.rows()) {
    throw std::invalid_argument("sinr: beamformer does not match channel");
  }

  // Row vector h_k^T G: its inner products with the h_j give the effective
  // gains, its norm the forwarded relay noise.
  const Eigen::RowVectorXcd row = h.col(k - 1).transpose() * g;
  const double relay_noise = row.squaredNorm();

  std::vector<bool> cancelled(n_users + 1, false);
  if (mode.cancel) {
    cancelled[k] = true;
    if (schedule != nullptr) {
      for (int j : schedule->decoded_before(k, mode.slot)) cancelled[j] = true;
    }
  }

  double interference = 0.0;
  double signal = 0.0;
  for (int j = 1; j <= n_users; ++j) {
    const double gain2 = std::norm((row * h.col(j - 1)).value());
    if (j == i) {
      signal = user_powers[j - 1] * gain2;
    } else if (!cancelled[j]) {
      interference += user_powers[j - 1] * gain2;
    }
  }
  return signal / (interference + relay_noise + 1.0);
}

}  // namespace

double sinr(const CMatrix& h, const CMatrix& g, int k, int i,
            const NetworkConfig& config, SinrMode mode) {
  const auto schedule = DetectionSchedule::from_config(config);
  return pair_sinr(h, g, k, i, config.user_powers(), &schedule, mode);
}

double sinr(const CMatrix& h, const CMatrix& g, int k, int i,
            const std::vector<double>& user_powers,
            const DetectionSchedule& schedule, SinrMode mode) {
  return pair_sinr(h, g, k, i, user_powers, &schedule, mode);
}

RateReport rate_report(const CMatrix& h, const BeamformerSet& beamformers,
                       const NetworkConfig& config, bool with_cancellation) {
  return rate_report(h, beamformers, config.user_powers(),
                     DetectionSchedule::from_config(config), with_cancellation);
}

RateReport rate_report(const CMatrix& h, const BeamformerSet& beamformers,
                       const std::vector<double>& user_powers,
                       const DetectionSchedule& schedule, bool with_cancellation) {
  const int n_users = schedule.n_users();
  if (beamformers.n_slots() != n_users - 1) {
    throw std::invalid_argument("rate_report: need N-1 beamformers");
  }
  RateReport report;
  report.pair_rates = RMatrix::Zero(n_users, n_users);
  report.common_rates = RVector::Zero(n_users);

  for (int k = 1; k <= n_users; ++k) {
    for (int i = 1; i <= n_users; ++i) {
      if (i == k) continue;
      const int n = schedule.slot_of(k, i);
      const SinrMode mode =
          with_cancellation ? SinrMode::with_cancel(n) : SinrMode::no_cancel();
      const double gamma =
          pair_sinr(h, beamformers.slot(n), k, i, user_powers, &schedule, mode);
      report.pair_rates(k - 1, i - 1) = std::log2(1.0 + gamma);
    }
  }
  double total = 0.0;
  for (int i = 1; i <= n_users; ++i) {
    double r = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= n_users; ++k) {
      if (k != i) r = std::min(r, report.pair_rates(k - 1, i - 1));
    }
    report.common_rates(i - 1) = r;
    total += r;
  }
  report.sum_rate = (n_users - 1.0) / n_users * total;
  return report;
}

}  // namespace mwrn
