#include "mwrn/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace mwrn {

namespace {

constexpr double kRankTolerance = 1e-12;  // relative singular-value cutoff

CMatrix signal_covariance(const CMatrix& h, const std::vector<double>& user_powers) {
  const auto m = h.rows();
  CMatrix ps = CMatrix::Zero(h.cols(), h.cols());
  for (int i = 0; i < h.cols(); ++i) ps(i, i) = user_powers[i];
  return h * ps * h.adjoint() + CMatrix::Identity(m, m);
}

void check_dims(const CMatrix& h, const std::vector<double>& user_powers,
                const RMatrix& selection) {
  if (static_cast<int>(user_powers.size()) != h.cols()) {
    throw std::invalid_argument("user power list does not match channel");
  }
  if (selection.rows() != h.cols() || selection.cols() != h.cols()) {
    throw std::invalid_argument("selection matrix does not match channel");
  }
}

void check_full_column_rank(const CMatrix& h) {
  Eigen::JacobiSVD<CMatrix> svd(h);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) <= kRankTolerance * s(0)) {
    throw std::runtime_error("channel matrix is (numerically) rank deficient");
  }
}

/// Scale so the relay power constraint holds with equality; the SINR is
/// strictly increasing under upscaling, so equality is never worse.
CMatrix normalized(const CMatrix& g, const CMatrix& h,
                   const std::vector<double>& user_powers, double relay_budget) {
  const double p = relay_power(g, h, user_powers);
  if (!(p > 0.0)) throw std::runtime_error("cannot normalize a zero beamformer");
  return g * std::sqrt(relay_budget / p);
}

}  // namespace

double relay_power(const CMatrix& g, const CMatrix& h,
                   const std::vector<double>& user_powers) {
  if (g.rows() != h.rows() || g.cols() != h.rows()) {
    throw std::invalid_argument("beamformer does not match channel");
  }
  if (static_cast<int>(user_powers.size()) != h.cols()) {
    throw std::invalid_argument("user power list does not match channel");
  }
  const CMatrix q = signal_covariance(h, user_powers);
  return (g * q * g.adjoint()).trace().real();
}

CMatrix zf_beamformer(const CMatrix& h, const std::vector<double>& user_powers,
                      double relay_budget, const RMatrix& selection) {
  check_dims(h, user_powers, selection);
  if (h.rows() < h.cols()) {
    throw std::invalid_argument("zero-forcing needs M >= N");
  }
  check_full_column_rank(h);
  // G_RX = (H^H H)^-1 H^H; G_TX = H* (H^T H*)^-1 is exactly G_RX^T.
  const CMatrix g_rx = (h.adjoint() * h).ldlt().solve(h.adjoint());
  const CMatrix g_tx = g_rx.transpose();
  const CMatrix g = g_tx * selection.cast<Complex>() * g_rx;
  return normalized(g, h, user_powers, relay_budget);
}

CMatrix mmse_beamformer(const CMatrix& h, const std::vector<double>& user_powers,
                        double relay_budget, const RMatrix& selection) {
  return rzf_beamformer(h, user_powers, relay_budget, selection, 1.0);
}

CMatrix rzf_beamformer(const CMatrix& h, const std::vector<double>& user_powers,
                       double relay_budget, const RMatrix& selection, double alpha) {
  check_dims(h, user_powers, selection);
  if (!(alpha > 0.0)) throw std::invalid_argument("rzf alpha must be > 0");
  const auto m = h.rows();
  const auto n = h.cols();
  CMatrix ps = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) ps(i, i) = user_powers[i];
  // G_RX = P_s H^H (H P_s H^H + alpha I)^-1; alpha = 1 is the MMSE filter.
  const CMatrix rx_core =
      h * ps * h.adjoint() + alpha * CMatrix::Identity(m, m);
  const CMatrix g_rx = rx_core.ldlt().solve(h * ps).adjoint();
  // G_TX = (H* H^T + (N/P_R) I)^-1 H*
  const CMatrix tx_core = h.conjugate() * h.transpose() +
                          (static_cast<double>(n) / relay_budget) *
                              CMatrix::Identity(m, m);
  const CMatrix g_tx = tx_core.ldlt().solve(h.conjugate());
  const CMatrix g = g_tx * selection.cast<Complex>() * g_rx;
  return normalized(g, h, user_powers, relay_budget);
}

CMatrix mf_beamformer(const CMatrix& h, const std::vector<double>& user_powers,
                      double relay_budget, const RMatrix& selection) {
  check_dims(h, user_powers, selection);
  // Matched filter on both sides: G_RX = H^H, G_TX = (1/p) H*.
  const CMatrix g = h.conjugate() * selection.cast<Complex>() * h.adjoint();
  return normalized(g, h, user_powers, relay_budget);
}

namespace {

RMatrix slot_selection(const NetworkConfig& config, int n) {
  return schedule_matrix(DetectionSchedule::from_config(config), n);
}

template <typename Fn>
BeamformerSet make_set(const NetworkConfig& config, const std::string& tag,
                       Fn&& one_slot) {
  const auto schedule = DetectionSchedule::from_config(config);
  BeamformerSet set;
  set.design = tag;
  set.slots.reserve(config.n_bc_slots());
  for (int n = 1; n <= config.n_bc_slots(); ++n) {
    set.slots.push_back(one_slot(schedule_matrix(schedule, n)));
  }
  return set;
}

}  // namespace

CMatrix zf_beamformer(const CMatrix& h, const NetworkConfig& config, int n) {
  return zf_beamformer(h, config.user_powers(), config.relay_power_budget(),
                       slot_selection(config, n));
}

CMatrix mmse_beamformer(const CMatrix& h, const NetworkConfig& config, int n) {
  return mmse_beamformer(h, config.user_powers(), config.relay_power_budget(),
                         slot_selection(config, n));
}

CMatrix rzf_beamformer(const CMatrix& h, const NetworkConfig& config, int n,
                       double alpha) {
  return rzf_beamformer(h, config.user_powers(), config.relay_power_budget(),
                        slot_selection(config, n), alpha);
}

CMatrix mf_beamformer(const CMatrix& h, const NetworkConfig& config, int n) {
  return mf_beamformer(h, config.user_powers(), config.relay_power_budget(),
                       slot_selection(config, n));
}

BeamformerSet zf_beamformer_set(const CMatrix& h, const NetworkConfig& config) {
  return make_set(config, "zf", [&](const RMatrix& s) {
    return zf_beamformer(h, config.user_powers(), config.relay_power_budget(), s);
  });
}

BeamformerSet mmse_beamformer_set(const CMatrix& h, const NetworkConfig& config) {
  return make_set(config, "mmse", [&](const RMatrix& s) {
    return mmse_beamformer(h, config.user_powers(), config.relay_power_budget(), s);
  });
}

BeamformerSet rzf_beamformer_set(const CMatrix& h, const NetworkConfig& config,
                                 double alpha) {
  return make_set(config, "rzf", [&](const RMatrix& s) {
    return rzf_beamformer(h, config.user_powers(), config.relay_power_budget(), s,
                          alpha);
  });
}

BeamformerSet mf_beamformer_set(const CMatrix& h, const NetworkConfig& config) {
  return make_set(config, "mf", [&](const RMatrix& s) {
    return mf_beamformer(h, config.user_powers(), config.relay_power_budget(), s);
  });
}

}  // namespace mwrn
