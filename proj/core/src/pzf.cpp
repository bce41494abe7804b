#include "mwrn/pzf.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace mwrn {

namespace {

constexpr double kRankTolerance = 1e-12;

CMatrix pseudo_inverse(const CMatrix& h) {
  Eigen::JacobiSVD<CMatrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) <= kRankTolerance * s(0)) {
    throw std::runtime_error("channel matrix is (numerically) rank deficient");
  }
  return svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
}

double sum_min_rates(const RMatrix& rates) {
  const int n = static_cast<int>(rates.rows());
  double f = 0.0;
  for (int i = 0; i < n; ++i) {
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (k != i) worst = std::min(worst, rates(k, i));
    }
    f += worst;
  }
  return f;
}

}  // namespace

FreeLayout FreeLayout::from_pattern(const ZeroPattern& pattern) {
  FreeLayout layout;
  layout.n_users_ = pattern.n_users();
  const int n_users = layout.n_users_;
  layout.positions_.resize(pattern.n_slots());
  layout.offsets_.resize(pattern.n_slots());
  int offset = 0;
  for (int n = 1; n <= pattern.n_slots(); ++n) {
    layout.offsets_[n - 1] = offset;
    auto& pos = layout.positions_[n - 1];
    for (int i = 1; i <= n_users; ++i) {
      for (int j = 1; j <= n_users; ++j) {
        if (!pattern.contains(i, j, n)) pos.emplace_back(i, j);
      }
    }
    offset += static_cast<int>(pos.size());
  }
  layout.total_ = offset;
  return layout;
}

CVector pack(const std::vector<CMatrix>& a_matrices, const FreeLayout& layout) {
  if (static_cast<int>(a_matrices.size()) != layout.n_slots()) {
    throw std::invalid_argument("pack: wrong number of matrices");
  }
  CVector x(layout.total_size());
  for (int n = 1; n <= layout.n_slots(); ++n) {
    x.segment(layout.slot_offset(n), layout.slot_size(n)) =
        pack_slot(a_matrices[n - 1], layout, n);
  }
  return x;
}

std::vector<CMatrix> unpack(const CVector& x, const FreeLayout& layout) {
  if (x.size() != layout.total_size()) {
    throw std::invalid_argument("unpack: wrong vector length");
  }
  std::vector<CMatrix> a;
  a.reserve(layout.n_slots());
  for (int n = 1; n <= layout.n_slots(); ++n) {
    a.push_back(
        unpack_slot(x.segment(layout.slot_offset(n), layout.slot_size(n)), layout, n));
  }
  return a;
}

CVector pack_slot(const CMatrix& a, const FreeLayout& layout, int n) {
  const int n_users = layout.n_users();
  if (a.rows() != n_users || a.cols() != n_users) {
    throw std::invalid_argument("pack: matrix dimension mismatch");
  }
  const auto& pos = layout.slot_positions(n);
  CVector x(pos.size());
  for (std::size_t l = 0; l < pos.size(); ++l) {
    x(static_cast<Eigen::Index>(l)) = a(pos[l].first - 1, pos[l].second - 1);
  }
  return x;
}

CMatrix unpack_slot(const CVector& x_slot, const FreeLayout& layout, int n) {
  const auto& pos = layout.slot_positions(n);
  if (x_slot.size() != static_cast<Eigen::Index>(pos.size())) {
    throw std::invalid_argument("unpack: wrong slot vector length");
  }
  CMatrix a = CMatrix::Zero(layout.n_users(), layout.n_users());
  for (std::size_t l = 0; l < pos.size(); ++l) {
    a(pos[l].first - 1, pos[l].second - 1) = x_slot(static_cast<Eigen::Index>(l));
  }
  return a;
}

CMatrix a_to_g(const CMatrix& a, const CMatrix& h) {
  if (h.rows() < h.cols()) {
    throw std::invalid_argument("a_to_g needs M >= N");
  }
  if (a.rows() != h.cols() || a.cols() != h.cols()) {
    throw std::invalid_argument("a_to_g: equivalent channel must be N x N");
  }
  const CMatrix h_pinv = pseudo_inverse(h);  // N x M
  // (H^T)^+ = (H^+)^T, so G = (H^+)^T A H^+.
  return h_pinv.transpose() * a * h_pinv;
}

CMatrix scale_equivalent_to_power(const CMatrix& a, const CMatrix& h,
                                  const NetworkConfig& config) {
  const double p = relay_power(a_to_g(a, h), h, config.user_powers());
  if (!(p > 0.0)) {
    throw std::invalid_argument("cannot scale an all-zero equivalent channel");
  }
  return a * std::sqrt(config.relay_power_budget() / p);
}

CMatrix scale_beamformer_to_power(const CMatrix& g, const CMatrix& h,
                                  const NetworkConfig& config) {
  const double p = relay_power(g, h, config.user_powers());
  if (!(p > 0.0)) {
    throw std::invalid_argument("cannot scale an all-zero beamformer");
  }
  return g * std::sqrt(config.relay_power_budget() / p);
}

PzfProblem::PzfProblem(const CMatrix& h, const NetworkConfig& config)
    : h_(h),
      n_users_(config.n_users()),
      m_antennas_(config.m_antennas()),
      relay_budget_(config.relay_power_budget()),
      powers_(config.user_powers()),
      schedule_(DetectionSchedule::from_config(config)),
      pattern_(ZeroPattern::from_schedule(schedule_)),
      layout_(FreeLayout::from_pattern(pattern_)) {
  if (h.rows() != m_antennas_ || h.cols() != n_users_) {
    throw std::invalid_argument("channel does not match configuration");
  }
  if (m_antennas_ < n_users_) {
    throw std::invalid_argument(
        "equivalent-channel optimization needs M >= N (use the reduced mode)");
  }
  h_pinv_ = pseudo_inverse(h_);
  CMatrix ps = CMatrix::Zero(n_users_, n_users_);
  for (int i = 0; i < n_users_; ++i) ps(i, i) = powers_[i];
  // With G = (H^+)^T A H^+ the relay power is tr{A B A^H C}:
  //   B = H^+ (H Ps H^H + I) (H^+)^H = Ps + H^+ (H^+)^H
  //   C = conj(H^+) (H^+)^T
  power_core_ = ps + h_pinv_ * h_pinv_.adjoint();
  noise_core_ = h_pinv_.conjugate() * h_pinv_.transpose();
  a_buf_.resize(n_users_, n_users_);
  r_buf_.resize(n_users_, m_antennas_);
  phi_t1_.resize(n_users_, n_users_);
  phi_t2_.resize(n_users_, n_users_);
}

double PzfProblem::slot_power(const CVector& x_slot, int n) const {
  const auto& pos = layout_.slot_positions(n);
  a_buf_.setZero();
  for (std::size_t l = 0; l < pos.size(); ++l) {
    a_buf_(pos[l].first - 1, pos[l].second - 1) = x_slot(static_cast<Eigen::Index>(l));
  }
  phi_t1_.noalias() = a_buf_ * power_core_;
  phi_t2_.noalias() = phi_t1_ * a_buf_.adjoint();
  return phi_t2_.cwiseProduct(noise_core_.transpose()).sum().real();
}

double PzfProblem::rate_for_pair(const CMatrix& a, int k, int i, int /*n*/) const {
  const double num = powers_[i - 1] * std::norm(a(k - 1, i - 1));
  const double den = r_buf_.row(k - 1).squaredNorm() + 1.0;
  return std::log2(1.0 + num / den);
}

double PzfProblem::objective_slot(const CVector& x_slot, int n) const {
  const auto& pos = layout_.slot_positions(n);
  if (x_slot.size() != static_cast<Eigen::Index>(pos.size())) {
    throw std::invalid_argument("objective: wrong slot vector length");
  }
  a_buf_.setZero();
  for (std::size_t l = 0; l < pos.size(); ++l) {
    a_buf_(pos[l].first - 1, pos[l].second - 1) = x_slot(static_cast<Eigen::Index>(l));
  }
  r_buf_.noalias() = a_buf_ * h_pinv_;
  double f = 0.0;
  for (int k = 1; k <= n_users_; ++k) {
    f += rate_for_pair(a_buf_, k, schedule_.target(k, n), n);
  }
  return f;
}

double PzfProblem::objective_joint(const CVector& x) const {
  if (x.size() != layout_.total_size()) {
    throw std::invalid_argument("objective: wrong vector length");
  }
  RMatrix rates = RMatrix::Zero(n_users_, n_users_);
  for (int n = 1; n <= layout_.n_slots(); ++n) {
    const auto& pos = layout_.slot_positions(n);
    a_buf_.setZero();
    const int off = layout_.slot_offset(n);
    for (std::size_t l = 0; l < pos.size(); ++l) {
      a_buf_(pos[l].first - 1, pos[l].second - 1) =
          x(off + static_cast<Eigen::Index>(l));
    }
    r_buf_.noalias() = a_buf_ * h_pinv_;
    for (int k = 1; k <= n_users_; ++k) {
      const int i = schedule_.target(k, n);
      rates(k - 1, i - 1) = rate_for_pair(a_buf_, k, i, n);
    }
  }
  return sum_min_rates(rates);
}

CVector PzfProblem::modified_gradient_slot(const CVector& x_slot, int n,
                                           const GradientOptions& opts) const {
  const int un = layout_.slot_size(n);
  const double f0 = objective_slot(x_slot, n);
  CVector d(un);
  CVector probe(un);
  for (int l = 0; l < un; ++l) {
    const double eps = opts.fd_step * std::max(1.0, std::abs(x_slot(l)));
    double parts[2];
    for (int c = 0; c < 2; ++c) {
      probe = x_slot;
      probe(l) += (c == 0) ? Complex(eps, 0.0) : Complex(0.0, eps);
      if (!opts.unit_scaling) {
        double alpha = slot_power(probe, n) / relay_budget_;
        if (opts.clamp_scaling) alpha = std::max(alpha, 1.0);
        probe /= alpha;
      }
      parts[c] = (objective_slot(probe, n) - f0) / eps;
    }
    d(l) = Complex(parts[0], parts[1]);
  }
  return d;
}

CVector PzfProblem::modified_gradient_joint(const CVector& x,
                                            const GradientOptions& opts) const {
  if (x.size() != layout_.total_size()) {
    throw std::invalid_argument("gradient: wrong vector length");
  }
  // Base rate table; a probe only touches one slot, so only that slot's
  // N decode-event rates need recomputing before the min-scan.
  RMatrix base_rates = RMatrix::Zero(n_users_, n_users_);
  for (int n = 1; n <= layout_.n_slots(); ++n) {
    const CVector xs = x.segment(layout_.slot_offset(n), layout_.slot_size(n));
    a_buf_.setZero();
    const auto& pos = layout_.slot_positions(n);
    for (std::size_t l = 0; l < pos.size(); ++l) {
      a_buf_(pos[l].first - 1, pos[l].second - 1) = xs(static_cast<Eigen::Index>(l));
    }
    r_buf_.noalias() = a_buf_ * h_pinv_;
    for (int k = 1; k <= n_users_; ++k) {
      const int i = schedule_.target(k, n);
      base_rates(k - 1, i - 1) = rate_for_pair(a_buf_, k, i, n);
    }
  }
  const double f0 = sum_min_rates(base_rates);

  CVector d(layout_.total_size());
  RMatrix patched = base_rates;
  for (int n = 1; n <= layout_.n_slots(); ++n) {
    const int un = layout_.slot_size(n);
    const int off = layout_.slot_offset(n);
    const CVector xs = x.segment(off, un);
    CVector probe(un);
    const auto& pos = layout_.slot_positions(n);
    for (int l = 0; l < un; ++l) {
      const double eps = opts.fd_step * std::max(1.0, std::abs(xs(l)));
      double parts[2];
      for (int c = 0; c < 2; ++c) {
        probe = xs;
        probe(l) += (c == 0) ? Complex(eps, 0.0) : Complex(0.0, eps);
        if (!opts.unit_scaling) {
          double alpha = slot_power(probe, n) / relay_budget_;
          if (opts.clamp_scaling) alpha = std::max(alpha, 1.0);
          probe /= alpha;
        }
        // rates of slot n under the probe
        a_buf_.setZero();
        for (std::size_t q = 0; q < pos.size(); ++q) {
          a_buf_(pos[q].first - 1, pos[q].second - 1) =
              probe(static_cast<Eigen::Index>(q));
        }
        r_buf_.noalias() = a_buf_ * h_pinv_;
        patched = base_rates;
        for (int k = 1; k <= n_users_; ++k) {
          const int i = schedule_.target(k, n);
          patched(k - 1, i - 1) = rate_for_pair(a_buf_, k, i, n);
        }
        parts[c] = (sum_min_rates(patched) - f0) / eps;
      }
      d(off + l) = Complex(parts[0], parts[1]);
    }
  }
  return d;
}

CVector PzfProblem::power_gradient_slot(const CVector& x_slot, int n,
                                        double fd_step) const {
  const int un = layout_.slot_size(n);
  const double p0 = slot_power(x_slot, n);
  CVector d(un);
  CVector probe(un);
  for (int l = 0; l < un; ++l) {
    const double eps = fd_step * std::max(1.0, std::abs(x_slot(l)));
    double parts[2];
    for (int c = 0; c < 2; ++c) {
      probe = x_slot;
      probe(l) += (c == 0) ? Complex(eps, 0.0) : Complex(0.0, eps);
      parts[c] = (slot_power(probe, n) - p0) / eps;
    }
    d(l) = Complex(parts[0], parts[1]);
  }
  return d;
}

CVector PzfProblem::power_descent_direction(const CVector& x_slot, int n,
                                            double fd_step) const {
  CVector d = -power_gradient_slot(x_slot, n, fd_step);
  const auto& pos = layout_.slot_positions(n);
  for (std::size_t l = 0; l < pos.size(); ++l) {
    if (schedule_.target(pos[l].first, n) == pos[l].second) {
      d(static_cast<Eigen::Index>(l)) = Complex(0, 0);
    }
  }
  return d;
}

CVector PzfProblem::zf_start_slot(int n) const {
  const auto& pos = layout_.slot_positions(n);
  CVector x = CVector::Zero(pos.size());
  for (std::size_t l = 0; l < pos.size(); ++l) {
    const auto [i, j] = pos[l];
    if (schedule_.target(i, n) == j) x(static_cast<Eigen::Index>(l)) = 1.0;
  }
  const double phi = slot_power(x, n);
  if (!(phi > 0.0)) throw std::runtime_error("degenerate zero-forcing start");
  x *= std::sqrt(relay_budget_ / phi);
  return x;
}

CVector PzfProblem::zf_start() const {
  CVector x(layout_.total_size());
  for (int n = 1; n <= layout_.n_slots(); ++n) {
    x.segment(layout_.slot_offset(n), layout_.slot_size(n)) = zf_start_slot(n);
  }
  return x;
}

void PzfProblem::rescale_slot(CVector& x_slot, int n) const {
  const double phi = slot_power(x_slot, n);
  if (!(phi > 0.0)) throw std::runtime_error("cannot rescale an all-zero slot");
  x_slot *= std::sqrt(relay_budget_ / phi);
}

CMatrix PzfProblem::slot_equivalent(const CVector& x_slot, int n) const {
  return unpack_slot(x_slot, layout_, n);
}

BeamformerSet PzfProblem::to_beamformers(const CVector& x,
                                         const std::string& tag) const {
  BeamformerSet set;
  set.design = tag;
  set.slots.reserve(layout_.n_slots());
  for (int n = 1; n <= layout_.n_slots(); ++n) {
    const CMatrix a =
        unpack_slot(x.segment(layout_.slot_offset(n), layout_.slot_size(n)),
                    layout_, n);
    set.slots.push_back(h_pinv_.transpose() * a * h_pinv_);
  }
  return set;
}

double objective(const CVector& x, const CMatrix& h, const NetworkConfig& config) {
  return PzfProblem(h, config).objective_joint(x);
}

double objective_slot(const CVector& x_slot, int n, const CMatrix& h,
                      const NetworkConfig& config) {
  return PzfProblem(h, config).objective_slot(x_slot, n);
}

CVector modified_gradient(const CVector& x, const CMatrix& h,
                          const NetworkConfig& config, const GradientOptions& opts) {
  return PzfProblem(h, config).modified_gradient_joint(x, opts);
}

namespace {

constexpr int kMaxStepHalvings = 20;
constexpr int kExploreIterations = 40;

struct AscentCallbacks {
  std::function<CVector(const CVector&)> gradient;
  // Rescue directions, tried in order when no step along the modified
  // gradient improves the objective. The power normalization biases the
  // modified gradient into the power shell, and the max-min objective has
  // kinks where tied branches flatten every one-sided probe; the rescue
  // directions (plain finite-difference gradient, then the all-pairs sum
  // gradient that raises tied branches together) pierce both situations.
  std::vector<std::function<CVector(const CVector&)>> rescues;
  std::function<double(const CVector&)> objective;
  std::function<void(CVector&)> rescale;  // project onto the power shell
  std::function<double(const CVector&)> power;
  // Extra acceptance veto for a candidate (separate mode guards the
  // network min-rate here); commits are reported through on_commit.
  std::function<bool(const CVector&)> accept;
  std::function<void(const CVector&)> on_commit;
};

/// Shared ascent loop: move along the modified gradient, rescale to the
/// power constraint, keep the step only if the objective improved (halving
/// the step up to kMaxStepHalvings times otherwise, then along the rescue
/// directions). Stops on the configured rule: gradient norm, or
/// per-iteration gain below improvement_tol times the first iteration's
/// gain.
int ascend(CVector& x, double& f, const OptimizerConfig& opt, double step,
           const AscentCallbacks& cb, int trace_iter_base,
           std::vector<TracePoint>* trace, double trace_value_offset = 0.0) {
  if (!std::isfinite(f)) {
    throw std::runtime_error("optimizer: non-finite objective at start");
  }
  double gain_sum = 0.0;
  int committed = 0;
  CVector trial(x.size());

  const auto try_direction = [&](const CVector& d, double& f_try) {
    double local = step;
    for (int h = 0; h <= kMaxStepHalvings; ++h) {
      trial = x + local * d;
      cb.rescale(trial);
      f_try = cb.objective(trial);
      if (!std::isfinite(f_try)) {
        throw std::runtime_error("optimizer: objective became non-finite");
      }
      if (f_try > f && (!cb.accept || cb.accept(trial))) return true;
      local *= 0.5;
    }
    return false;
  };

  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    const CVector d = cb.gradient(x);
    const double gnorm = d.norm();
    if (opt.gradient_tolerance > 0.0 && gnorm < opt.gradient_tolerance) break;

    double f_try = f;
    bool improved = try_direction(d, f_try);
    for (std::size_t r = 0; !improved && r < cb.rescues.size(); ++r) {
      improved = try_direction(cb.rescues[r](x), f_try);
    }
    if (!improved) {
      // The guarded step fails at min-tie kinks, where any reallocation
      // lowers some tied branch. Follow raw uncommitted updates until the
      // objective first exceeds the current point, then commit that whole
      // excursion as a single step; the committed trace stays monotone.
      CVector y = x;
      for (int e = 0; e < kExploreIterations && !improved; ++e) {
        y += step * cb.gradient(y);
        cb.rescale(y);
        const double f_y = cb.objective(y);
        if (!std::isfinite(f_y)) {
          throw std::runtime_error("optimizer: objective became non-finite");
        }
        if (f_y > f && (!cb.accept || cb.accept(y))) {
          trial = y;
          f_try = f_y;
          improved = true;
        }
      }
    }
    if (!improved) break;  // no ascent step available, stay at x

    const double gain = f_try - f;
    x = trial;
    f = f_try;
    ++committed;
    if (cb.on_commit) cb.on_commit(x);
    if (trace != nullptr) {
      trace->push_back(
          {trace_iter_base + committed, trace_value_offset + f, cb.power(x), gnorm});
    }
    if (opt.gradient_tolerance <= 0.0) {
      // "less than 5% improvement over one iteration", measured against
      // the running average single-iteration improvement
      gain_sum += gain;
      if (gain < opt.improvement_tol * (gain_sum / committed)) break;
    }
  }
  return committed;
}

GradientOptions gradient_options(const OptimizerConfig& opt) {
  GradientOptions g;
  g.fd_step = opt.fd_step;
  g.clamp_scaling = opt.clamp_scaling;
  return g;
}

GradientOptions fallback_options(const OptimizerConfig& opt) {
  GradientOptions g = gradient_options(opt);
  g.unit_scaling = true;
  return g;
}

}  // namespace

OptimizeResult optimize_joint(const CMatrix& h, const NetworkConfig& config,
                              const OptimizerConfig& opt) {
  PzfProblem prob(h, config);
  const double step = opt.step_size > 0.0 ? opt.step_size : 0.01;
  const auto gopts = gradient_options(opt);

  OptimizeResult result;
  CVector x = prob.zf_start();
  double f = prob.objective_joint(x);
  result.initial_objective = f;

  AscentCallbacks cb;
  cb.gradient = [&](const CVector& v) {
    return prob.modified_gradient_joint(v, gopts);
  };
  cb.rescues.push_back([&](const CVector& v) {
    return prob.modified_gradient_joint(v, fallback_options(opt));
  });
  cb.rescues.push_back([&](const CVector& v) {
    // gradient of the all-pairs rate sum: slot objectives concatenated
    CVector d(v.size());
    for (int n = 1; n <= prob.layout().n_slots(); ++n) {
      d.segment(prob.layout().slot_offset(n), prob.layout().slot_size(n)) =
          prob.modified_gradient_slot(
              v.segment(prob.layout().slot_offset(n), prob.layout().slot_size(n)),
              n, fallback_options(opt));
    }
    return d;
  });
  cb.rescues.push_back([&](const CVector& v) {
    // power descent on non-target coordinates: the rescale back to the
    // shell then lifts every gain
    CVector d(v.size());
    for (int n = 1; n <= prob.layout().n_slots(); ++n) {
      d.segment(prob.layout().slot_offset(n), prob.layout().slot_size(n)) =
          prob.power_descent_direction(
              v.segment(prob.layout().slot_offset(n), prob.layout().slot_size(n)),
              n, opt.fd_step);
    }
    return d;
  });
  cb.objective = [&](const CVector& v) { return prob.objective_joint(v); };
  cb.rescale = [&](CVector& v) {
    for (int n = 1; n <= prob.layout().n_slots(); ++n) {
      CVector seg = v.segment(prob.layout().slot_offset(n), prob.layout().slot_size(n));
      prob.rescale_slot(seg, n);
      v.segment(prob.layout().slot_offset(n), prob.layout().slot_size(n)) = seg;
    }
  };
  cb.power = [&](const CVector& v) {
    double p = 0.0;
    for (int n = 1; n <= prob.layout().n_slots(); ++n) {
      p = std::max(p, prob.slot_power(
                          v.segment(prob.layout().slot_offset(n),
                                    prob.layout().slot_size(n)),
                          n));
    }
    return p;
  };

  result.iterations =
      ascend(x, f, opt, step, cb, 0, opt.record_trace ? &result.trace : nullptr);
  result.slot_iterations = {result.iterations};

  // Coordinate-restricted refinement: the full-space gradient stalls at
  // the min-tie kinks well before the per-slot coordinates are exhausted,
  // so sweep the slots with the same guarded ascent on f. Sweeping stops
  // once a full sweep gains less than the stopping fraction of the main
  // phase's average per-iteration gain.
  OptimizerConfig sweep_opt = opt;
  sweep_opt.max_iterations = 10;
  double first_sweep_gain = -1.0;
  int total_sweep_commits = 0;
  bool progressed = true;
  while (progressed && total_sweep_commits < opt.max_iterations / 10) {
    progressed = false;
    const double f_before_sweep = f;
    for (int n = 1; n <= prob.layout().n_slots(); ++n) {
      const int off = prob.layout().slot_offset(n);
      const int size = prob.layout().slot_size(n);
      CVector xs = x.segment(off, size);
      CVector candidate = x;
      double f_slotwise = f;

      AscentCallbacks scb;
      scb.objective = [&, off, size](const CVector& v) {
        candidate.segment(off, size) = v;
        return prob.objective_joint(candidate);
      };
      scb.gradient = [&, off, size](const CVector& v) -> CVector {
        candidate.segment(off, size) = v;
        return prob.modified_gradient_joint(candidate, gopts).segment(off, size);
      };
      scb.rescues.push_back([&, off, size](const CVector& v) -> CVector {
        candidate.segment(off, size) = v;
        return prob.modified_gradient_joint(candidate, fallback_options(opt))
            .segment(off, size);
      });
      scb.rescues.push_back([&](const CVector& v) {
        return prob.modified_gradient_slot(v, n, fallback_options(opt));
      });
      scb.rescues.push_back([&](const CVector& v) {
        return prob.power_descent_direction(v, n, opt.fd_step);
      });
      scb.rescale = [&](CVector& v) { prob.rescale_slot(v, n); };
      scb.power = [&](const CVector& v) { return prob.slot_power(v, n); };

      const int commits =
          ascend(xs, f_slotwise, sweep_opt, 4.0 * step, scb, result.iterations,
                 opt.record_trace ? &result.trace : nullptr);
      if (commits > 0) {
        x.segment(off, size) = xs;
        f = f_slotwise;
        result.iterations += commits;
        total_sweep_commits += commits;
        progressed = true;
      }
    }
    const double sweep_gain = f - f_before_sweep;
    if (first_sweep_gain < 0.0) {
      first_sweep_gain = sweep_gain;
    } else if (sweep_gain < opt.improvement_tol * first_sweep_gain) {
      break;
    }
  }

  result.objective = f;
  result.beamformers = prob.to_beamformers(x, "pzf-joint");
  return result;
}

OptimizeResult optimize_separate(const CMatrix& h, const NetworkConfig& config,
                                 const OptimizerConfig& opt) {
  PzfProblem prob(h, config);
  const double step = opt.step_size > 0.0 ? opt.step_size : 0.03;
  const auto gopts = gradient_options(opt);

  OptimizeResult result;
  // Full point, every slot at its zero-forcing start; slots are then
  // optimized in place one at a time.
  CVector x = prob.zf_start();
  double network_f = prob.objective_joint(x);
  const double network_f0 = network_f;
  double f_total = 0.0;
  double f0_total = 0.0;
  int iter_base = 0;
  for (int n = 1; n <= prob.layout().n_slots(); ++n) {
    const int off = prob.layout().slot_offset(n);
    const int size = prob.layout().slot_size(n);
    CVector xs = x.segment(off, size);
    double f = prob.objective_slot(xs, n);
    f0_total += f;
    result.slot_initial_objectives.push_back(f);

    AscentCallbacks cb;
    cb.gradient = [&](const CVector& v) {
      return prob.modified_gradient_slot(v, n, gopts);
    };
    cb.rescues.push_back([&](const CVector& v) {
      return prob.modified_gradient_slot(v, n, fallback_options(opt));
    });
    cb.rescues.push_back([&](const CVector& v) {
      return prob.power_descent_direction(v, n, opt.fd_step);
    });
    cb.objective = [&](const CVector& v) { return prob.objective_slot(v, n); };
    cb.rescale = [&](CVector& v) { prob.rescale_slot(v, n); };
    cb.power = [&](const CVector& v) { return prob.slot_power(v, n); };
    // Per-slot sums can trade a binding receiver's rate away; veto any
    // step that would push the network min-rate objective below its
    // current value, so the zero-forcing start is never beaten by its own
    // refinement.
    CVector candidate = x;
    double pending_network = network_f;
    cb.accept = [&, off, size](const CVector& xs_cand) {
      candidate.segment(off, size) = xs_cand;
      const double network_try = prob.objective_joint(candidate);
      if (network_try < network_f) return false;
      pending_network = network_try;
      return true;
    };
    cb.on_commit = [&](const CVector&) { network_f = pending_network; };

    const int iters = ascend(xs, f, opt, step, cb, iter_base,
                             opt.record_trace ? &result.trace : nullptr, f_total);
    result.slot_iterations.push_back(iters);
    iter_base += iters;
    x.segment(off, size) = xs;
    result.slot_objectives.push_back(f);
    f_total += f;
  }
  result.iterations = iter_base;

  // When every reallocation step was vetoed (the binding slot's sum
  // gradient only trades tied rates around) the network objective is
  // still exactly at its start; take one guarded network-ascent step on a
  // slot's coordinates so the run strictly improves on zero-forcing.
  if (network_f <= network_f0 + 1e-12) {
    OptimizerConfig polish = opt;
    polish.max_iterations = 1;
    polish.record_trace = false;
    for (int n = 1; n <= prob.layout().n_slots() && network_f <= network_f0 + 1e-12;
         ++n) {
      const int off = prob.layout().slot_offset(n);
      const int size = prob.layout().slot_size(n);
      CVector xs = x.segment(off, size);
      CVector candidate = x;
      double f = network_f;

      AscentCallbacks cb;
      const auto network_at = [&, off, size](const CVector& v) {
        candidate.segment(off, size) = v;
        return prob.objective_joint(candidate);
      };
      cb.objective = network_at;
      cb.gradient = [&, off, size](const CVector& v) -> CVector {
        candidate.segment(off, size) = v;
        return prob.modified_gradient_joint(candidate, gopts).segment(off, size);
      };
      cb.rescues.push_back([&, off, size](const CVector& v) -> CVector {
        candidate.segment(off, size) = v;
        return prob.modified_gradient_joint(candidate, fallback_options(opt))
            .segment(off, size);
      });
      cb.rescues.push_back([&](const CVector& v) {
        return prob.modified_gradient_slot(v, n, fallback_options(opt));
      });
      cb.rescues.push_back([&](const CVector& v) {
        return prob.power_descent_direction(v, n, opt.fd_step);
      });
      cb.rescale = [&](CVector& v) { prob.rescale_slot(v, n); };
      cb.power = [&](const CVector& v) { return prob.slot_power(v, n); };
      // never trade the slot's own sum below its zero-forcing floor
      const double slot_floor = result.slot_initial_objectives[n - 1];
      cb.accept = [&, n, slot_floor](const CVector& v) {
        return prob.objective_slot(v, n) >= slot_floor;
      };

      if (ascend(xs, f, polish, step, cb, 0, nullptr) > 0) {
        x.segment(off, size) = xs;
        network_f = f;
      }
    }
  }

  result.initial_objective = f0_total;
  result.objective = 0.0;
  for (int n = 1; n <= prob.layout().n_slots(); ++n) {
    const double f_slot = prob.objective_slot(
        x.segment(prob.layout().slot_offset(n), prob.layout().slot_size(n)), n);
    result.slot_objectives[n - 1] = f_slot;
    result.objective += f_slot;
  }
  result.beamformers = prob.to_beamformers(x, "pzf-separate");
  return result;
}

namespace {

/// Per-slot machinery for the M = N-1 case: the zero-pattern constraints
/// [H^T G H]_{ij} = 0 are linear in the beamformer entries, so the last
/// z = (N-n-1)N row-major entries r of G are solved from the first
/// M^2 - z free entries y.
class ReducedSlot {
 public:
  ReducedSlot(const CMatrix& h, const ZeroPattern& pattern,
              const DetectionSchedule& schedule,
              const std::vector<double>& powers, double relay_budget, int n)
      : h_(h),
        schedule_(schedule),
        powers_(powers),
        relay_budget_(relay_budget),
        slot_(n),
        m_(static_cast<int>(h.rows())),
        n_users_(static_cast<int>(h.cols())) {
    const auto& zeros = pattern.slot_zeros(n);
    z_ = static_cast<int>(zeros.size());
    y_dim_ = m_ * m_ - z_;
    if (y_dim_ < 1) throw std::runtime_error("reduced mode: no free entries");
    CMatrix cy(z_, y_dim_), cr(z_, z_);
    for (int row = 0; row < z_; ++row) {
      const auto [i, j] = zeros[row];
      // [H^T G H]_{ij} = sum_{a,b} H(a,i) G(a,b) H(b,j)
      for (int a = 0; a < m_; ++a) {
        for (int b = 0; b < m_; ++b) {
          const int col = a * m_ + b;
          const Complex coeff = h(a, i - 1) * h(b, j - 1);
          if (col < y_dim_) {
            cy(row, col) = coeff;
          } else {
            cr(row, col - y_dim_) = coeff;
          }
        }
      }
    }
    cy_ = std::move(cy);
    if (z_ > 0) {
      lu_.compute(cr);
      if (!lu_.isInvertible()) {
        throw std::runtime_error(
            "reduced mode: singular constraint system for this channel");
      }
    }
    CMatrix ps = CMatrix::Zero(n_users_, n_users_);
    for (int i = 0; i < n_users_; ++i) ps(i, i) = powers_[i];
    q_ = h * ps * h.adjoint() + CMatrix::Identity(m_, m_);
    g_buf_.resize(m_, m_);
    ht_g_.resize(n_users_, m_);
  }

  int y_dim() const { return y_dim_; }

  /// G from the free entries; dependent entries solve the zero constraints.
  void build(const CVector& y) const {
    CVector g_vec(m_ * m_);
    g_vec.head(y_dim_) = y;
    if (z_ > 0) {
      g_vec.tail(z_) = -lu_.solve(cy_ * y);
    }
    for (int a = 0; a < m_; ++a) {
      for (int b = 0; b < m_; ++b) {
        g_buf_(a, b) = g_vec(a * m_ + b);
      }
    }
  }

  double power(const CVector& y) const {
    build(y);
    return (g_buf_ * q_ * g_buf_.adjoint()).trace().real();
  }

  double objective(const CVector& y) const {
    build(y);
    ht_g_.noalias() = h_.transpose() * g_buf_;
    double f = 0.0;
    for (int k = 1; k <= n_users_; ++k) {
      const int i = schedule_.target(k, slot_);
      const double num =
          powers_[i - 1] * std::norm((ht_g_.row(k - 1) * h_.col(i - 1)).value());
      const double den = ht_g_.row(k - 1).squaredNorm() + 1.0;
      f += std::log2(1.0 + num / den);
    }
    return f;
  }

  CVector modified_gradient(const CVector& y, const GradientOptions& opts) const {
    const double f0 = objective(y);
    CVector d(y_dim_);
    CVector probe(y_dim_);
    for (int l = 0; l < y_dim_; ++l) {
      const double eps = opts.fd_step * std::max(1.0, std::abs(y(l)));
      double parts[2];
      for (int c = 0; c < 2; ++c) {
        probe = y;
        probe(l) += (c == 0) ? Complex(eps, 0.0) : Complex(0.0, eps);
        if (!opts.unit_scaling) {
          double alpha = power(probe) / relay_budget_;
          if (opts.clamp_scaling) alpha = std::max(alpha, 1.0);
          probe /= alpha;
        }
        parts[c] = (objective(probe) - f0) / eps;
      }
      d(l) = Complex(parts[0], parts[1]);
    }
    return d;
  }

  void rescale(CVector& y) const {
    const double p = power(y);
    if (!(p > 0.0)) throw std::runtime_error("reduced mode: zero-power iterate");
    y *= std::sqrt(relay_budget_ / p);
  }

  CMatrix beamformer(const CVector& y) const {
    build(y);
    return g_buf_;
  }

 private:
  const CMatrix& h_;
  const DetectionSchedule& schedule_;
  const std::vector<double>& powers_;
  double relay_budget_;
  int slot_;
  int m_;
  int n_users_;
  int z_ = 0;
  int y_dim_ = 0;
  CMatrix cy_;
  Eigen::FullPivLU<CMatrix> lu_;
  CMatrix q_;
  mutable CMatrix g_buf_;
  mutable CMatrix ht_g_;
};

}  // namespace

OptimizeResult optimize_reduced(const CMatrix& h, const NetworkConfig& config,
                                const OptimizerConfig& opt) {
  const int n_users = config.n_users();
  const int m = config.m_antennas();
  if (m != n_users - 1) {
    throw std::invalid_argument("optimize_reduced requires M = N-1");
  }
  if (h.rows() != m || h.cols() != n_users) {
    throw std::invalid_argument("channel does not match configuration");
  }
  const auto schedule = DetectionSchedule::from_config(config);
  const auto pattern = ZeroPattern::from_schedule(schedule);
  const double step = opt.step_size > 0.0 ? opt.step_size : 0.03;
  const auto gopts = gradient_options(opt);

  // Starting point: the free entries of the power-normalized matched
  // filter; the dependent entries are then re-solved from the constraints,
  // which keeps the start channel-adapted and deterministic.
  const CMatrix g_mf = mf_beamformer(h, config.user_powers(),
                                     config.relay_power_budget(),
                                     schedule_matrix(schedule, 1));

  OptimizeResult result;
  result.beamformers.design = "pzf-reduced";
  double f_total = 0.0;
  double f0_total = 0.0;
  int iter_base = 0;
  for (int n = 1; n <= config.n_bc_slots(); ++n) {
    ReducedSlot slot(h, pattern, schedule, config.user_powers(),
                     config.relay_power_budget(), n);
    CVector y(slot.y_dim());
    for (int l = 0; l < slot.y_dim(); ++l) {
      y(l) = g_mf(l / m, l % m);
    }
    slot.rescale(y);
    double f = slot.objective(y);
    f0_total += f;
    result.slot_initial_objectives.push_back(f);

    AscentCallbacks cb;
    cb.gradient = [&](const CVector& v) { return slot.modified_gradient(v, gopts); };
    cb.rescues.push_back([&](const CVector& v) {
      return slot.modified_gradient(v, fallback_options(opt));
    });
    cb.objective = [&](const CVector& v) { return slot.objective(v); };
    cb.rescale = [&](CVector& v) { slot.rescale(v); };
    cb.power = [&](const CVector& v) { return slot.power(v); };

    const int iters = ascend(y, f, opt, step, cb, iter_base,
                             opt.record_trace ? &result.trace : nullptr);
    result.slot_iterations.push_back(iters);
    result.slot_objectives.push_back(f);
    iter_base += iters;
    f_total += f;
    result.beamformers.slots.push_back(slot.beamformer(y));
  }
  result.iterations = iter_base;
  result.initial_objective = f0_total;
  result.objective = f_total;
  return result;
}

}  // namespace mwrn
