#pragma once

#include <string>
#include <vector>

#include "mwrn/baselines.hpp"
#include "mwrn/config.hpp"
#include "mwrn/protocol.hpp"

namespace mwrn {

/// Row-major ordering of the free (non-zeroed) entries of the equivalent
/// channel matrices A^{(n)}. x^{(n)} holds slot n's free entries, x is the
/// concatenation over all slots. For unicasting the sizes are
/// U_n = (n+1)N and W = (N+2)N(N-1)/2; for hybrid schedules they follow
/// the pattern's zero counts.
class FreeLayout {
 public:
  static FreeLayout from_pattern(const ZeroPattern& pattern);

  int n_users() const { return n_users_; }
  int n_slots() const { return static_cast<int>(positions_.size()); }
  int slot_size(int n) const { return static_cast<int>(positions_[n - 1].size()); }
  int slot_offset(int n) const { return offsets_[n - 1]; }
  int total_size() const { return total_; }
  /// Free positions (i, j) of slot n in x-vector order (1-based).
  const std::vector<std::pair<int, int>>& slot_positions(int n) const {
    return positions_[n - 1];
  }

 private:
  int n_users_ = 0;
  int total_ = 0;
  std::vector<int> offsets_;
  std::vector<std::vector<std::pair<int, int>>> positions_;
};

/// Concatenate the free entries of all A^{(n)} into x. The matrices must
/// already be zero at the pattern positions.
CVector pack(const std::vector<CMatrix>& a_matrices, const FreeLayout& layout);
/// Rebuild the A^{(n)} matrices from x, writing exact zeros at the pattern
/// positions. Inverse of pack.
std::vector<CMatrix> unpack(const CVector& x, const FreeLayout& layout);

CVector pack_slot(const CMatrix& a, const FreeLayout& layout, int n);
CMatrix unpack_slot(const CVector& x_slot, const FreeLayout& layout, int n);

/// Beamformer realizing a prescribed equivalent channel: G = (H^T)^+ A H^+,
/// so that H^T G H = A exactly when M >= N and H has full column rank.
CMatrix a_to_g(const CMatrix& a, const CMatrix& h);

/// Scale the equivalent channel (or beamformer) by the positive scalar that
/// makes the relay power meet the budget exactly. Idempotent.
CMatrix scale_equivalent_to_power(const CMatrix& a, const CMatrix& h,
                                  const NetworkConfig& config);
CMatrix scale_beamformer_to_power(const CMatrix& g, const CMatrix& h,
                                  const NetworkConfig& config);

struct OptimizerConfig {
  /// Ascent step size; 0 selects the per-mode default (0.01 joint,
  /// 0.03 separate and reduced).
  double step_size = 0.0;
  /// Relative probe step for the finite differences: eps = fd_step * max(1, |x_m|).
  double fd_step = 1e-5;
  /// Stop once the per-iteration gain falls below this fraction of the
  /// first iteration's gain.
  double improvement_tol = 0.05;
  int max_iterations = 1000;
  /// If > 0, stop on ||D(f,x)|| < gradient_tolerance instead of the
  /// improvement rule.
  double gradient_tolerance = 0.0;
  /// Clamp the power normalization factors at >= 1 (experimentation knob;
  /// the unclamped definition is the default).
  bool clamp_scaling = false;
  bool record_trace = false;
};

struct GradientOptions {
  double fd_step = 1e-5;
  /// Force the power normalization factors to 1, turning the modified
  /// gradient into a plain one-sided finite-difference gradient.
  bool unit_scaling = false;
  bool clamp_scaling = false;
};

struct TracePoint {
  int iteration;
  double objective;
  double power;  // max over slots of the slot relay power
  double gradient_norm;
};

struct OptimizeResult {
  BeamformerSet beamformers;
  double objective = 0.0;          // final value of the optimized objective
  double initial_objective = 0.0;  // value at the initialization point
  int iterations = 0;              // committed iterations, summed over slots
  std::vector<int> slot_iterations;
  // Separate/reduced modes: per-slot objective at the start and end.
  std::vector<double> slot_initial_objectives;
  std::vector<double> slot_objectives;
  std::vector<TracePoint> trace;
};

/// Per-channel optimization problem over the free entries of the
/// equivalent channels (M >= N). Precomputes the pseudoinverse machinery
/// so objective and power evaluations stay cheap inside the ascent loop.
/// Instances hold scratch buffers and are not thread-safe; build one per
/// run (they are cheap).
class PzfProblem {
 public:
  PzfProblem(const CMatrix& h, const NetworkConfig& config);

  const FreeLayout& layout() const { return layout_; }
  const DetectionSchedule& schedule() const { return schedule_; }

  /// Joint objective f(x): sum over sources of the worst-case
  /// interference-free rate across receivers.
  double objective_joint(const CVector& x) const;
  /// Per-slot objective: the sum of the slot's decode-event rates.
  double objective_slot(const CVector& x_slot, int n) const;
  /// Relay power phi(x^{(n)}) spent by slot n's equivalent channel.
  double slot_power(const CVector& x_slot, int n) const;

  CVector modified_gradient_joint(const CVector& x,
                                  const GradientOptions& opts = {}) const;
  CVector modified_gradient_slot(const CVector& x_slot, int n,
                                 const GradientOptions& opts = {}) const;

  /// Finite-difference gradient of the slot relay power.
  CVector power_gradient_slot(const CVector& x_slot, int n,
                              double fd_step = 1e-5) const;

  /// Power descent restricted to the non-target coordinates: their rate
  /// impact is second order (they only enter the squared row norms) while
  /// their power impact is first order, so stepping this way and rescaling
  /// back to the power shell lifts every decode gain at once. This is the
  /// escape from the tie kinks of the max-min objective, where any
  /// reallocation between targets lowers some tied rate.
  CVector power_descent_direction(const CVector& x_slot, int n,
                                  double fd_step = 1e-5) const;

  /// Packed zero-forcing starting point: every A^{(n)} is the schedule's
  /// selection matrix scaled to meet the relay power budget exactly.
  CVector zf_start() const;
  CVector zf_start_slot(int n) const;

  /// Rescale slot n's subvector to power equality.
  void rescale_slot(CVector& x_slot, int n) const;

  CMatrix slot_equivalent(const CVector& x_slot, int n) const;
  BeamformerSet to_beamformers(const CVector& x, const std::string& tag) const;

 private:
  double rate_for_pair(const CMatrix& a, int k, int i, int n) const;

  CMatrix h_;
  int n_users_;
  int m_antennas_;
  double relay_budget_;
  std::vector<double> powers_;
  DetectionSchedule schedule_;
  ZeroPattern pattern_;
  FreeLayout layout_;
  CMatrix h_pinv_;      // H^+ (N x M)
  CMatrix power_core_;  // B = P_s + H^+ (H^+)^H
  CMatrix noise_core_;  // C = conj(H^+) (H^+)^T
  mutable CMatrix a_buf_;
  mutable CMatrix r_buf_;
  mutable CMatrix phi_t1_;
  mutable CMatrix phi_t2_;
};

// Spec-level free functions (thin wrappers over PzfProblem).
double objective(const CVector& x, const CMatrix& h, const NetworkConfig& config);
double objective_slot(const CVector& x_slot, int n, const CMatrix& h,
                      const NetworkConfig& config);
CVector modified_gradient(const CVector& x, const CMatrix& h,
                          const NetworkConfig& config,
                          const GradientOptions& opts = {});

/// Algorithm: modified gradient-ascent over all slots jointly, ZF start.
OptimizeResult optimize_joint(const CMatrix& h, const NetworkConfig& config,
                              const OptimizerConfig& opt = {});
/// Sequential per-slot ascent (slot 1 first), ZF start.
OptimizeResult optimize_separate(const CMatrix& h, const NetworkConfig& config,
                                 const OptimizerConfig& opt = {});
/// M = N-1 variant: ascent over the free beamformer entries y^{(n)}, the
/// dependent entries r^{(n)} solved from the zero-pattern constraints.
OptimizeResult optimize_reduced(const CMatrix& h, const NetworkConfig& config,
                                const OptimizerConfig& opt = {});

}  // namespace mwrn
