#pragma once

#include <map>
#include <vector>

#include "qsm/hamgen.hpp"
#include "qsm/state.hpp"

namespace qsm {

inline constexpr double kGramWarnCondition = 1e8;
inline constexpr double kGramFailCondition = 1e12;
inline constexpr long kSafeguardInterval = 64;
inline constexpr double kSafeguardTolerance = 1e-12;

struct CayleyStepReport {
  double gram_condition = 1.0;  // estimate of cond_1(G), G the r x r capacitance matrix
  double residual = 0.0;        // ‖A psi' - b‖
  double renorm_delta = 0.0;    // |‖psi'‖ - 1| before any safeguard
  bool warning = false;         // gram_condition above kGramWarnCondition
};

class IllConditionedStepError : public Error {
 public:
  IllConditionedStepError(const std::string& what, CayleyStepReport report, long step = -1)
      : Error(ErrorKind::IllConditionedStep, what), report_(report), step_(step) {}

  const CayleyStepReport& report() const noexcept { return report_; }
  long step() const noexcept { return step_; }

 private:
  CayleyStepReport report_;
  long step_;
};

/// Phi~_ja = exp(i lambda_j time) Phi_ja; delta unchanged.
InteractionFactors interaction_picture_factors(const InteractionFactors& f, const FreeHamiltonian& h0, double time);

/// Continuous time at which the phases of step t (t -> t + 1) are evaluated
/// by the trajectory drivers: the step midpoint (t + 1/2) dt. Evaluating at
/// the left endpoint t dt would make the integrator first order.
inline double step_phase_time(long t, double dt) noexcept { return (static_cast<double>(t) + 0.5) * dt; }

/// Factors for step t: time = step_phase_time(t, dt), time_index = t.
InteractionFactors interaction_picture_factors(const InteractionFactors& f, const FreeHamiltonian& h0, long t,
                                               double dt);

/// (I + K) psi' = (I - K) psi with K = (i dt/2) H, solved densely (LU).
/// Throws Shape if H is not Hermitian within 1e-10.
WaveState cayley_step_dense(const CMatrix& h, const WaveState& psi, double dt);

/// W = (I + K)^{-1} (I - K), the dense Cayley unitary.
CMatrix cayley_unitary(const CMatrix& h, double dt);

/// Reusable buffers for the Woodbury path.
struct WoodburyWorkspace {
  CVector dinv;    // 1 / (1 + beta delta_j)
  CVector y;       // D^{-1} b
  CVector z;       // Phi^dagger y, then G^{-1} Phi^dagger y
  CMatrix dphi;    // D^{-1} Phi
  CMatrix gram;    // G = I + beta Phi^dagger D^{-1} Phi
  CVector tmp;
  CVector b;        // right-hand side of the step
  CVector x;        // solution of the step
  CVector applied;  // A x, for the residual
  CVector small;    // r-vector scratch for apply_shifted
  Eigen::PartialPivLU<CMatrix> lu;
};

/// Solves (I + beta diag(delta) + beta Phi Phi^dagger) x = b in O(N r^2 + r^3)
/// via the Woodbury identity. Returns the condition estimate of G.
double woodbury_solve(const CMatrix& phi, const RVector& delta, Complex beta, const CVector& b, CVector& x,
                      WoodburyWorkspace& ws);

/// Applies (I + beta diag(delta) + beta Phi Phi^dagger) to v in O(N r).
CVector apply_shifted(const CMatrix& phi, const RVector& delta, Complex beta, const CVector& v);

/// Allocation-free form; `small` is r-vector scratch.
void apply_shifted(const CMatrix& phi, const RVector& delta, Complex beta, const CVector& v, CVector& out,
                   CVector& small);

/// Cayley step for H = Phi Phi^dagger + diag(delta), factors already in the
/// interaction picture. Throws IllConditionedStepError when cond(G) exceeds
/// kGramFailCondition or the solve residual is not small.
std::pair<WaveState, CayleyStepReport> cayley_step_woodbury(const InteractionFactors& f, const WaveState& psi,
                                                            double dt);
std::pair<WaveState, CayleyStepReport> cayley_step_woodbury(const InteractionFactors& f, const WaveState& psi,
                                                            double dt, WoodburyWorkspace& ws);

/// Same step on raw amplitudes, overwriting c. Allocation free once ws has
/// been sized, for long chained runs.
CayleyStepReport cayley_step_woodbury_inplace(const InteractionFactors& f, CVector& c, double dt,
                                              WoodburyWorkspace& ws);

/// Reverse-mode sensitivities of one Woodbury Cayley step psi -> psi'.
/// Gradients use the convention g = dL/dRe + i dL/dIm.
struct CayleyStepAdjoint {
  CVector grad_psi;    // with respect to the pre-step state
  CMatrix grad_phi;    // with respect to the (interaction-picture) Phi
  RVector grad_delta;
};

/// Given g_{psi'}, solves the adjoint system (I - K) mu = g_{psi'} and
/// returns g_psi = (I + K) mu together with the factor gradients.
/// The state part is an isometry: ‖g_psi‖ = ‖g_{psi'}‖.
CayleyStepAdjoint cayley_step_adjoint(const InteractionFactors& f, const CVector& psi, const CVector& psi_next,
                                      double dt, const CVector& grad_next, WoodburyWorkspace& ws);

/// Divides by the norm when step % kSafeguardInterval == 0 and the drift
/// exceeds kSafeguardTolerance. Returns whether it fired.
bool safeguard_renormalize(CVector& c, long step);

/// trajectory[0] = psi0, trajectory[t] = W_{x_t} trajectory[t - 1].
std::vector<WaveState> evolve_fixed_unitaries(const std::map<long, CMatrix>& unitaries, const WaveState& psi0,
                                              const std::vector<long>& tokens);
std::vector<WaveState> evolve_fixed_unitaries(const std::vector<CMatrix>& unitaries, const WaveState& psi0,
                                              const std::vector<long>& tokens);

struct FullTrajectory {
  std::vector<WaveState> states;                // interaction picture, T + 1 entries
  std::vector<InteractionFactors> factors;      // g_theta output per step (Schroedinger phases)
  std::vector<InteractionFactors> ip_factors;   // after the interaction-picture transform
  std::vector<CayleyStepReport> reports;
  std::vector<double> phase_times;              // step_phase_time(t, dt)
  long safeguard_events = 0;

  /// Schroedinger-picture state at boundary t (time t dt).
  WaveState schrodinger(std::size_t t, const FreeHamiltonian& h0, double dt) const;
  std::size_t warnings() const;
};

/// The complete forward pass of the learned model: g_theta reads the
/// embedding and the interaction-picture state, its factors are rotated into
/// the interaction picture and a Woodbury Cayley step advances the state.
FullTrajectory evolve_full_model(const FullModelParams& model, const std::vector<long>& tokens);

}  // namespace qsm
