#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qsm/readout.hpp"
#include "qsm/state.hpp"

namespace qsm {

/// Token layout of the D_N task: context tokens a_i = i, query tokens
/// b_j = N + j, filler sigma = 2N.
inline long context_token(long i) noexcept { return i; }
inline long query_token(Eigen::Index n, long j) noexcept { return static_cast<long>(n) + j; }
inline long filler_token(Eigen::Index n) noexcept { return 2 * static_cast<long>(n); }
inline Eigen::Index task_alphabet_size(Eigen::Index n) noexcept { return 2 * n + 1; }

/// (a_i, sigma^filler, b_j).
std::vector<long> task_sequence(Eigen::Index n, long i, long j, long filler_length);

struct TaskInstance {
  Eigen::Index n = 0;
  std::vector<WaveState> context_states;   // psi_i
  std::vector<CMatrix> query_unitaries;    // W_j
  MeasurementMatrix measurement;           // N x V, V >= N^2 for the IC construction
  long filler_length = 0;                  // T - 2
  std::uint64_t seed = 0;

  Eigen::Index vocab() const noexcept { return measurement.outcomes(); }

  /// W_j psi_i.
  CVector final_state(long i, long j) const;

  /// Shape checks only; the rank certificates are computed separately.
  void validate() const;
};

/// N^2 x N^2 real matrix whose row i*N + j is vec(W_j |psi_i><psi_i| W_j^dagger).
RMatrix density_stack(const std::vector<WaveState>& states, const std::vector<CMatrix>& unitaries);

struct PositionCertificate {
  Eigen::Index rank = 0;
  Eigen::Index required = 0;
  bool ok() const noexcept { return rank == required; }
};

/// Rank of density_stack against the required N^2.
PositionCertificate check_general_position(const std::vector<WaveState>& states, const std::vector<CMatrix>& unitaries);

struct GeneralPositionSample {
  std::vector<WaveState> states;
  std::vector<CMatrix> unitaries;
  Eigen::Index certificate_rank = 0;
  int resamples = 0;
};

/// Gaussian context states and Haar query unitaries, redrawn (bounded) until
/// the certificate has rank N^2.
GeneralPositionSample sample_general_position(Eigen::Index n, std::uint64_t seed);

/// Rank of the N^2 (or V) stacked vec(m_k m_k^dagger).
Eigen::Index measurement_rank(const MeasurementMatrix& meas);

/// Informationally complete measurement with V = N^2: the projector frame
/// {e_j, (e_j + e_k)/sqrt2, (e_j + i e_k)/sqrt2} mapped through S^{-1/2},
/// S = sum v v^dagger. The seed only drives perturbed retries.
MeasurementMatrix build_ic_measurement(Eigen::Index n, std::uint64_t seed = 0);

/// The explicit N = 2 configuration: W_0 = I, W_1 the Hadamard matrix,
/// psi_0 = e_0, psi_1 = (1, i)/sqrt2.
struct N2Reference {
  std::vector<WaveState> states;
  std::vector<CMatrix> unitaries;
  std::array<CMatrix, 4> rho;   // lexicographic (i, j): rho00, rho01, rho10, rho11
  RMatrix coordinates;          // rows (alpha, u, v, gamma) of each rho, same order
  double det = 0.0;
};

N2Reference n2_reference_config();

/// [[alpha, u + iv], [u - iv, gamma]] -> (alpha, u, v, gamma).
RVector n2_coordinates(const CMatrix& rho);

/// Sampled general-position instance with an IC measurement.
TaskInstance make_task(Eigen::Index n, std::uint64_t seed, long filler_length = 0);

/// The N = 2 reference configuration with the IC measurement.
TaskInstance reference_task(long filler_length = 0);

struct TargetTable {
  RMatrix pstar;    // N^2 x V, row i*N + j
  RMatrix lstar;    // entrywise log
  RMatrix logodds;  // N^2 x (V - 1), log p_k - log p_0 for k >= 1
  double min_entry = 0.0;
  bool near_orthogonal = false;  // some entry below 1e-14
  bool floored = false;          // a log hit the probability floor
};

TargetTable target_table(const TaskInstance& task);

struct SeparationRanks {
  Eigen::Index rank_p = 0;
  Eigen::Index rank_l = 0;
  Eigen::Index rank_logodds = 0;
  bool lstar_full_rank = false;  // observation only
};

SeparationRanks check_separation_ranks(const TargetTable& table, Eigen::Index n);

/// Complex unitary sequence model with fixed per-token unitaries.
struct Cusm {
  WaveState psi0;
  std::vector<CMatrix> unitaries;  // indexed by token id
  MeasurementMatrix measurement;
};

/// psi0 = e_0; a_i -> V_i with V_i e_0 = psi_i; b_j -> W_j; sigma -> I.
Cusm build_exact_cusm(const TaskInstance& task);

/// Unitary U with U src = dst, via completion of each vector to a basis.
CMatrix basis_change_unitary(const WaveState& src, const WaveState& dst);

/// Born distribution after each token (T entries).
std::vector<RVector> cusm_forward(const Cusm& cusm, const std::vector<long>& tokens);

/// Real orthogonal sequence model with an affine-softmax readout.
struct RosmParams {
  Eigen::Index d = 0;
  RVector h0;                      // unit vector
  std::vector<RMatrix> generators; // skew-symmetric, one per input token
  RMatrix w;                       // V x d, row k is w_k
  RVector bias;                    // V

  Eigen::Index vocab_out() const noexcept { return w.rows(); }
  RMatrix transition(long token) const;
  void validate() const;
};

/// Q = (I + A)^{-1} (I - A) for skew-symmetric A; orthogonal.
RMatrix real_cayley(const RMatrix& skew);

RosmParams random_rosm(Eigen::Index d, Eigen::Index vocab_in, Eigen::Index vocab_out, std::uint64_t seed,
                       double generator_scale = 1.0);

RVector log_softmax(const RVector& logits);

/// Softmax distribution after each token (T entries).
std::vector<RVector> rosm_forward(const RosmParams& rosm, const std::vector<long>& tokens);

/// Final-step log probabilities for every task sequence, N^2 x V.
RMatrix rosm_log_prob_matrix(const RosmParams& rosm, const TaskInstance& task);

struct SoftmaxAudit {
  Eigen::Index rank_lbar = 0;
  Eigen::Index bound = 0;  // d + 2
  bool satisfied = false;
};

SoftmaxAudit softmax_rank_audit(const RosmParams& rosm, const TaskInstance& task);

}  // namespace qsm
