#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qsm/state.hpp"

namespace qsm {

/// psi(0) = (a + ib) / ‖a + ib‖.
struct InitialStateParams {
  RVector a;
  RVector b;
};

WaveState initial_state(const InitialStateParams& p);

/// One row per input token.
struct EmbeddingTable {
  RMatrix vectors;

  Eigen::Index vocab() const noexcept { return vectors.rows(); }
  Eigen::Index dim() const noexcept { return vectors.cols(); }
  RVector row(long token) const;
};

/// Feedforward net: affine-tanh-...-affine, final layer linear.
/// weights[l] maps layer l's input (cols) to its output (rows).
struct MlpParams {
  std::vector<RMatrix> weights;
  std::vector<RVector> biases;

  std::size_t layers() const noexcept { return weights.size(); }
  Eigen::Index input_width() const { return weights.front().cols(); }
  Eigen::Index output_width() const { return weights.back().rows(); }
  void validate() const;
};

/// activations[0] is the input; activations[l + 1] is the output of layer l
/// (after tanh for hidden layers).
struct MlpCache {
  std::vector<RVector> activations;
};

RVector mlp_forward(const MlpParams& mlp, const RVector& x);
RVector mlp_forward(const MlpParams& mlp, const RVector& x, MlpCache& cache);

/// Accumulates parameter gradients into `grad` (same shapes as `mlp`) and
/// returns the gradient with respect to the input.
RVector mlp_backward(const MlpParams& mlp, const MlpCache& cache, const RVector& grad_out, MlpParams& grad);

MlpParams zeros_like(const MlpParams& mlp);

/// Rank r implied by an output width 2Nr + N; throws Configuration otherwise.
Eigen::Index interaction_rank(const MlpParams& mlp, Eigen::Index dim);

/// g_theta input: [embedding; Re c_I; Im c_I].
RVector interaction_input(const RVector& embed_vec, const WaveState& state);

/// Unpacks the generator output. Phi(j, a) is read from entries 2(aN + j)
/// (real) and 2(aN + j) + 1 (imaginary); delta_j from entry 2Nr + j.
InteractionFactors factors_from_output(const RVector& out, Eigen::Index dim, Eigen::Index rank);

/// Inverse layout of factors_from_output, used to route gradients back into
/// the generator output.
RVector output_from_factor_gradients(const CMatrix& grad_phi, const RVector& grad_delta);

InteractionFactors generate_interaction(const MlpParams& mlp, const RVector& embed_vec, const WaveState& state);

struct ModelDims {
  Eigen::Index n = 8;          // state dimension N
  Eigen::Index r = 2;          // interaction rank
  Eigen::Index d = 8;          // embedding width
  Eigen::Index vocab_in = 16;  // input alphabet size
  Eigen::Index vocab_out = 16; // output vocabulary V (>= N)
  std::vector<Eigen::Index> hidden;  // empty -> two layers of width 4N
  double dt = 1.0;

  void validate() const;
};

struct FullModelParams {
  InitialStateParams init;
  FreeHamiltonian h0;
  EmbeddingTable embed;
  MlpParams mlp;
  CMatrix meas_raw;  // N x V, projected onto MM^dagger = I at use time
  double dt = 1.0;

  Eigen::Index dim() const noexcept { return h0.dim(); }
  Eigen::Index rank() const { return interaction_rank(mlp, dim()); }
  Eigen::Index vocab_out() const noexcept { return meas_raw.cols(); }
  ModelDims dims() const;
  void validate() const;
};

/// Seeded initialization: tanh MLP with uniform(±1/sqrt(fan_in)) weights and
/// the final layer scaled by 0.01, lambda linearly spaced in [-pi/2, pi/2],
/// Gaussian (a, b), embeddings and raw measurement.
FullModelParams init_full_model(const ModelDims& dims, std::uint64_t seed);

/// Flat real parameter vector. Order: a, b, lambda, embedding (row-major),
/// for each MLP layer its weight (row-major) then bias, then meas_raw
/// (row-major, real then imaginary per entry).
std::vector<double> pack(const FullModelParams& model);
void unpack(std::span<const double> flat, FullModelParams& model);
std::size_t parameter_count(const FullModelParams& model);

/// Zero-valued parameters of the same shapes.
FullModelParams zeros_like(const FullModelParams& model);

}  // namespace qsm
