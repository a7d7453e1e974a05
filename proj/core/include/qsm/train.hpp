#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsm/dynamics.hpp"
#include "qsm/hamgen.hpp"
#include "qsm/readout.hpp"
#include "qsm/septask.hpp"

namespace qsm {

/// -sum_t log p_t[y_t] in nats. Targets < 0 are skipped. Probabilities below
/// kProbabilityFloor are clamped and reported through `floored`.
double nll_loss(const std::vector<RVector>& probs, const std::vector<long>& targets, bool* floored = nullptr);

/// Mean Shannon entropy of the P* rows (nats): the minimum achievable mean
/// cross-entropy on the task.
double entropy_floor(const TargetTable& table);

/// Loss target for one prediction step. Prediction t is read from the state
/// after token t. A token target contributes -log p[token]; a distribution
/// target q contributes the cross-entropy -sum_k q_k log p_k. A step with
/// neither contributes nothing.
struct StepTarget {
  long token = -1;
  RVector distribution;

  bool active() const noexcept { return token >= 0 || distribution.size() > 0; }
};

std::vector<StepTarget> token_targets(const std::vector<long>& targets);

/// Loss of the full model on one sequence.
double full_model_loss(const FullModelParams& model, const std::vector<long>& tokens,
                       const std::vector<StepTarget>& targets, bool* floored = nullptr);

/// Gradients with the shapes of FullModelParams. Complex parameters
/// (meas_raw) hold dL/dRe + i dL/dIm.
struct GradientBundle {
  FullModelParams grad;
  double loss = 0.0;
  bool floored = false;
  std::size_t condition_warnings = 0;
};

/// Reverse-mode pass: Born readout, adjoint Cayley solves, interaction-picture
/// phases, g_theta, embeddings, lambda, (a, b) and the raw measurement
/// through its QR projection. The safeguard renormalization is treated as
/// the identity.
GradientBundle backward_full_model(const FullModelParams& model, const std::vector<long>& tokens,
                                   const std::vector<StepTarget>& targets);
GradientBundle backward_full_model(const FullModelParams& model, const std::vector<long>& tokens,
                                   const std::vector<long>& targets);

/// Central differences of f at x, one coordinate at a time.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double step);

/// Central-difference gradient of full_model_loss for every scalar parameter.
/// step must lie in [1e-7, 1e-3].
GradientBundle finite_difference_grad(const FullModelParams& model, const std::vector<long>& tokens,
                                      const std::vector<StepTarget>& targets, double step);
GradientBundle finite_difference_grad(const FullModelParams& model, const std::vector<long>& tokens,
                                      const std::vector<long>& targets, double step);

/// Acceptance rule used by gradient checks: |a - f| <= max(rel * |f|, abs_floor).
bool gradient_close(double analytic, double numeric, double rel = 1e-5, double abs_floor = 1e-8);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::size_t size, AdamConfig config);

  /// One update with learning rate `lr` (the schedule is applied by the caller).
  void step(std::vector<double>& params, const std::vector<double>& grads, double lr);
  long steps() const noexcept { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

/// lr0 * (1 + cos(pi * epoch / total)) / 2.
double cosine_lr(double lr0, long epoch, long total);

/// Rescales g in place so that ‖g‖ <= max_norm. Returns the original norm.
double clip_gradient(std::vector<double>& g, double max_norm);

enum class ModelKind { CusmTrainable, CusmSoftmax, Rosm, Full };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct TrainConfig {
  ModelKind kind = ModelKind::CusmTrainable;
  long epochs = 5000;
  double early_stop_gap = 1e-4;
  double zero_gap = 1e-3;
  double clip_norm = 10.0;
  bool cosine = true;
  AdamConfig adam;
  long check_every = 250;        // epochs between embedded invariant checks
  double init_scale = 1.0;
  Eigen::Index model_dim = 0;    // CUSM dimension N' (0 -> task N)
  Eigen::Index rosm_d = 1;
  Eigen::Index full_rank = 1;    // r for the full model
  Eigen::Index full_embed = 4;   // d for the full model
  bool ablation = false;
};

struct AblationResult {
  double nll_born = 0.0;
  double nll_diagonal = 0.0;
  bool floored = false;
};

struct InvariantTally {
  long checks = 0;
  long failures = 0;
  std::vector<std::string> messages;

  void record(bool ok, const std::string& what);
  bool passed() const noexcept { return failures == 0; }
};

struct TrainReport {
  ModelKind kind = ModelKind::CusmTrainable;
  std::uint64_t seed = 0;
  std::uint64_t task_seed = 0;
  Eigen::Index task_n = 0;
  Eigen::Index model_dim = 0;
  std::vector<double> loss_trace;  // mean loss per epoch, nats
  double entropy_floor = 0.0;
  double final_loss = 0.0;
  double gap = 0.0;
  bool zero_gap = false;
  long epochs_run = 0;
  std::string stop_reason;  // "early-stop", "max-epochs" or "diverged"
  std::string diagnosis;
  double wall_clock_seconds = 0.0;
  std::size_t condition_warnings = 0;
  InvariantTally invariants;
  std::optional<SoftmaxAudit> audit;
  std::optional<AblationResult> ablation;
};

/// Trains one model per seed on the task, full batch over all N^2 sequences,
/// minimizing the mean cross-entropy against P*.
std::vector<TrainReport> train_on_task(const TaskInstance& task, const TrainConfig& config,
                                       const std::vector<std::uint64_t>& seeds);

struct TrainerGradientCheck {
  std::size_t coordinates = 0;
  std::size_t failures = 0;   // coordinates outside gradient_close
  double max_abs_error = 0.0;
};

/// Compares the analytic gradient of the training objective for config.kind,
/// at the seeded initialization, with central differences of that objective.
TrainerGradientCheck check_trainer_gradient(const TaskInstance& task, const TrainConfig& config, std::uint64_t seed,
                                            double step = 1e-6);

/// Same trajectories, two readouts: mean final-step cross-entropy against P*
/// under the Born rule and under the diagonal-only readout.
AblationResult readout_ablation(const Cusm& cusm, const TaskInstance& task);

/// Token-target NLL summed over sequences under both readouts, one shared
/// trajectory per sequence.
AblationResult readout_ablation(const FullModelParams& model, const std::vector<std::vector<long>>& sequences,
                                const std::vector<std::vector<long>>& targets);

}  // namespace qsm
