// Acceptance checks 1-11. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Optional arguments select criteria by number.
//
// Tolerances and runtime budgets are pinned below; a criterion that exceeds
// its budget fails even if its numbers are right.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qsm/qsm.hpp"
#include "qsm_tools/commands.hpp"
#include "qsm_tools/timing.hpp"

using namespace qsm;

namespace {

// Criterion 1
constexpr long kUnitaritySteps = 10000;
constexpr double kUnitarityTol = 1e-10;
constexpr double kUnitarityBudget = 10.0;
// Criterion 2
constexpr int kEquivCases = 200;
constexpr double kEquivTol = 1e-10;
constexpr double kEquivBudget = 30.0;
// Criterion 3
constexpr double kDetTol = 1e-12;
constexpr double kRhoTol = 1e-14;
constexpr double kWitnessBudget = 1.0;
// Criterion 4
constexpr int kRankInstances = 100;
constexpr double kRankBudget = 60.0;
// Criterion 5
constexpr double kReproTol = 1e-10;
constexpr double kReproBudget = 30.0;
// Criterion 6
constexpr int kSoftmaxModels = 1000;
constexpr double kSoftmaxBudget = 60.0;
// Criterion 7
constexpr int kCurrentCases = 1000;
constexpr double kCurrentTol = 1e-12;
constexpr int kBalanceSteps = 200;
constexpr double kBalanceTol = 1e-11;
constexpr double kHalvingRatioLo = 3.5;  // residual ratio under dt halving, ideal 4
constexpr double kHalvingRatioHi = 4.5;
constexpr double kCurrentBudget = 30.0;
// Criterion 8
constexpr int kGradModels = 20;
constexpr double kGradRel = 1e-5;
constexpr double kGradAbs = 1e-8;
constexpr double kGradStep = 1e-5;
constexpr double kGradBudget = 120.0;
// Criterion 9
constexpr double kInterferenceTol = 1e-14;
constexpr double kInterferenceBudget = 1.0;
// Criterion 10
constexpr int kTrainSeeds = 5;
constexpr double kTrainBudget = 15.0 * 60.0;
// Criterion 11
constexpr double kWoodburyRatioLo = 1.6;
constexpr double kWoodburyRatioHi = 2.8;
constexpr double kDenseRatioMin = 4.0;  // super-quadratic: more than 2^2 per doubling
constexpr long kTimingRounds = 21;
constexpr double kScalingBudget = 5.0 * 60.0;

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Outcome c1_unitarity() {
  Rng rng(101);
  const Eigen::Index n = 64, r = 4;
  WaveState psi = WaveState::unchecked(sample_unit_vector(n, rng));
  WoodburyWorkspace ws;
  InteractionFactors f;
  f.delta.resize(n);
  double worst = 0.0;
  for (long t = 0; t < kUnitaritySteps; ++t) {
    f.phi = sample_ginibre(n, r, rng) / std::sqrt(static_cast<double>(n));
    for (Eigen::Index j = 0; j < n; ++j) f.delta(j) = rng.normal();
    const double before = psi.norm();
    auto [next, report] = cayley_step_woodbury(f, psi, 1.0, ws);
    worst = std::max({worst, std::abs(next.norm() - 1.0), std::abs(next.norm() - before)});
    psi = std::move(next);  // no safeguard renormalization anywhere in this loop
  }
  return {worst < kUnitarityTol, "max |norm - 1| over 1e4 steps = " + fmt("%.3e", worst)};
}

Outcome c2_equivalence() {
  Rng rng(202);
  const double dts[] = {0.1, 1.0, 4.0};
  double worst = 0.0;
  for (int k = 0; k < kEquivCases; ++k) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.next_u64() % 64);
    const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng.next_u64() % 8);
    const double dt = dts[k % 3];
    InteractionFactors f;
    f.phi = sample_ginibre(n, r, rng) / std::sqrt(static_cast<double>(n));
    f.delta.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) f.delta(j) = rng.normal();
    const WaveState psi = WaveState::unchecked(sample_unit_vector(n, rng));
    const CVector fast = cayley_step_woodbury(f, psi, dt).first.amplitudes();
    const CVector dense = cayley_step_dense(f.materialize(), psi, dt).amplitudes();
    worst = std::max(worst, (fast - dense).cwiseAbs().maxCoeff());
  }
  return {worst < kEquivTol, "max amplitude deviation over 200 cases = " + fmt("%.3e", worst)};
}

Outcome c3_witness() {
  const N2Reference ref = n2_reference_config();
  const Complex i(0.0, 1.0);
  // Literal matrices, lexicographic (i, j) order: rho00, rho01, rho10, rho11.
  CMatrix expect[4] = {CMatrix(2, 2), CMatrix(2, 2), CMatrix(2, 2), CMatrix(2, 2)};
  expect[0] << 1.0, 0.0, 0.0, 0.0;
  expect[1] << 0.5, 0.5, 0.5, 0.5;
  expect[2] << 0.5, -0.5 * i, 0.5 * i, 0.5;
  expect[3] << 0.5, 0.5 * i, -0.5 * i, 0.5;
  double rho_err = 0.0;
  for (int k = 0; k < 4; ++k)
    rho_err = std::max(rho_err, (ref.rho[static_cast<std::size_t>(k)] - expect[k]).cwiseAbs().maxCoeff());
  const double det_err = std::abs(ref.det + 0.25);
  return {det_err <= kDetTol && rho_err <= kRhoTol,
          "det(R) = " + fmt("%.15f", ref.det) + ", max rho deviation = " + fmt("%.3e", rho_err)};
}

Outcome c4_ranks() {
  long bad = 0, resampled = 0, total = 0;
  for (Eigen::Index n : {2, 3, 4}) {
    for (int s = 0; s < kRankInstances; ++s) {
      const std::uint64_t seed = 4000 + static_cast<std::uint64_t>(n) * 1000 + static_cast<std::uint64_t>(s);
      const GeneralPositionSample g = sample_general_position(n, seed);
      // The first draw must already be in general position: the property is generic.
      resampled += g.resamples;
      TaskInstance task;
      task.n = n;
      task.context_states = g.states;
      task.query_unitaries = g.unitaries;
      task.measurement = build_ic_measurement(n);
      task.seed = seed;
      const Eigen::Index stack = check_general_position(g.states, g.unitaries).rank;
      const Eigen::Index rank_p = check_separation_ranks(target_table(task), n).rank_p;
      if (stack != n * n || rank_p != n * n || g.resamples != 0) ++bad;
      ++total;
    }
  }
  return {bad == 0, std::to_string(total) + " instances, " + std::to_string(bad) + " without full rank, " +
                        std::to_string(resampled) + " redraws"};
}

Outcome c5_reproduction() {
  double worst = 0.0;
  long checked = 0;
  std::vector<TaskInstance> tasks{reference_task()};
  for (Eigen::Index n : {2, 3, 4})
    for (std::uint64_t s = 0; s < 5; ++s) tasks.push_back(make_task(n, 500 + s * 7 + static_cast<std::uint64_t>(n)));
  for (const TaskInstance& base : tasks) {
    const TargetTable table = target_table(base);
    for (long filler : {0L, 1L, 10L, 100L}) {
      TaskInstance task = base;
      task.filler_length = filler;
      const Cusm cusm = build_exact_cusm(task);
      const long n = static_cast<long>(task.n);
      for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
          const auto probs = cusm_forward(cusm, task_sequence(task.n, i, j, filler));
          worst = std::max(worst, (probs.back() - table.pstar.row(i * n + j).transpose()).cwiseAbs().maxCoeff());
          ++checked;
        }
    }
  }
  return {worst < kReproTol, std::to_string(checked) + " (task, i, j, filler) cases, max |p - p*| = " +
                                 fmt("%.3e", worst)};
}

Outcome c6_softmax() {
  const TaskInstance task = reference_task();
  const Eigen::Index ds[] = {1, 2, 4, 8};
  long violations = 0;
  Eigen::Index worst_margin = -100;
  for (int k = 0; k < kSoftmaxModels; ++k) {
    const Eigen::Index d = ds[k % 4];
    const double scale = 0.25 + 0.5 * (k % 7);
    const RosmParams rosm =
        random_rosm(d, task_alphabet_size(task.n), task.vocab(), 60000 + static_cast<std::uint64_t>(k), scale);
    const SoftmaxAudit a = softmax_rank_audit(rosm, task);
    worst_margin = std::max(worst_margin, a.rank_lbar - (d + 2));
    if (a.rank_lbar > d + 2) ++violations;
  }
  // Also on a sampled N = 3 task, where the bound is not implied by the table shape.
  const TaskInstance task3 = make_task(3, 66);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Index d = 1 + k % 4;
    const SoftmaxAudit a =
        softmax_rank_audit(random_rosm(d, task_alphabet_size(3), task3.vocab(), 70000 + static_cast<std::uint64_t>(k)), task3);
    if (a.rank_lbar > d + 2) ++violations;
  }
  return {violations == 0, "1000 ROSMs on N=2 (+200 on N=3), violations = " + std::to_string(violations) +
                               ", max rank - bound = " + std::to_string(worst_margin)};
}

Outcome c7_currents() {
  Rng rng(707);
  double structural = 0.0;
  for (int k = 0; k < kCurrentCases; ++k) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(k % 15);
    const CMatrix h = sample_hermitian(n, rng);
    const CurrentMatrix j = continuous_current(h, WaveState::unchecked(sample_unit_vector(n, rng)));
    structural = std::max({structural, j.antisymmetry_defect(), j.j.diagonal().cwiseAbs().maxCoeff(),
                           std::abs(j.row_sums().sum())});
  }
  double balance = 0.0;
  WaveState psi = WaveState::unchecked(sample_unit_vector(16, rng));
  const double dts[] = {0.1, 1.0, 4.0};
  for (int t = 0; t < kBalanceSteps; ++t) {
    InteractionFactors f;
    f.phi = sample_ginibre(16, 3, rng) / 4.0;
    f.delta.resize(16);
    for (Eigen::Index j = 0; j < 16; ++j) f.delta(j) = rng.normal();
    const double dt = dts[t % 3];
    const WaveState next = cayley_step_woodbury(f, psi, dt).first;
    const CurrentMatrix jm = midpoint_current(f.materialize(), psi, next);
    balance = std::max(balance, (next.occupations() - psi.occupations() - dt * jm.row_sums()).cwiseAbs().maxCoeff());
    psi = next;
  }
  double ratio_lo = 1e300, ratio_hi = 0.0;
  for (int k = 0; k < 20; ++k) {
    const CMatrix h = sample_hermitian(6, rng);
    const WaveState pre = WaveState::unchecked(sample_unit_vector(6, rng));
    auto residual = [&](double dt) {
      const WaveState post = cayley_step_dense(h, pre, dt);
      return (post.occupations() - pre.occupations() - dt * continuous_current(h, pre).row_sums()).norm();
    };
    const double ratio = residual(4e-3) / residual(2e-3);
    ratio_lo = std::min(ratio_lo, ratio);
    ratio_hi = std::max(ratio_hi, ratio);
  }
  const bool ok = structural <= kCurrentTol && balance <= kBalanceTol && ratio_lo >= kHalvingRatioLo &&
                  ratio_hi <= kHalvingRatioHi;
  return {ok, "structural defect " + fmt("%.2e", structural) + ", midpoint balance " + fmt("%.2e", balance) +
                  ", continuous residual ratio under dt halving in [" + fmt("%.3f", ratio_lo) + ", " +
                  fmt("%.3f", ratio_hi) + "]"};
}

Outcome c8_gradients() {
  long coords = 0, bad = 0;
  double worst_rel = 0.0;
  for (int k = 0; k < kGradModels; ++k) {
    Rng rng(8000 + static_cast<std::uint64_t>(k));
    ModelDims dims;
    dims.n = 2 + k % 3;
    dims.r = 1 + k % 2;
    dims.d = 2 + k % 2;
    dims.vocab_in = 3;
    dims.vocab_out = dims.n + k % 2;
    dims.hidden = {static_cast<Eigen::Index>(4 + k % 3)};
    dims.dt = k % 2 == 0 ? 1.0 : 0.5;
    FullModelParams model = init_full_model(dims, 9000 + static_cast<std::uint64_t>(k));
    model.mlp.weights.back() *= 20.0 + 10.0 * (k % 3);  // make the interaction term non-negligible

    const long steps = 3 + k % 3;
    std::vector<long> tokens;
    std::vector<StepTarget> targets(static_cast<std::size_t>(steps));
    for (long t = 0; t < steps; ++t) {
      tokens.push_back(static_cast<long>(rng.next_u64() % 3));
      if (rng.uniform() < 0.7) targets[static_cast<std::size_t>(t)].token = static_cast<long>(rng.next_u64() % dims.vocab_out);
    }
    if (k % 2 == 0) {
      RVector q(dims.vocab_out);
      for (Eigen::Index v = 0; v < q.size(); ++v) q(v) = 0.1 + rng.uniform();
      targets.back().token = -1;
      targets.back().distribution = q / q.sum();
    }
    if (!targets.front().active()) targets.front().token = 0;

    const auto an = pack(backward_full_model(model, tokens, targets).grad);
    const auto fd = pack(finite_difference_grad(model, tokens, targets, kGradStep).grad);
    for (std::size_t c = 0; c < an.size(); ++c) {
      ++coords;
      if (!gradient_close(an[c], fd[c], kGradRel, kGradAbs)) ++bad;
      if (std::abs(fd[c]) > kGradAbs) worst_rel = std::max(worst_rel, std::abs(an[c] - fd[c]) / std::abs(fd[c]));
    }
  }
  return {bad == 0, std::to_string(coords) + " coordinates over 20 models, " + std::to_string(bad) +
                        " outside tolerance, max relative error " + fmt("%.2e", worst_rel)};
}

Outcome c9_interference() {
  const double s = 1.0 / std::sqrt(2.0);
  CMatrix had(2, 2);
  had << s, s, s, -s;
  const MeasurementMatrix m = MeasurementMatrix::from_orthonormal(had);
  CVector same(2), flipped(2);
  same << s, s;
  flipped << s, -s;
  const WaveState a = WaveState::from_unit(same), b = WaveState::from_unit(flipped);
  const RVector pa = born_probabilities(m, a), pb = born_probabilities(m, b);
  const RVector da = diagonal_only_probabilities(m, a), db = diagonal_only_probabilities(m, b);
  const double born_err = std::max({std::abs(pa(0) - 1.0), std::abs(pa(1)), std::abs(pb(0)), std::abs(pb(1) - 1.0)});
  const double diag_gap = (da - db).cwiseAbs().maxCoeff();
  return {born_err <= kInterferenceTol && diag_gap <= kInterferenceTol,
          "Born (" + fmt("%.3f", pa(0)) + ", " + fmt("%.3f", pa(1)) + ") vs (" + fmt("%.3f", pb(0)) + ", " +
              fmt("%.3f", pb(1)) + "), diagonal-only difference " + fmt("%.2e", diag_gap)};
}

Outcome c10_training() {
  const std::filesystem::path dir = tools::output_path("", "acceptance_reports");
  std::filesystem::create_directories(dir);
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < kTrainSeeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  long reports = 0, failures = 0;
  std::ostringstream summary;
  for (Eigen::Index n : {2, 3}) {
    const TaskInstance task = make_task(n, 10 + static_cast<std::uint64_t>(n));
    TrainConfig cfg;
    cfg.epochs = 5000;
    cfg.adam.lr = 0.05;
    std::vector<std::pair<std::string, TrainConfig>> runs;
    runs.emplace_back("cusm", cfg);
    // Supplementary: at N' = N some seeds settle in local minima; the
    // over-parametrized N' = 2N model shows the landscape, not capacity, is why.
    cfg.model_dim = 2 * n;
    runs.emplace_back("cusm", cfg);
    cfg.model_dim = 0;
    cfg.kind = ModelKind::Rosm;
    cfg.rosm_d = n * n - 3;  // largest width below the bound d >= N^2 - 2
    runs.emplace_back("rosm", cfg);
    for (const auto& [label, c] : runs) {
      long zero = 0;
      double best = 1e300;
      for (const TrainReport& r : train_on_task(task, c, seeds)) {
        write_file_atomic(dir / ("n" + std::to_string(n) + "_" + to_string(r.kind) + "_dim" +
                                 std::to_string(r.model_dim) + "_seed" + std::to_string(r.seed) + ".json"),
                          report_to_json(r).dump(2) + "\n");
        ++reports;
        failures += r.invariants.failures;
        zero += r.zero_gap ? 1 : 0;
        if (std::isfinite(r.gap)) best = std::min(best, r.gap);
      }
      const Eigen::Index dim = label == "rosm" ? c.rosm_d : (c.model_dim > 0 ? c.model_dim : n);
      summary << " N=" << n << " " << label << "(" << (label == "rosm" ? "d" : "N'") << "=" << dim << ")"
              << ": zero-gap " << zero << "/" << kTrainSeeds << ", best gap " << fmt("%.2e", best) << ";";
    }
  }
  const bool ok = reports == 6 * kTrainSeeds && failures == 0;
  return {ok, std::to_string(reports) + " reports, invariant failures " + std::to_string(failures) + ";" +
                  summary.str()};
}

Outcome c11_scaling() {
  tools::TimingOptions opt;
  opt.repetitions = kTimingRounds;
  opt.min_batch_seconds = 5e-3;
  opt.seed = 11;
  const auto t = tools::time_cayley_grid({64, 128, 256, 512}, 4, opt);
  bool ok = true;
  std::ostringstream detail;
  detail << "woodbury ratios";
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double ratio = t[k].woodbury_seconds / t[k - 1].woodbury_seconds;
    ok = ok && ratio >= kWoodburyRatioLo && ratio <= kWoodburyRatioHi;
    detail << " " << fmt("%.2f", ratio);
  }
  detail << "; dense ratios";
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double ratio = t[k].dense_seconds / t[k - 1].dense_seconds;
    ok = ok && ratio > kDenseRatioMin;
    detail << " " << fmt("%.2f", ratio);
  }
  detail << "; per-step us at N=512: woodbury " << fmt("%.1f", t.back().woodbury_seconds * 1e6) << ", dense "
         << fmt("%.1f", t.back().dense_seconds * 1e6);
  return {ok, detail.str()};
}

struct Criterion {
  int id;
  const char* name;
  double budget;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "unitarity", kUnitarityBudget, c1_unitarity},
      {2, "woodbury-dense equivalence", kEquivBudget, c2_equivalence},
      {3, "N=2 witness", kWitnessBudget, c3_witness},
      {4, "rank certificates", kRankBudget, c4_ranks},
      {5, "exact CUSM reproduction", kReproBudget, c5_reproduction},
      {6, "softmax rank bound", kSoftmaxBudget, c6_softmax},
      {7, "current structure", kCurrentBudget, c7_currents},
      {8, "gradient correctness", kGradBudget, c8_gradients},
      {9, "interference mechanism", kInterferenceBudget, c9_interference},
      {10, "desk-scale training", kTrainBudget, c10_training},
      {11, "scaling trend", kScalingBudget, c11_scaling},
  };
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));

  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < c.budget;
    const bool pass = out.ok && in_budget;
    failed += pass ? 0 : 1;
    std::printf("CRITERION %2d %s  %s: %s [%.2f s of %.0f s budget%s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                out.detail.c_str(), secs, c.budget, in_budget ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
