#include "qsm_tools/timing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>

#include "qsm/dynamics.hpp"

namespace qsm::tools {

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(values.begin(), mid);
  return 0.5 * (lo + hi);
}

namespace {

using Clock = std::chrono::steady_clock;

struct Problem {
  InteractionFactors f;
  WaveState psi0;
  WaveState psi;
  CVector c;
  WoodburyWorkspace ws;
  double dt = 1.0;

  void woodbury() { cayley_step_woodbury_inplace(f, c, dt, ws); }
  void dense() { psi = cayley_step_dense(f.materialize(), psi, dt); }
};

std::unique_ptr<Problem> make_problem(Eigen::Index n, Eigen::Index r, const TimingOptions& options) {
  Rng rng(options.seed ^ static_cast<std::uint64_t>(n * 7919 + r));
  auto p = std::make_unique<Problem>();
  p->f.phi = sample_ginibre(n, r, rng) / std::sqrt(static_cast<double>(n));
  p->f.delta.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) p->f.delta(j) = rng.normal();
  p->psi0 = WaveState::unchecked(sample_unit_vector(n, rng));
  p->psi = p->psi0;
  p->c = p->psi0.amplitudes();
  p->dt = options.dt;
  return p;
}

double run_batch(const std::function<void()>& step, long steps) {
  const auto start = Clock::now();
  for (long s = 0; s < steps; ++s) step();
  return std::chrono::duration<double>(Clock::now() - start).count();
}

long calibrate(const std::function<void()>& step, double min_seconds) {
  long steps = 1;
  while (steps < (1L << 24)) {
    if (run_batch(step, steps) >= min_seconds) break;
    steps *= 2;
  }
  return steps;
}

// Median per-step time of each step function, measured in interleaved rounds.
std::vector<double> interleaved(const std::vector<std::function<void()>>& steps, const std::vector<long>& batch,
                                long rounds) {
  std::vector<std::vector<double>> samples(steps.size());
  for (long k = 0; k < rounds; ++k)
    for (std::size_t i = 0; i < steps.size(); ++i)
      samples[i].push_back(run_batch(steps[i], batch[i]) / static_cast<double>(batch[i]));
  std::vector<double> out;
  for (auto& s : samples) out.push_back(median(std::move(s)));
  return out;
}

}  // namespace

std::vector<StepTiming> time_cayley_grid(const std::vector<Eigen::Index>& dims, Eigen::Index r,
                                         const TimingOptions& options) {
  std::vector<std::unique_ptr<Problem>> problems;
  std::vector<StepTiming> out;
  for (Eigen::Index n : dims) {
    problems.push_back(make_problem(n, r, options));
    StepTiming t;
    t.n = n;
    t.r = r;
    t.repetitions = options.repetitions;
    t.dense_seconds = std::numeric_limits<double>::quiet_NaN();
    out.push_back(t);
  }

  std::vector<std::function<void()>> fast;
  std::vector<long> fast_batch;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    Problem* p = problems[i].get();
    fast.emplace_back([p] { p->woodbury(); });
    fast_batch.push_back(calibrate(fast.back(), options.min_batch_seconds));
    out[i].woodbury_batch = fast_batch.back();
  }
  const auto fast_t = interleaved(fast, fast_batch, options.repetitions);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].woodbury_seconds = fast_t[i];

  if (!options.dense) return out;
  std::vector<std::function<void()>> slow;
  std::vector<long> slow_batch;
  std::vector<std::size_t> slow_index;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (dims[i] > options.dense_max_n) continue;
    Problem* p = problems[i].get();
    p->psi = p->psi0;
    slow.emplace_back([p] { p->dense(); });
    slow_batch.push_back(calibrate(slow.back(), options.min_batch_seconds));
    slow_index.push_back(i);
    out[i].dense_batch = slow_batch.back();
  }
  const auto slow_t = interleaved(slow, slow_batch, options.repetitions);
  for (std::size_t k = 0; k < slow_index.size(); ++k) out[slow_index[k]].dense_seconds = slow_t[k];
  return out;
}

StepTiming time_cayley_steps(Eigen::Index n, Eigen::Index r, const TimingOptions& options) {
  return time_cayley_grid({n}, r, options).front();
}

}  // namespace qsm::tools
