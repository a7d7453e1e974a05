#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace qsm::tools {

struct StepTiming {
  Eigen::Index n = 0;
  Eigen::Index r = 0;
  double woodbury_seconds = 0.0;  // median per-step time
  double dense_seconds = 0.0;     // median per-step time, NaN when skipped
  long repetitions = 0;
  long woodbury_batch = 0;        // steps per timed batch
  long dense_batch = 0;
};

struct TimingOptions {
  long repetitions = 15;
  double min_batch_seconds = 2e-3;  // batches are grown until they take at least this long
  bool dense = true;
  Eigen::Index dense_max_n = 1 << 30;
  double dt = 1.0;
  std::uint64_t seed = 0;
};

/// Times chained Cayley steps on random rank-r interaction Hamiltonians, one
/// per entry of `dims`. Repetitions run in rounds that visit every dimension
/// in turn, so slow drift in machine load affects all sizes alike; each
/// reported time is the median over rounds. The dense path includes
/// materializing H, which a dense integrator has to do every step.
std::vector<StepTiming> time_cayley_grid(const std::vector<Eigen::Index>& dims, Eigen::Index r,
                                         const TimingOptions& options);

StepTiming time_cayley_steps(Eigen::Index n, Eigen::Index r, const TimingOptions& options);

double median(std::vector<double> values);

}  // namespace qsm::tools
