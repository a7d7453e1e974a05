#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qsm/error.hpp"
#include "qsm/serialize.hpp"

namespace qsm::tools {

enum ExitCode : int { kExitOk = 0, kExitInvariant = 1, kExitUsage = 2, kExitNumerical = 3 };

int exit_code_for(ErrorKind kind) noexcept;

/// `requested` if set, else $QSM_OUTPUT_DIR (or the working directory) joined
/// with `default_name`.
std::filesystem::path output_path(const std::string& requested, const std::string& default_name);

/// Comma or whitespace separated integers.
std::vector<long> parse_token_list(const std::string& text);

struct GenTaskOptions {
  long n = 2;
  std::uint64_t seed = 0;
  bool reference = false;
  long filler = 0;
  std::string out;
};

struct VerifyOptions {
  std::string task_file;
  long n = 2;
  std::uint64_t seed = 0;
  bool reference = false;
  std::vector<long> fillers{0, 1, 10, 100};
  long audit_samples = 100;  // random ROSMs per audit width
  std::vector<long> audit_d{1, 2, 4, 8};
  std::vector<long> rosm_d;  // training sweep, empty to skip
  long rosm_epochs = 2000;
  long rosm_seeds = 1;
  double lr = 0.05;
  std::string out;
};

struct SimulateOptions {
  std::string model = "full";  // "full" or "cusm"
  std::string checkpoint;
  std::string task_file;
  long n = 4;
  long r = 1;
  long d = 4;
  long vocab_in = 9;
  long vocab_out = 16;
  double dt = 1.0;
  std::uint64_t seed = 0;
  std::string tokens;
  std::string tokens_file;
  std::string current = "midpoint";  // or "continuous"
  bool full_currents = false;
  std::string save_checkpoint;
  std::string out;
};

struct TrainOptions {
  std::string task_file;
  long n = 2;
  std::uint64_t task_seed = 0;
  bool reference = false;
  std::string model = "cusm";
  long seeds = 5;
  std::uint64_t seed = 0;  // seeds used: seed, seed + 1, ...
  long epochs = 5000;
  double lr = 0.05;
  double early_stop_gap = 1e-4;
  double zero_gap = 1e-3;
  double clip = 10.0;
  long model_dim = 0;
  long rosm_d = 1;
  long full_rank = 1;
  long full_embed = 4;
  long check_every = 250;
  double init_scale = 1.0;
  bool ablation = false;
  std::string out_dir;
};

struct BenchOptions {
  std::vector<long> n_list{64, 128, 256, 512};
  std::vector<long> r_list{4};
  long repetitions = 15;
  long dense_max_n = 512;
  std::uint64_t seed = 0;
  std::string out;
};

Json to_json(const GenTaskOptions& o);
Json to_json(const VerifyOptions& o);
Json to_json(const SimulateOptions& o);
Json to_json(const TrainOptions& o);
Json to_json(const BenchOptions& o);

/// Each command writes its artifacts, prints a one-paragraph summary and
/// returns an ExitCode. Library errors propagate as qsm::Error.
int cmd_gen_task(const GenTaskOptions& options);
int cmd_verify_separation(const VerifyOptions& options);
int cmd_simulate(const SimulateOptions& options);
int cmd_train(const TrainOptions& options);
int cmd_bench(const BenchOptions& options);

}  // namespace qsm::tools
