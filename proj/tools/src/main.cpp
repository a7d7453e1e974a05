// qsm: command-line front end. Every subcommand accepts --config FILE, a JSON
// object of flag values (keys are flag names, '-' or '_' both accepted) with a
// schema_version field. Flags given on the command line win over the file.

#include <iostream>
#include <string>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "qsm_tools/commands.hpp"

namespace {

using qsm::Json;
using namespace qsm::tools;

std::string json_scalar(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

// Fills options that were not given on the command line from the config file.
void apply_config(CLI::App& sub, const std::string& path) {
  const Json cfg = Json::parse(qsm::read_file(path));
  qsm::require(cfg.is_object(), qsm::ErrorKind::Configuration, "config file must hold a JSON object");
  qsm::require(cfg.contains("schema_version") && cfg["schema_version"] == qsm::kSchemaVersion,
               qsm::ErrorKind::Configuration, "config file: unsupported or missing schema_version");
  for (const auto& [key, value] : cfg.items()) {
    if (key == "schema_version" || key == "command") continue;
    std::string flag = key;
    for (char& c : flag)
      if (c == '_') c = '-';
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option("--" + flag);
    } catch (const CLI::OptionNotFound&) {
      qsm::fail(qsm::ErrorKind::Configuration, "config file: unknown key '" + key + "' for " + sub.get_name());
    }
    if (opt->count() > 0 || flag == "config") continue;
    if (value.is_array()) {
      std::vector<std::string> items;
      for (const auto& v : value) items.push_back(json_scalar(v));
      opt->add_result(items);
    } else {
      opt->add_result(json_scalar(value));
    }
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complex unitary sequence models: task generation, simulation, training and benchmarks"};
  app.set_version_flag("--version", qsm::library_version());
  app.require_subcommand(1);

  std::string config_path;

  GenTaskOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-task", "Sample a task instance and certify it");
  gen_cmd->add_option("--n", gen.n, "Task size N")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Sampling seed");
  gen_cmd->add_flag("--reference", gen.reference, "Use the explicit N = 2 configuration");
  gen_cmd->add_option("--filler", gen.filler, "Filler length")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--out", gen.out, "Output file");

  VerifyOptions ver;
  auto* ver_cmd = app.add_subcommand("verify-separation", "Exact CUSM reproduction, rank and softmax audits");
  ver_cmd->add_option("--task", ver.task_file, "Task instance JSON (else sampled from --n/--seed)");
  ver_cmd->add_option("--n", ver.n, "Task size N")->check(CLI::PositiveNumber);
  ver_cmd->add_option("--seed", ver.seed, "Task and training seed");
  ver_cmd->add_flag("--reference", ver.reference, "Use the explicit N = 2 configuration");
  ver_cmd->add_option("--fillers", ver.fillers, "Filler lengths checked for reproduction")->delimiter(',');
  ver_cmd->add_option("--audit-samples", ver.audit_samples, "Random ROSMs per audited width");
  ver_cmd->add_option("--audit-d", ver.audit_d, "Audited ROSM widths")->delimiter(',');
  ver_cmd->add_option("--rosm-d", ver.rosm_d, "ROSM widths to train (empty skips the sweep)")->delimiter(',');
  ver_cmd->add_option("--rosm-epochs", ver.rosm_epochs, "Epochs per ROSM run");
  ver_cmd->add_option("--rosm-seeds", ver.rosm_seeds, "Seeds per ROSM width");
  ver_cmd->add_option("--lr", ver.lr, "ROSM learning rate")->check(CLI::PositiveNumber);
  ver_cmd->add_option("--out", ver.out, "Output file");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a model over tokens and record occupations and currents");
  sim_cmd->add_option("--model", sim.model, "full or cusm")->check(CLI::IsMember({"full", "cusm"}));
  sim_cmd->add_option("--checkpoint", sim.checkpoint, "Full-model checkpoint JSON");
  sim_cmd->add_option("--task", sim.task_file, "Task instance for --model cusm");
  sim_cmd->add_option("--n", sim.n, "State dimension")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--r", sim.r, "Interaction rank")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--d", sim.d, "Embedding width")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--vocab-in", sim.vocab_in, "Input alphabet size")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--vocab-out", sim.vocab_out, "Output vocabulary size")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--dt", sim.dt, "Step size")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.seed, "Initialization or task seed");
  sim_cmd->add_option("--tokens", sim.tokens, "Comma separated token ids");
  sim_cmd->add_option("--tokens-file", sim.tokens_file, "File of token ids");
  sim_cmd->add_option("--current", sim.current, "midpoint or continuous")
      ->check(CLI::IsMember({"midpoint", "continuous"}));
  sim_cmd->add_flag("--full-currents", sim.full_currents, "Write every current matrix to the JSON sidecar");
  sim_cmd->add_option("--save-checkpoint", sim.save_checkpoint, "Write the model used to this file");
  sim_cmd->add_option("--out", sim.out, "Output CSV");

  TrainOptions tr;
  auto* tr_cmd = app.add_subcommand("train", "Train models on a task across seeds");
  tr_cmd->add_option("--task", tr.task_file, "Task instance JSON (else sampled)");
  tr_cmd->add_option("--n", tr.n, "Task size N")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--task-seed", tr.task_seed, "Task sampling seed");
  tr_cmd->add_flag("--reference", tr.reference, "Use the explicit N = 2 configuration");
  tr_cmd->add_option("--model", tr.model, "cusm, cusm-softmax, rosm or full")
      ->check(CLI::IsMember({"cusm", "cusm-trainable", "cusm-softmax", "rosm", "full"}));
  tr_cmd->add_option("--seeds", tr.seeds, "Number of seeds")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--seed", tr.seed, "First seed");
  tr_cmd->add_option("--epochs", tr.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--lr", tr.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--early-stop-gap", tr.early_stop_gap, "Stop once the gap is below this")
      ->check(CLI::Range(0.0, 1.0));
  tr_cmd->add_option("--zero-gap", tr.zero_gap, "Gap counted as reproduction")->check(CLI::Range(0.0, 1.0));
  tr_cmd->add_option("--clip", tr.clip, "Gradient norm clip")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--model-dim", tr.model_dim, "Model dimension (0: task N)")->check(CLI::NonNegativeNumber);
  tr_cmd->add_option("--rosm-d", tr.rosm_d, "ROSM width")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--full-rank", tr.full_rank, "Interaction rank of the full model")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--full-embed", tr.full_embed, "Embedding width of the full model")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--check-every", tr.check_every, "Epochs between invariant checks");
  tr_cmd->add_option("--init-scale", tr.init_scale, "Initialization scale")->check(CLI::PositiveNumber);
  tr_cmd->add_flag("--ablation", tr.ablation, "Also report Born vs diagonal-only readout losses");
  tr_cmd->add_option("--out-dir", tr.out_dir, "Output directory");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time Woodbury and dense Cayley steps");
  bench_cmd->add_option("--n-list", bench.n_list, "State dimensions")->delimiter(',');
  bench_cmd->add_option("--r-list", bench.r_list, "Interaction ranks")->delimiter(',');
  bench_cmd->add_option("--repetitions", bench.repetitions, "Timed batches per point")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--dense-max-n", bench.dense_max_n, "Largest N timed densely");
  bench_cmd->add_option("--seed", bench.seed, "Seed for the random factors");
  bench_cmd->add_option("--out", bench.out, "Output file");

  for (auto* sub : {gen_cmd, ver_cmd, sim_cmd, tr_cmd, bench_cmd})
    sub->add_option("--config", config_path, "JSON config file (flags override it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!config_path.empty()) apply_config(*sub, config_path);
    if (sub == gen_cmd) return cmd_gen_task(gen);
    if (sub == ver_cmd) return cmd_verify_separation(ver);
    if (sub == sim_cmd) return cmd_simulate(sim);
    if (sub == tr_cmd) return cmd_train(tr);
    return cmd_bench(bench);
  } catch (const CLI::ParseError& e) {
    std::cerr << "qsm: config: " << e.what() << "\n";
    return kExitUsage;
  } catch (const qsm::Error& e) {
    std::cerr << "qsm: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const Json::exception& e) {
    std::cerr << "qsm: malformed JSON: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "qsm: " << e.what() << "\n";
    return kExitUsage;
  }
}
