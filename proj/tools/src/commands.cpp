#include "qsm_tools/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <sstream>

#include "qsm/currents.hpp"
#include "qsm/dynamics.hpp"
#include "qsm/readout.hpp"
#include "qsm/septask.hpp"
#include "qsm/train.hpp"
#include "qsm_tools/timing.hpp"

namespace qsm::tools {

namespace {

constexpr double kReproductionTolerance = 1e-10;
constexpr double kBalanceTolerance = 1e-11;
constexpr double kNormTolerance = 1e-10;

Json tolerances() {
  return {{"state_norm", kStateNormTolerance},
          {"norm_report", kNormTolerance},
          {"rank_rel_tol", kDefaultRankTolerance},
          {"cusm_reproduction", kReproductionTolerance},
          {"midpoint_balance", kBalanceTolerance},
          {"gram_warn_condition", kGramWarnCondition},
          {"gram_fail_condition", kGramFailCondition},
          {"probability_floor", kProbabilityFloor}};
}

Json header(const std::string& kind, std::uint64_t seed, Json config) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind;
  j["library_version"] = library_version();
  j["seed"] = seed;
  j["config"] = std::move(config);
  j["tolerances"] = tolerances();
  return j;
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

void write_json(const std::filesystem::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

TaskInstance load_or_make_task(const std::string& file, long n, std::uint64_t seed, bool reference, long filler) {
  if (!file.empty()) return task_from_json(Json::parse(read_file(file)));
  require(n >= 1, ErrorKind::Configuration, "--n must be >= 1");
  if (reference) {
    require(n == 2, ErrorKind::Configuration, "--reference is the N = 2 configuration");
    return reference_task(filler);
  }
  return make_task(n, seed, filler);
}

double cusm_reproduction_error(const TaskInstance& base, const TargetTable& table, long filler) {
  TaskInstance task = base;
  task.filler_length = filler;
  const Cusm cusm = build_exact_cusm(task);
  double err = 0.0;
  const long n = static_cast<long>(task.n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      const auto probs = cusm_forward(cusm, task_sequence(task.n, i, j, filler));
      const RVector diff = probs.back() - table.pstar.row(i * n + j).transpose();
      err = std::max(err, diff.cwiseAbs().maxCoeff());
    }
  return err;
}

// Hermitian H whose Cayley unitary with step dt is W: H = -(2i/dt)(I + W)^{-1}(I - W).
CMatrix cayley_generator(const CMatrix& w, double dt) {
  const Eigen::Index n = w.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  Eigen::PartialPivLU<CMatrix> lu(id + w);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-12))
    fail(ErrorKind::IllConditionedStep, "unitary has an eigenvalue near -1; no finite Cayley generator");
  const CMatrix k = lu.solve(id - w);
  const CMatrix h = Complex(0.0, -2.0 / dt) * k;
  return 0.5 * (h + h.adjoint());
}

struct StepRow {
  long token = -1;
  RVector occupations;
  double norm = 1.0;
  double total = 0.0;
  double balance = 0.0;
  RMatrix current;
};

StepRow step_row(const CMatrix& h, const WaveState& pre, const WaveState& post, double dt, bool midpoint) {
  StepRow row;
  row.occupations = post.occupations();
  row.norm = post.norm();
  const CurrentMatrix j = midpoint ? midpoint_current(h, pre, post) : continuous_current(h, pre);
  row.total = total_current(j);
  const RVector dp = post.occupations() - pre.occupations();
  row.balance = (dp - dt * j.row_sums()).cwiseAbs().maxCoeff();
  row.current = j.j;
  return row;
}

std::string rows_csv(const std::vector<StepRow>& rows, Eigen::Index n) {
  std::ostringstream out;
  out.precision(17);
  out << "step,token";
  for (Eigen::Index k = 0; k < n; ++k) out << ",p_" << k;
  out << ",norm,total_current,balance_residual\n";
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const auto& r = rows[t];
    out << t << ',';
    if (r.token >= 0) out << r.token;
    for (Eigen::Index k = 0; k < n; ++k) out << ',' << r.occupations(k);
    out << ',' << r.norm << ',' << r.total << ',' << r.balance << '\n';
  }
  return out.str();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvariantViolation: return kExitInvariant;
    case ErrorKind::IllConditionedStep:
    case ErrorKind::DegenerateFactorization:
    case ErrorKind::DegenerateMeasurement:
    case ErrorKind::DegenerateInitialization: return kExitNumerical;
    default: return kExitUsage;
  }
}

std::filesystem::path output_path(const std::string& requested, const std::string& default_name) {
  if (!requested.empty()) return requested;
  const char* env = std::getenv("QSM_OUTPUT_DIR");
  const std::filesystem::path dir = (env && *env) ? std::filesystem::path(env) : std::filesystem::path(".");
  return dir / default_name;
}

std::vector<long> parse_token_list(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<long> out;
  std::string item;
  while (in >> item) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == item.size(), ErrorKind::Configuration, "bad token '" + item + "'");
    out.push_back(v);
  }
  return out;
}

Json to_json(const GenTaskOptions& o) {
  return {{"n", o.n}, {"seed", o.seed}, {"reference", o.reference}, {"filler", o.filler}, {"out", o.out}};
}

Json to_json(const VerifyOptions& o) {
  return {{"task", o.task_file},         {"n", o.n},
          {"seed", o.seed},              {"reference", o.reference},
          {"fillers", o.fillers},        {"audit_samples", o.audit_samples},
          {"audit_d", o.audit_d},        {"rosm_d", o.rosm_d},
          {"rosm_epochs", o.rosm_epochs}, {"rosm_seeds", o.rosm_seeds},
          {"lr", o.lr},                  {"out", o.out}};
}

Json to_json(const SimulateOptions& o) {
  return {{"model", o.model},   {"checkpoint", o.checkpoint}, {"task", o.task_file},
          {"n", o.n},           {"r", o.r},                   {"d", o.d},
          {"vocab_in", o.vocab_in}, {"vocab_out", o.vocab_out}, {"dt", o.dt},
          {"seed", o.seed},     {"tokens", o.tokens},         {"tokens_file", o.tokens_file},
          {"current", o.current}, {"full_currents", o.full_currents}, {"save_checkpoint", o.save_checkpoint},
          {"out", o.out}};
}

Json to_json(const TrainOptions& o) {
  return {{"task", o.task_file},       {"n", o.n},
          {"task_seed", o.task_seed},  {"reference", o.reference},
          {"model", o.model},          {"seeds", o.seeds},
          {"seed", o.seed},            {"epochs", o.epochs},
          {"lr", o.lr},                {"early_stop_gap", o.early_stop_gap},
          {"zero_gap", o.zero_gap},    {"clip", o.clip},
          {"model_dim", o.model_dim},  {"rosm_d", o.rosm_d},
          {"full_rank", o.full_rank},  {"full_embed", o.full_embed},
          {"check_every", o.check_every}, {"init_scale", o.init_scale},
          {"ablation", o.ablation},    {"out_dir", o.out_dir}};
}

Json to_json(const BenchOptions& o) {
  return {{"n_list", o.n_list},
          {"r_list", o.r_list},
          {"repetitions", o.repetitions},
          {"dense_max_n", o.dense_max_n},
          {"seed", o.seed},
          {"out", o.out}};
}

int cmd_gen_task(const GenTaskOptions& o) {
  require(o.n >= 1, ErrorKind::Configuration, "--n must be >= 1");
  require(o.filler >= 0, ErrorKind::Configuration, "--filler must be >= 0");
  const TaskInstance task = load_or_make_task("", o.n, o.seed, o.reference, o.filler);

  const PositionCertificate gp = check_general_position(task.context_states, task.query_unitaries);
  const TargetTable table = target_table(task);
  const SeparationRanks ranks = check_separation_ranks(table, task.n);
  const Eigen::Index n2 = task.n * task.n;

  Json cert;
  cert["seed"] = task.seed;
  cert["general_position_rank"] = gp.rank;
  cert["required_rank"] = n2;
  cert["measurement_rank"] = measurement_rank(task.measurement);
  cert["rank_P"] = ranks.rank_p;
  cert["rank_L"] = ranks.rank_l;
  cert["rank_logodds"] = ranks.rank_logodds;
  cert["lstar_full_rank"] = ranks.lstar_full_rank;
  cert["min_pstar_entry"] = table.min_entry;
  cert["near_orthogonal"] = table.near_orthogonal;
  if (o.reference) cert["det"] = n2_reference_config().det;
  const bool ok = gp.ok() && ranks.rank_p == n2 && cert["measurement_rank"].get<Eigen::Index>() == n2;
  cert["ok"] = ok;

  Json j = task_to_json(task);
  j["config"] = to_json(o);
  j["certificate"] = cert;
  const std::string name = o.reference ? "task_reference.json"
                                       : "task_n" + std::to_string(o.n) + "_seed" + std::to_string(o.seed) + ".json";
  const auto path = output_path(o.out, name);
  write_json(path, j);
  std::cout << "wrote " << path.string() << ": N=" << task.n << " rank " << gp.rank << "/" << n2 << " rank(P*) "
            << ranks.rank_p << " min P* " << table.min_entry << (ok ? "" : "  CERTIFICATE FAILED") << "\n";
  return ok ? kExitOk : kExitInvariant;
}

int cmd_verify_separation(const VerifyOptions& o) {
  require(o.audit_samples >= 0 && o.rosm_epochs >= 1 && o.rosm_seeds >= 1, ErrorKind::Configuration,
          "sample, epoch and seed counts must be positive");
  const TaskInstance task = load_or_make_task(o.task_file, o.n, o.seed, o.reference, 0);
  const Eigen::Index n2 = task.n * task.n;
  const TargetTable table = target_table(task);
  const SeparationRanks ranks = check_separation_ranks(table, task.n);

  Json rep = header("separation-report", task.seed, to_json(o));
  rep["n"] = task.n;
  double cusm_err = 0.0;
  Json per_filler = Json::object();
  for (long filler : o.fillers) {
    require(filler >= 0, ErrorKind::Configuration, "filler lengths must be >= 0");
    const double e = cusm_reproduction_error(task, table, filler);
    per_filler[std::to_string(filler)] = e;
    cusm_err = std::max(cusm_err, e);
  }
  rep["cusm_max_error"] = cusm_err;
  rep["cusm_error_by_filler"] = per_filler;
  rep["rank_P"] = ranks.rank_p;
  rep["rank_L"] = ranks.rank_l;
  rep["rank_logodds"] = ranks.rank_logodds;
  rep["lstar_full_rank"] = ranks.lstar_full_rank;
  rep["min_pstar_entry"] = table.min_entry;

  long audits = 0;
  long violations = 0;
  Json audit_rows = Json::array();
  for (long d : o.audit_d) {
    require(d >= 1, ErrorKind::Configuration, "audit widths must be >= 1");
    Eigen::Index max_rank = 0;
    long bad = 0;
    for (long s = 0; s < o.audit_samples; ++s) {
      const std::uint64_t seed = Rng::stream(task.seed ^ 0xa0d17ULL, static_cast<std::uint64_t>(d * 100003 + s)).next_u64();
      const RosmParams rosm = random_rosm(d, task_alphabet_size(task.n), task.vocab(), seed);
      const SoftmaxAudit a = softmax_rank_audit(rosm, task);
      max_rank = std::max(max_rank, a.rank_lbar);
      if (!a.satisfied) ++bad;
      ++audits;
    }
    violations += bad;
    audit_rows.push_back({{"d", d}, {"samples", o.audit_samples}, {"max_rank_lbar", max_rank}, {"bound", d + 2},
                          {"violations", bad}});
  }
  rep["rosm_audit"] = {{"samples", audits}, {"violations", violations}, {"by_d", audit_rows}};

  bool sweep_ok = true;
  Json sweep = Json::array();
  for (long d : o.rosm_d) {
    TrainConfig cfg;
    cfg.kind = ModelKind::Rosm;
    cfg.rosm_d = d;
    cfg.epochs = o.rosm_epochs;
    cfg.adam.lr = o.lr;
    std::vector<std::uint64_t> seeds;
    for (long s = 0; s < o.rosm_seeds; ++s) seeds.push_back(o.seed + static_cast<std::uint64_t>(s));
    for (const TrainReport& r : train_on_task(task, cfg, seeds)) {
      sweep_ok = sweep_ok && r.invariants.passed();
      Json row = {{"d", d},
                  {"below_bound", d < n2 - 2},
                  {"seed", r.seed},
                  {"final_loss", finite_or_null(r.final_loss)},
                  {"gap", finite_or_null(r.gap)},
                  {"zero_gap", r.zero_gap},
                  {"epochs_run", r.epochs_run},
                  {"stop_reason", r.stop_reason},
                  {"invariant_failures", r.invariants.failures}};
      if (r.audit) row["rank_lbar"] = r.audit->rank_lbar;
      sweep.push_back(std::move(row));
    }
  }
  rep["rosm_sweep"] = sweep;

  const bool ok = cusm_err < kReproductionTolerance && ranks.rank_p == n2 && violations == 0 && sweep_ok;
  rep["ok"] = ok;
  const auto path = output_path(o.out, "separation_n" + std::to_string(task.n) + "_seed" +
                                            std::to_string(task.seed) + ".json");
  write_json(path, rep);
  std::cout << "wrote " << path.string() << ": cusm_max_error " << cusm_err << ", rank(P*) " << ranks.rank_p << "/"
            << n2 << ", ROSM audit violations " << violations << "/" << audits << (ok ? "" : "  FAILED") << "\n";
  return ok ? kExitOk : kExitInvariant;
}

int cmd_simulate(const SimulateOptions& o) {
  require(o.current == "midpoint" || o.current == "continuous", ErrorKind::Configuration,
          "--current must be midpoint or continuous");
  std::vector<long> tokens = !o.tokens_file.empty() ? parse_token_list(read_file(o.tokens_file))
                                                    : parse_token_list(o.tokens);
  require(!tokens.empty(), ErrorKind::Configuration, "no input tokens (use --tokens or --tokens-file)");
  const bool midpoint = o.current == "midpoint";

  std::vector<StepRow> rows;
  std::uint64_t seed = o.seed;
  Eigen::Index n = 0;
  Json extra;
  if (o.model == "full") {
    FullModelParams model;
    if (!o.checkpoint.empty()) {
      model = checkpoint_from_json(Json::parse(read_file(o.checkpoint)), &seed);
    } else {
      ModelDims dims;
      dims.n = o.n;
      dims.r = o.r;
      dims.d = o.d;
      dims.vocab_in = o.vocab_in;
      dims.vocab_out = o.vocab_out;
      dims.dt = o.dt;
      model = init_full_model(dims, seed);
    }
    if (!o.save_checkpoint.empty()) write_json(o.save_checkpoint, checkpoint_to_json(model, seed));
    n = model.dim();
    const FullTrajectory traj = evolve_full_model(model, tokens);
    StepRow first;
    first.occupations = traj.states[0].occupations();
    first.norm = traj.states[0].norm();
    first.current = RMatrix::Zero(n, n);
    rows.push_back(first);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      rows.push_back(step_row(traj.ip_factors[t].materialize(), traj.states[t], traj.states[t + 1], model.dt,
                              midpoint));
      rows.back().token = tokens[t];
    }
    extra["safeguard_events"] = traj.safeguard_events;
    extra["condition_warnings"] = traj.warnings();
    extra["dims"] = {{"n", n}, {"r", model.rank()}, {"d", model.embed.dim()}, {"vocab_in", model.embed.vocab()},
                     {"vocab_out", model.vocab_out()}, {"dt", model.dt}};
  } else if (o.model == "cusm") {
    const TaskInstance task = load_or_make_task(o.task_file, o.n, o.seed, false, 0);
    seed = task.seed;
    const Cusm cusm = build_exact_cusm(task);
    n = task.n;
    const auto states = evolve_fixed_unitaries(cusm.unitaries, cusm.psi0, tokens);
    StepRow first;
    first.occupations = states[0].occupations();
    first.norm = states[0].norm();
    first.current = RMatrix::Zero(n, n);
    rows.push_back(first);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const CMatrix h = cayley_generator(cusm.unitaries[static_cast<std::size_t>(tokens[t])], 1.0);
      rows.push_back(step_row(h, states[t], states[t + 1], 1.0, midpoint));
      rows.back().token = tokens[t];
    }
    extra["dims"] = {{"n", n}, {"vocab_in", task_alphabet_size(n)}, {"vocab_out", task.vocab()}, {"dt", 1.0}};
  } else {
    fail(ErrorKind::Configuration, "--model must be full or cusm");
  }

  double max_balance = 0.0;
  double max_norm_defect = 0.0;
  for (const auto& r : rows) {
    max_balance = std::max(max_balance, r.balance);
    max_norm_defect = std::max(max_norm_defect, std::abs(r.norm - 1.0));
  }

  const std::string stem = "simulate_" + o.model + "_seed" + std::to_string(seed);
  const auto csv_path = output_path(o.out, stem + ".csv");
  write_file_atomic(csv_path, rows_csv(rows, n));

  Json meta = header("simulation", seed, to_json(o));
  meta.update(extra);
  meta["steps"] = tokens.size();
  meta["current_mode"] = o.current;
  meta["max_balance_residual"] = max_balance;
  meta["max_norm_defect"] = max_norm_defect;
  meta["csv"] = csv_path.filename().string();
  if (o.full_currents) {
    Json mats = Json::array();
    for (const auto& r : rows) mats.push_back(qsm::to_json(r.current));
    meta["currents"] = std::move(mats);
  }
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  write_json(json_path, meta);

  const bool ok = max_norm_defect < kNormTolerance && (!midpoint || max_balance < kBalanceTolerance);
  std::cout << "wrote " << csv_path.string() << ": " << tokens.size() << " steps, max |norm - 1| "
            << max_norm_defect << ", max balance residual " << max_balance << (ok ? "" : "  INVARIANT FAILED")
            << "\n";
  return ok ? kExitOk : kExitInvariant;
}

int cmd_train(const TrainOptions& o) {
  require(o.seeds >= 1, ErrorKind::Configuration, "--seeds must be >= 1");
  const TaskInstance task = load_or_make_task(o.task_file, o.n, o.task_seed, o.reference, 0);

  TrainConfig cfg;
  cfg.kind = model_kind_from_string(o.model);
  cfg.epochs = o.epochs;
  cfg.adam.lr = o.lr;
  cfg.early_stop_gap = o.early_stop_gap;
  cfg.zero_gap = o.zero_gap;
  cfg.clip_norm = o.clip;
  cfg.model_dim = o.model_dim;
  cfg.rosm_d = o.rosm_d;
  cfg.full_rank = o.full_rank;
  cfg.full_embed = o.full_embed;
  cfg.check_every = o.check_every;
  cfg.init_scale = o.init_scale;
  cfg.ablation = o.ablation;

  std::vector<std::uint64_t> seeds;
  for (long s = 0; s < o.seeds; ++s) seeds.push_back(o.seed + static_cast<std::uint64_t>(s));
  const std::vector<TrainReport> reports = train_on_task(task, cfg, seeds);

  const std::string kind = to_string(cfg.kind);
  const std::filesystem::path dir = output_path(o.out_dir, "");
  std::vector<double> losses;
  std::vector<double> gaps;
  long zero_gap = 0;
  long checks = 0;
  long failures = 0;
  bool numerical = false;
  Json files = Json::array();
  Json per_seed = Json::array();
  for (const TrainReport& r : reports) {
    Json j = report_to_json(r);
    j["config"] = to_json(o);
    j["tolerances"] = tolerances();
    const std::string stem = "train_" + kind + "_n" + std::to_string(task.n) + "_seed" + std::to_string(r.seed);
    write_json(dir / (stem + ".json"), j);
    write_file_atomic(dir / (stem + ".csv"), loss_trace_csv(r));
    files.push_back(stem + ".json");
    if (std::isfinite(r.final_loss)) {
      losses.push_back(r.final_loss);
      gaps.push_back(r.gap);
    }
    zero_gap += r.zero_gap ? 1 : 0;
    checks += r.invariants.checks;
    failures += r.invariants.failures;
    numerical = numerical || (r.stop_reason == "diverged" &&
                              r.diagnosis.find(to_string(ErrorKind::IllConditionedStep)) != std::string::npos);
    per_seed.push_back({{"seed", r.seed}, {"gap", finite_or_null(r.gap)}, {"zero_gap", r.zero_gap},
                        {"stop_reason", r.stop_reason}, {"epochs_run", r.epochs_run}});
  }

  Json agg = header("train-aggregate", o.seed, to_json(o));
  agg["model_kind"] = kind;
  agg["task_n"] = task.n;
  agg["task_seed"] = task.seed;
  agg["seeds"] = seeds;
  agg["entropy_floor"] = reports.empty() ? Json(nullptr) : Json(reports.front().entropy_floor);
  agg["final_loss_mean"] = finite_or_null(mean_of(losses));
  agg["final_loss_std"] = finite_or_null(stddev_of(losses));
  agg["gap_mean"] = finite_or_null(mean_of(gaps));
  agg["gap_std"] = finite_or_null(stddev_of(gaps));
  agg["gap_min"] = gaps.empty() ? Json(nullptr) : Json(*std::min_element(gaps.begin(), gaps.end()));
  agg["zero_gap_seeds"] = zero_gap;
  agg["diverged_seeds"] = static_cast<long>(reports.size() - losses.size());
  agg["invariant_checks"] = checks;
  agg["invariant_failures"] = failures;
  agg["per_seed"] = per_seed;
  agg["reports"] = files;
  const std::string agg_name = "train_" + kind + "_n" + std::to_string(task.n) + "_aggregate.json";
  write_json(dir / agg_name, agg);

  std::cout << "wrote " << (dir / agg_name).string() << ": " << reports.size() << " seeds, gap mean "
            << mean_of(gaps) << " +- " << stddev_of(gaps) << ", zero-gap seeds " << zero_gap << ", invariant failures "
            << failures << "/" << checks << "\n";
  if (failures > 0) return kExitInvariant;
  return numerical ? kExitNumerical : kExitOk;
}

int cmd_bench(const BenchOptions& o) {
  require(o.repetitions >= 1, ErrorKind::Configuration, "--repetitions must be >= 1");
  Json rep = header("bench", o.seed, to_json(o));
  Json grid = Json::array();
  for (long n : o.n_list) require(n >= 1, ErrorKind::Configuration, "dimensions must be >= 1");
  const std::vector<Eigen::Index> dims(o.n_list.begin(), o.n_list.end());
  for (long r : o.r_list) {
    require(r >= 1, ErrorKind::Configuration, "ranks must be >= 1");
    TimingOptions topt;
    topt.repetitions = o.repetitions;
    topt.seed = o.seed;
    topt.dense_max_n = o.dense_max_n;
    for (const StepTiming& t : time_cayley_grid(dims, r, topt)) {
      grid.push_back({{"n", t.n},
                      {"r", t.r},
                      {"woodbury_seconds", t.woodbury_seconds},
                      {"dense_seconds", finite_or_null(t.dense_seconds)},
                      {"woodbury_batch", t.woodbury_batch},
                      {"dense_batch", t.dense_batch}});
      std::cout << "N=" << t.n << " r=" << t.r << "  woodbury " << t.woodbury_seconds * 1e6 << " us  dense ";
      if (std::isfinite(t.dense_seconds))
        std::cout << t.dense_seconds * 1e6 << " us\n";
      else
        std::cout << "skipped\n";
    }
  }
  rep["grid"] = grid;
  const auto path = output_path(o.out, "bench.json");
  write_json(path, rep);
  std::cout << "wrote " << path.string() << "\n";
  return kExitOk;
}

}  // namespace qsm::tools
