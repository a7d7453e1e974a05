#include "qsm/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#ifndef QSM_VERSION_STRING
#define QSM_VERSION_STRING "unknown"
#endif

namespace qsm {

std::string library_version() { return QSM_VERSION_STRING; }

namespace {

Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Complex complex_from(const Json& j) {
  require(j.is_array() && j.size() == 2, ErrorKind::Io, "complex number must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

// JSON has no NaN or infinity; they are written as null and read back as NaN.
Json number_json(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

void check_schema(const Json& j, const char* what) {
  require(j.contains("schema_version") && j["schema_version"].get<int>() == kSchemaVersion, ErrorKind::Io,
          std::string(what) + ": unsupported or missing schema_version");
}

}  // namespace

Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v(i)));
  return out;
}

Json to_json(const RMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const RVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_json(v(i)));
  return out;
}

CMatrix cmatrix_from_json(const Json& j) {
  require(j.is_array(), ErrorKind::Io, "matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    require(static_cast<Eigen::Index>(j[r].size()) == cols, ErrorKind::Io, "ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from(j[r][c]);
  }
  return m;
}

CVector cvector_from_json(const Json& j) {
  require(j.is_array(), ErrorKind::Io, "vector must be an array");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = complex_from(j[i]);
  return v;
}

namespace {

double number_from(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

}  // namespace

RMatrix rmatrix_from_json(const Json& j) {
  require(j.is_array(), ErrorKind::Io, "matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  RMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    require(static_cast<Eigen::Index>(j[r].size()) == cols, ErrorKind::Io, "ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = number_from(j[r][c]);
  }
  return m;
}

RVector rvector_from_json(const Json& j) {
  require(j.is_array(), ErrorKind::Io, "vector must be an array");
  RVector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = number_from(j[i]);
  return v;
}

Json task_to_json(const TaskInstance& task) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "task-instance";
  j["library_version"] = library_version();
  j["seed"] = task.seed;
  j["n"] = task.n;
  j["vocab"] = task.vocab();
  j["filler_length"] = task.filler_length;
  j["tolerances"] = {{"rank_rel_tol", kDefaultRankTolerance}, {"state_norm", kStateNormTolerance},
                     {"measurement_resolution", 1e-10}};
  Json states = Json::array();
  for (const auto& s : task.context_states) states.push_back(to_json(s.amplitudes()));
  j["context_states"] = std::move(states);
  Json unitaries = Json::array();
  for (const auto& w : task.query_unitaries) unitaries.push_back(to_json(w));
  j["query_unitaries"] = std::move(unitaries);
  j["measurement"] = to_json(task.measurement.matrix());
  return j;
}

TaskInstance task_from_json(const Json& j) {
  check_schema(j, "task instance");
  TaskInstance task;
  task.n = j.at("n").get<Eigen::Index>();
  task.seed = j.value("seed", std::uint64_t{0});
  task.filler_length = j.at("filler_length").get<long>();
  for (const auto& s : j.at("context_states")) task.context_states.push_back(WaveState::from_unit(cvector_from_json(s)));
  for (const auto& w : j.at("query_unitaries")) task.query_unitaries.push_back(cmatrix_from_json(w));
  task.measurement = MeasurementMatrix::from_orthonormal(cmatrix_from_json(j.at("measurement")));
  task.validate();
  return task;
}

Json checkpoint_to_json(const FullModelParams& model, std::uint64_t seed) {
  model.validate();
  const ModelDims dims = model.dims();
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "full-model-checkpoint";
  j["library_version"] = library_version();
  j["seed"] = seed;
  j["dims"] = {{"n", dims.n},         {"r", dims.r},           {"d", dims.d}, {"vocab_in", dims.vocab_in},
               {"vocab_out", dims.vocab_out}, {"hidden", dims.hidden}, {"dt", dims.dt}};
  j["init"] = {{"a", to_json(model.init.a)}, {"b", to_json(model.init.b)}};
  j["lambda"] = to_json(model.h0.frequencies);
  j["embedding"] = to_json(model.embed.vectors);
  Json layers = Json::array();
  for (std::size_t l = 0; l < model.mlp.layers(); ++l)
    layers.push_back({{"weight", to_json(model.mlp.weights[l])}, {"bias", to_json(model.mlp.biases[l])}});
  j["mlp"] = std::move(layers);
  j["meas_raw"] = to_json(model.meas_raw);
  return j;
}

FullModelParams checkpoint_from_json(const Json& j, std::uint64_t* seed) {
  check_schema(j, "checkpoint");
  FullModelParams m;
  m.dt = j.at("dims").at("dt").get<double>();
  m.init.a = rvector_from_json(j.at("init").at("a"));
  m.init.b = rvector_from_json(j.at("init").at("b"));
  m.h0.frequencies = rvector_from_json(j.at("lambda"));
  m.embed.vectors = rmatrix_from_json(j.at("embedding"));
  for (const auto& layer : j.at("mlp")) {
    m.mlp.weights.push_back(rmatrix_from_json(layer.at("weight")));
    m.mlp.biases.push_back(rvector_from_json(layer.at("bias")));
  }
  m.meas_raw = cmatrix_from_json(j.at("meas_raw"));
  m.validate();
  const auto& dims = j.at("dims");
  require(dims.at("n").get<Eigen::Index>() == m.dim() && dims.at("r").get<Eigen::Index>() == m.rank() &&
              dims.at("d").get<Eigen::Index>() == m.embed.dim() &&
              dims.at("vocab_in").get<Eigen::Index>() == m.embed.vocab() &&
              dims.at("vocab_out").get<Eigen::Index>() == m.vocab_out(),
          ErrorKind::Configuration, "checkpoint dims disagree with its parameter shapes");
  if (seed) *seed = j.value("seed", std::uint64_t{0});
  return m;
}

Json report_to_json(const TrainReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "train-report";
  j["library_version"] = library_version();
  j["model_kind"] = to_string(r.kind);
  j["seed"] = r.seed;
  j["task_seed"] = r.task_seed;
  j["task_n"] = r.task_n;
  j["model_dim"] = r.model_dim;
  j["entropy_floor"] = number_json(r.entropy_floor);
  j["final_loss"] = number_json(r.final_loss);
  j["gap"] = number_json(r.gap);
  j["zero_gap"] = r.zero_gap;
  j["epochs_run"] = r.epochs_run;
  j["stop_reason"] = r.stop_reason;
  if (!r.diagnosis.empty()) j["diagnosis"] = r.diagnosis;
  j["wall_clock_seconds"] = r.wall_clock_seconds;
  j["condition_warnings"] = r.condition_warnings;
  j["invariants"] = {{"checks", r.invariants.checks},
                     {"failures", r.invariants.failures},
                     {"messages", r.invariants.messages}};
  if (r.audit) j["softmax_audit"] = {{"rank_lbar", r.audit->rank_lbar}, {"bound", r.audit->bound},
                                     {"satisfied", r.audit->satisfied}};
  if (r.ablation) j["ablation"] = {{"nll_born", number_json(r.ablation->nll_born)},
                                   {"nll_diagonal", number_json(r.ablation->nll_diagonal)},
                                   {"floored", r.ablation->floored}};
  Json trace = Json::array();
  for (double x : r.loss_trace) trace.push_back(number_json(x));
  j["loss_trace"] = std::move(trace);
  return j;
}

std::string loss_trace_csv(const TrainReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,mean_nll,gap\n";
  for (std::size_t e = 0; e < r.loss_trace.size(); ++e)
    out << e << ',' << r.loss_trace[e] << ',' << r.loss_trace[e] - r.entropy_floor << '\n';
  return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    require(static_cast<bool>(out), ErrorKind::Io, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail(ErrorKind::Io, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace qsm
