#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "qsm/hamgen.hpp"
#include "qsm/septask.hpp"
#include "qsm/train.hpp"

namespace qsm {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

std::string library_version();

/// Complex entries are [re, im]; matrices are arrays of rows.
Json to_json(const CMatrix& m);
Json to_json(const CVector& v);
Json to_json(const RMatrix& m);
Json to_json(const RVector& v);
CMatrix cmatrix_from_json(const Json& j);
CVector cvector_from_json(const Json& j);
RMatrix rmatrix_from_json(const Json& j);
RVector rvector_from_json(const Json& j);

/// Task instance with seed and tolerance metadata. Doubles are written with
/// round-trip precision, so reloading reproduces every entry bit for bit.
Json task_to_json(const TaskInstance& task);
TaskInstance task_from_json(const Json& j);

/// Checkpoint fields, in order: schema_version, library_version, seed, dims
/// {n, r, d, vocab_in, vocab_out, hidden, dt}, init {a, b}, lambda,
/// embedding, mlp [{weight, bias}...], meas_raw.
Json checkpoint_to_json(const FullModelParams& model, std::uint64_t seed);
FullModelParams checkpoint_from_json(const Json& j, std::uint64_t* seed = nullptr);

Json report_to_json(const TrainReport& report);

/// "epoch,mean_nll,gap" rows.
std::string loss_trace_csv(const TrainReport& report);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace qsm
