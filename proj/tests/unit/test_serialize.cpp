#include <gtest/gtest.h>

#include <filesystem>

#include "test_util.hpp"

using namespace qsm;

TEST(Json, ComplexMatrixRoundTrip) {
  Rng rng(1);
  const CMatrix m = sample_ginibre(3, 4, rng);
  const Json j = to_json(m);
  EXPECT_EQ(j[0][0].size(), 2u);
  EXPECT_EQ(cmatrix_from_json(Json::parse(j.dump())), m);
}

TEST(Json, NanBecomesNull) {
  RVector v(2);
  v << 1.0, std::nan("");
  const Json j = to_json(v);
  EXPECT_TRUE(j[1].is_null());
  EXPECT_TRUE(std::isnan(rvector_from_json(j)(1)));
}

TEST(Json, TaskRoundTripIsBitwise) {
  const TaskInstance task = make_task(3, 8, 4);
  const TaskInstance back = task_from_json(Json::parse(task_to_json(task).dump()));
  EXPECT_EQ(back.n, task.n);
  EXPECT_EQ(back.seed, task.seed);
  EXPECT_EQ(back.filler_length, 4);
  EXPECT_EQ(back.measurement.matrix(), task.measurement.matrix());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.context_states[i].amplitudes(), task.context_states[i].amplitudes());
    EXPECT_EQ(back.query_unitaries[i], task.query_unitaries[i]);
  }
}

TEST(Json, CheckpointRoundTrip) {
  ModelDims dims;
  dims.n = 3;
  dims.r = 2;
  dims.d = 2;
  dims.vocab_in = 5;
  dims.vocab_out = 4;
  dims.hidden = {7};
  const FullModelParams m = init_full_model(dims, 12);
  std::uint64_t seed = 0;
  const FullModelParams back = checkpoint_from_json(Json::parse(checkpoint_to_json(m, 12).dump()), &seed);
  EXPECT_EQ(seed, 12u);
  EXPECT_EQ(pack(back), pack(m));
  EXPECT_EQ(back.dt, m.dt);
}

TEST(Json, CheckpointDimensionMismatch) {
  ModelDims dims;
  dims.n = 3;
  dims.r = 1;
  dims.d = 2;
  dims.vocab_in = 5;
  dims.vocab_out = 4;
  Json j = checkpoint_to_json(init_full_model(dims, 1), 1);
  j["dims"]["vocab_in"] = 6;
  EXPECT_THROW(checkpoint_from_json(j), Error);
  j["schema_version"] = 99;
  EXPECT_THROW(checkpoint_from_json(j), Error);
}

TEST(Json, ReportFields) {
  TrainReport r;
  r.seed = 5;
  r.loss_trace = {1.0, 0.5};
  r.entropy_floor = 0.25;
  r.final_loss = 0.5;
  r.gap = 0.25;
  r.ablation = AblationResult{0.3, 0.4, false};
  const Json j = report_to_json(r);
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["ablation"]["nll_born"], 0.3);
  EXPECT_EQ(j["library_version"], library_version());
  EXPECT_EQ(loss_trace_csv(r).substr(0, 18), "epoch,mean_nll,gap");
}

TEST(Files, AtomicWriteAndRead) {
  const auto dir = std::filesystem::temp_directory_path() / "qsm_serialize_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "sub" / "x.json";
  write_file_atomic(path, "{}\n");
  EXPECT_EQ(read_file(path), "{}\n");
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  EXPECT_THROW(read_file(dir / "missing"), Error);
  std::filesystem::remove_all(dir);
}
