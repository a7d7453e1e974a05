#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qsm/serialize.hpp"
#include "qsm_tools/commands.hpp"

namespace fs = std::filesystem;
using qsm::Json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qsm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && QSM_OUTPUT_DIR='" + dir_.string() + "' '" +
                            QSM_CLI_PATH + "' " + args + " > out.txt 2> err.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  Json load(const std::string& name) const { return Json::parse(qsm::read_file(dir_ / name)); }
  std::string text(const std::string& name) const { return qsm::read_file(dir_ / name); }

  fs::path dir_;
};

std::vector<std::vector<double>> read_csv(const std::string& content, std::vector<std::string>& header) {
  std::istringstream in(content);
  std::string line;
  std::getline(in, line);
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(cell.empty() ? -1.0 : std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return k;
  ADD_FAILURE() << "missing column " << name;
  return 0;
}

}  // namespace

TEST_F(Cli, GenTaskCertificate) {
  ASSERT_EQ(run("gen-task --n 2 --seed 7"), 0);
  const Json j = load("task_n2_seed7.json");
  EXPECT_EQ(j["certificate"]["general_position_rank"], 4);
  EXPECT_EQ(j["certificate"]["rank_P"], 4);
  EXPECT_EQ(j["seed"], 7);
  EXPECT_TRUE(j.contains("tolerances"));
  EXPECT_EQ(j["config"]["n"], 2);
}

TEST_F(Cli, GenTaskReferenceDeterminant) {
  ASSERT_EQ(run("gen-task --n 2 --reference --out ref.json"), 0);
  EXPECT_NEAR(load("ref.json")["certificate"]["det"].get<double>(), -0.25, 1e-12);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("gen-task --n 0"), qsm::tools::kExitUsage);
  EXPECT_EQ(run("gen-task -n 2"), qsm::tools::kExitUsage);
  EXPECT_EQ(run("frobnicate"), qsm::tools::kExitUsage);
  EXPECT_EQ(run("gen-task --n 3 --reference"), qsm::tools::kExitUsage);
  EXPECT_EQ(run("train --model lstm"), qsm::tools::kExitUsage);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  std::ofstream(dir_ / "cfg.json") << R"({"schema_version": 1, "n": 3, "seed": 4, "out": "from_cfg.json"})";
  ASSERT_EQ(run("gen-task --config cfg.json --seed 9"), 0);
  const Json j = load("from_cfg.json");
  EXPECT_EQ(j["n"], 3);
  EXPECT_EQ(j["seed"], 9);

  std::ofstream(dir_ / "bad.json") << R"({"schema_version": 7, "n": 3})";
  EXPECT_EQ(run("gen-task --config bad.json"), qsm::tools::kExitUsage);
  std::ofstream(dir_ / "unknown.json") << R"({"schema_version": 1, "colour": 3})";
  EXPECT_EQ(run("gen-task --config unknown.json"), qsm::tools::kExitUsage);
}

TEST_F(Cli, VerifySeparationN2) {
  ASSERT_EQ(run("verify-separation --n 2 --seed 1 --audit-samples 25 --out sep.json"), 0);
  const Json j = load("sep.json");
  EXPECT_LT(j["cusm_max_error"].get<double>(), 1e-10);
  EXPECT_EQ(j["rank_P"], 4);
  EXPECT_EQ(j["rosm_audit"]["violations"], 0);
  EXPECT_EQ(j["rosm_audit"]["samples"], 100);
}

TEST_F(Cli, VerifySeparationWithRosmSweep) {
  ASSERT_EQ(run("verify-separation --reference --audit-samples 5 --rosm-d 1,2 --rosm-epochs 50 --out sep.json"), 0);
  const Json j = load("sep.json");
  ASSERT_EQ(j["rosm_sweep"].size(), 2u);
  EXPECT_TRUE(j["rosm_sweep"][0]["below_bound"].get<bool>());
}

TEST_F(Cli, SimulateAllFillerCusmHasNoCurrent) {
  ASSERT_EQ(run("simulate --model cusm --n 2 --seed 3 --tokens 4,4,4,4,4 --out sim.csv"), 0);
  std::vector<std::string> header;
  const auto rows = read_csv(text("sim.csv"), header);
  ASSERT_EQ(rows.size(), 6u);
  const auto jc = column(header, "total_current");
  for (const auto& r : rows) EXPECT_EQ(r[jc], 0.0);
  EXPECT_TRUE(fs::exists(dir_ / "sim.json"));
}

TEST_F(Cli, SimulateFullModelColumns) {
  ASSERT_EQ(run("simulate --model full --n 5 --r 2 --vocab-in 6 --vocab-out 7 --seed 2 "
                "--tokens 0,1,2,3,4,5,0,1 --full-currents --save-checkpoint ck.json --out sim.csv"),
            0);
  std::vector<std::string> header;
  const auto rows = read_csv(text("sim.csv"), header);
  ASSERT_EQ(rows.size(), 9u);
  const auto nc = column(header, "norm"), bc = column(header, "balance_residual");
  for (const auto& r : rows) {
    EXPECT_NEAR(r[nc], 1.0, 1e-10);
    EXPECT_LT(r[bc], 1e-11);
  }
  const Json meta = load("sim.json");
  EXPECT_EQ(meta["currents"].size(), 9u);
  EXPECT_EQ(meta["current_mode"], "midpoint");

  // Reloading the checkpoint reproduces the run bit for bit.
  ASSERT_EQ(run("simulate --checkpoint ck.json --tokens 0,1,2,3,4,5,0,1 --out again.csv"), 0);
  EXPECT_EQ(text("again.csv"), text("sim.csv"));
  EXPECT_EQ(run("simulate --checkpoint ck.json --tokens 0,9"), qsm::tools::kExitUsage);
}

TEST_F(Cli, TrainSeedsAggregateAndAblation) {
  ASSERT_EQ(run("train --n 2 --task-seed 1 --seeds 3 --epochs 200 --ablation"), 0);
  const Json agg = load("train_cusm-trainable_n2_aggregate.json");
  EXPECT_EQ(agg["reports"].size(), 3u);
  EXPECT_TRUE(agg.contains("gap_mean") && agg.contains("gap_std"));
  EXPECT_EQ(agg["invariant_failures"], 0);
  for (const auto& name : agg["reports"]) {
    const Json r = load(name.get<std::string>());
    EXPECT_TRUE(r["ablation"].contains("nll_born"));
    EXPECT_TRUE(r["ablation"].contains("nll_diagonal"));
  }
  EXPECT_TRUE(fs::exists(dir_ / "train_cusm-trainable_n2_seed0.csv"));

  const std::string first = text("train_cusm-trainable_n2_aggregate.json");
  ASSERT_EQ(run("train --n 2 --task-seed 1 --seeds 3 --epochs 200 --ablation"), 0);
  Json a = Json::parse(first), b = load("train_cusm-trainable_n2_aggregate.json");
  EXPECT_EQ(a, b);
}

TEST_F(Cli, BenchGrid) {
  ASSERT_EQ(run("bench --n-list 8,16 --r-list 1,2 --repetitions 2 --dense-max-n 8 --out bench.json"), 0);
  const Json j = load("bench.json");
  ASSERT_EQ(j["grid"].size(), 4u);
  EXPECT_TRUE(j["grid"][1]["dense_seconds"].is_null());
  EXPECT_GT(j["grid"][0]["woodbury_seconds"].get<double>(), 0.0);
}
