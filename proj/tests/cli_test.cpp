#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root = fs::temp_directory_path() /
           ("fdrcast_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  void TearDown() override { fs::remove_all(root); }

  int run(const std::string& args) {
    const std::string cmd = std::string(FDRCAST_CLI_PATH) + " " + args + " > " +
                            (root / "stdout.txt").string() + " 2> " +
                            (root / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string path(const std::string& rel) { return (root / rel).string(); }

  fs::path root;
};

TEST_F(CliTest, HelpExitsZero) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("train --help"), 0);
}

TEST_F(CliTest, MissingSampleCountIsUsageError) {
  EXPECT_EQ(run("simulate --preset paper-like --seed 7 -o " + path("sim")), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(CliTest, InvalidChannelParamsIsUsageError) {
  EXPECT_EQ(run("simulate --p-gb 1.5 --p-bg 0.1 --s-good 1 --s-bad 0 -n 10 -o " +
                path("sim")),
            2);
  EXPECT_EQ(run("simulate --preset nope -n 10 -o " + path("sim")), 2);
}

TEST_F(CliTest, SimulateIsDeterministicAndWritesManifest) {
  ASSERT_EQ(run("simulate --preset paper-like -n 5000 --seed 7 -o " + path("a")), 0);
  ASSERT_EQ(run("simulate --preset paper-like -n 5000 --seed 7 -o " + path("b")), 0);
  const auto a = read(root / "a" / "trace.txt");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, read(root / "b" / "trace.txt"));
  const auto m = nlohmann::json::parse(read(root / "a" / "manifest.json"));
  EXPECT_EQ(m["command"], "simulate");
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["seeds"]["channel"], 7);
  EXPECT_EQ(m["parameters"]["n"], 5000);
}

TEST_F(CliTest, PrepareCountsAndEmptySplitWarning) {
  ASSERT_EQ(run("simulate --preset paper-like -n 3000 --seed 1 -o " + path("sim")), 0);
  ASSERT_EQ(run("prepare --trace " + path("sim/trace.txt") +
                " -l 20 --horizon 10 --train-stride 3 -o " + path("ds")),
            0);
  const auto d = nlohmann::json::parse(read(root / "ds" / "dataset.json"));
  // 1500 / 500 / 1000 outcomes with floor split boundaries.
  EXPECT_EQ(d["segment_lengths"], nlohmann::json({1500, 500, 1000}));
  const std::size_t c_train = (1500 - 20 - 10 + 1 + 2) / 3;
  EXPECT_EQ(d["pair_counts"], nlohmann::json({c_train, 500 - 29, 1000 - 29}));

  ASSERT_EQ(run("prepare --trace " + path("sim/trace.txt") +
                " -l 20 --horizon 10 --split 1 0 0 -o " + path("all")),
            0);
  EXPECT_NE(read(root / "stderr.txt").find("warning"), std::string::npos);
}

TEST_F(CliTest, PrepareTooShortNamesMinimum) {
  ASSERT_EQ(run("simulate --preset paper-like -n 100 --seed 1 -o " + path("sim")), 0);
  EXPECT_EQ(run("prepare --trace " + path("sim/trace.txt") +
                " -l 20 --horizon 500 -o " + path("ds")),
            1);
  EXPECT_NE(read(root / "stderr.txt").find("at least"), std::string::npos);
}

TEST_F(CliTest, TrainTwiceGivesIdenticalCheckpoint) {
  ASSERT_EQ(run("simulate --preset paper-like -n 4000 --seed 3 -o " + path("sim")), 0);
  ASSERT_EQ(run("prepare --trace " + path("sim/trace.txt") +
                " -l 16 --horizon 16 --train-stride 4 --eval-stride 4 -o " + path("ds")),
            0);
  const std::string common = "train lstm --data " + path("ds") +
                             " -b 16 -n 3 --epochs 2 --seed 11 -o ";
  ASSERT_EQ(run(common + path("t1")), 0);
  ASSERT_EQ(run(common + path("t2")), 0);
  const auto c1 = read(root / "t1" / "model.ckpt");
  EXPECT_FALSE(c1.empty());
  EXPECT_EQ(c1, read(root / "t2" / "model.ckpt"));
  const auto log = read(root / "t1" / "train_log.csv");
  EXPECT_EQ(log.rfind("epoch,learning_rate,train_mse,validation_mse,elapsed_s\n", 0), 0u);

  ASSERT_EQ(run("evaluate --model " + path("t1/model.ckpt") + " --data " + path("ds") +
                " -o " + path("ev")),
            0);
  EXPECT_TRUE(fs::exists(root / "ev" / "table2.csv"));
  EXPECT_EQ(run("bench --model " + path("t1/model.ckpt") + " --reps 99 -o " + path("b")), 2);
  ASSERT_EQ(run("bench --model " + path("t1/model.ckpt") + " --reps 100 -o " + path("b")), 0);
  EXPECT_TRUE(fs::exists(root / "b" / "table3.csv"));
}

TEST_F(CliTest, EvaluateRejectsMismatchedWindowLength) {
  ASSERT_EQ(run("simulate --preset paper-like -n 3000 --seed 3 -o " + path("sim")), 0);
  ASSERT_EQ(run("prepare --trace " + path("sim/trace.txt") +
                " -l 16 --horizon 8 --train-stride 8 -o " + path("a")),
            0);
  ASSERT_EQ(run("prepare --trace " + path("sim/trace.txt") +
                " -l 12 --horizon 8 -o " + path("b")),
            0);
  ASSERT_EQ(run("train cnn --data " + path("a") + " -b 16 -n 2 --epochs 1 -o " + path("t")), 0);
  EXPECT_EQ(run("evaluate --model " + path("t/model.ckpt") + " --data " + path("b") +
                " -o " + path("ev")),
            1);
}

TEST_F(CliTest, TuneStubSelectsArgminForAnyWorkerCount) {
  ASSERT_EQ(run("tune cnn --stub-loss --workers 1 --seed 5 -o " + path("w1")), 0);
  ASSERT_EQ(run("tune cnn --stub-loss --workers 4 --seed 5 -o " + path("w4")), 0);
  const auto b1 = nlohmann::json::parse(read(root / "w1" / "best.json"));
  const auto b4 = nlohmann::json::parse(read(root / "w4" / "best.json"));
  EXPECT_EQ(b1["batch_size"], 64);
  EXPECT_EQ(b1["width"], 128);
  EXPECT_EQ(b1["input_length"], 1800);
  EXPECT_EQ(b1["trials_executed"], 27);
  EXPECT_EQ(b1["batch_size"], b4["batch_size"]);
  EXPECT_EQ(b1["width"], b4["width"]);
  EXPECT_EQ(b1["input_length"], b4["input_length"]);
  EXPECT_TRUE(fs::exists(root / "w1" / "summary.csv"));

  // A rerun over a complete store executes nothing.
  ASSERT_EQ(run("tune cnn --stub-loss --seed 5 -o " + path("w1")), 0);
  EXPECT_EQ(nlohmann::json::parse(read(root / "w1" / "best.json"))["trials_executed"], 0);
}

TEST_F(CliTest, DefaultOutputRootFromEnvironment) {
  const std::string cmd = "FDRCAST_OUT_ROOT=" + root.string() + " " + FDRCAST_CLI_PATH +
                          " simulate --preset paper-like -n 100 > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(root / "simulate" / "trace.txt"));
}

}  // namespace
