// Copyright 2026 The efsa Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "efsa/env_model.h"
#include "efsa/trace_io.h"

namespace efsa {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("efsa_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the binary with stdout and stderr captured into files under dir_.
  int Run(const std::string& args) {
    const std::string cmd = std::string(EFSA_BINARY) + " " + args + " > " +
                            (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }
  std::string Stdout() const { return Slurp(Path("stdout.txt")); }

  static std::string Slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void WriteFile(const std::string& name, const std::string& text) const {
    std::ofstream(Path(name)) << text;
  }

  fs::path dir_;
};

const char* kSmallEnv = "--n 30 --K 4 --gamma 0.5 --env-seed 3";

TEST_F(CliTest, GenEnvIsDeterministic) {
  ASSERT_EQ(Run(std::string("gen-env ") + kSmallEnv + " --out " + Path("a")), 0);
  ASSERT_EQ(Run(std::string("gen-env ") + kSmallEnv + " --out " + Path("b")), 0);
  ASSERT_EQ(Run("gen-env --n 30 --K 4 --gamma 0.5 --seed 4 --out " + Path("c")), 0);
  const std::string a = Slurp(Path("a/env.json"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, Slurp(Path("b/env.json")));
  EXPECT_EQ(Slurp(Path("a/ground_truth.json")), Slurp(Path("b/ground_truth.json")));
  EXPECT_NE(a, Slurp(Path("c/env.json")));
}

TEST_F(CliTest, GenEnvSidecarSolvesFixedPoint) {
  ASSERT_EQ(Run("gen-env --n 100 --K 10 --gamma 0.5 --seed 7 --out " + Path("e")), 0);
  Environment env = LoadEnvironment(Path("e/env.json"));
  SteadyState ss = SteadyStateQuantities(env);
  // Pull theta_star out of the sidecar and re-check the residual.
  const std::string truth = Slurp(Path("e/ground_truth.json"));
  const auto key = truth.find("\"theta_star\"");
  ASSERT_NE(key, std::string::npos);
  const auto open = truth.find('[', key);
  const auto close = truth.find(']', open);
  std::string body = truth.substr(open + 1, close - open - 1);
  for (char& ch : body)
    if (ch == ',') ch = ' ';
  std::stringstream in(body);
  std::vector<double> values;
  for (double v; in >> v;) values.push_back(v);
  ASSERT_EQ(values.size(), 10u);
  Vector theta = Eigen::Map<Vector>(values.data(), 10);
  EXPECT_LE(MeanPathDirection(ss, theta).norm(), 1e-10);
}

TEST_F(CliTest, GenEnvRejectsKEqualN) {
  EXPECT_EQ(Run("gen-env --n 10 --K 10 --out " + Path("x")), 2);
  EXPECT_EQ(Run("gen-env --gamma 1.5 --out " + Path("x")), 2);
  EXPECT_EQ(Run("gen-env --bogus"), 2);
  EXPECT_EQ(Run(""), 2);
}

TEST_F(CliTest, VerifyStockEnvironmentPasses) {
  EXPECT_EQ(Run("verify --trials 500"), 0);
  const std::string out = Stdout();
  EXPECT_NE(out.find("L6"), std::string::npos);
  EXPECT_NE(out.find("exempt"), std::string::npos);
  EXPECT_EQ(out.find(" NO"), std::string::npos);
}

TEST_F(CliTest, VerifyRejectsCorruptedEnvironment) {
  ASSERT_EQ(Run(std::string("gen-env ") + kSmallEnv + " --out " + Path("e")), 0);
  std::string text = Slurp(Path("e/env.json"));
  WriteFile("truncated.json", text.substr(0, text.size() / 3));
  EXPECT_EQ(Run("verify --trials 100 --env " + Path("truncated.json")), 2);
  EXPECT_EQ(Run("verify --trials 100 --env " + Path("missing.json")), 2);
  EXPECT_EQ(Run("verify --trials 100 --env " + Path("e/env.json")), 0);
}

TEST_F(CliTest, RunIsReproducible) {
  const std::string config = R"({"schema": 1, "label": "r",
    "env": {"n": 30, "K": 4, "seed": 3}, "compressor": "signscaled",
    "sampler": "markov", "alpha": 0.05, "T": 3000, "trials": 1,
    "record_every": 10, "seed": 5})";
  WriteFile("run.json", config);
  ASSERT_EQ(Run("run --config " + Path("run.json") + " --out " + Path("o1")), 0);
  ASSERT_EQ(Run("run --config " + Path("run.json") + " --out " + Path("o2") +
                " --workers 2"),
            0);
  const std::string a = Slurp(Path("o1/r_trial0.csv"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, Slurp(Path("o2/r_trial0.csv")));
  EXPECT_EQ(Slurp(Path("o1/r_aggregate.csv")), Slurp(Path("o2/r_aggregate.csv")));
  ASSERT_EQ(Run("run --config " + Path("run.json") + " --out " + Path("o3") +
                " --seed 6"),
            0);
  EXPECT_NE(a, Slurp(Path("o3/r_trial0.csv")));
}

TEST_F(CliTest, RunUsesGeneratedEnvironment) {
  ASSERT_EQ(Run(std::string("gen-env ") + kSmallEnv + " --out " + Path("e")), 0);
  WriteFile("run.json", R"({"schema": 1, "label": "p", "env": {"path": ")" +
                            Path("e/env.json") +
                            R"("}, "compressor": "topk:1", "T": 500,
                            "trials": 2, "record_every": 50})");
  EXPECT_EQ(Run("run --config " + Path("run.json") + " --out " + Path("o")), 0);
  EXPECT_TRUE(fs::exists(Path("o/p_trial1.csv")));
}

TEST_F(CliTest, RunRejectsBadConfig) {
  WriteFile("bad.json", R"({"schema": 1, "alpha": 2})");
  EXPECT_EQ(Run("run --config " + Path("bad.json")), 2);
  WriteFile("unknown.json", R"({"schema": 1, "alpah": 0.1})");
  EXPECT_EQ(Run("run --config " + Path("unknown.json")), 2);
  EXPECT_EQ(Run("run --preset fig9"), 2);
  EXPECT_EQ(Run("run"), 2);
}

TEST_F(CliTest, RunReportsDivergence) {
  // Starting beyond the divergence threshold trips the marker on step one.
  WriteFile("wild.json", R"({"schema": 1, "label": "w",
    "env": {"n": 20, "K": 4, "seed": 1}, "algorithm": "td0",
    "sampler": "iid", "compressor": "identity", "alpha": 0.01, "T": 1000,
    "trials": 2, "record_every": 100, "theta0": [1e7, 1e7, 1e7, 1e7]})");
  EXPECT_EQ(Run("run --config " + Path("wild.json") + " --out " + Path("o")), 3);
  const std::string trace = Slurp(Path("o/w_trial0.csv"));
  EXPECT_NE(trace.find("diverged=1"), std::string::npos);
  EXPECT_EQ(Run("report " + Path("o/w_trial0.csv")), 3);
}

TEST_F(CliTest, SweepRejectsEmptyAxis) {
  WriteFile("s.json", R"({"schema": 1, "label": "s",
    "env": {"n": 20, "K": 4, "seed": 1}, "compressor": "topk:1",
    "alpha": 0.05, "T": 200, "trials": 1, "record_every": 10})");
  EXPECT_EQ(Run("sweep --config " + Path("s.json") + " --axis k --values \"\""), 2);
  EXPECT_EQ(Run("sweep --config " + Path("s.json")), 2);
  EXPECT_EQ(Run("sweep --config " + Path("s.json") + " --axis q --values 1"), 2);
  EXPECT_EQ(Run("sweep --config " + Path("s.json") + " --axis k --values 1,x"), 2);
}

TEST_F(CliTest, SweepWritesOneRowPerValue) {
  WriteFile("s.json", R"({"schema": 1, "label": "s",
    "env": {"n": 20, "K": 4, "seed": 1}, "compressor": "topk:1",
    "alpha": 0.05, "T": 2000, "trials": 2, "record_every": 10})");
  ASSERT_EQ(Run("sweep --config " + Path("s.json") + " --axis k --values 1,2,4 --out " +
                Path("o")),
            0);
  std::string csv = Slurp(Path("o/s_sweep.csv"));
  int lines = 0;
  for (char ch : csv) lines += ch == '\n';
  EXPECT_EQ(lines, 4);
}

TEST_F(CliTest, ReportFitsTraces) {
  WriteFile("run.json", R"({"schema": 1, "label": "r",
    "env": {"n": 30, "K": 4, "seed": 3}, "compressor": "topk:2",
    "alpha": 0.05, "T": 5000, "trials": 1, "record_every": 10,
    "theta0": [3, 3, 3, 3]})");
  ASSERT_EQ(Run("run --config " + Path("run.json") + " --out " + Path("o")), 0);
  ASSERT_EQ(Run("report " + Path("o/r_trial0.csv") + " --out " + Path("rep.csv")), 0);
  const std::string rep = Slurp(Path("rep.csv"));
  EXPECT_EQ(rep.rfind("file,rate,plateau,fit_begin,fit_end\n", 0), 0u);
  EXPECT_NE(rep.find("r_trial0.csv,0.9"), std::string::npos);
  EXPECT_EQ(Run("report " + Path("nothing.csv")), 2);
}

}  // namespace
}  // namespace efsa
