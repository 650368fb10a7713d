#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;  // stdout and stderr combined
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string("\"") + SFCSIM_EXE + "\" " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sfcsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "tiny.json") << R"({
      "sim": {"horizon": 40, "episodes": 3, "eval_seeds": 2},
      "workload": {"lambda": 1.0},
      "dqn": {"hidden_width": 16, "hidden_layers": 2, "warmup": 20, "batch_size": 8}
    })";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("train").code, 2);
  EXPECT_EQ(run("verify --level medium").code, 2);
  EXPECT_EQ(run("sweep --out " + path("s") + " --axis mu --values 1").code, 2);
}

TEST_F(Cli, HelpExitsZero) {
  const Result r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("train"), std::string::npos);
}

TEST_F(Cli, MissingScenarioNamesThePath) {
  const std::string missing = path("nope.json");
  const Result r = run("eval --bundle H+H --out " + path("e") + " --scenario " + missing);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find(missing), std::string::npos) << r.out;
}

TEST_F(Cli, MalformedScenario) {
  std::ofstream(dir_ / "bad.json") << "{\"sim\": {";
  EXPECT_EQ(run("eval --bundle H+H --out " + path("e") + " --scenario " + path("bad.json")).code, 2);
  std::ofstream(dir_ / "unknown.json") << R"({"sim": {"horizn": 3}})";
  const Result r = run("eval --bundle H+H --out " + path("e") + " --scenario " + path("unknown.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("sim.horizn"), std::string::npos);
}

TEST_F(Cli, UnknownBundleListsValidOnes) {
  const Result r = run("eval --bundle RL+X --out " + path("e"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("RL+RL, RL+H, H+RL, H+H"), std::string::npos) << r.out;
}

TEST_F(Cli, EmptySweepValues) {
  const Result r = run("sweep --axis lambda --values , --out " + path("s") + " --scenario " + path("tiny.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(run("sweep --axis lambda --values 1/0 --out " + path("s")).code, 2);
  EXPECT_EQ(run("sweep --axis lambda --values abc --out " + path("s")).code, 2);
}

TEST_F(Cli, RlEvalWithoutCheckpointsFails) {
  const Result r = run("eval --bundle RL+RL --out " + path("e") + " --scenario " + path("tiny.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("checkpoints"), std::string::npos);
  const Result missing =
      run("eval --bundle RL+H --out " + path("e") + " --checkpoints " + path("none") + " --scenario " + path("tiny.json"));
  EXPECT_EQ(missing.code, 1);
}

TEST_F(Cli, HeuristicEvalWritesOutputsAndReruns) {
  const Result r = run("eval --bundle H+H --out " + path("e1") + " --scenario " + path("tiny.json") + " --seeds 3");
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string eval_csv = slurp(dir_ / "e1" / "eval.csv");
  EXPECT_EQ(eval_csv.rfind("bundle,seeds,mean_profit,std_profit,mean_acceptance,std_acceptance\nH+H,3,", 0), 0u)
      << eval_csv;
  const std::string metrics = slurp(dir_ / "e1" / "metrics.csv");
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 4);

  const Result again = run("eval --bundle H+H --out " + path("e2") + " --scenario " + path("e1/resolved_config.json"));
  ASSERT_EQ(again.code, 0) << again.out;
  EXPECT_EQ(slurp(dir_ / "e2" / "metrics.csv"), metrics);
  EXPECT_EQ(slurp(dir_ / "e2" / "eval.csv"), eval_csv);
  EXPECT_EQ(slurp(dir_ / "e2" / "resolved_config.json"), slurp(dir_ / "e1" / "resolved_config.json"));
}

TEST_F(Cli, TrainThenEvalIsReproducible) {
  const Result t = run("train --out " + path("t1") + " --scenario " + path("tiny.json"));
  ASSERT_EQ(t.code, 0) << t.out;
  int ckpts = 0;
  for (const auto& entry : fs::directory_iterator(dir_ / "t1" / "checkpoints")) ckpts += entry.path().extension() == ".ckpt";
  EXPECT_EQ(ckpts, 10);
  const std::string metrics = slurp(dir_ / "t1" / "metrics.csv");
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 4);

  const Result t2 = run("train --out " + path("t2") + " --scenario " + path("t1/resolved_config.json"));
  ASSERT_EQ(t2.code, 0) << t2.out;
  EXPECT_EQ(slurp(dir_ / "t2" / "metrics.csv"), metrics);
  for (const auto& entry : fs::directory_iterator(dir_ / "t1" / "checkpoints"))
    EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "t2" / "checkpoints" / entry.path().filename()));

  for (const char* bundle : {"RL+RL", "RL+H", "H+RL"}) {
    const std::string args = std::string("eval --bundle ") + bundle + " --checkpoints " + path("t1/checkpoints");
    const Result e = run(args + " --out " + path("ev") + " --scenario " + path("tiny.json"));
    ASSERT_EQ(e.code, 0) << e.out;
    const Result e2 = run(args + " --out " + path("ev2") + " --scenario " + path("ev/resolved_config.json"));
    ASSERT_EQ(e2.code, 0) << e2.out;
    EXPECT_EQ(slurp(dir_ / "ev2" / "metrics.csv"), slurp(dir_ / "ev" / "metrics.csv"));
  }
}

TEST_F(Cli, SeedPrecedence) {
  const std::string base = "eval --bundle H+H --seeds 1 --scenario " + path("tiny.json") + " --out ";
  ASSERT_EQ(run(base + path("a"), "SFCSIM_SEED=5").code, 0);
  ASSERT_EQ(run(base + path("b") + " --seed 6", "SFCSIM_SEED=5").code, 0);
  ASSERT_EQ(run(base + path("c")).code, 0);
  auto eval_base = [&](const char* d) {
    return nlohmann::json::parse(slurp(dir_ / d / "resolved_config.json")).at("sim").at("eval_seed_base").get<std::uint64_t>();
  };
  EXPECT_EQ(eval_base("a"), 5u);
  EXPECT_EQ(eval_base("b"), 6u);
  EXPECT_EQ(eval_base("c"), 1000003u);
  EXPECT_EQ(run(base + path("d"), "SFCSIM_SEED=abc").code, 2);

  ASSERT_EQ(run("train --out " + path("t") + " --scenario " + path("tiny.json"), "SFCSIM_SEED=17").code, 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "t" / "resolved_config.json")).at("sim").at("seed"), 17);
}

TEST_F(Cli, LambdaSweep) {
  const Result r = run("sweep --axis lambda --values 1/10,1 --seeds 2 --out " + path("s") + " --scenario " + path("tiny.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = slurp(dir_ / "s" / "sweep.csv");
  EXPECT_EQ(csv.rfind("axis,value,bundle,seeds,mean_profit,std_profit,mean_acceptance,std_acceptance\n", 0), 0u);
  EXPECT_NE(csv.find("\nlambda,0.1,H+H,2,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\nlambda,1,H+H,2,"), std::string::npos) << csv;
}

TEST_F(Cli, GammaSweepTrainsPerValue) {
  const Result r = run("sweep --axis gamma --values 0,1 --seeds 1 --bundle RL+RL --bundle H+H --out " + path("g") +
                    " --scenario " + path("tiny.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = slurp(dir_ / "g" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5) << csv;
  EXPECT_NE(csv.find("\ngamma,0,RL+RL,1,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\ngamma,1,H+H,1,"), std::string::npos) << csv;
}

TEST_F(Cli, VerifyFast) {
  const Result r = run("verify --level fast");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("7/7 checks passed"), std::string::npos) << r.out;
}
