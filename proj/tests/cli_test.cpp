#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "uavllm/mission.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kData = UAVLLM_DATA_DIR;
const std::string kUavctl = UAVCTL_PATH;

struct Outcome {
  int code = -1;
  std::string out;
};

/// Runs uavctl with `args`, capturing stdout; stderr is discarded.
Outcome uavctl(const std::string& args) {
  const std::string cmd = kUavctl + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return o;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) o.out.append(buf, n);
  const int status = pclose(p);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("uavctl_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, RunDirectWritesLog) {
  const Outcome o = uavctl("run --mission " + kData + "/missions/mission-1.json --mode direct --out " +
                           path("m1.ndjson"));
  EXPECT_EQ(o.code, 0);
  const uavllm::MissionLog log = uavllm::read_log_file(path("m1.ndjson"));
  EXPECT_EQ(log.status, uavllm::MissionStatus::kReached);
  EXPECT_EQ(nlohmann::json::parse(o.out)["metrics"]["net_collisions"], 0);
}

TEST_F(Cli, RunLlmWithFixture) {
  const Outcome o = uavctl("run --mission " + kData + "/missions/mission-2.json --mode llm --provider scripted --fixture " +
                           kData + "/fixtures/mission-2.json --out " + path("m2.ndjson"));
  EXPECT_EQ(o.code, 0);
  EXPECT_LT(nlohmann::json::parse(o.out)["metrics"]["calls_used"].get<int>(), 10);
}

TEST_F(Cli, UsageAndEnvironmentFailures) {
  // Scripted provider without a fixture is a usage error.
  EXPECT_EQ(uavctl("run --mission " + kData + "/missions/mission-2.json --mode llm").code, 2);
  EXPECT_EQ(uavctl("run --mode direct").code, 2);
  EXPECT_EQ(uavctl("run --mission x.json --mode sideways").code, 2);
  EXPECT_EQ(uavctl("").code, 2);
  EXPECT_EQ(uavctl("--help").code, 0);
  // Missing files are environment failures.
  EXPECT_EQ(uavctl("run --mission " + path("absent.json")).code, 3);
  EXPECT_EQ(uavctl("run --mission " + kData + "/missions/mission-2.json --mode llm --fixture " +
                   path("absent.json"))
                .code,
            3);
}

TEST_F(Cli, BudgetExhaustionIsMissionFailure) {
  const Outcome o =
      uavctl("run --mission " + kData + "/missions/mission-1.json --mode llm --fixture " + kData +
             "/fixtures/mission-1.json --call-limit 3 --out " + path("b.ndjson"));
  EXPECT_EQ(o.code, 1);
  EXPECT_EQ(nlohmann::json::parse(o.out)["status"], "budget_exhausted");
}

TEST_F(Cli, ReplayEvaluateAndPlot) {
  ASSERT_EQ(uavctl("run --mission " + kData + "/missions/mission-3.json --out " + path("m3.ndjson")).code, 0);
  EXPECT_EQ(uavctl("replay " + path("m3.ndjson") + " --out " + path("again.ndjson")).code, 0);
  EXPECT_EQ(slurp(path("again.ndjson")), slurp(path("m3.ndjson")));
  const Outcome ev = uavctl("evaluate " + path("m3.ndjson"));
  EXPECT_EQ(ev.code, 0);
  EXPECT_TRUE(nlohmann::json::parse(ev.out)["reached"].get<bool>());

  EXPECT_EQ(uavctl("plot " + path("m3.ndjson") + " --out " + path("p1")).code, 0);
  EXPECT_EQ(uavctl("plot " + path("m3.ndjson") + " --out " + path("p2")).code, 0);
  EXPECT_FALSE(slurp(path("p1.svg")).empty());
  EXPECT_EQ(slurp(path("p1.svg")), slurp(path("p2.svg")));
  EXPECT_EQ(slurp(path("p1.csv")), slurp(path("p2.csv")));

  // A log with two records swapped no longer replays.
  std::istringstream in(slurp(path("m3.ndjson")));
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  std::swap(lines[3], lines[4]);
  std::ofstream bad(path("bad.ndjson"));
  for (const auto& l : lines) bad << l << "\n";
  bad.close();
  EXPECT_EQ(uavctl("replay " + path("bad.ndjson")).code, 1);

  std::ofstream truncated(path("cut.ndjson"));
  truncated << lines[0] << "\n" << lines[1] << "\n";
  truncated.close();
  EXPECT_EQ(uavctl("evaluate " + path("cut.ndjson")).code, 1);
}

TEST_F(Cli, ValidateWorlds) {
  const Outcome ok = uavctl("validate " + kData + "/worlds/world-1.json");
  EXPECT_EQ(ok.code, 0);
  const auto report = nlohmann::json::parse(ok.out);
  EXPECT_EQ(report["occupied_cells"], 4);
  EXPECT_TRUE(report["ok"].get<bool>());

  nlohmann::json world = nlohmann::json::parse(slurp(kData + "/worlds/world-1.json"));
  world["obstacles"][0]["center"] = {30.0, 10.0, 2.5};
  std::ofstream(path("outside.json")) << world.dump();
  const Outcome outside = uavctl("validate " + path("outside.json"));
  EXPECT_EQ(outside.code, 1);
  EXPECT_NE(outside.out.find("cube-1"), std::string::npos);

  world = nlohmann::json::parse(slurp(kData + "/worlds/world-1.json"));
  world["resolution"] = 0.0;
  std::ofstream(path("zero.json")) << world.dump();
  EXPECT_EQ(uavctl("validate " + path("zero.json")).code, 1);
}

TEST_F(Cli, SchemasAndGridExport) {
  const Outcome s = uavctl("schemas");
  EXPECT_EQ(s.code, 0);
  EXPECT_EQ(nlohmann::json::parse(s.out)["tools"].size(), 8u);
  const Outcome g = uavctl("export-grid " + kData + "/worlds/world-1.json");
  EXPECT_EQ(g.code, 0);
  EXPECT_EQ(std::count(g.out.begin(), g.out.end(), '\n'), 20);
}
