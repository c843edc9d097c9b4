#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support.hpp"

#ifdef DSBM_CLI_PATH

namespace dsbm {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd = std::string(DSBM_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::ostringstream s;
  s << in.rdbuf();
  r.out = s.str();
  return r;
}

const char* kConfig = R"({
  "model": {"n": 20, "K": 2, "T": 6, "s": 0,
            "connectivity": {"family": "ConstantMatrix", "base": [[0.7, 0.1], [0.1, 0.7]]}},
  "estimator": {"l": 0, "r": 1},
  "clustering": {"K": 2, "restarts": 3}
})";

TEST(Cli, KernelTable) {
  test::TempDir dir;
  const CliRun r = run("kernel --window interior --r 2 --l 2", dir.path());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("2.428571428571"), std::string::npos) << r.out;
  const CliRun j = run("kernel --window left --r 1 --l 1 --json", dir.path());
  EXPECT_EQ(j.code, 0);
  const auto parsed = nlohmann::json::parse(j.out);
  EXPECT_EQ(parsed.at("weights"), nlohmann::json({2.0, 0.0}));
}

TEST(Cli, ExitCodes) {
  test::TempDir dir;
  EXPECT_EQ(run("kernel --window left --r 1 --l 2", dir.path()).code, 3);
  EXPECT_EQ(run("simulate --config " + (dir.path() / "missing.json").string(), dir.path()).code, 4);
  std::ofstream(dir.path() / "bad.json") << "{\"model\": {}}";
  EXPECT_EQ(run("simulate --config " + (dir.path() / "bad.json").string(), dir.path()).code, 2);
  EXPECT_EQ(run("nonsense", dir.path()).code, 2);
  EXPECT_EQ(run("--help", dir.path()).code, 0);
}

TEST(Cli, SimulateClusterEvaluate) {
  test::TempDir dir;
  const fs::path cfg = dir.path() / "cfg.json";
  std::ofstream(cfg) << kConfig;
  const std::string d = dir.path().string();
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --output " + d + "/sim", dir.path()).code, 0);
  ASSERT_EQ(run("cluster --config " + cfg.string() + " --snapshots " + d + "/sim/snapshots.bin --output " + d +
                    "/cl --set clustering.restarts=4",
                dir.path())
                .code,
            0);
  ASSERT_EQ(run("evaluate --labels " + d + "/cl/labels.csv --truth " + d + "/sim/truth.csv --metadata " + d +
                    "/cl/metadata.json --output " + d + "/metrics.csv",
                dir.path())
                .code,
            0);
  EXPECT_TRUE(fs::exists(dir.path() / "metrics.csv"));
  EXPECT_EQ(run("cluster --config " + cfg.string() + " --snapshots " + d + "/sim/snapshots.bin --r 9 --output " + d +
                    "/cl2",
                dir.path())
                .code,
            2);
  EXPECT_EQ(run("cluster --config " + cfg.string() + " --snapshots " + d + "/nothing.bin --output " + d + "/cl3",
                dir.path())
                .code,
            4);
}

}  // namespace
}  // namespace dsbm

#endif
