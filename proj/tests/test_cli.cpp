#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(PFILIN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_temp(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

TEST(Cli, ValidatePasses) { EXPECT_EQ(run("validate"), 0); }

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("run --config " + write_temp("pfilin_bad.cfg", "bogus = 1\n").string()), 2);
  EXPECT_EQ(run("run --config /nonexistent/run.cfg"), 3);
  EXPECT_EQ(run("run --config " + write_temp("pfilin_invalid.cfg", "replications = 0\n").string()), 4);
  EXPECT_EQ(run("bounds --delta 0.3"), 4);
  EXPECT_NE(run("no-such-command"), 0);
}

TEST(Cli, BoundsPrintsWarmup) {
  const fs::path out = fs::temp_directory_path() / "pfilin_bounds.txt";
  const std::string cmd = std::string(PFILIN_CLI_PATH) + " bounds > " + out.string();
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  std::ifstream in(out);
  bool found = false;
  for (std::string line; std::getline(in, line);) found = found || line == "warmup_round=440";
  EXPECT_TRUE(found);
}

TEST(Cli, GenDataWritesTable) {
  const fs::path out = fs::temp_directory_path() / "pfilin_gen.csv";
  fs::remove(out);
  ASSERT_EQ(run("gen-data --out " + out.string() + " --seed 3"), 0);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "reward_0,reward_1");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  EXPECT_EQ(rows, 1024u);
}

TEST(Cli, RunWithOverrides) {
  const fs::path dir = fs::temp_directory_path() / "pfilin_cli_run";
  fs::remove_all(dir);
  const fs::path cfg = write_temp("pfilin_run.cfg",
                                  "experiment = \"estimator-consistency\"\n[estimators]\nrounds = 100\n"
                                  "checkpoints = [50, 100]\n");
  ASSERT_EQ(run("run --config " + cfg.string() + " --out " + dir.string() + " --reps 3 --seed 5"), 0);
  EXPECT_TRUE(fs::exists(dir / "consistency_curves.csv"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

}  // namespace
