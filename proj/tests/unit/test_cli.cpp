#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fragseg/commands.hpp"
#include "test_support.hpp"

using fragseg::testing::TempDir;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(FRAGSEG_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, SeedIsStablePerSet) {
  using fragseg::cli::set_seed;
  EXPECT_EQ(set_seed(0, "a_1"), set_seed(0, "a_1"));
  EXPECT_NE(set_seed(0, "a_1"), set_seed(0, "a_2"));
  EXPECT_NE(set_seed(0, "a_1"), set_seed(1, "a_1"));
}

TEST(Cli, JobsFromEnvironment) {
  unsetenv("FRAGSEG_JOBS");
  EXPECT_EQ(fragseg::cli::resolve_jobs(3), 3);
  EXPECT_EQ(fragseg::cli::resolve_jobs(0), 1);
  setenv("FRAGSEG_JOBS", "2", 1);
  EXPECT_EQ(fragseg::cli::resolve_jobs(5), 2);
  setenv("FRAGSEG_JOBS", "junk", 1);
  EXPECT_EQ(fragseg::cli::resolve_jobs(5), 5);
  unsetenv("FRAGSEG_JOBS");
}

TEST(Cli, UsageErrors) {
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("segment --root /nonexistent"), 0);
  EXPECT_NE(run("synth --out /tmp/x --fragments 4"), 0);
}

TEST(Cli, SynthSegmentEvalOverlay) {
  TempDir tmp("fragseg_cli");
  const auto sets = tmp.path() / "sets";
  const auto out = tmp.path() / "out";
  ASSERT_EQ(run("synth --out " + sets.string() + " --count 1 --size 600 --seed 2"), 0);
  ASSERT_TRUE(std::filesystem::exists(tmp.path() / "boxes" / "synth0_1.json"));
  ASSERT_EQ(run("segment --root " + sets.string() + " --boxes " + (tmp.path() / "boxes").string() + " --out " +
                out.string()),
            0);
  ASSERT_TRUE(std::filesystem::exists(out / "synth0_1" / "log.json"));
  ASSERT_TRUE(std::filesystem::exists(out / "synth0_1" / "synth0_1_1.wkt"));
  const auto report = tmp.path() / "report.csv";
  ASSERT_EQ(run("eval --pred " + out.string() + " --gt " + sets.string() + " --out " + report.string()), 0);
  const std::string csv = read_text(report);
  EXPECT_EQ(csv.rfind("id,iou,precision,recall,f1,accuracy\n", 0), 0u);
  EXPECT_NE(csv.find("\nsynth0_1,"), std::string::npos);
  EXPECT_NE(csv.find("\nMEAN,"), std::string::npos);
  EXPECT_EQ(run("overlay --image " + (sets / "synth0_1" / "recto_color.png").string() + " --wkt " +
                (out / "synth0_1").string() + " --out " + (tmp.path() / "ov.png").string()),
            0);
  EXPECT_TRUE(std::filesystem::exists(tmp.path() / "ov.png"));
  EXPECT_EQ(run("align --root " + sets.string() + " --set synth0_1 --boxes " + (tmp.path() / "boxes").string() +
                " --out " + (tmp.path() / "al.json").string()),
            0);
  EXPECT_NE(read_text(tmp.path() / "al.json").find("\"matrix\""), std::string::npos);
}

TEST(Cli, MissingBarBoxesFailsTheSet) {
  TempDir tmp("fragseg_cli");
  const auto sets = tmp.path() / "sets";
  ASSERT_EQ(run("synth --out " + sets.string() + " --count 1 --size 300"), 0);
  std::filesystem::create_directories(tmp.path() / "empty");
  EXPECT_EQ(run("segment --root " + sets.string() + " --boxes " + (tmp.path() / "empty").string() + " --out " +
                (tmp.path() / "out").string()),
            1);
  EXPECT_NE(read_text(tmp.path() / "out" / "synth0_1" / "log.json").find("\"error\""), std::string::npos);
}
