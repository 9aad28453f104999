#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tlsim/io.hpp"
#include "tlsim_cli/cli.hpp"

namespace {

namespace fs = std::filesystem;
using tlsim::cli::run;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tlsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
    std::ofstream(dir_ / "light.ini") << "[resolution]\nn_points = 65536\nn_angles = 32\n[detector]\nn_strata = 2\n";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const char* name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, BadFlagsAreUsageErrors) {
  EXPECT_EQ(invoke({"simulate", "--model", "wave"}).code, 1);
  EXPECT_EQ(invoke({"simulate", "--no-such-flag"}).code, 1);
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"fit"}).code, 1);
  std::ofstream(path("bad.ini")) << "g2.period_um = 0\n";
  const Result r = invoke({"simulate", "--config", path("bad.ini")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("g2.period_um"), std::string::npos);
}

TEST_F(CliTest, MissingFilesAreIoErrors) {
  EXPECT_EQ(invoke({"fit", "--events", path("absent.csv")}).code, 3);
  EXPECT_EQ(invoke({"simulate", "--config", path("absent.ini")}).code, 3);
  std::ofstream(path("broken.csv")) << "u_um,s_um\n1,2\n3\n";
  const Result r = invoke({"fit", "--events", path("broken.csv")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("line 3"), std::string::npos);
}

TEST_F(CliTest, HelpAndVersion) {
  EXPECT_EQ(invoke({"--help"}).code, 0);
  const Result v = invoke({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(v.out, std::string(tlsim::version()) + "\n");
}

TEST_F(CliTest, UniformEventsFitWithLowSignificance) {
  tlsim::DetectorSpec det;
  const auto ev = tlsim::sample_events(tlsim::uniform_model(det), 20000, 4, det);
  tlsim::write_file(path("uniform.csv"), tlsim::events_csv(tlsim::make_manifest({}, "test"), ev));
  // One resolution cell around the expected fringe; see Fit.NullFlagsLowSignificance.
  const Result r = invoke({"fit", "--events", path("uniform.csv"), "--period-range", "5.8666:5.8961", "--rotation-range=-0.1:0.1"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("low_significance"), std::string::npos);
}

TEST_F(CliTest, OutputsDoNotDependOnWorkers) {
  const std::vector<std::string> base{"events", "--config", path("light.ini"), "--n", "20000", "--seed", "5"};
  auto a = base, b = base;
  a.insert(a.end(), {"--workers", "1", "--out", path("a.csv")});
  b.insert(b.end(), {"--workers=3", "--out", path("b.csv")});
  ASSERT_EQ(invoke(a).code, 0);
  ASSERT_EQ(invoke(b).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(slurp(path("a.csv.truth")), slurp(path("b.csv.truth")));
  EXPECT_EQ(slurp(path("a.csv")).find("timestamp"), std::string::npos);

  ASSERT_EQ(invoke({"fit", "--events", path("a.csv"), "--workers", "1", "--out", path("fa.txt")}).code, 0);
  ASSERT_EQ(invoke({"fit", "--events", path("a.csv"), "--workers", "4", "--out", path("fb.txt")}).code, 0);
  EXPECT_EQ(slurp(path("fa.txt")), slurp(path("fb.txt")));
}

TEST_F(CliTest, SimulateWritesProfile) {
  const Result r = invoke({"simulate", "--config", path("light.ini"), "--model", "classical"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("x_um,intensity\n"), std::string::npos);
  const Result warn = invoke({"simulate", "--config", path("light.ini"), "--model", "classical", "--energy", "20"});
  EXPECT_EQ(warn.code, 0);
  EXPECT_NE(warn.err.find("outside"), std::string::npos);
}

TEST(CanonicalCommand, DropsWorkersAndPaths) {
  using tlsim::cli::canonical_command;
  EXPECT_EQ(canonical_command({"events", "--workers", "4", "--out", "x.csv", "--n", "10"}), "tlsim events --n 10");
  EXPECT_EQ(canonical_command({"scan-energy", "--workers=2", "--overlay=o.csv", "--seed", "3"}),
            "tlsim scan-energy --seed 3");
  EXPECT_EQ(canonical_command({"events", "--truth", "t.txt"}), "tlsim events");
}

}  // namespace
