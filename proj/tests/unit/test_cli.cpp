#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "hdlp/cli.hpp"
#include "hdlp/homogeneity.hpp"
#include "hdlp/localize.hpp"
#include "hdlp/panel.hpp"
#include "hdlp/segmentation.hpp"
#include "hdlp/simgen.hpp"

using namespace hdlp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hdlp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  /// Two-change panel (delta 1 at 0.4 T and 0.7 T) saved as binary.
  std::string two_change_panel() const {
    SimulationScenario s;
    s.n = 30;
    s.p = 50;
    s.T = 60;
    s.delta = {1.0};
    s.change_fracs = {0.4, 0.7};
    s.seed = 5;
    save_panel(simulate_panel(s).panel, path("panel.bin"), PanelFormat::binary);
    return path("panel.bin");
  }

  fs::path dir_;
};

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_F(CliTest, TestMatchesLibrary) {
  const auto input = two_change_panel();
  const auto r = cli({"test", "--input", input, "--lo", "5", "--hi", "40"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto panel = load_panel(input, PanelFormat::binary);
  const auto expected = to_json(homogeneity_test(panel, {5, 40}, VarianceMode::ustat, 0.05));
  EXPECT_EQ(nlohmann::json::parse(r.out), nlohmann::json::parse(expected));
}

TEST_F(CliTest, SegmentMatchesLibraryAndWritesFile) {
  const auto input = two_change_panel();
  const auto r = cli({"segment", "--input", input, "--variance-mode", "pairwise", "--out",
                      path("seg.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  SegmentationOptions opt;
  opt.variance_mode = VarianceMode::pairwise;
  const auto expected = binary_segmentation(load_panel(input, PanelFormat::binary), opt);
  const auto got = nlohmann::json::parse(slurp(path("seg.json")));
  EXPECT_EQ(got, nlohmann::json::parse(to_json(expected)));
  EXPECT_EQ(got.at("change_points"), nlohmann::json({24, 42}));
}

TEST_F(CliTest, SimulateThenSegment) {
  const auto cfg = write("sim.cfg",
                         "n = 60\np = 200\nT = 100\ndelta = 0.6\nchange_fracs = 0.4, 0.7\nseed = 1\n");
  auto r = cli({"simulate", "--config", cfg, "--out", path("x.csv"), "--seed", "8"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto summary = nlohmann::json::parse(r.out);
  EXPECT_EQ(summary.at("seed"), 8);
  EXPECT_EQ(summary.at("change_points"), nlohmann::json({40, 70}));
  r = cli({"segment", "--input", path("x.csv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("change_points"), nlohmann::json({40, 70}));
}

TEST_F(CliTest, FlagsOverrideConfig) {
  const auto input = two_change_panel();
  const auto cfg = write("test.cfg", "input = " + input + "\nalpha = 0.2\nvariance_mode = pairwise\n");
  const auto r = cli({"test", "--config", cfg, "--alpha", "0.01"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("alpha"), 0.01);
  EXPECT_EQ(j.at("variance_mode"), "pairwise");
}

TEST_F(CliTest, ExitCodes) {
  const auto input = two_change_panel();
  auto r = cli({"test", "--input", input, "--alpha", "1.5"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("alpha"), std::string::npos);
  EXPECT_EQ(cli({"test", "--input", input, "--bogus", "1"}).code, kExitUsage);
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  const auto help = cli({"localize", "--help"});
  EXPECT_EQ(help.code, kExitOk);
  EXPECT_NE(help.out.find("--tau"), std::string::npos);
  EXPECT_EQ(cli({"test", "--input", input, "--variance-mode", "robust"}).code, kExitUsage);
  EXPECT_EQ(cli({"test", "--input", input, "--lo", "50", "--hi", "52"}).code, kExitUsage);
  EXPECT_EQ(cli({"test", "--config", write("bad.cfg", "input = " + input + "\nalhpa = 0.1\n")}).code,
            kExitUsage);

  r = cli({"test", "--input", path("missing.csv")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("missing.csv"), std::string::npos);
  const auto garbage = write("garbage.csv", "subject,time,coord,value\n1,1,x,2\n");
  EXPECT_EQ(cli({"segment", "--input", garbage}).code, kExitData);
}

TEST_F(CliTest, LocalizeCsvAndJson) {
  const auto input = two_change_panel();
  auto r = cli({"localize", "--input", input, "--tau", "24", "--q", "0.05", "--out", path("loc.csv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto csv = slurp(path("loc.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "coord,t_stat,p_value,selected");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 51);

  r = cli({"localize", "--input", input, "--tau", "24", "--q", "0.05", "--method", "bh"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const auto expected = localize_change(load_panel(input, PanelFormat::binary), 24, 0.05,
                                        FdrOptions{FdrMethod::bh, 0.5});
  EXPECT_EQ(j, nlohmann::json::parse(to_json(expected)));
  EXPECT_EQ(cli({"localize", "--input", input, "--tau", "60"}).code, kExitUsage);
  EXPECT_EQ(cli({"localize", "--input", input}).code, kExitUsage);
}

TEST_F(CliTest, BenchPowerWritesReport) {
  const auto cfg = write("grid.cfg",
                         "grid.delta = 0, 1\ngrid.n = 8\ngrid.p = 10\ngrid.T = 20\nreplications = 4\n");
  const auto r = cli({"bench-power", "--config", cfg, "--out", path("report"), "--seed", "3"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "delta,n,p,T,reps,reject_rate,mc_stderr");
  EXPECT_TRUE(fs::exists(path("report/size_power.csv")));
  EXPECT_TRUE(fs::exists(path("report/power_vs_n.svg")));
  EXPECT_EQ(nlohmann::json::parse(slurp(path("report/manifest.json"))).at("base_seed"), 3);
}

TEST_F(CliTest, BenchIdentifyWritesReport) {
  const auto cfg = write("grid.cfg",
                         "grid.delta = 1\ngrid.n = 10\ngrid.p = 10\ngrid.T = 30\nreplications = 3\n"
                         "change_fracs = 0.4, 0.7\n");
  const auto r = cli({"bench-identify", "--config", cfg, "--out", path("ident")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "delta,n,p,T,reps,mean_fp_plus_fn,mean_tp");
  EXPECT_TRUE(fs::exists(path("ident/fp_fn_vs_n.svg")));
}
