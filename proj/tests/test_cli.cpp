#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

namespace fs = std::filesystem;
using patchdyn::cli::run;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("patchdyn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, RegimeExample) {
  const auto r = invoke({"regime", "--m", "0.9", "--e", "0.1", "--h", "0.9", "--delta", "0.1", "--s", "0.9"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json m = json::parse(r.out);
  EXPECT_EQ(m["result"]["verdict"], "Ev-GAS");
  EXPECT_EQ(m["result"]["case"], "(i)");
  EXPECT_EQ(m["tool"], "patchdyn");
  EXPECT_TRUE(m.contains("timestamp"));
  EXPECT_TRUE(m.contains("duration_s"));
  EXPECT_TRUE(m["derived"].contains("B"));
}

TEST_F(CliTest, SweepPresetMarksFold) {
  const auto r = invoke({"sweep", "--preset", "fig2", "--out", path("fig2.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(path("fig2.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "m,branch,u,v,stability,is_sn_marker");
  int markers = 0;
  while (std::getline(csv, line)) {
    if (line.back() == '1') {
      ++markers;
      EXPECT_NEAR(std::stod(line.substr(0, line.find(','))), 0.8182, 1e-4);
    }
  }
  EXPECT_EQ(markers, 1);
  const json m = json::parse(r.out);
  ASSERT_EQ(m["outputs"].size(), 1u);
  EXPECT_TRUE(fs::exists(m["outputs"][0].get<std::string>()));
}

TEST_F(CliTest, SimulatePdeWritesBothParts) {
  const auto r = invoke({"simulate-pde", "--preset", "fig-nonlin-flat", "--t-end", "5", "--out", path("run") + "/"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "run" / "simulate-pde-snapshots.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "run" / "simulate-pde-functionals.csv"));
  const json m = json::parse(r.out);
  EXPECT_GT(m["result"]["final"]["min_u"].get<double>(), 0);
  for (const auto& f : m["outputs"]) EXPECT_TRUE(fs::exists(f.get<std::string>()));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(invoke({"regime", "--bogus"}).code, 64);
  EXPECT_EQ(invoke({"nope"}).code, 64);
  EXPECT_EQ(invoke({"regime", "--m", "1"}).code, 64);  // missing parameters
  EXPECT_EQ(invoke({"regime", "--preset", "no-such"}).code, 64);
  EXPECT_EQ(invoke({"regime", "--preset", "fig2", "--m", "0.3"}).code, 2);
  EXPECT_EQ(invoke({"regime", "--m", "1", "--e", "1.5", "--h", "1", "--delta", "1", "--s", "1"}).code, 2);
  EXPECT_EQ(invoke({"sensitivity", "--preset", "fig1i"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
  EXPECT_EQ(invoke({"presets", "list"}).code, 0);
}

TEST_F(CliTest, NumericFailureExitsThree) {
  json sc{{"model", "nonlinear-pde"},
          {"pde",
           {{"N", 100},
            {"t_end", 1},
            {"dt_floor", 1e-3},
            {"u0", {{"base", 1}, {"bumps", {{{"center", 2.0}, {"width", 0.1}, {"amplitude", 50}}}}}}}}};
  std::ofstream(path("bad.json")) << sc.dump();
  const auto r = invoke({"simulate-pde", "--scenario", path("bad.json")});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("cell"), std::string::npos);
}

TEST_F(CliTest, UnknownScenarioKeyIsValidationError) {
  std::ofstream(path("typo.json")) << R"({"model": "nonlinear-ode", "parms": {}})";
  EXPECT_EQ(invoke({"regime", "--scenario", path("typo.json")}).code, 2);
}

TEST_F(CliTest, PresetListing) {
  const auto r = invoke({"presets", "list"});
  const json m = json::parse(r.out);
  std::set<std::string> names;
  for (const auto& p : m["result"]) names.insert(p["name"]);
  for (const char* n : {"fig1a", "fig1b", "fig1c", "fig1d", "fig1e", "fig1f", "fig1g", "fig1h", "fig1i",
                        "fig2", "fig3", "fig4", "fig5", "fig-lin-quadratic", "fig-lin-gauss-1.8",
                        "fig-lin-gauss-1.9", "fig-lin-gauss-0.65", "fig-nonlin-flat",
                        "fig-nonlin-flat-third", "fig-nonlin-gauss", "fig-lin-extinct"}) {
    EXPECT_TRUE(names.count(n)) << n;
  }
}

TEST_F(CliTest, EveryPresetValidates) {
  for (const auto& p : patchdyn::presets()) {
    for (const auto& v : p.variants) EXPECT_NO_THROW(patchdyn::validate(v.scenario)) << p.name;
  }
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  for (const char* name : {"a", "b"}) {
    const auto r = invoke({"simulate-ode", "--preset", "fig3", "--out", path(name) + "/"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  int compared = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / e.path().filename()));
    ++compared;
  }
  EXPECT_EQ(compared, 4);
}

TEST_F(CliTest, ManifestRoundTrip) {
  const auto first = invoke({"portrait", "--preset", "fig1g", "--nu", "4", "--nv", "4", "--t-end", "100",
                             "--out", path("one.csv")});
  ASSERT_EQ(first.code, 0) << first.err;
  std::ofstream(path("manifest.json")) << first.out;
  const auto second = invoke({"portrait", "--scenario", path("manifest.json"), "--out", path("two.csv")});
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_EQ(slurp(path("one.csv")), slurp(path("two.csv")));
}

TEST_F(CliTest, VariantManifestRoundTrip) {
  const auto first = invoke({"simulate-ode", "--preset", "fig5", "--out", path("x/")});
  ASSERT_EQ(first.code, 0) << first.err;
  std::ofstream(path("manifest.json")) << first.out;
  const auto second = invoke({"simulate-ode", "--scenario", path("manifest.json"), "--out", path("y/")});
  ASSERT_EQ(second.code, 0) << second.err;
  for (const auto& e : fs::directory_iterator(dir_ / "x")) {
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "y" / e.path().filename()));
  }
}

TEST_F(CliTest, ThreadCountDoesNotChangeOutput) {
  ::setenv("PATCHDYN_THREADS", "1", 1);
  ASSERT_EQ(invoke({"basin", "--preset", "fig1g", "--nu", "6", "--nv", "6", "--out", path("t1.csv")}).code, 0);
  ::setenv("PATCHDYN_THREADS", "4", 1);
  ASSERT_EQ(invoke({"basin", "--preset", "fig1g", "--nu", "6", "--nv", "6", "--out", path("t4.csv")}).code, 0);
  ::unsetenv("PATCHDYN_THREADS");
  EXPECT_EQ(slurp(path("t1.csv")), slurp(path("t4.csv")));
}

TEST_F(CliTest, JsonFormat) {
  const auto r = invoke({"equilibria", "--m", "0.5", "--e", "0.1", "--h", "0.9", "--delta", "0.1", "--s", "0.9",
                         "--format", "json", "--out", path("eq")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json eqs = json::parse(slurp(path("eq.json")));
  EXPECT_EQ(eqs.size(), 4u);
}

TEST_F(CliTest, LinearModelEquilibria) {
  const auto r = invoke({"equilibria", "--model", "linear", "--m", "2", "--e", "2", "--h", "1", "--delta", "2.5",
                         "--s", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["result"]["verdict"], "Origin-GAS");
}
