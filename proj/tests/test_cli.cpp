#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "contrastgeo/cli.hpp"
#include "contrastgeo/report.hpp"

using contrastgeo::Json;
namespace cli = contrastgeo::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
  Json json() const { return Json::parse(out); }
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "contrastgeo_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double max_abs_diff(const Json& a, const std::vector<std::vector<double>>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b[i].size(); ++j) m = std::max(m, std::abs(a[i][j].get<double>() - b[i][j]));
  return m;
}

}  // namespace

TEST(CliAnalyze, QuadIdentityMetric) {
  const Outcome o = run({"analyze", "--model", "quad_euclid", "--params", "n=2", "--points", "[[0.5,-1]]"});
  ASSERT_EQ(o.code, 0) << o.err;
  const Json j = o.json();
  EXPECT_EQ(j["schema"], contrastgeo::kReportSchema);
  EXPECT_EQ(j["meta"]["model"]["name"], "quad_euclid");
  EXPECT_EQ(max_abs_diff(j["points"][0]["metric"], {{1, 0}, {0, 1}}), 0.0);
}

TEST(CliAnalyze, SingularRankOneEverywhere) {
  const Outcome o = run({"analyze", "--model", "singular_r3", "--random", "5", "--seed", "3"});
  ASSERT_EQ(o.code, 0) << o.err;
  const Json j = o.json();
  ASSERT_EQ(j["points"].size(), 5u);
  for (const auto& p : j["points"]) EXPECT_EQ(p["kernel"]["rank"], 1);
}

TEST(CliAnalyze, GaussianAtUnitSigma) {
  const Outcome o = run({"analyze", "--model", "gaussian_kl", "--points", "[[0,1]]", "--alpha", "-1,0,1"});
  ASSERT_EQ(o.code, 0) << o.err;
  const Json p = o.json()["points"][0];
  EXPECT_LE(max_abs_diff(p["metric"], {{1, 0}, {0, 2}}), 1e-14);
  ASSERT_EQ(p["alpha"].size(), 3u);
  // alpha = 1 reproduces the primal symbols
  EXPECT_LE(std::abs(p["alpha"][2]["gamma"][1][1][1].get<double>() - p["gamma_f"][1][1][1].get<double>()), 1e-12);
}

TEST(CliAnalyze, PointsFromFile) {
  const fs::path f = scratch("points.json");
  std::ofstream(f) << "[[0.1, 1.2], [0.0, 0.9]]";
  const Outcome o = run({"analyze", "--model", "gaussian_kl", "--points", f.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.json()["points"].size(), 2u);
}

TEST(CliVerify, WeightedKoszulFails) {
  const Outcome o = run({"verify", "--model", "weighted_singular", "--suite", "koszul", "--tol", "1e-6"});
  EXPECT_EQ(o.code, 1);
  const Json j = o.json();
  EXPECT_FALSE(j["passed"].get<bool>());
  EXPECT_FALSE(j["suites"][0]["passed"].get<bool>());
  EXPECT_GT(j["suites"][0]["max"].get<double>(), 0.5);
}

TEST(CliVerify, QuadAllPasses) {
  const Outcome o = run({"verify", "--model", "quad_euclid", "--suite", "all", "--samples", "10"});
  EXPECT_EQ(o.code, 0) << o.out;
  const Json j = o.json();
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["suites"].size(), cli::suite_names().size());
  for (const auto& s : j["suites"]) {
    EXPECT_TRUE(s.contains("max"));
    EXPECT_TRUE(s.contains("mean"));
    EXPECT_TRUE(s.contains("tolerance"));
    EXPECT_TRUE(s.contains("samples"));
  }
}

TEST(CliVerify, UnknownSuiteIsAFlagError) {
  EXPECT_EQ(run({"verify", "--model", "quad_euclid", "--suite", "bogus"}).code, 2);
}

TEST(CliVerify, OutputFileMatchesStdout) {
  const fs::path f = scratch("verify.json");
  const Outcome a = run({"verify", "--model", "gaussian_kl", "--suite", "duality", "--samples", "5", "--seed", "7"});
  const Outcome b = run(
      {"verify", "--model", "gaussian_kl", "--suite", "duality", "--samples", "5", "--seed", "7", "--out", f.string()});
  EXPECT_EQ(b.code, 0);
  EXPECT_TRUE(b.out.empty());
  EXPECT_EQ(slurp(f), a.out);
}

TEST(CliReduce, SingularGivesIdentity) {
  const Outcome o = run({"reduce", "--model", "singular_r3", "--points", "[[0.2,0.3]]"});
  ASSERT_EQ(o.code, 0) << o.err;
  const Json p = o.json()["points"][0];
  EXPECT_LE(max_abs_diff(p["metric"], {{1, 0}, {0, 1}}), 1e-10);
  EXPECT_TRUE(p["koszul"].get<bool>());
}

TEST(CliReduce, FubiniProportionality) {
  const Outcome o = run({"reduce", "--model", "fubini_study", "--random", "4"});
  ASSERT_EQ(o.code, 0) << o.err;
  const Json j = o.json();
  EXPECT_NEAR(j["proportionality"]["constant"].get<double>(), 2.0, 1e-9);
  EXPECT_LE(j["proportionality"]["std_dev"].get<double>(), 1e-6);
}

TEST(CliReduce, WeightedIsRefused) {
  const Outcome o = run({"reduce", "--model", "weighted_singular", "--random", "2"});
  EXPECT_EQ(o.code, 4);
  EXPECT_FALSE(o.json()["passed"].get<bool>());
}

TEST(CliOptimize, GaussianReachesTarget) {
  const Outcome o = run({"optimize", "--model", "gaussian_kl", "--target", "mu=1,sigma=2", "--theta0", "0,1", "--eta",
                         "0.5", "--steps", "200"});
  ASSERT_EQ(o.code, 0) << o.err;
  const Json j = o.json();
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_NEAR(j["final_theta"][0].get<double>(), 1.0, 1e-6);
  EXPECT_NEAR(j["final_theta"][1].get<double>(), 2.0, 1e-6);
}

TEST(CliOptimize, QuadOneStep) {
  const Outcome o = run({"optimize", "--model", "quad_euclid", "--target", "0.5,0.5", "--theta0", "0,1", "--eta", "1"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.json()["steps"], 1);
}

TEST(CliOptimize, SingularKeepsKernelCoordinate) {
  const Outcome o = run({"optimize", "--model", "singular_r3", "--theta0", "0,0,7", "--target", "1,1,0"});
  ASSERT_EQ(o.code, 0) << o.err;
  for (const auto& r : o.json()["trajectory"]) EXPECT_EQ(r["theta"][2].get<double>(), 7.0);
}

TEST(CliOptimize, CsvTrajectory) {
  const fs::path f = scratch("traj.csv");
  const Outcome o = run({"optimize", "--model", "gaussian_kl", "--target", "1,2", "--theta0", "0,1", "--eta", "0.5",
                         "--csv", f.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  const std::string csv = slurp(f);
  EXPECT_EQ(csv.rfind("step,mu,sigma,objective,grad_norm\r\n", 0), 0u);
  std::size_t lines = 0;
  for (std::size_t p = csv.find("\r\n"); p != std::string::npos; p = csv.find("\r\n", p + 2)) ++lines;
  EXPECT_EQ(lines, o.json()["trajectory"].size() + 1);
}

TEST(CliOptimize, RequireConverged) {
  EXPECT_EQ(run({"optimize", "--model", "gaussian_kl", "--target", "1,2", "--theta0", "0,1", "--steps", "2",
                 "--require-converged"})
                .code,
            5);
  EXPECT_EQ(run({"optimize", "--model", "gaussian_kl", "--target", "1,2", "--theta0", "0,1", "--steps", "2"}).code, 0);
}

TEST(CliErrors, ExitCodes) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"analyze", "--model", "quad_euclid", "--bogus"}).code, 2);
  EXPECT_EQ(run({"analyze", "--model", "nope"}).code, 3);
  EXPECT_EQ(run({"analyze", "--model", "quad_euclid", "--params", "n=0"}).code, 3);
  EXPECT_EQ(run({"analyze", "--model", "quad_euclid", "--points", "[[1]"}).code, 2);
  EXPECT_EQ(run({"analyze", "--model", "quad_euclid", "--points", "[[1, 2, 3]]"}).code, 2);
  EXPECT_EQ(run({"analyze", "--model", "quad_euclid", "--model-file", "x.json"}).code, 2);
  EXPECT_EQ(run({"optimize", "--model", "gaussian_kl", "--eta", "-1"}).code, 2);
  EXPECT_EQ(run({"optimize", "--model", "gaussian_kl", "--target", "tau=1"}).code, 2);
  EXPECT_EQ(run({"optimize", "--model", "unitary_group"}).code, 3);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(CliModelFile, ExpressionDescriptor) {
  const fs::path f = scratch("model.json");
  std::ofstream(f) << R"j({"name": "sq3", "dim": 3, "contrast": "0.5*((x1-y1)^2+(x2-y2)^2)", "quotient_chart": "drop_last:1"})j";
  const Outcome a = run({"analyze", "--model-file", f.string(), "--points", "[[0,0,0]]"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.json()["points"][0]["kernel"]["rank"], 1);
  const Outcome r = run({"reduce", "--model-file", f.string(), "--random", "2"});
  EXPECT_EQ(r.code, 0) << r.err;

  const fs::path bad = scratch("bad.json");
  std::ofstream(bad) << R"j({"dim": 1, "contrast": "x1 +* y1"})j";
  EXPECT_EQ(run({"analyze", "--model-file", bad.string()}).code, 3);
}

// Property: identical invocations give byte-identical reports, regardless of
// worker count.
TEST(CliProperty, Deterministic) {
  const std::vector<std::string> base = {"verify", "--model", "gaussian_kl", "--suite", "all", "--samples", "8", "--seed", "7"};
  const Outcome a = run(base);
  const Outcome b = run(base);
  std::vector<std::string> threaded = base;
  threaded.insert(threaded.end(), {"--threads", "3"});
  const Outcome c = run(threaded);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
}
