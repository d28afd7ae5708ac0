#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "fpe/cli/commands.hpp"

using namespace fpe;
using namespace fpe::cli;
using std::numbers::pi;

namespace {

ExperimentConfig load(const std::string& name) {
  return ExperimentConfig::from(Config::load(std::string(FPE_CONFIG_DIR) + "/" + name));
}

ExperimentConfig from_text(const std::string& text) { return ExperimentConfig::from(Config::parse_string(text)); }

std::vector<std::string> verdicts(const CommandResult& r) {
  std::vector<std::string> out;
  for (const auto& row : r.report["results"]) out.push_back(row["verdict"].get<std::string>());
  return out;
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndLists) {
  const Config c = Config::parse_string("# header\n a = 1.5 \nlist = 1, -2 ,3e-1 # trailing\n\nflag = yes\nn = 12\n");
  EXPECT_DOUBLE_EQ(c.real("a"), 1.5);
  EXPECT_EQ(c.reals("list"), (std::vector<double>{1.0, -2.0, 0.3}));
  EXPECT_TRUE(c.boolean("flag", false));
  EXPECT_EQ(c.integer("n"), 12);
  EXPECT_EQ(c.str("missing", "x"), "x");
  EXPECT_THROW(c.str("missing"), ConfigError);
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(Config::parse_string("just words\n"), ConfigError);
  EXPECT_THROW(Config::parse_string(" = 3\n"), ConfigError);
  const Config c = Config::parse_string("a = 1.5x\nb = 2.5\nc = maybe\n");
  EXPECT_THROW(c.real("a"), ConfigError);
  EXPECT_THROW(c.integer("b"), ConfigError);
  EXPECT_THROW(c.boolean("c", false), ConfigError);
  EXPECT_THROW(Config::load("/nonexistent/file.cfg"), ConfigError);
}

TEST(Config, ExperimentSettingsAreChecked) {
  EXPECT_THROW(from_text("grid.N = 21\n"), ConfigError);
  EXPECT_THROW(from_text("grid.N = 10\n"), ConfigError);
  EXPECT_THROW(from_text("p_list = 2, 0\n"), ConfigError);
  EXPECT_THROW(from_text("seed = -3\n"), ConfigError);
  EXPECT_THROW(from_text("output.format = xml\n"), ConfigError);
  const ExperimentConfig e = from_text("p_list = -1, 0.5\ngrid.N = 40\nseed = 9\ntol.eigen = 1e-6\n");
  EXPECT_EQ(e.p_list, (std::vector<double>{-1.0, 0.5}));
  EXPECT_EQ(e.N, 40u);
  EXPECT_EQ(e.seed, 9u);
  EXPECT_DOUBLE_EQ(e.tol_eigen, 1e-6);
}

TEST(Config, MetricFactory) {
  EXPECT_THROW(make_metric(Config::parse_string("metric.name = hyperbolic\n")), ConfigError);
  EXPECT_THROW(make_metric(Config::parse_string("metric.name = randers\nmetric.b = 1.2, 0\n")), ConfigError);
  EXPECT_NO_THROW(make_metric(Config::parse_string("metric.name = randers\nmetric.b = 1.2, 0\n"), false));
  EXPECT_THROW(make_metric(Config::parse_string("metric.name = randers\nmetric.a = 1, 0, 0\nmetric.b = 0.1, 0\n")),
               ConfigError);
  const AnyMetric m = make_metric(Config::parse_string("metric.name = sphere\nmetric.radius = 4\n"));
  ASSERT_TRUE(std::holds_alternative<Sphere>(m));
  EXPECT_DOUBLE_EQ(std::get<Sphere>(m).radius(), 4.0);
}

TEST(Commands, ValidateExitCodes) {
  const CommandResult ok = run("validate", load("euclidean_validate.cfg"));
  EXPECT_EQ(ok.exit_code, kOk);
  EXPECT_TRUE(ok.report["passed"].get<bool>());

  const CommandResult bad = run("validate", load("randers_bad.cfg"));
  EXPECT_EQ(bad.exit_code, kValidationFailed);
  EXPECT_NE(bad.summary.find("F3_positive_definite"), std::string::npos);

  // F(x, -y) = F(x, y) fails for any b != 0; every other check passes
  const CommandResult randers = run("validate", load("randers_validate.cfg"));
  EXPECT_EQ(randers.exit_code, kValidationFailed);
  for (const auto& c : randers.report["checks"])
    EXPECT_EQ(c["passed"].get<bool>(), c["name"] != "F2_homogeneity") << c["name"];
}

TEST(Commands, GeodesicOnSphereAndPlane) {
  const CommandResult s = run("geodesic", load("sphere_geodesic.cfg"));
  ASSERT_EQ(s.exit_code, kOk);
  EXPECT_NEAR(s.report["length"].get<double>(), 2.0, 1e-9);
  EXPECT_NEAR(s.report["energies"][0]["E_p"].get<double>(), 4.0, 1e-8);
  EXPECT_NE(s.curve_csv.find("t,x1,x2"), std::string::npos);

  const CommandResult e = run("geodesic", load("euclidean_geodesic.cfg"));
  ASSERT_EQ(e.exit_code, kOk);
  EXPECT_NEAR(e.report["length"].get<double>(), std::sqrt(2.0), 1e-9);
}

TEST(Commands, GeodesicSolverFailureExitCode) {
  ExperimentConfig e = load("sphere_geodesic.cfg");
  e.raw.set("solver.max_iterations", "1");
  e.raw.set("p_list", "2");
  const CommandResult r = run("geodesic", ExperimentConfig::from(e.raw));
  EXPECT_EQ(r.exit_code, kGeodesicFailed);
  EXPECT_TRUE(r.report.contains("error"));
  EXPECT_FALSE(r.curve_csv.empty());
}

TEST(Commands, ClassifyShortAndLongArcs) {
  const CommandResult shortr = run("classify", load("sphere_short_arc.cfg"));
  ASSERT_EQ(shortr.exit_code, kOk);
  EXPECT_EQ(verdicts(shortr), (std::vector<std::string>{"neither-min-nor-max", "neither-min-nor-max", "not-max"}));
  EXPECT_EQ(shortr.report["m"].get<int>(), 0);

  const CommandResult longr = run("classify", load("sphere_long_arc.cfg"));
  ASSERT_EQ(longr.exit_code, kOk);
  EXPECT_EQ(verdicts(longr), (std::vector<std::string>{"not-max", "not-min", "neither-min-nor-max"}));
  EXPECT_EQ(longr.report["m"].get<int>(), 1);
  const auto& half = longr.report["results"][1];
  ASSERT_TRUE(half.contains("bounds"));
  EXPECT_TRUE(half["bounds"]["E_p_within"].get<bool>());
}

TEST(Commands, ClassifyRejectsNonGeodesicCurveFile) {
  const auto dir = std::filesystem::temp_directory_path() / "fpe_cli_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "latitude.csv").string();
  {
    std::ofstream f(path);
    f << "t,x1,x2\n";
    for (int k = 0; k <= 40; ++k) f << k / 40.0 << "," << pi / 3 << "," << k / 40.0 << "\n";
  }
  const CommandResult r =
      run("classify", from_text("metric.name = sphere\ncurve.source = file\ncurve.file = " + path + "\n"));
  EXPECT_EQ(r.exit_code, kGeodesicFailed);
  std::filesystem::remove_all(dir);
}

TEST(Commands, SurveyChecks) {
  const CommandResult r = run("survey", load("sphere_survey.cfg"));
  ASSERT_EQ(r.exit_code, kOk);
  ASSERT_EQ(r.report["rows"].size(), 5u);
  EXPECT_TRUE(r.report["checks"]["m_strictly_increasing"].get<bool>());
  for (const auto& m : r.report["checks"]["energy_monotone"]) EXPECT_TRUE(m["monotone"].get<bool>());
  EXPECT_THROW(run("survey", from_text("metric.name = euclidean\n")), ConfigError);
}

TEST(Commands, UnknownCommand) { EXPECT_THROW(run("frobnicate", from_text("")), ConfigError); }

TEST(Commands, ReportsAreDeterministic) {
  for (const char* name : {"sphere_long_arc.cfg", "sphere_survey.cfg", "randers_validate.cfg"}) {
    const ExperimentConfig e = load(name);
    const std::string command = std::string(name).find("survey") != std::string::npos ? "survey"
                                : std::string(name).find("validate") != std::string::npos ? "validate"
                                                                                          : "classify";
    const CommandResult a = run(command, e), b = run(command, e);
    EXPECT_EQ(render(a, "json"), render(b, "json")) << name;
    EXPECT_EQ(render(a, "csv"), render(b, "csv")) << name;
  }
}

TEST(Commands, HeaderEchoesConfigWithoutOutputPath) {
  ExperimentConfig e = load("euclidean_validate.cfg");
  e.raw.set("output.path", "/tmp/somewhere.json");
  const CommandResult r = run("validate", ExperimentConfig::from(e.raw));
  EXPECT_EQ(r.report["schema_version"].get<int>(), 1);
  EXPECT_EQ(r.report["command"].get<std::string>(), "validate");
  EXPECT_FALSE(r.report["config"].contains("output.path"));
  EXPECT_EQ(r.report["config"]["seed"].get<std::string>(), "7");
}

TEST(Commands, WriteAtomicallyReplacesFile) {
  const auto dir = std::filesystem::temp_directory_path() / "fpe_atomic_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "report.json").string();
  write_atomically(path, "first\n");
  write_atomically(path, "second\n");
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "second");
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove_all(dir);
  EXPECT_THROW(write_atomically("/nonexistent/dir/report.json", "x"), ConfigError);
}
