#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"

using namespace trapwalk::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("trapwalk_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string header(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

int run(const std::vector<std::string>& args) {
  std::ostringstream log, err;
  return main_entry(args, log, err);
}

// Runs `command` with `cfg` into a fresh directory and returns that directory.
fs::path run_ok(const std::string& tag, const std::string& command, const std::string& cfg,
                std::vector<std::string> extra = {}) {
  const fs::path dir = scratch(tag);
  const fs::path file = write_config(dir, cfg);
  std::vector<std::string> args{command, "--config", file.string(), "--out", (dir / "out").string()};
  args.insert(args.end(), extra.begin(), extra.end());
  std::ostringstream log, err;
  const int status = main_entry(args, log, err);
  EXPECT_EQ(status, 0) << err.str();
  return dir / "out";
}

const char* kSmallRun =
    "d = 2\nalpha = 3\ngamma = 1\nlambda = 0.5\nr_max = 32\n"
    "L_grid = 6, 10\nxi = 0.6\ndt = 0.05\nreplicas = 100\nfields_per_point = 2\nseed = 11\n";

}  // namespace

TEST(Config, ParsesKeysCommentsAndLists) {
  const auto c = parse_config_text(
      "# model\n d = 3 \nalpha=3.5 # tail\ngamma = 0.5\nL_grid = 4, 8,16\nmode = point_to_point\n"
      "drift = 0.25\nevents = A, A_theta\nfree_motion = true\n\n");
  EXPECT_EQ(c.model.d, 3);
  EXPECT_DOUBLE_EQ(c.model.alpha, 3.5);
  EXPECT_DOUBLE_EQ(c.model.gamma, 0.5);
  EXPECT_EQ(c.L_grid, (std::vector<double>{4, 8, 16}));
  EXPECT_EQ(c.mode, Mode::PointToPoint);
  ASSERT_TRUE(c.drift.has_value());
  EXPECT_DOUBLE_EQ(*c.drift, 0.25);
  EXPECT_EQ(c.events, (std::vector<std::string>{"A", "A_theta"}));
  EXPECT_TRUE(c.free_motion);
  EXPECT_EQ(c.path(8.0).target, trapwalk::Target::Ball);
}

TEST(Config, DefaultsNeedNoFile) {
  const auto c = parse_config_text("");
  EXPECT_EQ(c.model.d, 2);
  EXPECT_TRUE(c.L_grid.empty());
  EXPECT_EQ(c.master_seed, 1u);
  EXPECT_THROW(require_L_grid(c), ConfigError);
}

TEST(Config, RejectsUnknownRepeatedAndMalformedKeys) {
  EXPECT_THROW(parse_config_text("temperature = 3\n"), ConfigError);
  EXPECT_THROW(parse_config_text("d = 2\nd = 3\n"), ConfigError);
  EXPECT_THROW(parse_config_text("alpha = three\n"), ConfigError);
  EXPECT_THROW(parse_config_text("just a line\n"), ConfigError);
  EXPECT_THROW(parse_config_text("L_grid = 8, 4\n"), ConfigError);
  EXPECT_THROW(parse_config_text("L_grid = 4, 4\n"), ConfigError);
  EXPECT_THROW(parse_config_text("seed = -1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("mode = diagonal\n"), ConfigError);
  EXPECT_THROW(parse_config_text("events = C\n"), ConfigError);
  EXPECT_THROW(parse_config_text("xi = 1\n"), ConfigError);
  // alpha + gamma - d must be positive.
  EXPECT_THROW(parse_config_text("d = 3\nalpha = 1\ngamma = 2\n"), ConfigError);
}

TEST(Config, EchoCoversEveryKey) {
  const auto echo = parse_config_text("").echo();
  for (const auto& key : config_keys()) EXPECT_EQ(echo.count(key), 1u) << key;
  EXPECT_EQ(echo.size(), config_keys().size());
}

TEST(Cli, EmptyLGridIsAConfigError) {
  const fs::path dir = scratch("empty_grid");
  const fs::path cfg = write_config(dir, "L_grid =\n");
  EXPECT_EQ(run({"estimate-z", "--config", cfg.string(), "--out", dir.string()}), 2);
  const fs::path none = write_config(dir, "xi = 0.5\n");
  EXPECT_EQ(run({"generate", "--config", none.string(), "--out", dir.string()}), 2);
}

TEST(Cli, BadArgumentsAreConfigErrors) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"theory", "--bogus"}), 2);
  EXPECT_EQ(run({"theory", "--seed", "x"}), 2);
  EXPECT_EQ(run({"theory", "--config", "/nonexistent/run.cfg"}), 2);
  const fs::path dir = scratch("bad_rotation");
  const fs::path cfg = write_config(dir, "d = 1\nalpha = 1.5\nL_grid = 8\n");
  EXPECT_EQ(run({"rotation-test", "--config", cfg.string(), "--out", dir.string()}), 2);
}

TEST(Cli, TheorySchemaAndValues) {
  const fs::path out = run_ok("theory", "theory", "d = 2\nalpha = 2.2\ngamma = 0.1\n");
  EXPECT_EQ(header(out / "theory.csv"),
            "d,alpha,gamma,bar_xi,xi_lower_bound,feasible_lo,feasible_hi,"
            "feasible_hi_closed_form,p2p_bound,xi,cost_feasible,density_feasible,"
            "tilt_cost_exponent");
  std::ifstream in(out / "theory.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::vector<std::string> cells;
  std::stringstream row(line);
  for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
  ASSERT_EQ(cells.size(), 13u);
  // gamma <= alpha - d, so bar_xi = 1 / (alpha - d + 1).
  EXPECT_NEAR(std::stod(cells[3]), 1.0 / 1.2, 1e-12);
  EXPECT_NEAR(std::stod(cells[4]), 1.0 / 1.2, 1e-12);
  EXPECT_TRUE(fs::exists(out / "theory.manifest"));
}

TEST(Cli, KernelCheckSchemaAndExitCodes) {
  const fs::path out = run_ok("kernel", "kernel-check", "kernel_queries = 200\nkernel_dims = 2\n");
  EXPECT_EQ(header(out / "kernel-check.csv"),
            "query,t,kernel,upper,lower,upper_ok,lower_checked,lower_ok,pass");
  // At width 3 the upper bound fails near the walls around t = 0.4 width^2.
  const fs::path dir = scratch("kernel_fail");
  const fs::path cfg = write_config(
      dir, "kernel_queries = 200\nkernel_width = 3\nkernel_t_min = 2\nkernel_t_max = 6\n"
           "lower_threshold = 100\n");
  EXPECT_EQ(run({"kernel-check", "--config", cfg.string(), "--out", dir.string()}), 1);
}

TEST(Cli, CovarianceSchemas) {
  const fs::path out =
      run_ok("cov", "covariance", "r_max = 20\ns_grid = 0, 2\ns_fit = 2, 10\nmc_fields = 200\n");
  EXPECT_EQ(header(out / "covariance.csv"), "s,analytic,mc_mean,mc_stderr");
  EXPECT_EQ(header(out / "covariance_fit.csv"),
            "s_lo,s_hi,fitted_slope,derived_slope,printed_slope");
}

TEST(Cli, GenerateWritesLoadableFields) {
  const fs::path out = run_ok("generate", "generate", kSmallRun);
  EXPECT_EQ(header(out / "generate.csv"), "L,xi,field,seed,traps,window_volume,file");
  std::ifstream in(out / "field_L1_f1.txt");
  const auto field = trapwalk::load_field(in);
  EXPECT_EQ(field.dims(), 2);
  EXPECT_GT(field.size(), 0u);
}

TEST(Cli, EstimateZRerunsAreByteIdentical) {
  const std::string cfg = std::string(kSmallRun) + "events = all, A, B, A_theta\n";
  const fs::path a = run_ok("z_a", "estimate-z", cfg, {"--threads", "1"});
  const fs::path b = run_ok("z_b", "estimate-z", cfg, {"--threads", "3"});
  EXPECT_EQ(header(a / "estimate-z.csv"),
            "L,xi,event,theta,field,mean,log_mean,stderr,n,ess,hits,in_event,exhausted_rate,"
            "left_window_rate,dt,seed");
  EXPECT_EQ(slurp(a / "estimate-z.csv"), slurp(b / "estimate-z.csv"));
  EXPECT_EQ(slurp(a / "estimate-z.manifest"), slurp(b / "estimate-z.manifest"));
  const std::string manifest = slurp(a / "estimate-z.manifest");
  EXPECT_NE(manifest.find("config.seed=11\n"), std::string::npos);
  EXPECT_NE(manifest.find("module.sampler="), std::string::npos);

  // 2 L values x 2 fields x 4 events.
  std::ifstream in(a / "estimate-z.csv");
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 16);

  const fs::path c = run_ok("z_c", "estimate-z", cfg, {"--seed", "12"});
  EXPECT_NE(slurp(a / "estimate-z.csv"), slurp(c / "estimate-z.csv"));
}

TEST(Cli, FluctuationSchemas) {
  const fs::path out = run_ok("fluct", "fluctuation",
                              "L_grid = 4, 8, 16\nreplicas = 50\nfields_per_point = 2\n"
                              "dt = 0.05\nbootstrap = 50\nr_max = 16\n");
  EXPECT_EQ(header(out / "fluctuation.csv"),
            "L,weighted_mean_log_transmax,stderr,min_ess,low_confidence");
  EXPECT_NE(slurp(out / "fluctuation.csv").find("\nslope,"), std::string::npos);
  EXPECT_EQ(header(out / "fluctuation_fit.csv"),
            "slope,slope_se,ci_lo,ci_hi,low_confidence,bar_xi,xi_lower_bound");
}

TEST(Cli, TiltExperimentSchema) {
  const fs::path out = run_ok("tilt", "tilt-experiment",
                              "alpha = 2.2\ngamma = 0.5\nL_grid = 20\nreplicas = 200\nrn_fields = 50\ndt = 0.05\n"
                              "bootstrap = 20\n");
  const std::string head = header(out / "tilt-experiment.csv");
  EXPECT_EQ(head.rfind("L,xi,lambda_hat,rn_mean,rn_stderr,logdiff_mean,logdiff_stderr,"
                       "predicted_exponent",
                       0),
            0u);
}

TEST(Cli, RotationTestSchema) {
  const fs::path out = run_ok("rot", "rotation-test",
                              "L_grid = 12\nxi = 0.75\nreplicas = 20\nfields_per_point = 4\n"
                              "dt = 0.05\nr_max = 16\n");
  EXPECT_EQ(header(out / "rotation-test.csv"),
            "L,xi,N,theta,fields,center_max,degenerate,frequency,expected,sigma,within_3sigma");
}
