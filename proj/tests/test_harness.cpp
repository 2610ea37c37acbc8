#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <gtest/gtest.h>

#include "mbp/config.hpp"
#include "mbp/errors.hpp"
#include "mbp/harness.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mbp_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

mbp::ExperimentConfig small_grid() {
  mbp::ExperimentConfig cfg;
  cfg.experiment = mbp::ExperimentKind::grid;
  cfg.dims = 3;
  cfg.lags = 2;
  cfg.s_values = {0, 2, 5};
  cfg.n_values = {60, 120};
  cfg.replicates = 2;
  cfg.master_seed = 11;
  cfg.burn_in = 50;
  cfg.max_iters = 500;
  return cfg;
}

std::string key_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const mbp::ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, ParsesValuesListsAndComments) {
  const auto cfg = mbp::Config::parse_string(
      "# comment\n"
      "model.N = 4   # trailing\n"
      "sweep.n_values = [100, 200,400]\n"
      "name = hello world\n"
      "flag = true\n"
      "\n");
  EXPECT_EQ(cfg.get_size("model.N"), 4u);
  EXPECT_EQ(cfg.get_size_list("sweep.n_values"), (std::vector<std::size_t>{100, 200, 400}));
  EXPECT_EQ(cfg.get_string("name"), "hello world");
  EXPECT_TRUE(cfg.get_bool("flag", false));
  EXPECT_EQ(cfg.get_double("missing", 2.5), 2.5);
  EXPECT_FALSE(cfg.has("missing"));
}

TEST(Config, ErrorsCarryKey) {
  EXPECT_EQ(key_of([] { mbp::Config::parse_string("a = 1\na = 2\n"); }), "a");
  EXPECT_EQ(key_of([] { mbp::Config::parse_string("x = abc\n").get_double("x"); }), "x");
  EXPECT_EQ(key_of([] { mbp::Config::parse_string("x = -3\n").get_size("x"); }), "x");
  EXPECT_EQ(key_of([] { mbp::Config::parse_string("").get_string("model.N"); }), "model.N");
  EXPECT_THROW(mbp::Config::parse_string("no equals sign\n"), mbp::ConfigError);
}

TEST(ExperimentConfig, FromConfigAndDefaults) {
  const auto cfg = mbp::ExperimentConfig::from_config(mbp::Config::parse_string(
      "experiment = error_vs_n\nmodel.N = 5\nmodel.p = 2\nsweep.s_values = 4\nsweep.n_values = 100, 200\n"));
  EXPECT_EQ(cfg.experiment, mbp::ExperimentKind::error_vs_n);
  EXPECT_EQ(cfg.dims, 5u);
  EXPECT_EQ(cfg.replicates, 20u);
  EXPECT_EQ(cfg.c2, 0.5);
  EXPECT_EQ(cfg.lambda_mode, mbp::LambdaMode::simulation);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ExperimentConfig, ValidationNamesKey) {
  const auto parse = [](const std::string& text) {
    return mbp::ExperimentConfig::from_config(mbp::Config::parse_string(text)).validate();
  };
  const std::string base = "model.N = 2\nmodel.p = 1\nsweep.n_values = 100\n";
  EXPECT_EQ(key_of([&] { parse("experiment = grid\n" + base + "sweep.s_values = 5\n"); }), "sweep.s_values");
  EXPECT_EQ(key_of([&] { parse("experiment = error_vs_n\n" + base + "sweep.s_values = 1, 2\n"); }),
            "sweep.s_values");
  EXPECT_EQ(key_of([&] { parse("experiment = grid\n" + base + "sweep.s_values = 1\nreplicates = 0\n"); }),
            "replicates");
  EXPECT_EQ(key_of([&] { parse("experiment = grid\n" + base + "sweep.s_values = 1\nbogus.key = 1\n"); }),
            "bogus.key");
  EXPECT_EQ(key_of([&] { parse("experiment = nope\n" + base + "sweep.s_values = 1\n"); }), "experiment");
  EXPECT_EQ(key_of([&] { parse("experiment = grid\n" + base + "sweep.s_values = 1\nlink.eps = 0.7\n"); }),
            "link.eps");
}

TEST(Seeds, ThetaSeedSharedAcrossN) {
  const auto cfg = small_grid();
  const auto a = mbp::run_point(cfg, 0, 2, 60, 1);
  const auto b = mbp::run_point(cfg, 1, 2, 120, 1);
  EXPECT_EQ(a.theta_seed, b.theta_seed);
  EXPECT_NE(a.seed, b.seed);
  EXPECT_EQ(a.theta_seed, mbp::theta_seed(11, 3, 2, 2, 1));
  EXPECT_EQ(a.seed, mbp::data_seed(11, 3, 2, 2, 60, 1));
}

TEST(Stats, MeanStdFitSpearman) {
  EXPECT_DOUBLE_EQ(mbp::sample_mean({1.0, 2.0, 3.0, 4.0}), 2.5);
  EXPECT_NEAR(mbp::sample_std({1.0, 2.0, 3.0, 4.0}), std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(mbp::sample_std({7.0}), 0.0);
  const auto line = mbp::least_squares_line({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
  EXPECT_NEAR(line.intercept, 1.0, 1e-14);
  EXPECT_NEAR(line.slope, 2.0, 1e-14);
  EXPECT_NEAR(mbp::spearman_correlation({1.0, 2.0, 3.0, 4.0}, {1.0, 8.0, 27.0, 64.0}), 1.0, 1e-14);
  EXPECT_NEAR(mbp::spearman_correlation({1.0, 2.0, 3.0}, {3.0, 2.0, 1.0}), -1.0, 1e-14);
  // ties get average ranks: x ranks (1.5, 1.5, 3), y ranks (1, 2, 3)
  EXPECT_NEAR(mbp::spearman_correlation({1.0, 1.0, 2.0}, {1.0, 2.0, 3.0}), std::sqrt(3.0) / 2.0, 1e-14);
}

TEST(Summary, GroupsRecords) {
  std::vector<mbp::RunRecord> records(4);
  const double errs[] = {1.0, 3.0, 2.0, 2.0};
  for (std::size_t k = 0; k < 4; ++k) {
    records[k].s = 2;
    records[k].n = k < 2 ? 100 : 200;
    records[k].frob_error = errs[k];
    records[k].frob_error_sq = errs[k] * errs[k];
    records[k].support_fraction = 0.5;
  }
  const auto summary = mbp::summarize_records(records, 2, 1);
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[0].n, 100u);
  EXPECT_EQ(summary[0].count, 2u);
  EXPECT_DOUBLE_EQ(summary[0].mean_frob_error, 2.0);
  EXPECT_DOUBLE_EQ(summary[0].std_frob_error, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(summary[0].mean_frob_error_sq, 5.0);
  EXPECT_DOUBLE_EQ(summary[1].std_frob_error, 0.0);
  EXPECT_NEAR(summary[1].n_over_log, 200.0 / std::log(4.0), 1e-12);
}

TEST(Grid, CardinalityOrderingAndZeroSparsity) {
  auto cfg = small_grid();
  cfg.output_dir = "";
  const auto out = mbp::run_grid(cfg);
  ASSERT_EQ(out.records.size(), 3u * 2u * 2u);
  ASSERT_EQ(out.summary.size(), 6u);
  EXPECT_EQ(out.summary.front().s, 0u);
  EXPECT_EQ(out.summary.front().n, 60u);
  EXPECT_EQ(out.summary.back().s, 5u);
  EXPECT_EQ(out.summary.back().n, 120u);
  for (const auto& r : out.records) {
    if (r.s == 0) EXPECT_EQ(r.support_fraction, 1.0);
    EXPECT_GE(r.frob_error, 0.0);
  }
}

TEST(Grid, OutputIsIndependentOfThreadCount) {
  auto cfg = small_grid();
  const auto one = scratch_dir("t1");
  const auto many = scratch_dir("t4");
  cfg.output_dir = one.string();
  cfg.threads = 1;
  const auto a = mbp::run_grid(cfg);
  cfg.output_dir = many.string();
  cfg.threads = 4;
  const auto b = mbp::run_grid(cfg);
  ASSERT_EQ(a.files.size(), b.files.size());
  for (const auto& file : a.files) {
    const auto name = fs::path(file).filename();
    if (name.string().find("timing") != std::string::npos) continue;
    EXPECT_EQ(slurp(one / name), slurp(many / name)) << name;
  }
  EXPECT_TRUE(fs::exists(one / "grid_matrix.csv"));
  fs::remove_all(one);
  fs::remove_all(many);
}

TEST(Sparsity, WritesFit) {
  mbp::ExperimentConfig cfg;
  cfg.experiment = mbp::ExperimentKind::error_vs_sparsity;
  cfg.dims = 3;
  cfg.lags = 1;
  cfg.s_values = {1, 3, 6};
  cfg.n_values = {200};
  cfg.replicates = 2;
  cfg.burn_in = 50;
  const auto dir = scratch_dir("sparsity");
  cfg.output_dir = dir.string();
  const auto out = mbp::run_experiment(cfg);
  ASSERT_TRUE(out.sparsity_fit.has_value());
  ASSERT_TRUE(out.spearman.has_value());
  EXPECT_TRUE(fs::exists(dir / "error_vs_sparsity_fit.csv"));
  EXPECT_EQ(slurp(dir / "error_vs_sparsity_fit.csv").substr(0, 24), "intercept,slope,spearman");
  fs::remove_all(dir);
}

TEST(Diagnose, EmptyCheckListWritesHeaderOnly) {
  mbp::ExperimentConfig cfg;
  cfg.experiment = mbp::ExperimentKind::diagnose;
  const auto dir = scratch_dir("diag");
  cfg.output_dir = dir.string();
  const auto out = mbp::run_diagnose(cfg);
  ASSERT_EQ(out.files.size(), 1u);
  EXPECT_EQ(slurp(dir / "diagnose_summary.csv"), "check,cases,passed,all_pass\n");
  fs::remove_all(dir);
}

TEST(Diagnose, SmallChecksPass) {
  mbp::DiagnoseSettings settings;
  settings.instances = 8;
  const auto link = mbp::LinkSpec::sigmoid();
  for (const std::string check : {"gf-bound", "eta-bound", "kl-decomp"}) {
    const auto table = mbp::run_check(check, settings, link, 3);
    EXPECT_GT(table.cases, 0u) << check;
    EXPECT_EQ(table.cases, table.passed) << check;
    EXPECT_EQ(table.rows.size(), table.cases) << check;
  }
  settings.decay_p_values = {1, 2, 4};
  const auto decay = mbp::run_check("decay-table", settings, link, 3);
  EXPECT_EQ(decay.rows.size(), 3u);
  EXPECT_THROW(mbp::run_check("nope", settings, link, 3), mbp::ConfigError);
}

TEST(Csv, FormatDouble) {
  EXPECT_EQ(mbp::format_double(0.1), "0.1");
  EXPECT_EQ(mbp::format_double(2.0), "2");
  EXPECT_EQ(mbp::format_double(1e-20), "1e-20");
  std::ostringstream out;
  mbp::write_csv(out, {{"a", "b"}, {{"1", "2"}}, 1, 1});
  EXPECT_EQ(out.str(), "a,b\n1,2\n");
}

TEST(Grid, CornerOrderingAndSharedRows) {
  mbp::ExperimentConfig cfg;
  cfg.experiment = mbp::ExperimentKind::grid;
  cfg.dims = 4;
  cfg.lags = 2;
  cfg.s_values = {2, 24};
  cfg.n_values = {100, 2000};
  cfg.replicates = 3;
  cfg.burn_in = 100;
  cfg.output_dir = "";
  const auto grid = mbp::run_grid(cfg);
  ASSERT_EQ(grid.summary.size(), 4u);
  // (s small, n large) against (s large, n small)
  EXPECT_LT(grid.summary[1].mean_frob_error, grid.summary[2].mean_frob_error);

  auto row = cfg;
  row.experiment = mbp::ExperimentKind::error_vs_n;
  row.s_values = {24};
  const auto line = mbp::run_error_vs_n(row);
  ASSERT_EQ(line.summary.size(), 2u);
  EXPECT_EQ(line.summary[0].mean_frob_error, grid.summary[2].mean_frob_error);
  EXPECT_EQ(line.summary[1].mean_frob_error, grid.summary[3].mean_frob_error);
}

TEST(Records, LambdaFollowsPolicy) {
  auto cfg = small_grid();
  cfg.output_dir = "";
  for (const auto& r : mbp::run_grid(cfg).records)
    EXPECT_EQ(r.lambda, mbp::lambda_policy(r.n, r.dims, r.lags, cfg.link, cfg.c2, cfg.lambda_mode));
}
