#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "rspider/bench.hpp"
#include "rspider/errors.hpp"

using namespace rspider;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rspider");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("rspider_test_" + std::to_string(counter_++) + "_" +
                                                 std::to_string(reinterpret_cast<std::uintptr_t>(this)))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.d = 10;
  cfg.n = 80;
  cfg.deltas = {0.1};
  cfg.epochs = 10;
  cfg.seeds = {3};
  return cfg;
}

}  // namespace

TEST(Cli, HelpExitsZero) {
  const CliResult r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("bench"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli({"bench", "--bogus"}).code, 1);
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"bench", "--map-mode", "cayley", "--out", "x.csv"}).code, 1);
  EXPECT_EQ(run_cli({"bench", "--delta", "0.1", "--delta-list", "0.1,0.2", "--out", "x.csv"}).code, 1);
  EXPECT_EQ(run_cli({"bench", "--delta", "-1", "--out", "x.csv"}).code, 1);
  EXPECT_EQ(run_cli({"bench", "--algo", "adam", "--out", "x.csv"}).code, 1);
  const CliResult no_out = run_cli({"bench", "--d", "5", "--n", "10"});
  EXPECT_EQ(no_out.code, 1);
  EXPECT_NE(no_out.err.find("--out"), std::string::npos);
}

TEST(Cli, RuntimeFailureExitsTwo) {
  TempDir dir;
  const CliResult r = run_cli({"run", "--d", "5", "--n", "20", "--delta", "0.1", "--seed", "1", "--epochs", "1",
                               "--out", (dir / "missing" / "x.csv").string()});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, SmokeBench) {
  TempDir dir;
  const fs::path out = dir / "o.csv";
  const CliResult r = run_cli({"bench", "--algo", "spider", "--d", "100", "--n", "2000", "--delta", "0.01",
                               "--epochs", "30", "--seed", "7", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(out);
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows.front().front(), "algo");
  EXPECT_EQ(rows[1][0], "spider");
  EXPECT_TRUE(fs::exists(out.string() + ".summary.csv"));
}

TEST(Cli, ConfigFileWithFlagOverride) {
  TempDir dir;
  const fs::path conf = dir / "sweep.conf";
  {
    std::ofstream c(conf);
    c << "# desk sweep\n"
         "d=8\n"
         "n=40\n"
         "algo=rsvrg,vrpca\n"
         "delta-list=0.2,0.1\n"
         "epochs=2\n"
         "seeds=1,2\n";
  }
  const fs::path out = dir / "c.csv";
  const CliResult r = run_cli({"bench", "--config", conf.string(), "--d", "6", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("cells=8 "), std::string::npos) << r.out;
  const auto rows = read_csv(out);
  ASSERT_EQ(rows.size(), 1u + 8u * 3u);
  std::set<std::string> algos;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][2], "6");
    EXPECT_EQ(rows[i][3], "40");
    algos.insert(rows[i][0]);
  }
  EXPECT_EQ(algos, (std::set<std::string>{"rsvrg", "vrpca"}));
}

TEST(Cli, RunPrintsCsvAndIsDeterministic) {
  const std::vector<std::string> args{"run", "--algo", "rsvrg", "--d", "8", "--n", "50", "--delta", "0.2",
                                      "--seed", "4", "--epochs", "4"};
  const CliResult a = run_cli(args);
  const CliResult b = run_cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 6);
}

TEST(Cli, GenAndProbe) {
  TempDir dir;
  const fs::path out = dir / "m.bin";
  const CliResult g = run_cli({"gen", "--d", "5", "--n", "12", "--delta", "0.25", "--out", out.string()});
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_NE(g.out.find("lambda2=0.75"), std::string::npos) << g.out;
  EXPECT_EQ(fs::file_size(out), 24u + 8u * 5u * 12u);

  const CliResult fd = run_cli({"probe", "fd", "--d", "10", "--n", "30", "--delta", "0.1", "--seed", "2"});
  ASSERT_EQ(fd.code, 0) << fd.err;
  EXPECT_NE(fd.out.find("pass=true"), std::string::npos);
  const CliResult var = run_cli({"probe", "variance", "--d", "10", "--n", "100", "--delta", "0.1", "--seed", "2",
                                 "--eps", "0.05", "--samples", "100"});
  ASSERT_EQ(var.code, 0) << var.err;
  EXPECT_NE(var.out.find("probe=variance_probe"), std::string::npos);
  EXPECT_EQ(run_cli({"probe", "hessian", "--delta", "0.1"}).code, 1);
}

TEST(RunCell, ZeroEpochsGivesStartRow) {
  ExperimentConfig cfg = small_config();
  cfg.epochs = 0;
  const std::vector<CsvRow> rows = run_cell(cfg, Algo::Rsvrg, 0.1, 3);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].epoch, 0.0);
  EXPECT_EQ(rows[0].ifo, 0u);
  EXPECT_GT(rows[0].accuracy, 0.0);
  EXPECT_NEAR(rows[0].accuracy, (rows[0].f_value + 1.0) / 1.0, 1e-12);
  EXPECT_FALSE(rows[0].wall_ms.has_value());
  std::ostringstream csv;
  write_rows_csv(csv, rows);
  EXPECT_EQ(csv.str().back(), '\n');
  EXPECT_EQ(csv.str()[csv.str().size() - 2], ',');
}

TEST(RunCell, RowCountAndEpochConsistency) {
  ExperimentConfig cfg = small_config();
  cfg.checkpoint_every = 0.5;
  for (Algo a : {Algo::Rsgd, Algo::Rsvrg, Algo::Vrpca, Algo::Spider, Algo::SpiderGd1, Algo::SpiderGd2}) {
    const std::vector<CsvRow> rows = run_cell(cfg, a, 0.1, 3);
    ASSERT_EQ(rows.size(), 21u) << to_string(a);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const CsvRow& r = rows[j];
      EXPECT_NEAR(r.epoch, static_cast<double>(r.ifo) / 80.0, 1e-12) << to_string(a);
      EXPECT_GE(r.epoch, 0.5 * static_cast<double>(j) - 1e-12) << to_string(a);
      EXPECT_GE(r.accuracy, -1e-12) << to_string(a);
      EXPECT_EQ(r.epochs_to_double.has_value(), j >= 10) << to_string(a);
    }
    EXPECT_EQ(rows[0].map_mode, a == Algo::Vrpca ? "retract" : "exp");
  }
}

TEST(RunCell, RsvrgAndVrpcaAgreeAtEpochFive) {
  ExperimentConfig cfg = small_config();
  cfg.d = 20;
  cfg.n = 200;
  const std::vector<CsvRow> a = run_cell(cfg, Algo::Rsvrg, 0.1, 5);
  const std::vector<CsvRow> b = run_cell(cfg, Algo::Vrpca, 0.1, 5);
  const double ratio = a[5].accuracy / b[5].accuracy;
  EXPECT_GT(ratio, 0.5);
  EXPECT_LT(ratio, 2.0);
}

TEST(RunCell, CellsShareTheBasisAcrossGaps) {
  ExperimentConfig cfg = small_config();
  cfg.epochs = 0;
  const GapBasis basis = make_gap_basis(cfg.d, cfg.n, cfg.master_seed);
  EXPECT_EQ(run_cell(cfg, basis, Algo::Rsvrg, 0.1, 3)[0].f_value, run_cell(cfg, Algo::Rsvrg, 0.1, 3)[0].f_value);
  // Same x0 and shared basis: only the gap changes the starting value.
  EXPECT_NE(run_cell(cfg, Algo::Rsvrg, 0.05, 3)[0].f_value, run_cell(cfg, Algo::Rsvrg, 0.1, 3)[0].f_value);
}

TEST(Summary, FitOnExactInverseLaw) {
  const std::vector<double> deltas = default_delta_list(1e-2, 8);
  std::vector<double> xs, ys;
  for (double d : deltas) {
    xs.push_back(1.0 / d);
    ys.push_back(3.0 / d);
  }
  const LinearFit f = fit_line(xs, ys);
  EXPECT_NEAR(f.slope, 3.0, 1e-12);
  EXPECT_NEAR(f.corr, 1.0, 1e-12);
  EXPECT_NEAR(f.intercept, 0.0, 1e-9);

  // The same law fed through summarize as manufactured rows.
  ExperimentConfig cfg;
  cfg.epochs = 15;
  cfg.window = 5;
  std::vector<CsvRow> rows;
  for (double d : deltas) {
    for (std::size_t c = 0; c <= 15; ++c) {
      CsvRow r;
      r.algo = "rsvrg";
      r.delta = d;
      r.checkpoint = c;
      if (c >= 5) r.epochs_to_double = DoublingEstimate{static_cast<double>(c), DoublingEstimate::Kind::Finite, 3.0 / d};
      rows.push_back(r);
    }
  }
  const std::vector<SummaryRow> s = summarize(rows, cfg);
  ASSERT_EQ(s.size(), 8u);
  EXPECT_NEAR(s[0].fit_slope, 3.0, 1e-12);
  EXPECT_NEAR(s[0].fit_corr, 1.0, 1e-12);
  EXPECT_EQ(s[0].medians.size(), 3u);
}

TEST(Summary, MedianIgnoresNan) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(median_ignoring_nan({3.0, nan, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median_ignoring_nan({1.0, 4.0}), 2.5);
  EXPECT_TRUE(std::isnan(median_ignoring_nan({nan})));
  EXPECT_TRUE(std::isinf(median_ignoring_nan({1.0, std::numeric_limits<double>::infinity()})));
}

TEST(Sweep, CountsCellsAndIsByteIdentical) {
  ExperimentConfig cfg;
  cfg.algos = {Algo::Rsvrg, Algo::Vrpca};
  cfg.d = 6;
  cfg.n = 30;
  cfg.deltas = default_delta_list(0.1, 8);
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.epochs = 2;
  cfg.workers = 3;
  const SweepResult a = run_sweep(cfg);
  EXPECT_EQ(a.cells, 80u);
  EXPECT_TRUE(a.failures.empty());
  EXPECT_EQ(a.rows.size(), 80u * 3u);
  EXPECT_EQ(a.summary.size(), 16u);

  TempDir dir;
  write_sweep(a, cfg, (dir / "a.csv").string());
  cfg.workers = 1;
  write_sweep(run_sweep(cfg), cfg, (dir / "b.csv").string());
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(slurp(dir / "a.csv.summary.csv"), slurp(dir / "b.csv.summary.csv"));
  EXPECT_THROW(write_sweep(a, cfg, (dir / "no" / "c.csv").string()), std::runtime_error);
}

TEST(Config, Validation) {
  ExperimentConfig cfg = small_config();
  cfg.window = 2.5;
  cfg.checkpoint_every = 1.0;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = small_config();
  cfg.seeds.clear();
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = small_config();
  cfg.inner_len = 0;
  EXPECT_THROW(cfg.validate(), UsageError);
  EXPECT_EQ(default_svrg_inner(2000), 500u);
  EXPECT_EQ(default_svrg_inner(1), 1u);
  EXPECT_EQ(parse_algo("spider-gd2"), Algo::SpiderGd2);
  EXPECT_THROW(parse_algo("adam"), UsageError);
}
