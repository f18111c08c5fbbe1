#ifndef RSPIDER_BENCH_HPP
#define RSPIDER_BENCH_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rspider/diagnostics.hpp"
#include "rspider/geometry.hpp"
#include "rspider/oracle.hpp"

namespace rspider {

enum class Algo { Rsgd, Rsvrg, Vrpca, Spider, SpiderGd1, SpiderGd2 };

const char* to_string(Algo algo);
Algo parse_algo(const std::string& text);

/// One eigengap sweep. Every (algo, delta, seed) triple is a cell.
struct ExperimentConfig {
  std::vector<Algo> algos{Algo::Rsvrg};
  std::size_t d = 100;
  std::size_t n = 2000;
  std::vector<double> deltas;
  double epochs = 30.0;
  std::vector<std::uint64_t> seeds{7};
  /// Map used by rsgd, rsvrg and the spider family; vrpca always retracts.
  MapMode map_mode = MapMode::Exponential;
  /// Step size for rsgd / rsvrg / vrpca; default 1 / (10 trace(A)).
  std::optional<double> eta;
  /// Inner loop length of rsvrg / vrpca; default ceil(n / 4).
  std::optional<std::size_t> inner_len;
  double checkpoint_every = 1.0;
  double tail = 0.9;
  /// Seeds the U, V factors shared by every cell of the sweep.
  std::uint64_t master_seed = 1;
  IfoConvention convention = IfoConvention::Paired;
  std::size_t workers = 1;
  /// Epochs-to-double window length in epochs.
  double window = 5.0;
  /// Accuracy target of the spider schedule.
  double eps = 0.01;
  /// The summary's linear fit uses the window ending at this epoch (or the
  /// last window when the budget is shorter).
  double fit_window_end = 15.0;
  /// Emit measured wall time; off keeps the CSV a pure function of the config.
  bool timing = false;
  std::string out_path;

  void validate() const;
};

/// delta0 / k for k = 1..kmax.
std::vector<double> default_delta_list(double delta0, std::size_t kmax);

struct CsvRow {
  std::string algo;
  std::string map_mode;
  std::size_t d = 0;
  std::size_t n = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  double epoch = 0.0;
  std::uint64_t ifo = 0;
  double f_value = 0.0;
  double accuracy = 0.0;
  double grad_sq = 0.0;
  std::optional<DoublingEstimate> epochs_to_double;
  /// Cell wall time, only with cfg.timing.
  std::optional<double> wall_ms;
  /// Nominal checkpoint index (epoch = checkpoint * checkpoint_every); not written.
  std::size_t checkpoint = 0;
};

/// Step size used for rsgd / rsvrg / vrpca when none is given:
/// 0.1 / mean ||z_i||^2, the usual SVRG fraction of the average component
/// smoothness.
double default_svrg_eta(const PcaProblem& problem);
/// Inner loop length used for rsvrg / vrpca when none is given: ceil(n / 4).
std::size_t default_svrg_inner(std::size_t n);

/// Runs one cell on a prepared basis.
std::vector<CsvRow> run_cell(const ExperimentConfig& cfg, const GapBasis& basis, Algo algo, double delta,
                             std::uint64_t seed);
/// Runs one cell, building the basis from cfg.master_seed.
std::vector<CsvRow> run_cell(const ExperimentConfig& cfg, Algo algo, double delta, std::uint64_t seed);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double corr = 0.0;
  std::size_t points = 0;
};

/// Least-squares line and Pearson correlation; non-finite pairs are skipped.
LinearFit fit_line(std::span<const double> xs, std::span<const double> ys);

/// Median of the finite-or-infinite entries; NaN entries are ignored.
double median_ignoring_nan(std::vector<double> values);

struct SummaryRow {
  std::string algo;
  double delta = 0.0;
  double inv_delta = 0.0;
  /// Median over seeds of epochs-to-double for windows ending at
  /// window, 2 window, ...
  std::vector<double> medians;
  double fit_slope = 0.0;
  double fit_corr = 0.0;
};

std::size_t summary_window_count(const ExperimentConfig& cfg);
std::vector<SummaryRow> summarize(std::span<const CsvRow> rows, const ExperimentConfig& cfg);

struct CellFailure {
  std::string algo;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::string message;
};

struct SweepResult {
  std::vector<CsvRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<CellFailure> failures;
  std::size_t cells = 0;
};

/// Runs every cell (concurrently with cfg.workers threads) and assembles rows
/// in (algo, delta, seed) order.
SweepResult run_sweep(const ExperimentConfig& cfg);

void write_rows_csv(std::ostream& out, std::span<const CsvRow> rows);
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> summary, std::size_t windows);
/// Writes `path` and `path`.summary.csv; throws std::runtime_error when
/// either cannot be opened.
void write_sweep(const SweepResult& result, const ExperimentConfig& cfg, const std::string& path);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace rspider

#endif  // RSPIDER_BENCH_HPP
