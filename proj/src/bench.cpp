#include "rspider/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "optim/tracker.hpp"
#include "rspider/errors.hpp"
#include "rspider/optim.hpp"

namespace rspider {

const char* to_string(Algo algo) {
  switch (algo) {
    case Algo::Rsgd: return "rsgd";
    case Algo::Rsvrg: return "rsvrg";
    case Algo::Vrpca: return "vrpca";
    case Algo::Spider: return "spider";
    case Algo::SpiderGd1: return "spider-gd1";
    case Algo::SpiderGd2: return "spider-gd2";
  }
  return "?";
}

Algo parse_algo(const std::string& text) {
  for (Algo a : {Algo::Rsgd, Algo::Rsvrg, Algo::Vrpca, Algo::Spider, Algo::SpiderGd1, Algo::SpiderGd2}) {
    if (text == to_string(a)) return a;
  }
  throw UsageError("unknown algorithm '" + text + "' (expected rsgd|rsvrg|vrpca|spider|spider-gd1|spider-gd2)");
}

std::string format_number(double v) { return detail::format_double(v); }

void ExperimentConfig::validate() const {
  if (algos.empty()) throw UsageError("experiment: no algorithm selected");
  if (deltas.empty()) throw UsageError("experiment: empty delta list");
  for (double delta : deltas) {
    if (!(delta > 0.0)) throw UsageError("experiment: deltas must be strictly positive");
  }
  if (seeds.empty()) throw UsageError("experiment: no seeds");
  if (!(epochs >= 0.0)) throw UsageError("experiment: epochs must be non-negative");
  if (!(checkpoint_every > 0.0)) throw UsageError("experiment: checkpoint spacing must be positive");
  if (!(window > 0.0)) throw UsageError("experiment: window must be positive");
  const double stride = window / checkpoint_every;
  if (std::abs(stride - std::round(stride)) > 1e-9 || std::round(stride) < 1.0) {
    throw UsageError("experiment: window must be a multiple of the checkpoint spacing");
  }
  if (eta && !(*eta >= 0.0)) throw UsageError("experiment: eta must be non-negative");
  if (inner_len && *inner_len < 1) throw UsageError("experiment: inner loop length must be >= 1");
  if (!(eps > 0.0)) throw UsageError("experiment: eps must be positive");
  if (workers < 1) throw UsageError("experiment: need at least one worker");
  SyntheticSpec{d, n, deltas.front(), master_seed, tail}.validate();
}

std::vector<double> default_delta_list(double delta0, std::size_t kmax) {
  std::vector<double> out;
  for (std::size_t k = 1; k <= kmax; ++k) out.push_back(delta0 / static_cast<double>(k));
  return out;
}

double default_svrg_eta(const PcaProblem& problem) { return 0.1 / problem.mean_sq_norm(); }

std::size_t default_svrg_inner(std::size_t n) { return std::max<std::size_t>(1, (n + 3) / 4); }

namespace {

constexpr std::size_t kGdStages = 64;
constexpr std::size_t kPlPoints = 512;

RunResult run_algorithm(const ExperimentConfig& cfg, Algo algo, const PcaProblem& problem, const Point& x0,
                        double f_star, std::uint64_t seed, const RunOptions& options) {
  const std::size_t n = problem.size();
  const double L = problem.component_smoothness_hint();
  const double eta = cfg.eta.value_or(default_svrg_eta(problem));
  const std::size_t inner = cfg.inner_len.value_or(default_svrg_inner(n));
  constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();
  switch (algo) {
    case Algo::Rsgd:
      return rsgd(problem, x0, [eta](std::size_t) { return eta; }, kUnbounded, seed, cfg.map_mode, options);
    case Algo::Rsvrg:
      return rsvrg(problem, x0, eta, kUnbounded, inner, cfg.map_mode, seed, options);
    case Algo::Vrpca:
      return rsvrg(problem, x0, eta, kUnbounded, inner, MapMode::Retraction, seed, options);
    case Algo::Spider: {
      const double gap = std::max(problem.value(x0) - f_star, 1e-12);
      SpiderConfig sc = params_finite(n, cfg.eps, gap, L);
      sc.T = kUnbounded;
      sc.map_mode = cfg.map_mode;
      sc.seed = seed;
      return spider_nonconvex(problem, x0, sc, options);
    }
    case Algo::SpiderGd1:
    case Algo::SpiderGd2: {
      const std::vector<Point> points = pca_pl_points(problem, kPlPoints, seed);
      GdConfig gc;
      gc.tau = pl_constant_estimate(problem, f_star, points).statistic;
      gc.M0 = std::max(problem.value(x0) - f_star, 1e-12);
      gc.L = L;
      gc.K = kGdStages;
      gc.map_mode = cfg.map_mode;
      gc.seed = seed;
      return algo == Algo::SpiderGd1 ? spider_gd1(problem, x0, gc, options) : spider_gd2(problem, x0, gc, options);
    }
  }
  throw UsageError("unknown algorithm");
}

}  // namespace

std::vector<CsvRow> run_cell(const ExperimentConfig& cfg, const GapBasis& basis, Algo algo, double delta,
                             std::uint64_t seed) {
  const auto started = std::chrono::steady_clock::now();
  const PcaProblem problem = assemble_gap_matrix(basis, delta, cfg.tail);
  const double f_star = *problem.known_optimum();
  Rng init = make_rng(seed, Stream::Initialization);
  const Point x0 = problem.manifold().random_point(init);

  RunOptions options;
  options.convention = cfg.convention;
  options.trace.mode = TraceOptions::Mode::Checkpoints;
  options.trace.checkpoint_every = cfg.checkpoint_every;
  options.trace.grad_sq = true;
  options.trace.epoch_budget = cfg.epochs;
  const RunResult result = run_algorithm(cfg, algo, problem, x0, f_star, seed, options);
  const RunTrace& trace = result.trace;

  const auto stride = static_cast<std::size_t>(std::llround(cfg.window / cfg.checkpoint_every));
  std::vector<DoublingEstimate> doubling;
  if (trace.records.size() > stride) doubling = epochs_to_double(trace, f_star, cfg.window);

  std::optional<double> wall_ms;
  if (cfg.timing) wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  const MapMode mode = algo == Algo::Vrpca ? MapMode::Retraction : cfg.map_mode;

  std::vector<CsvRow> rows;
  rows.reserve(trace.records.size());
  for (std::size_t j = 0; j < trace.records.size(); ++j) {
    const TraceRecord& r = trace.records[j];
    CsvRow row;
    row.algo = to_string(algo);
    row.map_mode = to_string(mode);
    row.d = problem.dim();
    row.n = problem.size();
    row.delta = delta;
    row.seed = seed;
    row.epoch = r.epoch;
    row.ifo = r.ifo;
    row.f_value = r.f;
    row.accuracy = (r.f - f_star) / std::abs(f_star);
    row.grad_sq = r.grad_sq;
    if (j >= stride && !doubling.empty()) row.epochs_to_double = doubling[j - stride];
    row.wall_ms = wall_ms;
    row.checkpoint = j;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CsvRow> run_cell(const ExperimentConfig& cfg, Algo algo, double delta, std::uint64_t seed) {
  return run_cell(cfg, make_gap_basis(cfg.d, cfg.n, cfg.master_seed), algo, delta, seed);
}

LinearFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw UsageError("fit_line: size mismatch");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::isfinite(xs[i]) && std::isfinite(ys[i])) pts.emplace_back(xs[i], ys[i]);
  }
  LinearFit fit;
  fit.points = pts.size();
  if (pts.size() < 2) {
    fit.slope = fit.intercept = fit.corr = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  const auto m = static_cast<double>(pts.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
    sxy += (x - mx) * (y - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.corr = sxy / std::sqrt(sxx * syy);
  return fit;
}

double median_ignoring_nan(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  const double lo = values[mid - 1];
  const double hi = values[mid];
  if (std::isinf(lo) || std::isinf(hi)) return hi;
  return 0.5 * (lo + hi);
}

std::size_t summary_window_count(const ExperimentConfig& cfg) {
  return static_cast<std::size_t>(std::floor(cfg.epochs / cfg.window + 1e-9));
}

std::vector<SummaryRow> summarize(std::span<const CsvRow> rows, const ExperimentConfig& cfg) {
  const std::size_t windows = summary_window_count(cfg);
  const auto stride = static_cast<std::size_t>(std::llround(cfg.window / cfg.checkpoint_every));
  std::size_t fit_window = windows;
  for (std::size_t w = 1; w <= windows; ++w) {
    if (std::abs(static_cast<double>(w) * cfg.window - cfg.fit_window_end) < 1e-9) fit_window = w;
  }

  // (algo, delta) in first-seen order -> window -> per-seed estimates
  std::vector<std::pair<std::string, double>> keys;
  std::map<std::pair<std::string, double>, std::vector<std::vector<double>>> samples;
  for (const CsvRow& row : rows) {
    const auto key = std::make_pair(row.algo, row.delta);
    auto [it, inserted] = samples.try_emplace(key, std::vector<std::vector<double>>(windows));
    if (inserted) keys.push_back(key);
    if (row.checkpoint == 0 || row.checkpoint % stride != 0 || !row.epochs_to_double) continue;
    const std::size_t w = row.checkpoint / stride;
    if (w >= 1 && w <= windows) it->second[w - 1].push_back(row.epochs_to_double->value);
  }

  std::vector<SummaryRow> out;
  for (const auto& key : keys) {
    SummaryRow s;
    s.algo = key.first;
    s.delta = key.second;
    s.inv_delta = 1.0 / key.second;
    for (const auto& per_seed : samples[key]) s.medians.push_back(median_ignoring_nan(per_seed));
    out.push_back(std::move(s));
  }
  std::map<std::string, LinearFit> fits;
  for (const SummaryRow& s : out) {
    if (fits.contains(s.algo)) continue;
    std::vector<double> xs, ys;
    for (const SummaryRow& t : out) {
      if (t.algo != s.algo || fit_window == 0) continue;
      xs.push_back(t.inv_delta);
      ys.push_back(t.medians[fit_window - 1]);
    }
    fits[s.algo] = fit_window == 0 ? LinearFit{} : fit_line(xs, ys);
    if (fit_window == 0) fits[s.algo].slope = fits[s.algo].corr = std::numeric_limits<double>::quiet_NaN();
  }
  for (SummaryRow& s : out) {
    s.fit_slope = fits[s.algo].slope;
    s.fit_corr = fits[s.algo].corr;
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Cell {
    Algo algo;
    double delta;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (Algo a : cfg.algos) {
    for (double delta : cfg.deltas) {
      for (std::uint64_t seed : cfg.seeds) cells.push_back({a, delta, seed});
    }
  }
  const GapBasis basis = make_gap_basis(cfg.d, cfg.n, cfg.master_seed);
  std::vector<std::vector<CsvRow>> rows(cells.size());
  std::vector<std::optional<std::string>> errors(cells.size());
  const auto count = static_cast<long>(cells.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(cfg.workers))
  for (long i = 0; i < count; ++i) {
    const Cell& c = cells[static_cast<std::size_t>(i)];
    try {
      rows[static_cast<std::size_t>(i)] = run_cell(cfg, basis, c.algo, c.delta, c.seed);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }

  SweepResult result;
  result.cells = cells.size();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (errors[i]) {
      result.failures.push_back({to_string(cells[i].algo), cells[i].delta, cells[i].seed, *errors[i]});
      continue;
    }
    for (CsvRow& r : rows[i]) result.rows.push_back(std::move(r));
  }
  result.summary = summarize(result.rows, cfg);
  return result;
}

namespace {

std::string format_doubling(const std::optional<DoublingEstimate>& e) {
  if (!e) return {};
  switch (e->kind) {
    case DoublingEstimate::Kind::NoProgress: return "inf";
    case DoublingEstimate::Kind::Converged: return "converged";
    case DoublingEstimate::Kind::Finite: return format_number(e->value);
  }
  return {};
}

}  // namespace

void write_rows_csv(std::ostream& out, std::span<const CsvRow> rows) {
  out << "algo,map_mode,d,n,delta,seed,epoch,ifo,f_value,accuracy,grad_sq,epochs_to_double,wall_ms\n";
  for (const CsvRow& r : rows) {
    out << r.algo << ',' << r.map_mode << ',' << r.d << ',' << r.n << ',' << format_number(r.delta) << ','
        << r.seed << ',' << format_number(r.epoch) << ',' << r.ifo << ',' << format_number(r.f_value) << ','
        << format_number(r.accuracy) << ',' << format_number(r.grad_sq) << ',' << format_doubling(r.epochs_to_double)
        << ',' << (r.wall_ms ? format_number(*r.wall_ms) : std::string()) << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> summary, std::size_t windows) {
  out << "algo,delta,inv_delta";
  for (std::size_t w = 1; w <= windows; ++w) out << ",median_epochs_to_double_w" << w;
  out << ",fit_slope,fit_corr\n";
  for (const SummaryRow& s : summary) {
    out << s.algo << ',' << format_number(s.delta) << ',' << format_number(s.inv_delta);
    for (std::size_t w = 0; w < windows; ++w) {
      out << ',' << (w < s.medians.size() ? format_number(s.medians[w]) : std::string("nan"));
    }
    out << ',' << format_number(s.fit_slope) << ',' << format_number(s.fit_corr) << '\n';
  }
}

void write_sweep(const SweepResult& result, const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream rows(path, std::ios::binary);
  if (!rows) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_rows_csv(rows, result.rows);
  const std::string summary_path = path + ".summary.csv";
  std::ofstream summary(summary_path, std::ios::binary);
  if (!summary) throw std::runtime_error("cannot open '" + summary_path + "' for writing");
  write_summary_csv(summary, result.summary, summary_window_count(cfg));
  if (!rows || !summary) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace rspider
