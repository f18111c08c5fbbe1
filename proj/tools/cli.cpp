#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rspider/bench.hpp"
#include "rspider/diagnostics.hpp"
#include "rspider/errors.hpp"
#include "rspider/optim.hpp"
#include "rspider/oracle.hpp"

namespace rspider::cli {

namespace {

// Raw flag values; resolved into an ExperimentConfig after parsing.
struct Flags {
  std::vector<std::string> algos;
  std::size_t d = 100;
  std::size_t n = 2000;
  std::optional<double> delta;
  std::vector<double> delta_list;
  double delta0 = 1e-2;
  std::size_t kmax = 8;
  double epochs = 30.0;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::optional<double> eta;
  std::optional<std::size_t> inner_len;
  std::string map_mode = "exp";
  double checkpoint_every = 1.0;
  double tail = 0.9;
  std::string out;
  std::size_t workers = 1;
  std::string convention = "paired";
  double eps = 0.01;
  bool timing = false;
  double window = 5.0;
  std::uint64_t master_seed = 1;

  std::string probe_kind;
  std::optional<std::size_t> samples;
  double t_step = 1e-6;
  double radius = 1.0;
};

void add_common_options(CLI::App& app, Flags& f) {
  app.add_option("--algo", f.algos, "rsgd|rsvrg|vrpca|spider|spider-gd1|spider-gd2 (comma list for bench)")
      ->delimiter(',');
  app.add_option("--d", f.d, "ambient dimension")->capture_default_str();
  app.add_option("--n", f.n, "number of samples")->capture_default_str();
  auto* delta = app.add_option("--delta", f.delta, "single eigengap");
  app.add_option("--delta-list", f.delta_list, "comma-separated eigengaps")->delimiter(',')->excludes(delta);
  app.add_option("--delta0", f.delta0, "default gap list: delta0 / k")->capture_default_str();
  app.add_option("--kmax", f.kmax, "default gap list: k = 1..kmax")->capture_default_str();
  app.add_option("--epochs", f.epochs, "budget in IFO epochs")->capture_default_str();
  auto* seed = app.add_option("--seed", f.seed, "single run seed");
  app.add_option("--seeds", f.seeds, "comma-separated run seeds")->delimiter(',')->excludes(seed);
  app.add_option("--eta", f.eta, "step size for rsgd/rsvrg/vrpca");
  app.add_option("--inner-len", f.inner_len, "rsvrg/vrpca inner loop length (default ceil(n/4))");
  app.add_option("--map-mode", f.map_mode, "exp|retract")
      ->check(CLI::IsMember({"exp", "retract"}))
      ->capture_default_str();
  app.add_option("--checkpoint-every", f.checkpoint_every, "checkpoint spacing in epochs")->capture_default_str();
  app.add_option("--tail", f.tail, "geometric decay of the trailing spectrum")->capture_default_str();
  app.add_option("--out", f.out, "output file");
  app.add_option("--workers", f.workers, "concurrent sweep cells")->capture_default_str();
  app.add_option("--ifo-convention", f.convention, "paired|single")
      ->check(CLI::IsMember({"paired", "single"}))
      ->capture_default_str();
  app.add_option("--eps", f.eps, "accuracy target of the spider schedules")->capture_default_str();
  app.add_flag("--timing", f.timing, "record wall time (makes the CSV non-reproducible)");
  app.add_option("--window", f.window, "epochs-to-double window in epochs")->capture_default_str();
  app.add_option("--master-seed", f.master_seed, "seed of the basis shared by all gaps")->capture_default_str();
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig cfg;
  if (!f.algos.empty()) {
    cfg.algos.clear();
    for (const std::string& a : f.algos) cfg.algos.push_back(parse_algo(a));
  }
  cfg.d = f.d;
  cfg.n = f.n;
  if (f.delta) {
    cfg.deltas = {*f.delta};
  } else if (!f.delta_list.empty()) {
    cfg.deltas = f.delta_list;
  } else {
    cfg.deltas = default_delta_list(f.delta0, f.kmax);
  }
  cfg.epochs = f.epochs;
  if (f.seed) {
    cfg.seeds = {*f.seed};
  } else if (!f.seeds.empty()) {
    cfg.seeds = f.seeds;
  }
  cfg.eta = f.eta;
  cfg.inner_len = f.inner_len;
  cfg.map_mode = parse_map_mode(f.map_mode);
  cfg.checkpoint_every = f.checkpoint_every;
  cfg.tail = f.tail;
  cfg.master_seed = f.master_seed;
  cfg.convention = parse_ifo_convention(f.convention);
  cfg.workers = f.workers;
  cfg.window = f.window;
  cfg.eps = f.eps;
  cfg.timing = f.timing;
  cfg.out_path = f.out;
  cfg.validate();
  return cfg;
}

int cmd_bench(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.out_path.empty()) throw UsageError("bench: --out is required");
  const SweepResult result = run_sweep(cfg);
  write_sweep(result, cfg, cfg.out_path);
  out << "cells=" << result.cells << " failed=" << result.failures.size() << " rows=" << result.rows.size()
      << " out=" << cfg.out_path << '\n';
  for (const CellFailure& f : result.failures) {
    err << "cell algo=" << f.algo << " delta=" << format_number(f.delta) << " seed=" << f.seed
        << " failed: " << f.message << '\n';
  }
  return result.failures.empty() ? 0 : 2;
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.algos.size() != 1 || cfg.deltas.size() != 1 || cfg.seeds.size() != 1) {
    throw UsageError("run: expects exactly one algorithm, one gap and one seed");
  }
  const std::vector<CsvRow> rows = run_cell(cfg, cfg.algos.front(), cfg.deltas.front(), cfg.seeds.front());
  if (cfg.out_path.empty()) {
    write_rows_csv(out, rows);
    return 0;
  }
  std::ofstream file(cfg.out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + cfg.out_path + "' for writing");
  write_rows_csv(file, rows);
  if (!file) throw std::runtime_error("write failed for '" + cfg.out_path + "'");
  return 0;
}

int cmd_gen(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.out_path.empty()) throw UsageError("gen: --out is required");
  if (cfg.deltas.size() != 1) throw UsageError("gen: expects a single --delta");
  const SyntheticSpec spec{cfg.d, cfg.n, cfg.deltas.front(), cfg.master_seed, cfg.tail};
  const PcaProblem problem = generate_gap_matrix(spec);
  write_gap_matrix(cfg.out_path, problem, cfg.master_seed);
  const std::vector<double>& lambda = *problem.spectrum();
  out << "d=" << cfg.d << " n=" << cfg.n << " lambda1=" << format_number(lambda[0])
      << " lambda2=" << format_number(lambda[1]) << " out=" << cfg.out_path << '\n';
  return 0;
}

ProbeReport variance_report(const PcaProblem& problem, const Point& x0, const ExperimentConfig& cfg,
                            std::uint64_t seed, std::size_t resamples) {
  const double f_star = *problem.known_optimum();
  const double gap = std::max(problem.value(x0) - f_star, 1e-12);
  SpiderConfig sc = params_finite(problem.size(), cfg.eps, gap, problem.component_smoothness_hint());
  sc.seed = seed;
  sc.map_mode = cfg.map_mode;
  // Freeze the first correction halfway through the first epoch.
  const std::size_t target = std::max<std::size_t>(1, sc.q / 2);
  sc.T = std::min(sc.T, target + 1);
  std::optional<FrozenState> frozen;
  RunOptions options;
  options.trace.mode = TraceOptions::Mode::Off;
  options.convention = cfg.convention;
  options.on_correction = [&](const CorrectionState& s) {
    if (!frozen && s.k >= target) frozen = FrozenState{s.x_prev, s.x, s.v_prev, s.batch, cfg.eps};
  };
  spider_nonconvex(problem, x0, sc, options);
  if (!frozen) throw UsageError("probe variance: the schedule has no correction step (q = 1)");
  return variance_probe(problem, *frozen, resamples, seed);
}

int cmd_probe(const ExperimentConfig& cfg, const Flags& f, std::ostream& out) {
  if (cfg.deltas.size() != 1 || cfg.seeds.size() != 1) throw UsageError("probe: expects one gap and one seed");
  const std::uint64_t seed = cfg.seeds.front();
  const PcaProblem problem = generate_gap_matrix({cfg.d, cfg.n, cfg.deltas.front(), cfg.master_seed, cfg.tail});
  Rng init = make_rng(seed, Stream::Initialization);
  const Point x0 = problem.manifold().random_point(init);

  ProbeReport report;
  if (f.probe_kind == "fd") {
    report = fd_gradient_check(problem, x0, f.samples.value_or(100), f.t_step, seed, 1e-5);
  } else if (f.probe_kind == "smoothness") {
    report = smoothness_probe(problem, f.samples.value_or(200), f.radius, seed);
  } else if (f.probe_kind == "pl") {
    const std::vector<Point> points = pca_pl_points(problem, f.samples.value_or(512), seed);
    report = pl_constant_estimate(problem, *problem.known_optimum(), points);
  } else {
    report = variance_report(problem, x0, cfg, seed, f.samples.value_or(500));
  }
  out << report.to_text();
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Riemannian SPIDER optimizers and the eigengap benchmark", "rspider"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "flat key=value file; flags take precedence");

  Flags flags;
  add_common_options(app, flags);
  auto* bench = app.add_subcommand("bench", "run an (algo, delta, seed) sweep and write CSV + summary");
  auto* run = app.add_subcommand("run", "run one cell and print its CSV rows");
  auto* probe = app.add_subcommand("probe", "run one diagnostic probe on a synthetic instance");
  auto* gen = app.add_subcommand("gen", "write a synthetic gap matrix in binary form");
  probe->add_option("kind", flags.probe_kind, "fd|smoothness|pl|variance")
      ->required()
      ->check(CLI::IsMember({"fd", "smoothness", "pl", "variance"}));
  probe->add_option("--samples", flags.samples, "trials, pairs, points or resamples");
  probe->add_option("--t-step", flags.t_step, "finite-difference step")->capture_default_str();
  probe->add_option("--radius", flags.radius, "smoothness pair radius")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    const ExperimentConfig cfg = resolve(flags);
    if (bench->parsed()) return cmd_bench(cfg, out, err);
    if (run->parsed()) return cmd_run(cfg, out);
    if (gen->parsed()) return cmd_gen(cfg, out);
    if (probe->parsed()) return cmd_probe(cfg, flags, out);
    return 1;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace rspider::cli
