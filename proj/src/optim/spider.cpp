#include <cmath>
#include <limits>

#include "rspider/errors.hpp"
#include "rspider/optim.hpp"
#include "tracker.hpp"

namespace rspider {

using detail::format_double;
using detail::Tracker;

Tangent spider_correction(Oracle& oracle, const Point& x_prev, const Point& x, const Tangent& v_prev,
                          std::size_t batch, bool enumerate, Rng& rng) {
  const Manifold& m = oracle.objective().manifold();
  std::pair<Tangent, Tangent> g = [&] {
    if (enumerate) return oracle.paired_full_rgrad(x, x_prev);
    const std::vector<std::size_t> idx = sample_indices(oracle.objective().size(), batch, rng);
    return oracle.paired_minibatch_rgrad(idx, x, x_prev);
  }();
  Tangent lag = std::move(g.second) - v_prev;
  return std::move(g.first) - m.transport(x_prev, x, lag);
}

namespace {

struct StageOutcome {
  Point x;
  std::size_t iterations = 0;
  bool stopped = false;
};

/// One call of R-SPIDER-nonconvex on a shared oracle, tracker and RNG
/// streams. Record indices continue from `k_offset`.
StageOutcome spider_stage(Oracle& oracle, Tracker& tracker, Rng& sampler, Rng& picker, const Point& x0,
                          const SpiderConfig& cfg, std::size_t stage, std::size_t k_offset, bool return_last,
                          const RunOptions& options) {
  const FiniteSumObjective& obj = oracle.objective();
  const Manifold& m = obj.manifold();
  if (cfg.T == 0) return {x0, 0, false};

  std::uniform_int_distribution<std::size_t> pick(1, cfg.T);
  const std::size_t out_index = return_last ? cfg.T : pick(picker);

  Point x = x0;
  Point out = x0;
  std::optional<Point> x_prev;
  std::optional<Tangent> v;
  double last_dist = 0.0;
  std::size_t done = 0;
  bool stopped = false;

  for (std::size_t k = 0; k < cfg.T; ++k) {
    std::size_t batch = 0;
    if (k % cfg.q == 0) {
      if (cfg.n && cfg.S1 >= *cfg.n) {
        v = oracle.full_rgrad(x);
        batch = obj.size();
      } else {
        const std::vector<std::size_t> idx = sample_indices(obj.size(), cfg.S1, sampler);
        v = oracle.minibatch_rgrad(idx, x);
        batch = cfg.S1;
      }
    } else {
      batch = spider_batch_size(cfg.q, cfg.L, last_dist, cfg.eps, cfg.n);
      if (options.on_correction) options.on_correction({k_offset + k, *x_prev, x, *v, batch});
      const bool enumerate = cfg.n && batch >= *cfg.n;
      v = spider_correction(oracle, *x_prev, x, *v, batch, enumerate, sampler);
    }
    Point next = m.step(x, -cfg.eta * *v, cfg.map_mode);
    last_dist = m.dist(x, next);
    x_prev = std::move(x);
    x = std::move(next);
    done = k + 1;
    if (done == out_index) out = x;
    if (tracker.after_step(k_offset + done, x, last_dist, batch, stage)) {
      stopped = done < cfg.T;
      break;
    }
  }
  // A budget stop before the sampled index leaves the last iterate.
  if (done < out_index) out = x;
  return {out, done, stopped};
}

void echo_spider(Tracker& tracker, const SpiderConfig& cfg) {
  tracker.add_meta("L", format_double(cfg.L));
  tracker.add_meta("eps", format_double(cfg.eps));
  tracker.add_meta("eta", format_double(cfg.eta));
  tracker.add_meta("q", std::to_string(cfg.q));
  tracker.add_meta("S1", std::to_string(cfg.S1));
  tracker.add_meta("T", std::to_string(cfg.T));
  tracker.add_meta("n", cfg.n ? std::to_string(*cfg.n) : std::string("inf"));
  tracker.add_meta("map_mode", to_string(cfg.map_mode));
  tracker.add_meta("seed", std::to_string(cfg.seed));
}

void echo_gd(Tracker& tracker, const GdConfig& cfg) {
  tracker.add_meta("M0", format_double(cfg.M0));
  tracker.add_meta("tau", format_double(cfg.tau));
  tracker.add_meta("L", format_double(cfg.L));
  tracker.add_meta("K", std::to_string(cfg.K));
  tracker.add_meta("map_mode", to_string(cfg.map_mode));
  tracker.add_meta("seed", std::to_string(cfg.seed));
}

}  // namespace

RunResult spider_nonconvex(const FiniteSumObjective& objective, const Point& x0, const SpiderConfig& cfg,
                           const RunOptions& options) {
  cfg.validate();
  if (cfg.n && *cfg.n != objective.size()) throw UsageError("spider_nonconvex: cfg.n does not match objective size");
  Oracle oracle(objective, options.convention);
  Tracker tracker(objective, oracle, options.trace);
  tracker.add_meta("algo", "spider");
  echo_spider(tracker, cfg);
  Rng sampler = make_rng(cfg.seed, Stream::Sampling);
  Rng picker = make_rng(cfg.seed, Stream::OutputIterate);
  tracker.start(x0);
  if (tracker.exhausted()) return {x0, tracker.finish()};
  StageOutcome res = spider_stage(oracle, tracker, sampler, picker, x0, cfg, 0, 0, false, options);
  return {std::move(res.x), tracker.finish()};
}

RunResult spider_gd1(const FiniteSumObjective& objective, const Point& x0, const GdConfig& cfg,
                     const RunOptions& options) {
  cfg.validate();
  Oracle oracle(objective, options.convention);
  Tracker tracker(objective, oracle, options.trace);
  tracker.add_meta("algo", "spider-gd1");
  echo_gd(tracker, cfg);
  tracker.add_meta("gd1_step", cfg.gd1_step == Gd1Step::Literal ? "literal" : "inverse_2L");
  Rng sampler = make_rng(cfg.seed, Stream::Sampling);
  Rng picker = make_rng(cfg.seed, Stream::OutputIterate);
  tracker.start(x0);

  const std::size_t n = objective.size();
  Point x = x0;
  std::size_t k_offset = 0;
  for (std::size_t t = 1; t <= cfg.K && !tracker.exhausted(); ++t) {
    SpiderConfig stage;
    stage.L = cfg.L;
    stage.eps = gd1_stage_eps(cfg.M0, cfg.tau, t);
    stage.eta = cfg.gd1_step == Gd1Step::Literal ? stage.eps / cfg.L : 1.0 / (2.0 * cfg.L);
    stage.q = std::max<std::size_t>(1, ceil_count(std::sqrt(static_cast<double>(n))));
    stage.S1 = n;
    stage.n = n;
    stage.T = gd1_stage_iterations(cfg.M0, cfg.tau, cfg.L, t);
    stage.map_mode = cfg.map_mode;
    stage.seed = cfg.seed;
    StageOutcome res =
        spider_stage(oracle, tracker, sampler, picker, x, stage, t, k_offset, cfg.chain_last_iterate, options);
    x = std::move(res.x);
    k_offset += res.iterations;
    if (res.stopped) break;
  }
  return {std::move(x), tracker.finish()};
}

RunResult spider_gd2(const FiniteSumObjective& objective, const Point& x0, const GdConfig& cfg,
                     const RunOptions& options) {
  cfg.validate();
  const Manifold& m = objective.manifold();
  const std::size_t n = objective.size();
  const std::size_t q = gd2_epoch_length(cfg.L, cfg.tau);
  const double eta = 1.0 / (2.0 * cfg.L);
  double threshold = gd2_initial_threshold(cfg.M0, cfg.tau);

  Oracle oracle(objective, options.convention);
  Tracker tracker(objective, oracle, options.trace);
  tracker.add_meta("algo", "spider-gd2");
  echo_gd(tracker, cfg);
  tracker.add_meta("q", std::to_string(q));
  Rng sampler = make_rng(cfg.seed, Stream::Sampling);
  tracker.start(x0);

  Point x = x0;
  std::optional<Point> x_prev;
  std::optional<Tangent> v;
  double last_dist = 0.0;
  const std::size_t total = q * cfg.K;
  for (std::size_t k = 0; k < total && !tracker.exhausted(); ++k) {
    std::size_t batch = 0;
    if (k % q == 0) {
      if (k > 0) threshold /= 2.0;
      v = oracle.full_rgrad(x);
      batch = n;
    } else {
      batch = gd2_batch_size(q, cfg.L, last_dist, threshold, n);
      if (options.on_correction) options.on_correction({k, *x_prev, x, *v, batch});
      v = spider_correction(oracle, *x_prev, x, *v, batch, batch >= n, sampler);
    }
    Point next = m.step(x, -eta * *v, cfg.map_mode);
    last_dist = m.dist(x, next);
    x_prev = std::move(x);
    x = std::move(next);
    if (tracker.after_step(k + 1, x, last_dist, batch, k / q + 1)) break;
  }
  return {std::move(x), tracker.finish()};
}

}  // namespace rspider
