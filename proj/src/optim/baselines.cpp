#include "rspider/errors.hpp"
#include "rspider/optim.hpp"
#include "tracker.hpp"

namespace rspider {

using detail::format_double;
using detail::Tracker;

RunResult rsgd(const FiniteSumObjective& objective, const Point& x0, const std::function<double(std::size_t)>& eta,
               std::size_t T, std::uint64_t seed, MapMode map_mode, const RunOptions& options) {
  if (!eta) throw UsageError("rsgd: missing step-size schedule");
  const Manifold& m = objective.manifold();
  Oracle oracle(objective, options.convention);
  Tracker tracker(objective, oracle, options.trace);
  tracker.add_meta("algo", "rsgd");
  tracker.add_meta("T", std::to_string(T));
  tracker.add_meta("map_mode", to_string(map_mode));
  tracker.add_meta("seed", std::to_string(seed));
  Rng sampler = make_rng(seed, Stream::Sampling);
  std::uniform_int_distribution<std::size_t> pick(0, objective.size() - 1);
  tracker.start(x0);

  Point x = x0;
  for (std::size_t k = 0; k < T && !tracker.exhausted(); ++k) {
    const Tangent g = oracle.component_rgrad(pick(sampler), x);
    Point next = m.step(x, -eta(k) * g, map_mode);
    const double step = m.dist(x, next);
    x = std::move(next);
    if (tracker.after_step(k + 1, x, step, 1, 0)) break;
  }
  return {std::move(x), tracker.finish()};
}

RunResult rsvrg(const FiniteSumObjective& objective, const Point& x0, double eta, std::size_t epochs,
                std::size_t inner_len, MapMode map_mode, std::uint64_t seed, const RunOptions& options) {
  if (!(eta >= 0.0)) throw UsageError("rsvrg: eta must be non-negative");
  if (inner_len < 1) throw UsageError("rsvrg: inner loop length must be >= 1");
  const Manifold& m = objective.manifold();
  Oracle oracle(objective, options.convention);
  Tracker tracker(objective, oracle, options.trace);
  tracker.add_meta("algo", map_mode == MapMode::Retraction ? "rsvrg-retract" : "rsvrg");
  tracker.add_meta("eta", format_double(eta));
  tracker.add_meta("epochs", std::to_string(epochs));
  tracker.add_meta("inner_len", std::to_string(inner_len));
  tracker.add_meta("map_mode", to_string(map_mode));
  tracker.add_meta("seed", std::to_string(seed));
  Rng sampler = make_rng(seed, Stream::Sampling);
  std::uniform_int_distribution<std::size_t> pick(0, objective.size() - 1);
  tracker.start(x0);

  Point x = x0;
  std::size_t k = 0;
  bool stop = tracker.exhausted();
  for (std::size_t s = 0; s < epochs && !stop; ++s) {
    const Point snapshot = x;
    const Tangent mu = oracle.full_rgrad(snapshot);
    for (std::size_t t = 0; t < inner_len; ++t) {
      const std::size_t one[1] = {pick(sampler)};
      auto [g_x, g_snap] = oracle.paired_minibatch_rgrad(one, x, snapshot);
      const Tangent v = std::move(g_x) - m.transport(snapshot, x, std::move(g_snap) - mu);
      Point next = m.step(x, -eta * v, map_mode);
      const double step = m.dist(x, next);
      x = std::move(next);
      ++k;
      if (tracker.after_step(k, x, step, 1, s + 1)) {
        stop = true;
        break;
      }
    }
  }
  return {std::move(x), tracker.finish()};
}

}  // namespace rspider
