#include "rspider/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "optim/tracker.hpp"
#include "rspider/errors.hpp"

namespace rspider {

using detail::format_double;

std::string ProbeReport::to_text() const {
  std::ostringstream out;
  out << "probe=" << name << '\n';
  out << "samples=" << samples << '\n';
  out << "statistic=" << format_double(statistic) << '\n';
  out << "bound=" << (bound ? format_double(*bound) : std::string("none")) << '\n';
  out << "pass=" << (pass ? "true" : "false") << '\n';
  for (const auto& [key, value] : details) out << "detail." << key << '=' << format_double(value) << '\n';
  return out.str();
}

namespace {

void finalize(ProbeReport& report) { report.pass = !report.bound || report.statistic <= *report.bound; }

}  // namespace

ProbeReport fd_gradient_check(const FiniteSumObjective& objective, const Point& x, std::size_t trials,
                              double t_step, std::uint64_t seed, std::optional<double> bound) {
  if (!(t_step > 0.0) || t_step > 1e-3) throw UsageError("fd_gradient_check: t_step must lie in (0, 1e-3]");
  if (trials < 1) throw UsageError("fd_gradient_check: need at least one trial");
  const Manifold& m = objective.manifold();
  Rng rng = make_rng(seed, Stream::Probe);
  const Tangent grad = objective.full_gradient(x);

  ProbeReport report;
  report.name = "fd_gradient_check";
  report.samples = trials;
  report.bound = bound;
  double worst = 0.0;
  double worst_rel = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const Tangent v = m.random_unit_tangent(x, rng);
    const double analytic = m.inner(x, grad, v);
    const double fp = objective.value(m.exp(x, t_step * v));
    const double fm = objective.value(m.exp(x, -t_step * v));
    const double numeric = (fp - fm) / (2.0 * t_step);
    const double err = std::abs(analytic - numeric);
    worst = std::max(worst, err);
    worst_rel = std::max(worst_rel, err / std::max(1.0, std::abs(analytic)));
  }
  report.statistic = worst;
  report.details["t_step"] = t_step;
  report.details["max_relative_error"] = worst_rel;
  finalize(report);
  return report;
}

double smoothness_ratio(const FiniteSumObjective& objective, const Point& x, const Point& y) {
  const Manifold& m = objective.manifold();
  const double d = m.dist(x, y);
  if (!(d > 0.0)) throw UsageError("smoothness_ratio: points coincide");
  const Tangent gx = objective.full_gradient(x);
  const Tangent gy = objective.full_gradient(y);
  return (gx - m.transport(y, x, gy)).norm() / d;
}

ProbeReport smoothness_probe(const FiniteSumObjective& objective, std::size_t pairs, double radius,
                             std::uint64_t seed) {
  if (pairs < 1) throw UsageError("smoothness_probe: need at least one pair");
  if (!(radius > 0.0)) throw UsageError("smoothness_probe: radius must be positive");
  const Manifold& m = objective.manifold();
  Rng rng = make_rng(seed, Stream::Probe);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ProbeReport report;
  report.name = "smoothness_probe";
  report.bound = objective.smoothness_hint();
  double worst = 0.0;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const Point x = m.random_point(rng);
    const double r = radius * (1.0 - unit(rng));
    const Point y = m.exp(x, r * m.random_unit_tangent(x, rng));
    if (!(m.dist(x, y) > 1e-12)) continue;
    const double ratio = smoothness_ratio(objective, x, y);
    worst = std::max(worst, ratio);
    sum += ratio;
    ++used;
  }
  report.samples = used;
  report.statistic = worst;
  report.details["radius"] = radius;
  report.details["mean_ratio"] = used ? sum / static_cast<double>(used) : 0.0;
  finalize(report);
  return report;
}

ProbeReport pl_constant_estimate(const FiniteSumObjective& objective, double f_star, std::span<const Point> points) {
  ProbeReport report;
  report.name = "pl_constant_estimate";
  double worst = 0.0;
  double min_ratio = std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  for (const Point& x : points) {
    const double g2 = objective.full_gradient(x).squared_norm();
    if (g2 < 1e-12) continue;
    const double ratio = (objective.value(x) - f_star) / g2;
    worst = std::max(worst, ratio);
    min_ratio = std::min(min_ratio, ratio);
    ++used;
  }
  if (used == 0) throw UsageError("pl_constant_estimate: every point is near-critical, nothing to estimate");
  report.samples = used;
  report.statistic = worst;
  report.details["excluded"] = static_cast<double>(points.size() - used);
  report.details["min_ratio"] = min_ratio;
  finalize(report);
  return report;
}

std::vector<Point> sample_geodesic_ball(const Manifold& manifold, const Point& center, double radius,
                                        std::size_t count, std::uint64_t seed, const Tangent* slow_direction) {
  if (!(radius > 0.0)) throw UsageError("sample_geodesic_ball: radius must be positive");
  Rng rng = make_rng(seed, Stream::Probe);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::optional<Tangent> slow;
  if (slow_direction != nullptr) {
    Tangent s = manifold.tangent(center, slow_direction->coords());
    const double nrm = s.norm();
    if (!(nrm > 0.0)) throw UsageError("sample_geodesic_ball: slow direction is not tangent at the center");
    slow = (1.0 / nrm) * std::move(s);
  }
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double theta = radius * (1.0 - unit(rng));
    Tangent u = manifold.random_unit_tangent(center, rng);
    if (slow) {
      Tangent perp = u - manifold.inner(center, u, *slow) * *slow;
      const double pn = perp.norm();
      const double phi = 0.5 * std::numbers::pi * unit(rng);
      u = pn > 1e-12 ? std::cos(phi) * *slow + (std::sin(phi) / pn) * std::move(perp) : *slow;
    }
    out.push_back(manifold.exp(center, theta * u));
  }
  return out;
}

std::vector<Point> pca_pl_points(const PcaProblem& problem, std::size_t count, std::uint64_t seed) {
  const EigenPair top = leading_eigpair(problem);
  const EigenPair second = second_eigpair(problem, top);
  const Manifold& m = problem.manifold();
  const Point center = m.point(top.vector);
  const Tangent slow = m.tangent(center, second.vector);
  return sample_geodesic_ball(m, center, std::numbers::pi / 4.0, count, seed, &slow);
}

ProbeReport variance_probe(const FiniteSumObjective& objective, const FrozenState& state, std::size_t resamples,
                           std::uint64_t seed) {
  if (resamples < 2) throw UsageError("variance_probe: need at least two resamples");
  if (state.batch < 1) throw UsageError("variance_probe: batch must be >= 1");
  Rng rng = make_rng(seed, Stream::Probe);
  // Private oracle: probe evaluations never reach a run's counter.
  Oracle scratch(objective);
  const Tangent truth = objective.full_gradient(state.x);
  const bool enumerate = state.batch >= objective.size();

  double sum = 0.0;
  double sum_sq = 0.0;
  double worst = 0.0;
  for (std::size_t r = 0; r < resamples; ++r) {
    const Tangent v = spider_correction(scratch, state.x_prev, state.x, state.v_prev, state.batch, enumerate, rng);
    const double err = (v - truth).squared_norm();
    sum += err;
    sum_sq += err * err;
    worst = std::max(worst, err);
  }
  const auto count = static_cast<double>(resamples);
  const double mean = sum / count;
  const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));

  ProbeReport report;
  report.name = "variance_probe";
  report.samples = resamples;
  report.statistic = mean;
  report.bound = 2.0 * state.eps * state.eps;
  report.details["batch"] = static_cast<double>(state.batch);
  report.details["standard_error"] = std::sqrt(var / count);
  report.details["max_sample"] = worst;
  report.details["carried_error"] =
      (objective.manifold().transport(state.x_prev, state.x, state.v_prev - objective.full_gradient(state.x_prev)))
          .squared_norm();
  finalize(report);
  return report;
}

DoublingEstimate doubling_from_ratio(double acc_start, double acc_end, double window) {
  DoublingEstimate out;
  constexpr double kFloor = 1e-15;
  if (acc_start <= kFloor || acc_end <= kFloor) {
    out.kind = DoublingEstimate::Kind::Converged;
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double c = acc_end / acc_start;
  if (c >= 1.0) {
    out.kind = DoublingEstimate::Kind::NoProgress;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.kind = DoublingEstimate::Kind::Finite;
  out.value = std::log(2.0) / std::log(1.0 / c) * window;
  return out;
}

std::vector<DoublingEstimate> epochs_to_double(std::span<const double> accuracy, std::size_t stride,
                                               double checkpoint_every) {
  if (stride < 1) throw UsageError("epochs_to_double: window must span at least one checkpoint");
  if (accuracy.size() < stride + 1) {
    throw UsageError("epochs_to_double: need at least window + 1 checkpoints");
  }
  const double window = static_cast<double>(stride) * checkpoint_every;
  std::vector<DoublingEstimate> out;
  out.reserve(accuracy.size() - stride);
  for (std::size_t j = stride; j < accuracy.size(); ++j) {
    DoublingEstimate e = doubling_from_ratio(accuracy[j - stride], accuracy[j], window);
    e.epoch = static_cast<double>(j) * checkpoint_every;
    out.push_back(e);
  }
  return out;
}

std::vector<DoublingEstimate> epochs_to_double(const RunTrace& trace, double f_star, double window) {
  if (f_star == 0.0) throw UsageError("epochs_to_double: relative accuracy needs f* != 0");
  if (!(trace.checkpoint_every > 0.0)) throw UsageError("epochs_to_double: trace was not recorded at checkpoints");
  const double ratio = window / trace.checkpoint_every;
  const auto stride = static_cast<std::size_t>(std::llround(ratio));
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9) {
    throw UsageError("epochs_to_double: window must be a multiple of the checkpoint spacing");
  }
  std::vector<double> acc;
  acc.reserve(trace.records.size());
  for (const TraceRecord& r : trace.records) acc.push_back((r.f - f_star) / std::abs(f_star));
  return epochs_to_double(acc, stride, trace.checkpoint_every);
}

}  // namespace rspider
