#ifndef RSPIDER_DIAGNOSTICS_HPP
#define RSPIDER_DIAGNOSTICS_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rspider/geometry.hpp"
#include "rspider/optim.hpp"
#include "rspider/oracle.hpp"

namespace rspider {

/// Outcome of one runtime check. pass == (statistic <= bound) when a bound
/// is set, true otherwise.
struct ProbeReport {
  std::string name;
  std::size_t samples = 0;
  double statistic = 0.0;
  std::optional<double> bound;
  bool pass = true;
  std::map<std::string, double> details;

  /// Flat `key=value` lines, one per field, each detail as `detail.<key>`.
  std::string to_text() const;
};

/// Compares <grad f(x), v> against the central difference
/// (f(exp(x, t v)) - f(exp(x, -t v))) / 2t over `trials` random unit
/// tangents. statistic = max absolute error.
ProbeReport fd_gradient_check(const FiniteSumObjective& objective, const Point& x, std::size_t trials,
                              double t_step, std::uint64_t seed, std::optional<double> bound = std::nullopt);

/// ||g_x - Gamma_y^x g_y|| / dist(x, y) for one pair.
double smoothness_ratio(const FiniteSumObjective& objective, const Point& x, const Point& y);

/// Empirical lower bound on the geodesic smoothness constant over random
/// pairs at distance <= radius; passes when it does not exceed the
/// objective's smoothness hint.
ProbeReport smoothness_probe(const FiniteSumObjective& objective, std::size_t pairs, double radius,
                             std::uint64_t seed);

/// Empirical gradient-dominance constant max (f(x) - f*) / ||grad f(x)||^2.
/// Points with ||grad f||^2 < 1e-12 are skipped; throws UsageError when no
/// point is left.
ProbeReport pl_constant_estimate(const FiniteSumObjective& objective, double f_star, std::span<const Point> points);

/// Points exp(center, theta u) with theta uniform in (0, radius] and unit u.
/// When `slow_direction` is given, u is rotated towards it by a uniform
/// angle so that the ball's worst-conditioned direction is covered.
std::vector<Point> sample_geodesic_ball(const Manifold& manifold, const Point& center, double radius,
                                        std::size_t count, std::uint64_t seed,
                                        const Tangent* slow_direction = nullptr);

/// Ball points for a PCA instance around its top eigenvector, biased towards
/// the second eigenvector (the slowest direction), radius pi/4.
std::vector<Point> pca_pl_points(const PcaProblem& problem, std::size_t count, std::uint64_t seed);

/// State captured right before a SPIDER correction step.
struct FrozenState {
  Point x_prev;
  Point x;
  Tangent v_prev;
  std::size_t batch = 1;
  double eps = 0.0;
};

/// Rebuilds v_k `resamples` times with fresh index draws and reports the
/// mean of ||v_k - grad f(x_k)||^2 against the bound 2 eps^2.
ProbeReport variance_probe(const FiniteSumObjective& objective, const FrozenState& state, std::size_t resamples,
                           std::uint64_t seed);

/// One epochs-to-double-accuracy estimate at the end of a window.
struct DoublingEstimate {
  enum class Kind { Finite, NoProgress, Converged };
  double epoch = 0.0;  ///< nominal epoch at the end of the window
  Kind kind = Kind::Finite;
  double value = 0.0;  ///< +inf for NoProgress, NaN for Converged
};

/// log(2) / log(1/c) * window with c = acc(end) / acc(start) for every
/// window of `stride` consecutive checkpoint intervals.
std::vector<DoublingEstimate> epochs_to_double(std::span<const double> accuracy, std::size_t stride,
                                               double checkpoint_every);
/// Same, over a checkpoint-mode trace; accuracy = (f - f*) / |f*|.
std::vector<DoublingEstimate> epochs_to_double(const RunTrace& trace, double f_star, double window = 5.0);

/// log(2) / log(1/c) * window with the sentinel rules applied.
DoublingEstimate doubling_from_ratio(double acc_start, double acc_end, double window);

}  // namespace rspider

#endif  // RSPIDER_DIAGNOSTICS_HPP
