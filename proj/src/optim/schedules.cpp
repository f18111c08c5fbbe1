#include <cmath>
#include <iostream>
#include <limits>

#include "rspider/errors.hpp"
#include "rspider/optim.hpp"

namespace rspider {

void SpiderConfig::validate() const {
  if (!(eta > 0.0)) throw UsageError("spider config: eta must be positive");
  if (q < 1) throw UsageError("spider config: q must be >= 1");
  if (S1 < 1) throw UsageError("spider config: S1 must be >= 1");
  if (!(eps > 0.0)) throw UsageError("spider config: eps must be positive");
  if (!(L > 0.0)) throw UsageError("spider config: L must be positive");
  if (n && *n < 1) throw UsageError("spider config: n must be >= 1");
}

void GdConfig::validate() const {
  if (!(M0 > 0.0)) throw UsageError("gd config: M0 must be positive");
  if (!(tau > 0.0)) throw UsageError("gd config: tau must be positive");
  if (!(L > 0.0)) throw UsageError("gd config: L must be positive");
}

std::size_t ceil_count(double x) {
  if (std::isnan(x)) throw UsageError("ceil_count: NaN");
  if (x <= 0.0) return 0;
  if (x >= static_cast<double>(std::numeric_limits<std::size_t>::max())) {
    return std::numeric_limits<std::size_t>::max();
  }
  const double nearest = std::round(x);
  if (nearest > 0.0 && x > nearest && (x - nearest) <= 1e-12 * nearest) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(x));
}

SpiderConfig params_stochastic(double sigma_sq, double eps, double M, double L) {
  if (!(eps > 0.0) || !(M > 0.0) || !(L > 0.0) || sigma_sq < 0.0) {
    throw UsageError("params_stochastic: eps, M, L must be positive and sigma^2 non-negative");
  }
  SpiderConfig cfg;
  cfg.L = L;
  cfg.eps = eps;
  cfg.eta = 1.0 / (2.0 * L);
  cfg.S1 = ceil_count(2.0 * sigma_sq / (eps * eps));
  if (cfg.S1 == 0) {
    std::clog << "warning: params_stochastic: sigma^2 = 0 gives S1 = 0; using S1 = 1\n";
    cfg.S1 = 1;
  }
  cfg.q = std::max<std::size_t>(1, ceil_count(1.0 / eps));
  cfg.T = ceil_count(4.0 * M * L / (eps * eps));
  cfg.n.reset();
  return cfg;
}

SpiderConfig params_finite(std::size_t n, double eps, double M, double L) {
  if (n < 1) throw UsageError("params_finite: need n >= 1");
  if (!(eps > 0.0) || !(M > 0.0) || !(L > 0.0)) throw UsageError("params_finite: eps, M, L must be positive");
  SpiderConfig cfg;
  cfg.L = L;
  cfg.eps = eps;
  cfg.eta = 1.0 / (2.0 * L);
  cfg.S1 = n;
  cfg.q = std::max<std::size_t>(1, ceil_count(std::sqrt(static_cast<double>(n))));
  cfg.T = ceil_count(4.0 * M * L / (eps * eps));
  cfg.n = n;
  return cfg;
}

std::size_t spider_batch_size(std::size_t q, double L, double dist, double eps, std::optional<std::size_t> n) {
  double want = static_cast<double>(q) * L * L * dist * dist / (2.0 * eps * eps);
  if (n) want = std::min(want, static_cast<double>(*n));
  return std::max<std::size_t>(1, ceil_count(want));
}

std::size_t gd2_batch_size(std::size_t q, double L, double dist, double delta, std::size_t n) {
  const double want = std::min(static_cast<double>(q) * L * L * dist * dist / delta, static_cast<double>(n));
  return std::max<std::size_t>(1, ceil_count(want));
}

double gd1_stage_eps(double M0, double tau, std::size_t t) {
  return std::sqrt(M0 / (std::ldexp(1.0, static_cast<int>(t)) * 10.0 * tau));
}

std::size_t gd1_stage_iterations(double M0, double tau, double L, std::size_t t) {
  const double eps = gd1_stage_eps(M0, tau, t);
  const double gap = M0 / std::ldexp(1.0, static_cast<int>(t) - 1);
  return ceil_count(4.0 * gap * L / (eps * eps));
}

std::size_t gd2_epoch_length(double L, double tau) { return std::max<std::size_t>(1, ceil_count(4.0 * L * tau * std::log(4.0))); }

double gd2_initial_threshold(double M0, double tau) { return M0 / (4.0 * tau); }

}  // namespace rspider
