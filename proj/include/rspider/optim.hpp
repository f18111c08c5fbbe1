#ifndef RSPIDER_OPTIM_HPP
#define RSPIDER_OPTIM_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rspider/geometry.hpp"
#include "rspider/oracle.hpp"
#include "rspider/rng.hpp"

namespace rspider {

// ---------------------------------------------------------------------------
// Configurations and parameter schedules

/// R-SPIDER-nonconvex settings. `n` empty means the pure stochastic setting
/// (no cap on batch sizes, anchors are always sampled).
struct SpiderConfig {
  double L = 1.0;
  double eps = 0.1;
  double eta = 0.5;
  std::size_t q = 1;
  std::size_t S1 = 1;
  std::size_t T = 1;
  std::optional<std::size_t> n;
  MapMode map_mode = MapMode::Exponential;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Step size used inside R-SPIDER-GD1 stages. `InverseTwoL` is 1/(2L);
/// `Literal` is eps_t / L.
enum class Gd1Step { InverseTwoL, Literal };

/// Settings shared by R-SPIDER-GD1 and R-SPIDER-GD2.
struct GdConfig {
  double M0 = 1.0;   ///< upper bound on f(x0) - f*
  double tau = 1.0;  ///< gradient-dominance constant
  double L = 1.0;
  std::size_t K = 1;
  MapMode map_mode = MapMode::Exponential;
  std::uint64_t seed = 0;
  Gd1Step gd1_step = Gd1Step::InverseTwoL;
  /// GD1 only: chain each stage's last iterate instead of its random iterate.
  bool chain_last_iterate = false;

  void validate() const;
};

/// ceil(x), treating values within a relative 1e-12 above an integer as
/// that integer so that exactly representable schedules are not bumped by
/// rounding in their inputs. Never returns less than 0.
std::size_t ceil_count(double x);

/// S1 = ceil(2 sigma^2 / eps^2) (clamped to >= 1), eta = 1/(2L),
/// q = ceil(1/eps), T = ceil(4 M L / eps^2), n = infinity.
SpiderConfig params_stochastic(double sigma_sq, double eps, double M, double L);
/// S1 = n, eta = 1/(2L), q = ceil(sqrt(n)), T = ceil(4 M L / eps^2).
SpiderConfig params_finite(std::size_t n, double eps, double M, double L);

/// Correction batch of R-SPIDER-nonconvex:
/// ceil(min{n, q L^2 dist^2 / (2 eps^2)}), at least 1.
std::size_t spider_batch_size(std::size_t q, double L, double dist, double eps, std::optional<std::size_t> n);
/// Correction batch of R-SPIDER-GD2: ceil(min{n, q L^2 dist^2 / delta}), at least 1.
std::size_t gd2_batch_size(std::size_t q, double L, double dist, double delta, std::size_t n);

/// Stage accuracy of GD1: sqrt(M0 / (2^t 10 tau)).
double gd1_stage_eps(double M0, double tau, std::size_t t);
/// Iteration budget of GD1 stage t: ceil(4 M_t L / eps_t^2), M_t = M0 / 2^{t-1}.
std::size_t gd1_stage_iterations(double M0, double tau, double L, std::size_t t);
/// GD2 epoch length ceil(4 L tau log 4).
std::size_t gd2_epoch_length(double L, double tau);
/// GD2 initial variance threshold M0 / (4 tau).
double gd2_initial_threshold(double M0, double tau);

// ---------------------------------------------------------------------------
// Traces

struct TraceRecord {
  std::size_t k = 0;        ///< iteration index of the recorded iterate
  double epoch = 0.0;       ///< ifo / n
  std::uint64_t ifo = 0;
  double f = 0.0;
  double grad_sq = 0.0;     ///< ||grad f||^2, NaN when not computed
  double step_dist = 0.0;   ///< dist(x_{k-1}, x_k)
  std::size_t batch = 0;    ///< samples drawn for the step that produced x_k
  std::size_t stage = 0;    ///< GD1 stage / GD2 epoch / SVRG epoch, 0 if n/a
};

struct RunTrace {
  std::vector<TraceRecord> records;
  std::vector<std::pair<std::string, std::string>> meta;
  /// Epoch spacing of records in checkpoint mode, 0 otherwise.
  double checkpoint_every = 0.0;
  std::uint64_t ifo_total = 0;

  std::string meta_value(const std::string& key) const;
};

struct TraceOptions {
  enum class Mode {
    EveryIteration,  ///< one record per update
    Checkpoints,     ///< a record at epoch 0 and at every multiple of checkpoint_every
    Off,
  };
  Mode mode = Mode::EveryIteration;
  double checkpoint_every = 1.0;
  bool grad_sq = false;
  /// Stop once ifo >= epoch_budget * n.
  std::optional<double> epoch_budget;
};

/// State right before a SPIDER correction step: x_{k-1}, x_k, v_{k-1}, and
/// the batch size about to be drawn.
struct CorrectionState {
  std::size_t k = 0;
  const Point& x_prev;
  const Point& x;
  const Tangent& v_prev;
  std::size_t batch = 0;
};

struct RunOptions {
  TraceOptions trace;
  IfoConvention convention = IfoConvention::Paired;
  std::function<void(const CorrectionState&)> on_correction;
};

struct RunResult {
  Point x;
  RunTrace trace;
};

// ---------------------------------------------------------------------------
// Optimizers

/// v_k = grad f_S(x_k) - Gamma_{x_{k-1}}^{x_k}[grad f_S(x_{k-1}) - v_{k-1}]
/// with S drawn uniformly with replacement, or S = all components when
/// `enumerate` is set.
Tangent spider_correction(Oracle& oracle, const Point& x_prev, const Point& x, const Tangent& v_prev,
                          std::size_t batch, bool enumerate, Rng& rng);

/// R-SPIDER for nonconvex objectives. Returns an iterate drawn uniformly
/// from {x_1, ..., x_T} (x0 when T = 0).
RunResult spider_nonconvex(const FiniteSumObjective& objective, const Point& x0, const SpiderConfig& cfg,
                           const RunOptions& options = {});

/// Restarted R-SPIDER for gradient-dominated objectives (K stages with
/// halving accuracy targets).
RunResult spider_gd1(const FiniteSumObjective& objective, const Point& x0, const GdConfig& cfg,
                     const RunOptions& options = {});

/// R-SPIDER with adaptive correction batches for gradient-dominated
/// objectives; runs q K iterations and returns the last iterate.
RunResult spider_gd2(const FiniteSumObjective& objective, const Point& x0, const GdConfig& cfg,
                     const RunOptions& options = {});

/// Riemannian SGD: one sampled component per step, x <- step(x, -eta_k g).
RunResult rsgd(const FiniteSumObjective& objective, const Point& x0, const std::function<double(std::size_t)>& eta,
               std::size_t T, std::uint64_t seed, MapMode map_mode = MapMode::Exponential,
               const RunOptions& options = {});

/// Riemannian SVRG. In retraction mode on the PCA objective this is VR-PCA.
RunResult rsvrg(const FiniteSumObjective& objective, const Point& x0, double eta, std::size_t epochs,
                std::size_t inner_len, MapMode map_mode, std::uint64_t seed, const RunOptions& options = {});

}  // namespace rspider

#endif  // RSPIDER_OPTIM_HPP
