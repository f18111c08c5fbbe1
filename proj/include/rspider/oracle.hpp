#ifndef RSPIDER_ORACLE_HPP
#define RSPIDER_ORACLE_HPP

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rspider/geometry.hpp"
#include "rspider/rng.hpp"

namespace rspider {

/// How a paired evaluation (one sampled component evaluated at two points)
/// is charged. Paired charges one IFO call per evaluation point.
enum class IfoConvention { Paired, Single };

const char* to_string(IfoConvention c);
IfoConvention parse_ifo_convention(const std::string& text);

/// Count of incremental first-order oracle calls in one run.
class IfoCounter {
 public:
  void add(std::uint64_t calls) { calls_ += calls; }
  std::uint64_t calls() const { return calls_; }

 private:
  std::uint64_t calls_ = 0;
};

/// f(x) = (1/n) sum_i f_i(x) on a manifold. Implementations are immutable
/// and safe for concurrent readers; none of these methods is IFO-charged.
/// Charged access goes through Oracle.
class FiniteSumObjective {
 public:
  virtual ~FiniteSumObjective() = default;

  virtual const Manifold& manifold() const = 0;
  virtual std::size_t size() const = 0;
  /// Geodesic smoothness constant of f.
  virtual double smoothness_hint() const = 0;
  /// Smoothness constant of the components in mean square:
  /// E_i ||grad f_i(x) - Gamma_y^x grad f_i(y)||^2 <= L^2 dist(x, y)^2.
  /// Variance-reduced schedules need this one. Defaults to smoothness_hint().
  virtual double component_smoothness_hint() const { return smoothness_hint(); }

  virtual double value(const Point& x) const = 0;
  virtual double component_value(std::size_t i, const Point& x) const = 0;
  /// Riemannian gradient of (1/|S|) sum_{i in S} f_i at x. S must be non-empty.
  virtual Tangent mean_gradient(std::span<const std::size_t> idx, const Point& x) const = 0;
  virtual Tangent full_gradient(const Point& x) const = 0;

  /// mean_gradient at two points for the same index multiset.
  virtual std::pair<Tangent, Tangent> paired_mean_gradient(std::span<const std::size_t> idx, const Point& x,
                                                           const Point& y) const;
  virtual std::pair<Tangent, Tangent> paired_full_gradient(const Point& x, const Point& y) const;

  Tangent component_gradient(std::size_t i, const Point& x) const;
};

/// IFO-charged access to an objective for a single run.
class Oracle {
 public:
  explicit Oracle(const FiniteSumObjective& objective, IfoConvention convention = IfoConvention::Paired)
      : objective_(&objective), convention_(convention) {}

  const FiniteSumObjective& objective() const { return *objective_; }
  IfoConvention convention() const { return convention_; }
  std::uint64_t calls() const { return counter_.calls(); }
  const IfoCounter& counter() const { return counter_; }

  Tangent component_rgrad(std::size_t i, const Point& x);
  Tangent minibatch_rgrad(std::span<const std::size_t> idx, const Point& x);
  Tangent full_rgrad(const Point& x);
  /// Same indices evaluated at x and y.
  std::pair<Tangent, Tangent> paired_minibatch_rgrad(std::span<const std::size_t> idx, const Point& x,
                                                     const Point& y);
  std::pair<Tangent, Tangent> paired_full_rgrad(const Point& x, const Point& y);

 private:
  std::uint64_t pair_cost(std::size_t count) const {
    return convention_ == IfoConvention::Paired ? 2 * count : count;
  }

  const FiniteSumObjective* objective_;
  IfoConvention convention_;
  IfoCounter counter_;
};

/// Objective assembled from per-component callbacks returning values and
/// ambient (Euclidean) gradients; the Riemannian gradient is their tangent
/// projection.
class ComponentSum final : public FiniteSumObjective {
 public:
  using ValueFn = std::function<double(std::size_t, const Eigen::VectorXd&)>;
  using GradFn = std::function<Eigen::VectorXd(std::size_t, const Eigen::VectorXd&)>;

  ComponentSum(Manifold manifold, std::size_t n, double smoothness, ValueFn value, GradFn grad);

  const Manifold& manifold() const override { return manifold_; }
  std::size_t size() const override { return n_; }
  double smoothness_hint() const override { return smoothness_; }
  double value(const Point& x) const override;
  double component_value(std::size_t i, const Point& x) const override;
  Tangent mean_gradient(std::span<const std::size_t> idx, const Point& x) const override;
  Tangent full_gradient(const Point& x) const override;

 private:
  Manifold manifold_;
  std::size_t n_;
  double smoothness_;
  ValueFn value_;
  GradFn grad_;
};

/// Leading-eigenvector objective on S^{d-1}:
///   f(x) = -(1/n) sum_i (z_i^T x)^2 = -x^T A x,  A = (1/n) Z Z^T.
class PcaProblem final : public FiniteSumObjective {
 public:
  /// `spectrum`, when given, is the exact eigenvalue list of A (descending).
  explicit PcaProblem(Eigen::MatrixXd z, std::optional<std::vector<double>> spectrum = std::nullopt);

  const Manifold& manifold() const override { return manifold_; }
  std::size_t size() const override { return static_cast<std::size_t>(z_.cols()); }
  /// 4 * lambda_1: a geodesic smoothness bound for f on the sphere.
  double smoothness_hint() const override { return smoothness_; }
  /// 4 sqrt(mean ||z_i||^4), since component i is 4 ||z_i||^2-smooth.
  double component_smoothness_hint() const override { return component_smoothness_; }
  double value(const Point& x) const override;
  double component_value(std::size_t i, const Point& x) const override;
  Tangent mean_gradient(std::span<const std::size_t> idx, const Point& x) const override;
  Tangent full_gradient(const Point& x) const override;
  std::pair<Tangent, Tangent> paired_mean_gradient(std::span<const std::size_t> idx, const Point& x,
                                                   const Point& y) const override;
  std::pair<Tangent, Tangent> paired_full_gradient(const Point& x, const Point& y) const override;

  const Eigen::MatrixXd& data() const { return z_; }
  std::size_t dim() const { return static_cast<std::size_t>(z_.rows()); }
  const std::optional<std::vector<double>>& spectrum() const { return spectrum_; }
  /// -lambda_1 when the spectrum is known.
  std::optional<double> known_optimum() const;
  /// A = (1/n) Z Z^T.
  Eigen::MatrixXd covariance() const;
  /// Mean squared column norm (1/n) sum ||z_i||^2 = trace(A).
  double mean_sq_norm() const { return mean_sq_norm_; }

 private:
  Tangent project(const Point& x, Eigen::VectorXd ambient_sum, double count) const;

  Eigen::MatrixXd z_;
  std::optional<std::vector<double>> spectrum_;
  Manifold manifold_;
  double smoothness_ = 0.0;
  double component_smoothness_ = 0.0;
  double mean_sq_norm_ = 0.0;
};

/// Parameters of a synthetic PCA instance with a prescribed spectrum.
struct SyntheticSpec {
  std::size_t d = 10;
  std::size_t n = 50;
  double delta = 0.1;
  std::uint64_t seed = 0;
  double tail = 0.9;

  void validate() const;
};

/// Target eigenvalues: 1, 1 - delta, (1 - delta) tail^{j-2} for j >= 3.
std::vector<double> gap_spectrum(std::size_t d, double delta, double tail);

/// Orthonormal factors U (d x d) and V (n x d) of Z = U D V^T. Shared across
/// instances that only differ in their spectrum.
struct GapBasis {
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
  std::uint64_t seed = 0;
};

GapBasis make_gap_basis(std::size_t d, std::size_t n, std::uint64_t seed);
PcaProblem assemble_gap_matrix(const GapBasis& basis, double delta, double tail);
PcaProblem generate_gap_matrix(const SyntheticSpec& spec);

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
  std::size_t iterations = 0;
};

/// Power iteration on A until successive Rayleigh quotients differ by less
/// than 1e-13. Throws ConvergenceError after `max_iterations`.
EigenPair leading_eigpair(const PcaProblem& problem, std::size_t max_iterations = 100000);
/// Power iteration on A - lambda_1 v_1 v_1^T.
EigenPair second_eigpair(const PcaProblem& problem, const EigenPair& leading,
                         std::size_t max_iterations = 100000);

/// Mean of ||grad f_i(x) - grad f(x)||^2 over m uniform draws of i.
double variance_bound_estimate(const FiniteSumObjective& objective, const Point& x, std::size_t m, Rng& rng);
/// Exact population variance (1/n) sum_i ||grad f_i(x) - grad f(x)||^2.
double population_variance(const FiniteSumObjective& objective, const Point& x);

// Binary dump of Z: 24-byte little-endian header
//   "RSPD" | u32 d | u32 n | u32 reserved (0) | u64 seed
// followed by d*n float64 values in column-major order.
void write_gap_matrix(std::ostream& out, const PcaProblem& problem, std::uint64_t seed);
void write_gap_matrix(const std::string& path, const PcaProblem& problem, std::uint64_t seed);
struct LoadedMatrix {
  Eigen::MatrixXd z;
  std::uint64_t seed = 0;
};
LoadedMatrix read_gap_matrix(std::istream& in);
LoadedMatrix read_gap_matrix(const std::string& path);

}  // namespace rspider

#endif  // RSPIDER_ORACLE_HPP
