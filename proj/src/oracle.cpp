#include "rspider/oracle.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "rspider/errors.hpp"
#include "rspider/kernels.hpp"

namespace rspider {

const char* to_string(IfoConvention c) { return c == IfoConvention::Paired ? "paired" : "single"; }

IfoConvention parse_ifo_convention(const std::string& text) {
  if (text == "paired") return IfoConvention::Paired;
  if (text == "single") return IfoConvention::Single;
  throw UsageError("unknown IFO convention '" + text + "' (expected paired|single)");
}

// ---------------------------------------------------------------------------
// FiniteSumObjective defaults and the charged Oracle.

std::pair<Tangent, Tangent> FiniteSumObjective::paired_mean_gradient(std::span<const std::size_t> idx,
                                                                     const Point& x, const Point& y) const {
  return {mean_gradient(idx, x), mean_gradient(idx, y)};
}

std::pair<Tangent, Tangent> FiniteSumObjective::paired_full_gradient(const Point& x, const Point& y) const {
  return {full_gradient(x), full_gradient(y)};
}

Tangent FiniteSumObjective::component_gradient(std::size_t i, const Point& x) const {
  const std::size_t one[1] = {i};
  return mean_gradient(one, x);
}

Tangent Oracle::component_rgrad(std::size_t i, const Point& x) {
  Tangent g = objective_->component_gradient(i, x);
  counter_.add(1);
  return g;
}

Tangent Oracle::minibatch_rgrad(std::span<const std::size_t> idx, const Point& x) {
  if (idx.empty()) throw UsageError("minibatch_rgrad: empty sample set");
  Tangent g = objective_->mean_gradient(idx, x);
  counter_.add(idx.size());
  return g;
}

Tangent Oracle::full_rgrad(const Point& x) {
  Tangent g = objective_->full_gradient(x);
  counter_.add(objective_->size());
  return g;
}

std::pair<Tangent, Tangent> Oracle::paired_minibatch_rgrad(std::span<const std::size_t> idx, const Point& x,
                                                           const Point& y) {
  if (idx.empty()) throw UsageError("paired_minibatch_rgrad: empty sample set");
  auto g = objective_->paired_mean_gradient(idx, x, y);
  counter_.add(pair_cost(idx.size()));
  return g;
}

std::pair<Tangent, Tangent> Oracle::paired_full_rgrad(const Point& x, const Point& y) {
  auto g = objective_->paired_full_gradient(x, y);
  counter_.add(pair_cost(objective_->size()));
  return g;
}

// ---------------------------------------------------------------------------
// ComponentSum

ComponentSum::ComponentSum(Manifold manifold, std::size_t n, double smoothness, ValueFn value, GradFn grad)
    : manifold_(manifold), n_(n), smoothness_(smoothness), value_(std::move(value)), grad_(std::move(grad)) {
  if (n_ == 0) throw UsageError("ComponentSum: need at least one component");
}

double ComponentSum::value(const Point& x) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < n_; ++i) sum += value_(i, x.coords());
  return sum / static_cast<double>(n_);
}

double ComponentSum::component_value(std::size_t i, const Point& x) const {
  if (i >= n_) throw UsageError("component index out of range");
  return value_(i, x.coords());
}

Tangent ComponentSum::mean_gradient(std::span<const std::size_t> idx, const Point& x) const {
  if (idx.empty()) throw UsageError("mean_gradient: empty sample set");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(manifold_.dim()));
  for (std::size_t i : idx) {
    if (i >= n_) throw UsageError("component index out of range");
    sum += grad_(i, x.coords());
  }
  sum /= static_cast<double>(idx.size());
  return manifold_.tangent(x, std::move(sum));
}

Tangent ComponentSum::full_gradient(const Point& x) const {
  std::vector<std::size_t> all(n_);
  for (std::size_t i = 0; i < n_; ++i) all[i] = i;
  return mean_gradient(all, x);
}

// ---------------------------------------------------------------------------
// PcaProblem

namespace {

/// Power iteration on a symmetric PSD matrix, optionally restricted to the
/// orthogonal complement of `deflate`.
EigenPair power_iteration(const Eigen::MatrixXd& a, const Eigen::VectorXd* deflate, std::size_t max_iterations) {
  Rng rng = make_rng(0, Stream::PowerStart);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd x(a.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = gauss(rng);
  auto restrict = [&](Eigen::VectorXd& v) {
    if (deflate != nullptr) v -= deflate->dot(v) * *deflate;
  };
  restrict(x);
  x.normalize();
  Eigen::VectorXd ax = a * x;
  restrict(ax);
  double rq_prev = x.dot(ax);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    const double nrm = ax.norm();
    if (!(nrm > 0.0)) return {0.0, x, it};
    x = ax / nrm;
    ax.noalias() = a * x;
    restrict(ax);
    const double rq = x.dot(ax);
    if (std::abs(rq - rq_prev) < 1e-13) return {rq, x, it};
    rq_prev = rq;
  }
  throw ConvergenceError("power iteration did not converge; eigengap too small", max_iterations);
}

}  // namespace

PcaProblem::PcaProblem(Eigen::MatrixXd z, std::optional<std::vector<double>> spectrum)
    : z_(std::move(z)),
      spectrum_(std::move(spectrum)),
      manifold_(Manifold::sphere(static_cast<std::size_t>(std::max<Eigen::Index>(z_.rows(), 2)))) {
  if (z_.rows() < 2) throw UsageError("PcaProblem: need d >= 2");
  if (z_.cols() < 1) throw UsageError("PcaProblem: need n >= 1");
  if (!z_.allFinite()) throw UsageError("PcaProblem: non-finite data");
  if (spectrum_ && spectrum_->size() != static_cast<std::size_t>(z_.rows())) {
    throw UsageError("PcaProblem: spectrum length does not match d");
  }
  mean_sq_norm_ = z_.squaredNorm() / static_cast<double>(z_.cols());
  const double lambda1 = spectrum_ ? spectrum_->front() : power_iteration(covariance(), nullptr, 100000).value;
  smoothness_ = 4.0 * lambda1;
  const Eigen::VectorXd sq = z_.colwise().squaredNorm().transpose();
  component_smoothness_ = 4.0 * std::sqrt(sq.squaredNorm() / static_cast<double>(z_.cols()));
}

std::optional<double> PcaProblem::known_optimum() const {
  if (!spectrum_) return std::nullopt;
  return -spectrum_->front();
}

Eigen::MatrixXd PcaProblem::covariance() const {
  Eigen::MatrixXd a = z_ * z_.transpose();
  a /= static_cast<double>(z_.cols());
  return a;
}

double PcaProblem::value(const Point& x) const {
  if (x.dim() != dim()) throw UsageError("pca value: dimension mismatch");
  return -(z_.transpose() * x.coords()).squaredNorm() / static_cast<double>(z_.cols());
}

double PcaProblem::component_value(std::size_t i, const Point& x) const {
  if (i >= size()) throw UsageError("component index out of range");
  if (x.dim() != dim()) throw UsageError("pca value: dimension mismatch");
  const double s = z_.col(static_cast<Eigen::Index>(i)).dot(x.coords());
  return -s * s;
}

Tangent PcaProblem::project(const Point& x, Eigen::VectorXd ambient_sum, double count) const {
  ambient_sum *= -2.0 / count;
  return manifold_.tangent(x, std::move(ambient_sum));
}

Tangent PcaProblem::mean_gradient(std::span<const std::size_t> idx, const Point& x) const {
  if (idx.empty()) throw UsageError("mean_gradient: empty sample set");
  if (x.dim() != dim()) throw UsageError("pca gradient: dimension mismatch");
  for (std::size_t i : idx) {
    if (i >= size()) throw UsageError("component index out of range");
  }
  Eigen::VectorXd sum;
  kernels::parallel::subset_apply(z_, idx, x.coords(), sum);
  return project(x, std::move(sum), static_cast<double>(idx.size()));
}

Tangent PcaProblem::full_gradient(const Point& x) const {
  if (x.dim() != dim()) throw UsageError("pca gradient: dimension mismatch");
  Eigen::VectorXd sum;
  kernels::parallel::gram_apply(z_, x.coords(), sum);
  return project(x, std::move(sum), static_cast<double>(size()));
}

std::pair<Tangent, Tangent> PcaProblem::paired_mean_gradient(std::span<const std::size_t> idx, const Point& x,
                                                             const Point& y) const {
  if (idx.empty()) throw UsageError("mean_gradient: empty sample set");
  if (x.dim() != dim() || y.dim() != dim()) throw UsageError("pca gradient: dimension mismatch");
  for (std::size_t i : idx) {
    if (i >= size()) throw UsageError("component index out of range");
  }
  Eigen::VectorXd sx, sy;
  kernels::parallel::subset_apply_pair(z_, idx, x.coords(), y.coords(), sx, sy);
  const auto count = static_cast<double>(idx.size());
  return {project(x, std::move(sx), count), project(y, std::move(sy), count)};
}

std::pair<Tangent, Tangent> PcaProblem::paired_full_gradient(const Point& x, const Point& y) const {
  if (x.dim() != dim() || y.dim() != dim()) throw UsageError("pca gradient: dimension mismatch");
  Eigen::VectorXd sx, sy;
  kernels::parallel::gram_apply_pair(z_, x.coords(), y.coords(), sx, sy);
  const auto count = static_cast<double>(size());
  return {project(x, std::move(sx), count), project(y, std::move(sy), count)};
}

// ---------------------------------------------------------------------------
// Synthetic instances

void SyntheticSpec::validate() const {
  if (d < 2) throw UsageError("synthetic spec: need d >= 2");
  if (d > n) throw UsageError("synthetic spec: need n >= d");
  if (!(delta > 0.0) || !(delta < 1.0)) throw UsageError("synthetic spec: need 0 < delta < 1 = lambda_1");
  if (!(tail > 0.0) || tail > 1.0) throw UsageError("synthetic spec: need 0 < tail <= 1");
}

std::vector<double> gap_spectrum(std::size_t d, double delta, double tail) {
  std::vector<double> lambda(d);
  lambda[0] = 1.0;
  if (d > 1) lambda[1] = 1.0 - delta;
  for (std::size_t j = 2; j < d; ++j) lambda[j] = lambda[j - 1] * tail;
  return lambda;
}

namespace {

Eigen::MatrixXd orthonormal_columns(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

}  // namespace

GapBasis make_gap_basis(std::size_t d, std::size_t n, std::uint64_t seed) {
  if (d < 2 || n < d) throw UsageError("gap basis: need 2 <= d <= n");
  Rng rng = make_rng(seed, Stream::Basis);
  GapBasis basis;
  basis.seed = seed;
  basis.u = orthonormal_columns(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d), rng);
  basis.v = orthonormal_columns(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), rng);
  return basis;
}

PcaProblem assemble_gap_matrix(const GapBasis& basis, double delta, double tail) {
  const auto d = static_cast<std::size_t>(basis.u.rows());
  const auto n = static_cast<std::size_t>(basis.v.rows());
  SyntheticSpec{d, n, delta, basis.seed, tail}.validate();
  std::vector<double> lambda = gap_spectrum(d, delta, tail);
  Eigen::VectorXd scale(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) scale[static_cast<Eigen::Index>(j)] = std::sqrt(static_cast<double>(n) * lambda[j]);
  Eigen::MatrixXd z = basis.u * scale.asDiagonal() * basis.v.transpose();
  return PcaProblem(std::move(z), std::move(lambda));
}

PcaProblem generate_gap_matrix(const SyntheticSpec& spec) {
  spec.validate();
  return assemble_gap_matrix(make_gap_basis(spec.d, spec.n, spec.seed), spec.delta, spec.tail);
}

EigenPair leading_eigpair(const PcaProblem& problem, std::size_t max_iterations) {
  return power_iteration(problem.covariance(), nullptr, max_iterations);
}

EigenPair second_eigpair(const PcaProblem& problem, const EigenPair& leading, std::size_t max_iterations) {
  Eigen::VectorXd v = leading.vector.normalized();
  return power_iteration(problem.covariance(), &v, max_iterations);
}

double variance_bound_estimate(const FiniteSumObjective& objective, const Point& x, std::size_t m, Rng& rng) {
  if (m < 2) throw UsageError("variance_bound_estimate: need m >= 2");
  const Tangent full = objective.full_gradient(x);
  const std::vector<std::size_t> draws = sample_indices(objective.size(), m, rng);
  double sum = 0.0;
  for (std::size_t i : draws) sum += (objective.component_gradient(i, x) - full).squared_norm();
  return sum / static_cast<double>(m);
}

double population_variance(const FiniteSumObjective& objective, const Point& x) {
  const Tangent full = objective.full_gradient(x);
  double sum = 0.0;
  for (std::size_t i = 0; i < objective.size(); ++i) sum += (objective.component_gradient(i, x) - full).squared_norm();
  return sum / static_cast<double>(objective.size());
}

// ---------------------------------------------------------------------------
// Binary dump

namespace {

constexpr char kMagic[4] = {'R', 'S', 'P', 'D'};

template <class T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw UsageError("gap matrix dump: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_gap_matrix(std::ostream& out, const PcaProblem& problem, std::uint64_t seed) {
  const Eigen::MatrixXd& z = problem.data();
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(z.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(z.cols()));
  put_le<std::uint32_t>(out, 0);
  put_le<std::uint64_t>(out, seed);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) put_le<double>(out, z(i, j));
  }
  if (!out) throw std::runtime_error("gap matrix dump: write failed");
}

void write_gap_matrix(const std::string& path, const PcaProblem& problem, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_gap_matrix(out, problem, seed);
}

LoadedMatrix read_gap_matrix(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw UsageError("gap matrix dump: bad magic");
  const auto d = get_le<std::uint32_t>(in);
  const auto n = get_le<std::uint32_t>(in);
  (void)get_le<std::uint32_t>(in);
  LoadedMatrix out;
  out.seed = get_le<std::uint64_t>(in);
  out.z.resize(d, n);
  for (Eigen::Index j = 0; j < out.z.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.z.rows(); ++i) out.z(i, j) = get_le<double>(in);
  }
  return out;
}

LoadedMatrix read_gap_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return read_gap_matrix(in);
}

}  // namespace rspider
