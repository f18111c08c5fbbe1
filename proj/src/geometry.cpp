#include "rspider/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rspider/errors.hpp"

namespace rspider {

namespace tol = geometry_tolerance;

const char* to_string(MapMode mode) {
  return mode == MapMode::Exponential ? "exp" : "retract";
}

MapMode parse_map_mode(const std::string& text) {
  if (text == "exp" || text == "exponential") return MapMode::Exponential;
  if (text == "retract" || text == "retraction") return MapMode::Retraction;
  throw UsageError("unknown map mode '" + text + "' (expected exp|retract)");
}

namespace {

void require_same_base(const Tangent& a, const Tangent& b) {
  if (a.dim() != b.dim()) throw UsageError("tangent vectors have different dimensions");
  if (!(a.base() == b.base())) throw UsageError("tangent vectors live at different base points");
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

Tangent& Tangent::operator+=(const Tangent& other) {
  require_same_base(*this, other);
  coords_ += other.coords_;
  return *this;
}

Tangent& Tangent::operator-=(const Tangent& other) {
  require_same_base(*this, other);
  coords_ -= other.coords_;
  return *this;
}

Tangent& Tangent::operator*=(double s) {
  coords_ *= s;
  return *this;
}

Manifold Manifold::sphere(std::size_t ambient_dim) {
  if (ambient_dim < 2) throw UsageError("sphere needs ambient dimension >= 2");
  return Manifold(ManifoldKind::Sphere, ambient_dim);
}

Manifold Manifold::euclidean(std::size_t dim) {
  if (dim < 1) throw UsageError("euclidean space needs dimension >= 1");
  return Manifold(ManifoldKind::Euclidean, dim);
}

void Manifold::check_dim(const Eigen::VectorXd& v, const char* what) const {
  if (static_cast<std::size_t>(v.size()) != dim_) {
    throw UsageError(std::string(what) + ": dimension " + std::to_string(v.size()) +
                     " does not match manifold dimension " + std::to_string(dim_));
  }
}

void Manifold::check_base(const Point& x, const Tangent& v, const char* what) const {
  check_dim(x.coords(), what);
  check_dim(v.coords(), what);
  if (!(v.base() == x)) throw UsageError(std::string(what) + ": tangent vector is not based at x");
}

void Manifold::check_not_antipodal(const Point& x, const Point& y, const char* what) const {
  if (kind_ != ManifoldKind::Sphere) return;
  if (x.coords().dot(y.coords()) <= -1.0 + tol::kAntipodal) {
    throw DomainError(std::string(what) + ": points are (nearly) antipodal, geodesic is not unique");
  }
}

Point Manifold::point(Eigen::VectorXd coords) const {
  check_dim(coords, "point");
  if (!all_finite(coords)) throw DomainError("point: non-finite coordinates");
  if (kind_ == ManifoldKind::Sphere) {
    const double nrm = coords.norm();
    if (!(nrm > 0.0)) throw DomainError("point: cannot normalize the zero vector onto the sphere");
    coords /= nrm;
  }
  return Point(std::move(coords));
}

Tangent Manifold::tangent(const Point& x, Eigen::VectorXd coords) const {
  check_dim(x.coords(), "tangent");
  check_dim(coords, "tangent");
  if (!all_finite(coords)) throw DomainError("tangent: non-finite coordinates");
  if (kind_ == ManifoldKind::Sphere) coords -= x.coords().dot(coords) * x.coords();
  return Tangent(x, std::move(coords));
}

Tangent Manifold::zero(const Point& x) const {
  check_dim(x.coords(), "zero");
  return Tangent(x, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_)));
}

double Manifold::inner(const Point& x, const Tangent& u, const Tangent& v) const {
  check_base(x, u, "inner");
  check_base(x, v, "inner");
  return u.coords().dot(v.coords());
}

Point Manifold::exp(const Point& x, const Tangent& v) const {
  check_base(x, v, "exp");
  if (kind_ == ManifoldKind::Euclidean) return point(x.coords() + v.coords());
  const double theta = v.norm();
  if (theta < tol::kExpSmallAngle) return point(x.coords() + v.coords());
  return point(std::cos(theta) * x.coords() + (std::sin(theta) / theta) * v.coords());
}

Tangent Manifold::log(const Point& x, const Point& y) const {
  check_dim(x.coords(), "log");
  check_dim(y.coords(), "log");
  if (kind_ == ManifoldKind::Euclidean) return Tangent(x, y.coords() - x.coords());
  check_not_antipodal(x, y, "log");
  const double c = std::clamp(x.coords().dot(y.coords()), -1.0, 1.0);
  const double theta = std::acos(c);
  if (theta < tol::kLogSmallAngle) return zero(x);
  Eigen::VectorXd u = y.coords() - c * x.coords();
  const double un = u.norm();
  if (!(un > 0.0)) return zero(x);
  return tangent(x, (theta / un) * u);
}

Tangent Manifold::transport(const Point& x, const Point& y, const Tangent& v) const {
  check_base(x, v, "transport");
  check_dim(y.coords(), "transport");
  if (kind_ == ManifoldKind::Euclidean) return Tangent(y, v.coords());
  const Tangent w = log(x, y);
  const double theta = w.norm();
  if (theta < tol::kLogSmallAngle) return tangent(y, v.coords());
  const Eigen::VectorXd e = w.coords() / theta;
  const double ev = e.dot(v.coords());
  Eigen::VectorXd out = v.coords() - ev * e;
  out += ev * (std::cos(theta) * e - std::sin(theta) * x.coords());
  return tangent(y, std::move(out));
}

Point Manifold::retract(const Point& x, const Tangent& v) const {
  check_base(x, v, "retract");
  if (kind_ == ManifoldKind::Euclidean) return point(x.coords() + v.coords());
  Eigen::VectorXd sum = x.coords() + v.coords();
  if (sum.norm() <= 1e-12) throw DomainError("retract: x + v is (nearly) zero");
  return point(std::move(sum));
}

double Manifold::dist(const Point& x, const Point& y) const { return log(x, y).norm(); }

Point Manifold::step(const Point& x, const Tangent& v, MapMode mode) const {
  return mode == MapMode::Exponential ? exp(x, v) : retract(x, v);
}

Point Manifold::random_point(Rng& rng) const {
  std::normal_distribution<double> gauss;
  Eigen::VectorXd g(static_cast<Eigen::Index>(dim_));
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = gauss(rng);
  return point(std::move(g));
}

Tangent Manifold::random_unit_tangent(const Point& x, Rng& rng) const {
  std::normal_distribution<double> gauss;
  for (;;) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(dim_));
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = gauss(rng);
    Tangent t = tangent(x, std::move(g));
    const double nrm = t.norm();
    if (nrm > 1e-12) return (1.0 / nrm) * std::move(t);
  }
}

}  // namespace rspider
