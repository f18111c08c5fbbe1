#ifndef RSPIDER_GEOMETRY_HPP
#define RSPIDER_GEOMETRY_HPP

#include <Eigen/Core>

#include <cstddef>
#include <string>

#include "rspider/rng.hpp"

namespace rspider {

enum class ManifoldKind { Sphere, Euclidean };

/// How an optimizer moves along a tangent direction.
enum class MapMode { Exponential, Retraction };

const char* to_string(MapMode mode);
MapMode parse_map_mode(const std::string& text);

class Manifold;

/// A point of a manifold in ambient coordinates. Only a Manifold can build
/// one, so sphere points are always unit length.
class Point {
 public:
  const Eigen::VectorXd& coords() const { return coords_; }
  std::size_t dim() const { return static_cast<std::size_t>(coords_.size()); }
  bool operator==(const Point& other) const { return coords_ == other.coords_; }

 private:
  friend class Manifold;
  explicit Point(Eigen::VectorXd coords) : coords_(std::move(coords)) {}
  Eigen::VectorXd coords_;
};

/// A vector of the tangent space at `base`, in ambient coordinates.
/// Arithmetic is only defined between vectors sharing a base point.
class Tangent {
 public:
  const Point& base() const { return base_; }
  const Eigen::VectorXd& coords() const { return coords_; }
  std::size_t dim() const { return static_cast<std::size_t>(coords_.size()); }
  double norm() const { return coords_.norm(); }
  double squared_norm() const { return coords_.squaredNorm(); }

  Tangent& operator+=(const Tangent& other);
  Tangent& operator-=(const Tangent& other);
  Tangent& operator*=(double s);
  friend Tangent operator+(Tangent a, const Tangent& b) { return a += b; }
  friend Tangent operator-(Tangent a, const Tangent& b) { return a -= b; }
  friend Tangent operator*(double s, Tangent a) { return a *= s; }
  friend Tangent operator-(Tangent a) { return a *= -1.0; }

 private:
  friend class Manifold;
  Tangent(Point base, Eigen::VectorXd coords) : base_(std::move(base)), coords_(std::move(coords)) {}
  Point base_;
  Eigen::VectorXd coords_;
};

/// The unit sphere S^{d-1} embedded in R^d, or R^d itself. All operations
/// are pure functions of their arguments.
class Manifold {
 public:
  static Manifold sphere(std::size_t ambient_dim);
  static Manifold euclidean(std::size_t dim);

  ManifoldKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  bool operator==(const Manifold&) const = default;

  /// Sphere points are renormalized; Euclidean points must be finite.
  Point point(Eigen::VectorXd coords) const;
  /// Projects `coords` onto the tangent space at `x`.
  Tangent tangent(const Point& x, Eigen::VectorXd coords) const;
  Tangent zero(const Point& x) const;

  double inner(const Point& x, const Tangent& u, const Tangent& v) const;
  Point exp(const Point& x, const Tangent& v) const;
  Tangent log(const Point& x, const Point& y) const;
  /// Parallel transport of `v` from T_x to T_y along the minimizing geodesic.
  Tangent transport(const Point& x, const Point& y, const Tangent& v) const;
  Point retract(const Point& x, const Tangent& v) const;
  double dist(const Point& x, const Point& y) const;

  /// exp or retract, selected by `mode`.
  Point step(const Point& x, const Tangent& v, MapMode mode) const;

  /// Uniform on the sphere; standard Gaussian in the Euclidean case.
  Point random_point(Rng& rng) const;
  /// Uniformly distributed unit-norm tangent direction at x.
  Tangent random_unit_tangent(const Point& x, Rng& rng) const;

 private:
  Manifold(ManifoldKind kind, std::size_t dim) : kind_(kind), dim_(dim) {}
  void check_dim(const Eigen::VectorXd& v, const char* what) const;
  void check_base(const Point& x, const Tangent& v, const char* what) const;
  void check_not_antipodal(const Point& x, const Point& y, const char* what) const;

  ManifoldKind kind_;
  std::size_t dim_;
};

namespace geometry_tolerance {
/// Below this tangent norm exp falls back to normalize(x + v).
inline constexpr double kExpSmallAngle = 1e-8;
/// Below this angle log returns zero and transport is the identity.
inline constexpr double kLogSmallAngle = 1e-9;
/// Points with <x, y> at or below -1 + kAntipodal have no unique geodesic.
inline constexpr double kAntipodal = 1e-8;
}  // namespace geometry_tolerance

}  // namespace rspider

#endif  // RSPIDER_GEOMETRY_HPP
