#ifndef RSPIDER_ERRORS_HPP
#define RSPIDER_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rspider {

/// Caller violated a precondition (bad sizes, mismatched base points, bad flags).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Input lies outside the domain where an operation is well defined,
/// e.g. the logarithm between antipodal points of the sphere.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// An iterative routine hit its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations)
      : std::runtime_error(what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations_(iterations) {}
  std::size_t iterations() const { return iterations_; }

 private:
  std::size_t iterations_;
};

}  // namespace rspider

#endif  // RSPIDER_ERRORS_HPP
