#ifndef RSPIDER_KERNELS_HPP
#define RSPIDER_KERNELS_HPP

// Data-parallel inner loops of the PCA oracle. Every kernel computes
//   out = sum_{i in S} (z_i . x) z_i
// over columns z_i of a d x n matrix, for an index multiset S or for all
// columns. `serial` is the straightforward reference; `parallel` splits the
// index sequence into fixed-size blocks, reduces each block independently
// (OpenMP) and adds the block partials in block order, so its result does
// not depend on the thread count.

#include <Eigen/Core>

#include <cstddef>
#include <span>

namespace rspider::kernels {

/// Columns per reduction block of the parallel kernels.
inline constexpr std::size_t kBlock = 256;

namespace serial {
void gram_apply(const Eigen::MatrixXd& z, const Eigen::VectorXd& x, Eigen::VectorXd& out);
void subset_apply(const Eigen::MatrixXd& z, std::span<const std::size_t> idx, const Eigen::VectorXd& x,
                  Eigen::VectorXd& out);
void subset_apply_pair(const Eigen::MatrixXd& z, std::span<const std::size_t> idx, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y, Eigen::VectorXd& out_x, Eigen::VectorXd& out_y);
/// Squared column norms ||z_i||^2.
void column_sq_norms(const Eigen::MatrixXd& z, Eigen::VectorXd& out);
}  // namespace serial

namespace parallel {
void gram_apply(const Eigen::MatrixXd& z, const Eigen::VectorXd& x, Eigen::VectorXd& out);
void subset_apply(const Eigen::MatrixXd& z, std::span<const std::size_t> idx, const Eigen::VectorXd& x,
                  Eigen::VectorXd& out);
void subset_apply_pair(const Eigen::MatrixXd& z, std::span<const std::size_t> idx, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y, Eigen::VectorXd& out_x, Eigen::VectorXd& out_y);
/// gram_apply for both x and y in one sweep over the columns.
void gram_apply_pair(const Eigen::MatrixXd& z, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                     Eigen::VectorXd& out_x, Eigen::VectorXd& out_y);
void column_sq_norms(const Eigen::MatrixXd& z, Eigen::VectorXd& out);
}  // namespace parallel

/// Number of OpenMP threads the parallel kernels would use.
int max_threads();

}  // namespace rspider::kernels

#endif  // RSPIDER_KERNELS_HPP
