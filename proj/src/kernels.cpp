#include "rspider/kernels.hpp"

#include <omp.h>

namespace rspider::kernels {

namespace {

using Eigen::Index;

struct Identity {
  std::size_t operator()(std::size_t i) const { return i; }
};

struct Lookup {
  std::span<const std::size_t> idx;
  std::size_t operator()(std::size_t i) const { return idx[i]; }
};

template <class IndexOf>
void blocked_apply(const Eigen::MatrixXd& z, std::size_t count, IndexOf index_of, const Eigen::VectorXd& x,
                   Eigen::VectorXd& out) {
  const Index d = z.rows();
  const auto nblocks = static_cast<Index>((count + kBlock - 1) / kBlock);
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(d, nblocks);
#pragma omp parallel for schedule(static) if (nblocks > 1)
  for (Index b = 0; b < nblocks; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(count, lo + kBlock);
    auto acc = partial.col(b);
    for (std::size_t k = lo; k < hi; ++k) {
      const auto col = z.col(static_cast<Index>(index_of(k)));
      acc.noalias() += col.dot(x) * col;
    }
  }
  out.setZero(d);
  for (Index b = 0; b < nblocks; ++b) out += partial.col(b);
}

template <class IndexOf>
void blocked_apply_pair(const Eigen::MatrixXd& z, std::size_t count, IndexOf index_of, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y, Eigen::VectorXd& out_x, Eigen::VectorXd& out_y) {
  const Index d = z.rows();
  const auto nblocks = static_cast<Index>((count + kBlock - 1) / kBlock);
  Eigen::MatrixXd px = Eigen::MatrixXd::Zero(d, nblocks);
  Eigen::MatrixXd py = Eigen::MatrixXd::Zero(d, nblocks);
#pragma omp parallel for schedule(static) if (nblocks > 1)
  for (Index b = 0; b < nblocks; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(count, lo + kBlock);
    auto ax = px.col(b);
    auto ay = py.col(b);
    for (std::size_t k = lo; k < hi; ++k) {
      const auto col = z.col(static_cast<Index>(index_of(k)));
      ax.noalias() += col.dot(x) * col;
      ay.noalias() += col.dot(y) * col;
    }
  }
  out_x.setZero(d);
  out_y.setZero(d);
  for (Index b = 0; b < nblocks; ++b) {
    out_x += px.col(b);
    out_y += py.col(b);
  }
}

}  // namespace

namespace serial {

void gram_apply(const Eigen::MatrixXd& z, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  out.setZero(z.rows());
  for (Index i = 0; i < z.cols(); ++i) out += z.col(i).dot(x) * z.col(i);
}

void subset_apply(const Eigen::MatrixXd& z, std::span<const std::size_t> idx, const Eigen::VectorXd& x,
                  Eigen::VectorXd& out) {
  out.setZero(z.rows());
  for (std::size_t i : idx) {
    const auto col = z.col(static_cast<Index>(i));
    out += col.dot(x) * col;
  }
}

void subset_apply_pair(const Eigen::MatrixXd& z, std::span<const std::size_t> idx, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y, Eigen::VectorXd& out_x, Eigen::VectorXd& out_y) {
  subset_apply(z, idx, x, out_x);
  subset_apply(z, idx, y, out_y);
}

void column_sq_norms(const Eigen::MatrixXd& z, Eigen::VectorXd& out) {
  out.resize(z.cols());
  for (Index i = 0; i < z.cols(); ++i) out[i] = z.col(i).squaredNorm();
}

}  // namespace serial

namespace parallel {

void gram_apply(const Eigen::MatrixXd& z, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  blocked_apply(z, static_cast<std::size_t>(z.cols()), Identity{}, x, out);
}

void subset_apply(const Eigen::MatrixXd& z, std::span<const std::size_t> idx, const Eigen::VectorXd& x,
                  Eigen::VectorXd& out) {
  blocked_apply(z, idx.size(), Lookup{idx}, x, out);
}

void subset_apply_pair(const Eigen::MatrixXd& z, std::span<const std::size_t> idx, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y, Eigen::VectorXd& out_x, Eigen::VectorXd& out_y) {
  blocked_apply_pair(z, idx.size(), Lookup{idx}, x, y, out_x, out_y);
}

void gram_apply_pair(const Eigen::MatrixXd& z, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                     Eigen::VectorXd& out_x, Eigen::VectorXd& out_y) {
  blocked_apply_pair(z, static_cast<std::size_t>(z.cols()), Identity{}, x, y, out_x, out_y);
}

void column_sq_norms(const Eigen::MatrixXd& z, Eigen::VectorXd& out) {
  out.resize(z.cols());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < z.cols(); ++i) out[i] = z.col(i).squaredNorm();
}

}  // namespace parallel

int max_threads() { return omp_get_max_threads(); }

}  // namespace rspider::kernels
