#pragma once

// Banded matrices and Gaussian sampling in precision form.
//
// A BandedMatrix stores one row per diagonal: bands(upper + i - j, j) holds
// entry (i, j). Columns of the band are therefore contiguous in Eigen's
// column-major storage, which is the access pattern of the Cholesky below.

#include "bsts/common.hpp"
#include "bsts/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <variant>

namespace bsts {

template <typename Scalar>
class BandedMatrix {
 public:
  using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BandedMatrix(Index dim, Index lower_bandwidth, Index upper_bandwidth)
      : dim_(dim), lower_(lower_bandwidth), upper_(upper_bandwidth) {
    if (dim < 1) throw DimensionError("BandedMatrix: dim must be >= 1");
    if (lower_bandwidth < 0 || upper_bandwidth < 0 || lower_bandwidth >= dim ||
        upper_bandwidth >= dim) {
      throw DimensionError("BandedMatrix: bandwidths must lie in [0, dim)");
    }
    bands_ = DenseMatrix::Zero(lower_ + upper_ + 1, dim_);
  }

  Index dim() const { return dim_; }
  Index lower_bandwidth() const { return lower_; }
  Index upper_bandwidth() const { return upper_; }

  bool in_band(Index i, Index j) const { return i - j <= lower_ && j - i <= upper_; }

  Scalar operator()(Index i, Index j) const {
    return in_band(i, j) ? bands_(upper_ + i - j, j) : Scalar(0);
  }

  Scalar& coeffRef(Index i, Index j) {
    if (!in_band(i, j)) throw DimensionError("BandedMatrix: write outside the band");
    return bands_(upper_ + i - j, j);
  }

  const DenseMatrix& bands() const { return bands_; }

  DenseMatrix to_dense() const {
    DenseMatrix out = DenseMatrix::Zero(dim_, dim_);
    for (Index j = 0; j < dim_; ++j) {
      const Index lo = std::max<Index>(0, j - upper_);
      const Index hi = std::min<Index>(dim_ - 1, j + lower_);
      for (Index i = lo; i <= hi; ++i) out(i, j) = (*this)(i, j);
    }
    return out;
  }

  DenseVector operator*(const DenseVector& v) const {
    if (v.size() != dim_) throw DimensionError("BandedMatrix * vector: size mismatch");
    DenseVector out = DenseVector::Zero(dim_);
    for (Index j = 0; j < dim_; ++j) {
      const Index lo = std::max<Index>(0, j - upper_);
      const Index hi = std::min<Index>(dim_ - 1, j + lower_);
      for (Index i = lo; i <= hi; ++i) out(i) += bands_(upper_ + i - j, j) * v(j);
    }
    return out;
  }

  BandedMatrix transpose() const {
    BandedMatrix out(dim_, upper_, lower_);
    for (Index j = 0; j < dim_; ++j) {
      const Index lo = std::max<Index>(0, j - upper_);
      const Index hi = std::min<Index>(dim_ - 1, j + lower_);
      for (Index i = lo; i <= hi; ++i) out.coeffRef(j, i) = (*this)(i, j);
    }
    return out;
  }

 private:
  Index dim_;
  Index lower_;
  Index upper_;
  DenseMatrix bands_;
};

template <typename Scalar>
BandedMatrix<Scalar> product(const BandedMatrix<Scalar>& a, const BandedMatrix<Scalar>& b) {
  if (a.dim() != b.dim()) throw DimensionError("banded product: dimension mismatch");
  const Index n = a.dim();
  const Index lower = std::min<Index>(n - 1, a.lower_bandwidth() + b.lower_bandwidth());
  const Index upper = std::min<Index>(n - 1, a.upper_bandwidth() + b.upper_bandwidth());
  BandedMatrix<Scalar> out(n, lower, upper);
  for (Index i = 0; i < n; ++i) {
    const Index j_lo = std::max<Index>(0, i - lower);
    const Index j_hi = std::min<Index>(n - 1, i + upper);
    for (Index j = j_lo; j <= j_hi; ++j) {
      const Index k_lo = std::max({Index(0), i - a.lower_bandwidth(), j - b.upper_bandwidth()});
      const Index k_hi =
          std::min({n - 1, i + a.upper_bandwidth(), j + b.lower_bandwidth()});
      Scalar s(0);
      for (Index k = k_lo; k <= k_hi; ++k) s += a(i, k) * b(k, j);
      out.coeffRef(i, j) = s;
    }
  }
  return out;
}

// a' a, symmetric with equal lower/upper bandwidth.
template <typename Scalar>
BandedMatrix<Scalar> gram(const BandedMatrix<Scalar>& a) {
  return product(a.transpose(), a);
}

// Lower-bidiagonal first-difference operator: 1 on the diagonal, -1 below.
template <typename Scalar = double>
BandedMatrix<Scalar> build_first_difference(Index T) {
  if (T < 2) throw DimensionError("build_first_difference: T must be >= 2, got " + std::to_string(T));
  BandedMatrix<Scalar> h(T, 1, 0);
  for (Index t = 0; t < T; ++t) {
    h.coeffRef(t, t) = Scalar(1);
    if (t > 0) h.coeffRef(t, t - 1) = Scalar(-1);
  }
  return h;
}

template <typename Scalar = double>
BandedMatrix<Scalar> build_second_difference(Index T) {
  if (T < 3) throw DimensionError("build_second_difference: T must be >= 3, got " + std::to_string(T));
  const auto h = build_first_difference<Scalar>(T);
  return product(h, h);
}

// Lower Cholesky factor of a symmetric positive-definite band matrix. Only
// the lower band of `p` is read. Positive definiteness is checked here, at
// factorisation time.
template <typename Scalar>
BandedMatrix<Scalar> banded_cholesky(const BandedMatrix<Scalar>& p) {
  const Index n = p.dim();
  const Index b = p.lower_bandwidth();
  BandedMatrix<Scalar> l(n, b, 0);
  for (Index j = 0; j < n; ++j) {
    Scalar d = p(j, j);
    for (Index k = std::max<Index>(0, j - b); k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > Scalar(0)) || !std::isfinite(static_cast<double>(d))) {
      throw FactorizationError(
          "banded_cholesky: matrix not positive definite at pivot " + std::to_string(j), j);
    }
    const Scalar ljj = std::sqrt(d);
    l.coeffRef(j, j) = ljj;
    const Index i_hi = std::min<Index>(n - 1, j + b);
    for (Index i = j + 1; i <= i_hi; ++i) {
      Scalar s = p(i, j);
      for (Index k = std::max<Index>(0, i - b); k < j; ++k) s -= l(i, k) * l(j, k);
      l.coeffRef(i, j) = s / ljj;
    }
  }
  return l;
}

// Solves L x = rhs for lower-banded L.
template <typename Scalar>
typename BandedMatrix<Scalar>::DenseVector solve_lower(
    const BandedMatrix<Scalar>& l, const typename BandedMatrix<Scalar>::DenseVector& rhs) {
  const Index n = l.dim();
  const Index b = l.lower_bandwidth();
  typename BandedMatrix<Scalar>::DenseVector x = rhs;
  for (Index i = 0; i < n; ++i) {
    Scalar s = x(i);
    for (Index k = std::max<Index>(0, i - b); k < i; ++k) s -= l(i, k) * x(k);
    x(i) = s / l(i, i);
  }
  return x;
}

// Solves L' x = rhs for lower-banded L.
template <typename Scalar>
typename BandedMatrix<Scalar>::DenseVector solve_lower_transpose(
    const BandedMatrix<Scalar>& l, const typename BandedMatrix<Scalar>::DenseVector& rhs) {
  const Index n = l.dim();
  const Index b = l.lower_bandwidth();
  typename BandedMatrix<Scalar>::DenseVector x = rhs;
  for (Index i = n - 1; i >= 0; --i) {
    Scalar s = x(i);
    for (Index k = i + 1; k <= std::min<Index>(n - 1, i + b); ++k) s -= l(k, i) * x(k);
    x(i) = s / l(i, i);
  }
  return x;
}

// N(precision^-1 shift, precision^-1). The precision is banded when the
// caller can arrange it, dense otherwise.
template <typename Scalar>
struct PrecisionGaussian {
  using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::variant<BandedMatrix<Scalar>, DenseMatrix> precision;
  DenseVector shift;

  Index dim() const {
    return std::visit([](const auto& p) -> Index {
      if constexpr (std::is_same_v<std::decay_t<decltype(p)>, DenseMatrix>) {
        return p.rows();
      } else {
        return p.dim();
      }
    }, precision);
  }
};

namespace detail {

template <typename Scalar>
Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> dense_llt(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& p) {
  if (p.rows() != p.cols()) throw DimensionError("precision must be square");
  Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt(p);
  if (llt.info() != Eigen::Success) {
    throw FactorizationError("dense Cholesky failed: precision not positive definite", -1);
  }
  return llt;
}

}  // namespace detail

// Mean precision^-1 shift, by two triangular solves.
template <typename Scalar>
typename PrecisionGaussian<Scalar>::DenseVector precision_mean(const PrecisionGaussian<Scalar>& g) {
  using DenseMatrix = typename PrecisionGaussian<Scalar>::DenseMatrix;
  if (g.shift.size() != g.dim()) throw DimensionError("PrecisionGaussian: shift size mismatch");
  if (const auto* band = std::get_if<BandedMatrix<Scalar>>(&g.precision)) {
    const auto l = banded_cholesky(*band);
    return solve_lower_transpose(l, solve_lower(l, g.shift));
  }
  return detail::dense_llt(std::get<DenseMatrix>(g.precision)).solve(g.shift);
}

// One exact draw: factor P = L L', mean from L L' mu = shift, noise from
// L' e = z with z standard normal, so Cov(e) = P^-1.
template <typename Scalar>
typename PrecisionGaussian<Scalar>::DenseVector sample_precision_gaussian(
    const PrecisionGaussian<Scalar>& g, Rng& rng) {
  using DenseMatrix = typename PrecisionGaussian<Scalar>::DenseMatrix;
  using DenseVector = typename PrecisionGaussian<Scalar>::DenseVector;
  const Index n = g.dim();
  if (g.shift.size() != n) throw DimensionError("PrecisionGaussian: shift size mismatch");
  const DenseVector z = draw_normal_vector(n, rng).template cast<Scalar>();
  if (const auto* band = std::get_if<BandedMatrix<Scalar>>(&g.precision)) {
    const auto l = banded_cholesky(*band);
    const DenseVector mean = solve_lower_transpose(l, solve_lower(l, g.shift));
    return mean + solve_lower_transpose(l, z);
  }
  const auto llt = detail::dense_llt(std::get<DenseMatrix>(g.precision));
  const DenseVector mean = llt.solve(g.shift);
  return mean + llt.matrixU().solve(z);
}

}  // namespace bsts
