#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "qrkit/error.hpp"
#include "qrkit/flop_counter.hpp"

namespace qrkit {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

// Full factorization X = Q R, Q N×N orthogonal, R N×p upper trapezoidal.
template <typename Scalar>
struct QrFactors {
  Matrix<Scalar> Q;
  Matrix<Scalar> R;

  Index rows() const { return R.rows(); }
  Index cols() const { return R.cols(); }
};

// The p×p triangular factor of the thin factorization, kept without Q.
template <typename Scalar>
using RFactor = Matrix<Scalar>;

template <typename Scalar>
struct GivensRotation {
  Scalar c = Scalar(1);
  Scalar s = Scalar(0);
};

// G = [[c, s], [-s, c]] with G^T (a, b)^T = (r, 0)^T.
// Charged 6 flops (2 div, 2 mul, 1 add, 1 sqrt) whatever branch is taken.
template <typename Scalar>
GivensRotation<Scalar> givens(Scalar a, Scalar b, FlopCounter* fc = nullptr) {
  using std::abs;
  using std::sqrt;
  charge::div(fc, 2);
  charge::mul(fc, 2);
  charge::add(fc, 1);
  charge::sqrt(fc, 1);
  GivensRotation<Scalar> g;
  if (b == Scalar(0)) return g;
  if (abs(b) > abs(a)) {
    Scalar r = -a / b;
    g.s = Scalar(1) / sqrt(Scalar(1) + r * r);
    g.c = g.s * r;
    if (b > Scalar(0)) {
      g.c = -g.c;
      g.s = -g.s;
    }
  } else {
    Scalar r = -b / a;
    g.c = Scalar(1) / sqrt(Scalar(1) + r * r);
    g.s = g.c * r;
    if (a < Scalar(0)) {
      g.c = -g.c;
      g.s = -g.s;
    }
  }
  return g;
}

// Applies G^T to the pair of rows (x, y), or equivalently G to a pair of
// columns: x <- c x - s y, y <- s x + c y. Six flops per entry.
template <typename Scalar, typename DX, typename DY>
void rotate(const Eigen::MatrixBase<DX>& x_, const Eigen::MatrixBase<DY>& y_,
            const GivensRotation<Scalar>& g, FlopCounter* fc = nullptr) {
  auto& x = const_cast<Eigen::MatrixBase<DX>&>(x_);
  auto& y = const_cast<Eigen::MatrixBase<DY>&>(y_);
  const Index n = x.size();
  for (Index j = 0; j < n; ++j) {
    const Scalar a = x(j);
    const Scalar b = y(j);
    x(j) = g.c * a - g.s * b;
    y(j) = g.s * a + g.c * b;
  }
  charge::mul(fc, 4 * n);
  charge::sub(fc, n);
  charge::add(fc, n);
}

// H = I - tau v v^T with v[0] = 1 maps (a, x) to (mu, 0, ..., 0).
// For tau in {0, 2} the tail of v is x itself, which is zero there.
template <typename Scalar>
struct HouseholderReflector {
  Scalar tau = Scalar(0);
  Vector<Scalar> v;
  Scalar mu = Scalar(0);
};

// Charged 3m + 9 flops for a length-m tail, on every branch.
template <typename Scalar, typename DX>
HouseholderReflector<Scalar> householder(Scalar a, const Eigen::MatrixBase<DX>& x,
                                         FlopCounter* fc = nullptr) {
  using std::sqrt;
  const Index m = x.size();
  charge::mul(fc, m + 3);
  charge::add(fc, m + 3);
  charge::div(fc, m + 2);
  charge::sqrt(fc, 1);

  HouseholderReflector<Scalar> h;
  h.v.resize(m + 1);
  h.v(0) = Scalar(1);
  h.v.tail(m) = x;
  const Scalar s = x.squaredNorm();
  if (s == Scalar(0)) {
    if (a >= Scalar(0)) {
      h.tau = Scalar(0);
      h.mu = a;
    } else {
      h.tau = Scalar(2);
      h.mu = -a;
    }
    return h;
  }
  h.mu = sqrt(s + a * a);
  const Scalar v1 = a <= Scalar(0) ? a - h.mu : -s / (a + h.mu);
  const Scalar b = v1 * v1;
  h.tau = Scalar(2) * b / (s + b);
  h.v.tail(m) /= v1;
  return h;
}

namespace detail {

template <typename D>
double frobenius(const Eigen::MatrixBase<D>& a) {
  return static_cast<double>(a.norm());
}

}  // namespace detail

// Householder QR from scratch. Throws RankDeficient when a pivot falls to
// 1e-12 ||X||_F or below.
template <typename Scalar>
QrFactors<Scalar> qr_factorize(const Matrix<Scalar>& X, FlopCounter* fc = nullptr) {
  using std::abs;
  const Index N = X.rows();
  const Index p = X.cols();
  if (N < p) throw Error(Errc::DimensionMismatch, "qr_factorize needs N >= p");
  QrFactors<Scalar> f{Matrix<Scalar>::Identity(N, N), X};
  auto& R = f.R;
  auto& Q = f.Q;
  const Scalar tol = Scalar(1e-12) * X.norm();
  for (Index i = 0; i < p; ++i) {
    const Index t = N - i - 1;
    auto h = householder(R(i, i), R.col(i).tail(t), fc);
    if (abs(h.mu) <= tol)
      throw Error(Errc::RankDeficient, "pivot " + std::to_string(i + 1) + " below tolerance");
    R(i, i) = h.mu;
    R.col(i).tail(t).setZero();
    const Index w = p - i - 1;
    if (w > 0) {
      auto B = R.block(i, i + 1, t + 1, w);
      const Vector<Scalar> vb = B.transpose() * h.v;
      B.noalias() -= (h.tau * h.v) * vb.transpose();
      charge::mul(fc, (t + 1) + 2 * w * (t + 1));
      charge::add(fc, w * t);
      charge::sub(fc, w * (t + 1));
    }
    auto C = Q.rightCols(t + 1);
    const Vector<Scalar> cv = C * h.v;
    C.noalias() -= (h.tau * cv) * h.v.transpose();
    charge::mul(fc, N * (t + 1) + N + N * (t + 1));
    charge::add(fc, N * t);
    charge::sub(fc, N * (t + 1));
  }
  return f;
}

// Thin factor only: the leading p×p block of qr_factorize's R, computed
// without accumulating Q.
template <typename Scalar>
RFactor<Scalar> thin_r(const Matrix<Scalar>& X) {
  using std::abs;
  const Index N = X.rows();
  const Index p = X.cols();
  if (N < p) throw Error(Errc::DimensionMismatch, "thin_r needs N >= p");
  Matrix<Scalar> R = X;
  const Scalar tol = Scalar(1e-12) * X.norm();
  for (Index i = 0; i < p; ++i) {
    const Index t = N - i - 1;
    const auto h = householder(R(i, i), R.col(i).tail(t));
    if (abs(h.mu) <= tol)
      throw Error(Errc::RankDeficient, "pivot " + std::to_string(i + 1) + " below tolerance");
    R(i, i) = h.mu;
    R.col(i).tail(t).setZero();
    const Index w = p - i - 1;
    if (w > 0) {
      auto B = R.block(i, i + 1, t + 1, w);
      const Vector<Scalar> vb = B.transpose() * h.v;
      B.noalias() -= (h.tau * h.v) * vb.transpose();
    }
  }
  return R.topRows(p);
}

// Solves L x = b for lower-triangular L; exactly p^2 flops per right-hand side.
template <typename DL, typename DB>
auto forward_substitution(const Eigen::MatrixBase<DL>& L, const Eigen::MatrixBase<DB>& b,
                          FlopCounter* fc = nullptr) {
  using Scalar = typename DL::Scalar;
  const Index p = L.rows();
  if (L.cols() != p || b.rows() != p)
    throw Error(Errc::DimensionMismatch, "forward_substitution shape");
  for (Index i = 0; i < p; ++i)
    if (!(std::abs(L(i, i)) > 1e-300)) throw Error(Errc::SingularTriangular, "zero diagonal");
  Matrix<Scalar> x = b;
  for (Index c = 0; c < x.cols(); ++c) {
    for (Index i = 0; i < p; ++i) {
      Scalar acc = x(i, c);
      for (Index j = 0; j < i; ++j) acc -= L(i, j) * x(j, c);
      x(i, c) = acc / L(i, i);
    }
  }
  charge::mul(fc, x.cols() * p * (p - 1) / 2);
  charge::sub(fc, x.cols() * p * (p - 1) / 2);
  charge::div(fc, x.cols() * p);
  if constexpr (DB::ColsAtCompileTime == 1) {
    return Vector<Scalar>(x);
  } else {
    return x;
  }
}

// Solves U x = b for upper-triangular U; exactly p^2 flops per right-hand side.
template <typename DU, typename DB>
auto backward_substitution(const Eigen::MatrixBase<DU>& U, const Eigen::MatrixBase<DB>& b,
                           FlopCounter* fc = nullptr) {
  using Scalar = typename DU::Scalar;
  const Index p = U.rows();
  if (U.cols() != p || b.rows() != p)
    throw Error(Errc::DimensionMismatch, "backward_substitution shape");
  for (Index i = 0; i < p; ++i)
    if (!(std::abs(U(i, i)) > 1e-300)) throw Error(Errc::SingularTriangular, "zero diagonal");
  Matrix<Scalar> x = b;
  for (Index c = 0; c < x.cols(); ++c) {
    for (Index i = p - 1; i >= 0; --i) {
      Scalar acc = x(i, c);
      for (Index j = i + 1; j < p; ++j) acc -= U(i, j) * x(j, c);
      x(i, c) = acc / U(i, i);
    }
  }
  charge::mul(fc, x.cols() * p * (p - 1) / 2);
  charge::sub(fc, x.cols() * p * (p - 1) / 2);
  charge::div(fc, x.cols() * p);
  if constexpr (DB::ColsAtCompileTime == 1) {
    return Vector<Scalar>(x);
  } else {
    return x;
  }
}

// Flips rows of R (and the matching columns of Q) so the diagonal is >= 0.
// Zero pivots keep their sign.
template <typename Scalar>
Matrix<Scalar> positive_diagonal(Matrix<Scalar> R) {
  const Index d = std::min(R.rows(), R.cols());
  for (Index i = 0; i < d; ++i)
    if (R(i, i) < Scalar(0)) R.row(i) = -R.row(i);
  return R;
}

template <typename Scalar>
QrFactors<Scalar> positive_diagonal(QrFactors<Scalar> f) {
  const Index d = std::min(f.R.rows(), f.R.cols());
  for (Index i = 0; i < d; ++i) {
    if (f.R(i, i) < Scalar(0)) {
      f.R.row(i) = -f.R.row(i);
      f.Q.col(i) = -f.Q.col(i);
    }
  }
  return f;
}

// ||A - B||_F / ||B||_F, falling back to the absolute error when B = 0.
template <typename DA, typename DB>
double relative_error(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) return std::numeric_limits<double>::infinity();
  const double nb = detail::frobenius(B);
  const double d = detail::frobenius(A - B);
  return nb > 0 ? d / nb : d;
}

}  // namespace qrkit
