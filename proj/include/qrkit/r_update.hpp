#pragma once

#include <cmath>
#include <vector>

#include "qrkit/qr_update.hpp"

// Updates of the p×p triangular factor R1 of a thin factorization without
// forming Q. Row positions are irrelevant for R1 and are not taken; columns
// can only be appended at the right end.

namespace qrkit {

namespace detail {

template <typename Scalar>
void require_square(const Matrix<Scalar>& R1) {
  require(R1.rows() == R1.cols(), Errc::DimensionMismatch, "R1 must be square");
}

}  // namespace detail

template <typename Scalar, typename DU>
RFactor<Scalar> r_add_row(RFactor<Scalar> R1, const Eigen::MatrixBase<DU>& u_in,
                          FlopCounter* fc = nullptr) {
  detail::require_square(R1);
  const Index p = R1.rows();
  detail::require(u_in.size() == p, Errc::DimensionMismatch, "new row must have p entries");
  Vector<Scalar> u = u_in;
  for (Index i = 1; i <= p; ++i) {
    const auto g = givens(R1(i - 1, i - 1), u(i - 1), fc);
    R1(i - 1, i - 1) = g.c * R1(i - 1, i - 1) - g.s * u(i - 1);
    charge::mul(fc, 2);
    charge::sub(fc, 1);
    if (i < p) rotate(R1.row(i - 1).segment(i, p - i), u.segment(i, p - i).transpose(), g, fc);
  }
  return R1;
}

template <typename Scalar>
RFactor<Scalar> r_add_rows_block(RFactor<Scalar> R1, Matrix<Scalar> U, FlopCounter* fc = nullptr) {
  using std::sqrt;
  detail::require_square(R1);
  const Index p = R1.rows();
  const Index m = U.rows();
  detail::require(U.cols() == p, Errc::DimensionMismatch, "new rows must have p columns");
  if (p == 0) return R1;
  for (Index i = 1; i <= p - 1; ++i) {
    const auto h = householder(R1(i - 1, i - 1), U.col(i - 1), fc);
    const auto vt = h.v.tail(m);
    R1(i - 1, i - 1) = h.mu;
    const Index w = p - i;
    auto Rrow = R1.row(i - 1).segment(i, w);
    auto Ub = U.rightCols(w);
    const Vector<Scalar> l = h.tau * (Rrow.transpose() + Ub.transpose() * vt);
    charge::mul(fc, w * m + w);
    charge::add(fc, w * (m - 1) + w);
    Rrow -= l.transpose();
    charge::sub(fc, w);
    Ub.noalias() -= vt * l.transpose();
    charge::mul(fc, m * w);
    charge::sub(fc, m * w);
  }
  R1(p - 1, p - 1) = sqrt(R1(p - 1, p - 1) * R1(p - 1, p - 1) + U.col(p - 1).squaredNorm());
  charge::dot(fc, m);
  charge::mul(fc, 1);
  charge::add(fc, 1);
  charge::sqrt(fc, 1);
  return R1;
}

// Row position is accepted for symmetry with the full update and ignored.
template <typename Scalar>
RFactor<Scalar> r_add_rows(const RFactor<Scalar>& R1, const Matrix<Scalar>& U,
                           FlopCounter* fc = nullptr) {
  detail::require(U.rows() >= 1, Errc::DimensionMismatch, "no rows to add");
  if (U.rows() == 1) return r_add_row(R1, U.row(0).transpose(), fc);
  return r_add_rows_block(R1, U, fc);
}

template <typename Scalar>
RFactor<Scalar> r_add_rows(const RFactor<Scalar>& R1, Index /*k*/, const Matrix<Scalar>& U,
                           FlopCounter* fc = nullptr) {
  return r_add_rows(R1, U, fc);
}

namespace detail {

// Squared diagonal after a downdate; a value below -1e-10 ||R1||^2 means the
// removed rows were never part of the data.
template <typename Scalar>
Scalar checked_downdate(Scalar d2, Scalar scale2, Index i) {
  if (d2 < -Scalar(1e-10) * scale2)
    throw Error(Errc::DowndateBreakdown,
                "negative squared pivot at column " + std::to_string(i));
  return d2;
}

}  // namespace detail

template <typename Scalar, typename DU>
RFactor<Scalar> r_delete_row(RFactor<Scalar> R1, const Eigen::MatrixBase<DU>& u_in,
                             FlopCounter* fc = nullptr) {
  using std::abs;
  using std::sqrt;
  detail::require_square(R1);
  const Index p = R1.rows();
  detail::require(u_in.size() == p, Errc::DimensionMismatch, "removed row must have p entries");
  Vector<Scalar> u = u_in;
  const Scalar scale2 = R1.squaredNorm();
  for (Index i = 1; i <= p; ++i) {
    const Scalar r = R1(i - 1, i - 1);
    const Scalar d2 = detail::checked_downdate(r * r - u(i - 1) * u(i - 1), scale2, i);
    R1(i - 1, i - 1) = sqrt(abs(d2));
    charge::mul(fc, 2);
    charge::sub(fc, 1);
    charge::sqrt(fc, 1);
    if (i < p) {
      if (R1(i - 1, i - 1) == Scalar(0) || r == Scalar(0))
        throw Error(Errc::DowndateBreakdown, "downdated factor is singular at column " + std::to_string(i));
      const Scalar c = R1(i - 1, i - 1) / r;
      const Scalar s = -u(i - 1) / r;
      charge::div(fc, 2);
      const Index w = p - i;
      auto Rrow = R1.row(i - 1).segment(i, w);
      auto ut = u.segment(i, w);
      Rrow = (Rrow + s * ut.transpose()) / c;
      charge::mul(fc, w);
      charge::add(fc, w);
      charge::div(fc, w);
      ut = s * Rrow.transpose() + c * ut;
      charge::mul(fc, 2 * w);
      charge::add(fc, w);
    }
  }
  return R1;
}

template <typename Scalar>
RFactor<Scalar> r_delete_rows_block(RFactor<Scalar> R1, Matrix<Scalar> U, FlopCounter* fc = nullptr) {
  using std::abs;
  using std::sqrt;
  detail::require_square(R1);
  const Index p = R1.rows();
  const Index m = U.rows();
  detail::require(U.cols() == p, Errc::DimensionMismatch, "removed rows must have p columns");
  const Scalar scale2 = R1.squaredNorm();
  for (Index i = 1; i <= p; ++i) {
    const Scalar s = U.col(i - 1).squaredNorm();
    charge::dot(fc, m);
    const Scalar r = R1(i - 1, i - 1);
    const Scalar d2 = detail::checked_downdate(r * r - s, scale2, i);
    R1(i - 1, i - 1) = sqrt(abs(d2));
    charge::mul(fc, 1);
    charge::sub(fc, 1);
    charge::sqrt(fc, 1);
    if (i < p) {
      const Scalar v1 = R1(i - 1, i - 1) - r;
      const Scalar b = v1 * v1;
      charge::sub(fc, 1);
      charge::mul(fc, 1);
      // a column of U that is already zero leaves v1 = 0 and needs no reflection
      const Scalar tau = b + s == Scalar(0) ? Scalar(0) : Scalar(2) * b / (b + s);
      charge::mul(fc, 1);
      charge::add(fc, 1);
      charge::div(fc, 1);
      const Vector<Scalar> vt = v1 == Scalar(0) ? Vector<Scalar>(U.col(i - 1)) : Vector<Scalar>(U.col(i - 1) / v1);
      charge::div(fc, m);
      if (tau == Scalar(1))
        throw Error(Errc::DowndateBreakdown, "singular hyperbolic step at column " + std::to_string(i));
      const Index w = p - i;
      auto Ub = U.rightCols(w);
      auto Rrow = R1.row(i - 1).segment(i, w);
      const Vector<Scalar> wv = tau * (Ub.transpose() * vt);
      charge::mul(fc, w * m + w);
      charge::add(fc, w * (m - 1));
      const Scalar denom = Scalar(1) - tau;
      Rrow = (Rrow + wv.transpose()) / denom;
      charge::sub(fc, 1);
      charge::add(fc, w);
      charge::div(fc, w);
      const Vector<Scalar> z = tau * Rrow.transpose() + wv;
      charge::mul(fc, w);
      charge::add(fc, w);
      Ub.noalias() -= vt * z.transpose();
      charge::mul(fc, m * w);
      charge::sub(fc, m * w);
    }
  }
  return R1;
}

// Removes rows U (which must have been part of the data) from R1.
template <typename Scalar>
RFactor<Scalar> r_delete_rows(const RFactor<Scalar>& R1, const Matrix<Scalar>& U,
                              FlopCounter* fc = nullptr) {
  detail::require(U.rows() >= 1, Errc::DimensionMismatch, "no rows to delete");
  if (U.rows() == 1) return r_delete_row(R1, U.row(0).transpose(), fc);
  return r_delete_rows_block(R1, U, fc);
}

template <typename Scalar>
RFactor<Scalar> r_delete_rows(const RFactor<Scalar>& R1, Index /*k*/, const Matrix<Scalar>& U,
                              FlopCounter* fc = nullptr) {
  return r_delete_rows(R1, U, fc);
}

namespace detail {

template <typename Scalar>
Scalar checked_new_pivot(Scalar d2, Scalar scale2, Index j) {
  if (d2 < -Scalar(1e-8) * scale2)
    throw Error(Errc::NearDependentColumn,
                "new column " + std::to_string(j) + " is (nearly) in the span of the old ones");
  return d2;
}

}  // namespace detail

// Column appended at the right end, given the cross products X^T u and u^T u.
template <typename Scalar, typename DA>
RFactor<Scalar> r_add_col_gram(const RFactor<Scalar>& R1, const Eigen::MatrixBase<DA>& Xtu, Scalar utu,
                               FlopCounter* fc = nullptr) {
  using std::abs;
  using std::sqrt;
  detail::require_square(R1);
  const Index p = R1.rows();
  detail::require(Xtu.size() == p, Errc::DimensionMismatch, "cross product must have p entries");
  RFactor<Scalar> out = RFactor<Scalar>::Zero(p + 1, p + 1);
  out.topLeftCorner(p, p) = R1;
  Vector<Scalar> r12;
  if (p > 0) r12 = forward_substitution(R1.transpose(), Xtu, fc);
  else r12.resize(0);
  out.col(p).head(p) = r12;
  const Scalar rr = r12.squaredNorm();
  charge::dot(fc, p);
  const Scalar d2 = detail::checked_new_pivot(utu - rr, utu, 1);
  charge::sub(fc, 1);
  out(p, p) = sqrt(abs(d2));
  charge::sqrt(fc, 1);
  return out;
}

template <typename Scalar, typename DU>
RFactor<Scalar> r_add_col(const RFactor<Scalar>& R1, const Matrix<Scalar>& X, const Eigen::MatrixBase<DU>& u,
                          FlopCounter* fc = nullptr) {
  const Index N = X.rows();
  detail::require(X.cols() == R1.rows(), Errc::DimensionMismatch, "X must have p columns");
  detail::require(u.size() == N, Errc::DimensionMismatch, "new column must have N entries");
  const Vector<Scalar> Xtu = X.transpose() * u;
  charge::mul(fc, X.cols() * N);
  charge::add(fc, X.cols() * (N - 1));
  const Scalar utu = u.squaredNorm();
  charge::dot(fc, N);
  return r_add_col_gram(R1, Xtu, utu, fc);
}

// Block of m columns appended at the right end, given X^T U and U^T U.
// Only the upper triangle of UtU is read.
template <typename Scalar>
RFactor<Scalar> r_add_cols_gram(const RFactor<Scalar>& R1, const Matrix<Scalar>& XtU,
                                const Matrix<Scalar>& UtU, FlopCounter* fc = nullptr) {
  using std::abs;
  using std::sqrt;
  detail::require_square(R1);
  const Index p = R1.rows();
  const Index m = XtU.cols();
  detail::require(XtU.rows() == p && UtU.rows() == m && UtU.cols() == m, Errc::DimensionMismatch,
                  "cross products have the wrong shape");
  Matrix<Scalar> R12;
  if (p > 0) R12 = forward_substitution(R1.transpose(), XtU, fc);
  else R12.resize(0, m);
  Matrix<Scalar> R22 = Matrix<Scalar>::Zero(m, m);
  for (Index i = 1; i <= m; ++i) {
    Scalar d2 = UtU(i - 1, i - 1) - R12.col(i - 1).squaredNorm();
    charge::dot(fc, p);
    charge::sub(fc, 1);
    if (i > 1) {
      d2 -= R22.col(i - 1).head(i - 1).squaredNorm();
      charge::dot(fc, i - 1);
      charge::sub(fc, 1);
    }
    R22(i - 1, i - 1) = sqrt(abs(detail::checked_new_pivot(d2, UtU(i - 1, i - 1), i)));
    charge::sqrt(fc, 1);
    if (i < m && R22(i - 1, i - 1) == Scalar(0))
      throw Error(Errc::NearDependentColumn, "new column " + std::to_string(i) + " has a zero pivot");
    for (Index j = i + 1; j <= m; ++j) {
      Scalar e = UtU(i - 1, j - 1) - R12.col(i - 1).dot(R12.col(j - 1));
      charge::dot(fc, p);
      charge::sub(fc, 1);
      if (i > 1) {
        e -= R22.col(i - 1).head(i - 1).dot(R22.col(j - 1).head(i - 1));
        charge::dot(fc, i - 1);
        charge::sub(fc, 1);
      }
      R22(i - 1, j - 1) = e / R22(i - 1, i - 1);
      charge::div(fc, 1);
    }
  }
  RFactor<Scalar> out = RFactor<Scalar>::Zero(p + m, p + m);
  out.topLeftCorner(p, p) = R1;
  out.topRightCorner(p, m) = R12;
  out.bottomRightCorner(m, m) = R22;
  return out;
}

// The Gram entries U^T U are charged where the recursion consumes them, so
// the count matches the line-by-line tally of the block append.
template <typename Scalar>
RFactor<Scalar> r_add_cols(const RFactor<Scalar>& R1, const Matrix<Scalar>& X, const Matrix<Scalar>& U,
                           FlopCounter* fc = nullptr) {
  const Index N = X.rows();
  const Index m = U.cols();
  detail::require(X.cols() == R1.rows(), Errc::DimensionMismatch, "X must have p columns");
  detail::require(U.rows() == N && m >= 1, Errc::DimensionMismatch, "new columns must have N rows");
  if (m == 1) return r_add_col(R1, X, U.col(0), fc);
  const Matrix<Scalar> XtU = X.transpose() * U;
  charge::mul(fc, X.cols() * N * m);
  charge::add(fc, X.cols() * (N - 1) * m);
  Matrix<Scalar> UtU = Matrix<Scalar>::Zero(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = i; j < m; ++j) UtU(i, j) = U.col(i).dot(U.col(j));
  for (Index i = 0; i < m * (m + 1) / 2; ++i) charge::dot(fc, N);
  return r_add_cols_gram(R1, XtU, UtU, fc);
}

template <typename Scalar>
RFactor<Scalar> r_delete_col(const RFactor<Scalar>& R1, Index k, FlopCounter* fc = nullptr) {
  detail::require_square(R1);
  const Index p = R1.rows();
  detail::require(k >= 1 && k <= p, Errc::PositionOutOfRange, "column position outside 1..p");
  if (k == p) return R1.topLeftCorner(p - 1, p - 1);
  Matrix<Scalar> R(p, p - 1);
  R << R1.leftCols(k - 1), R1.rightCols(p - k);
  for (Index i = k; i < p; ++i) {
    const auto g = givens(R(i - 1, i - 1), R(i, i - 1), fc);
    R(i - 1, i - 1) = g.c * R(i - 1, i - 1) - g.s * R(i, i - 1);
    charge::mul(fc, 2);
    charge::sub(fc, 1);
    R(i, i - 1) = Scalar(0);
    if (i < p - 1) {
      const Index w = p - 1 - i;
      rotate(R.row(i - 1).segment(i, w), R.row(i).segment(i, w), g, fc);
    }
  }
  return R.topRows(p - 1);
}

// Q-free counterpart of qrstep; R1 may have more rows than columns.
template <typename Scalar>
void thinqrstep_inplace(Matrix<Scalar>& R, Index i, Index a, FlopCounter* fc = nullptr) {
  const Index l = R.cols();
  detail::require(i >= 1 && i <= l && a >= 1 && a <= R.rows() - i, Errc::PositionOutOfRange,
                  "thinqrstep column or fill count out of range");
  if (a > 1) {
    const auto h = householder(R(i - 1, i - 1), R.col(i - 1).segment(i, a), fc);
    R(i - 1, i - 1) = h.mu;
    const Vector<Scalar> vs = h.tau * h.v;
    charge::mul(fc, a + 1);
    if (i < l) {
      const Index w = l - i;
      auto B = R.block(i - 1, i, a + 1, w);
      const Vector<Scalar> vb = B.transpose() * h.v;
      charge::mul(fc, w * (a + 1));
      charge::add(fc, w * a);
      B.noalias() -= vs * vb.transpose();
      charge::mul(fc, w * (a + 1));
      charge::sub(fc, w * (a + 1));
    }
    R.col(i - 1).segment(i, a).setZero();
  } else {
    const auto g = givens(R(i - 1, i - 1), R(i, i - 1), fc);
    R(i - 1, i - 1) = g.c * R(i - 1, i - 1) - g.s * R(i, i - 1);
    charge::mul(fc, 2);
    charge::sub(fc, 1);
    R(i, i - 1) = Scalar(0);
    rotate(R.row(i - 1).segment(i, l - i), R.row(i).segment(i, l - i), g, fc);
  }
}

template <typename Scalar>
RFactor<Scalar> thinqrstep(RFactor<Scalar> R1, Index i, Index a, FlopCounter* fc = nullptr) {
  thinqrstep_inplace(R1, i, a, fc);
  return R1;
}

namespace detail {

// Last kept column j (1-based) of a compacted R: its entries in rows j..j+q
// collapse into the diagonal by their norm.
template <typename Scalar>
void collapse_last_column(Matrix<Scalar>& R, Index j, Index q, FlopCounter* fc) {
  using std::sqrt;
  const Scalar d = sqrt(R.col(j - 1).segment(j - 1, q + 1).squaredNorm());
  charge::dot(fc, q + 1);
  charge::sqrt(fc, 1);
  R(j - 1, j - 1) = d;
}

}  // namespace detail

template <typename Scalar>
RFactor<Scalar> r_delete_cols_block(const RFactor<Scalar>& R1, Index k, Index m, FlopCounter* fc = nullptr) {
  detail::require_square(R1);
  const Index p = R1.rows();
  detail::require(m >= 1 && m <= p, Errc::PositionOutOfRange, "block size outside 1..p");
  detail::require(k >= 1 && k <= p - m + 1, Errc::PositionOutOfRange, "column block outside 1..p");
  if (k == p - m + 1) return R1.topLeftCorner(p - m, p - m);
  Matrix<Scalar> R(p, p - m);
  R << R1.leftCols(k - 1), R1.rightCols(p - m - k + 1);
  for (Index i = k; i <= p - m - 1; ++i) thinqrstep_inplace(R, i, m, fc);
  detail::collapse_last_column(R, p - m, m, fc);
  return R.topRows(p - m);
}

template <typename Scalar>
RFactor<Scalar> r_delete_cols(const RFactor<Scalar>& R1, Index k, Index m, FlopCounter* fc = nullptr) {
  detail::require(m >= 1, Errc::PositionOutOfRange, "no columns to delete");
  if (m == 1) return r_delete_col(R1, k, fc);
  return r_delete_cols_block(R1, k, m, fc);
}

template <typename Scalar>
RFactor<Scalar> r_delete_cols_nonadjacent(const RFactor<Scalar>& R1, std::vector<Index> ks,
                                          FlopCounter* fc = nullptr) {
  detail::require_square(R1);
  const Index p = R1.rows();
  const Index m = static_cast<Index>(ks.size());
  detail::require(m >= 1 && m < p, Errc::PositionOutOfRange, "need 1 <= |ks| < p");
  detail::check_positions(ks, p);
  if (m == 1) return r_delete_col(R1, ks[0], fc);
  if (detail::adjacent(ks, m)) return r_delete_cols_block(R1, ks[0], m, fc);

  const auto plan = detail::plan_nonadjacent(ks, p);
  const Index l = plan.l;
  const Index q = plan.q;
  charge::index_ops(fc, 2);
  ks.resize(q);
  const RFactor<Scalar> Rl = R1.topLeftCorner(l, l);
  if (q == 1) return r_delete_col(Rl, ks[0], fc);
  if (detail::adjacent(ks, q)) return r_delete_cols_block(Rl, ks[0], q, fc);

  Matrix<Scalar> R(l, l - q);
  for (Index j = 0; j < l - q; ++j) R.col(j) = Rl.col(plan.kept[j] - 1);
  const Index k1 = ks[0];
  auto kbar = [&](Index i) { return plan.kept[k1 - 2 + i]; };
  Index a = kbar(1) - k1;
  charge::index_ops(fc, 1);
  for (Index i = 1; i <= l - q - k1; ++i) {
    thinqrstep_inplace(R, i + k1 - 1, a, fc);
    a = a + (kbar(i + 1) - kbar(i)) - 1;
    charge::index_ops(fc, 3);
  }
  detail::collapse_last_column(R, l - q, q, fc);
  return R.topRows(l - q);
}

// (X^T X)^{-1} after inserting column x at position k (bordering formula).
template <typename Scalar, typename DX>
Matrix<Scalar> gram_inverse_add_col(const Matrix<Scalar>& B, const Matrix<Scalar>& X, Index k,
                                    const Eigen::MatrixBase<DX>& x, FlopCounter* fc = nullptr) {
  const Index p = B.rows();
  const Index N = X.rows();
  detail::require(B.cols() == p && X.cols() == p && x.size() == N, Errc::DimensionMismatch,
                  "gram_inverse_add_col shapes");
  detail::require(k >= 1 && k <= p + 1, Errc::PositionOutOfRange, "column position outside 1..p+1");
  const Vector<Scalar> u1 = X.transpose() * x;
  charge::mul(fc, p * N);
  charge::add(fc, p * (N - 1));
  const Vector<Scalar> u2 = B * u1;
  charge::mul(fc, p * p);
  charge::add(fc, p * (p - 1));
  const Scalar xx = x.squaredNorm();
  const Scalar den = xx - u1.dot(u2);
  charge::dot(fc, N);
  charge::dot(fc, p);
  charge::sub(fc, 1);
  if (den <= Scalar(1e-12) * xx)
    throw Error(Errc::SingularUpdate, "new column lies in the span of X");
  const Scalar d = Scalar(1) / den;
  charge::div(fc, 1);
  const Vector<Scalar> u3 = d * u2;
  charge::mul(fc, p);
  Matrix<Scalar> Bp(p + 1, p + 1);
  Bp.topLeftCorner(p, p) = B + u3 * u2.transpose();
  charge::mul(fc, p * p);
  charge::add(fc, p * p);
  Bp.topRightCorner(p, 1) = -u3;
  Bp.bottomLeftCorner(1, p) = -u3.transpose();
  Bp(p, p) = d;
  if (k == p + 1) return Bp;
  // move the last row and column to position k
  std::vector<Index> order;
  for (Index i = 0; i < p + 1; ++i) order.push_back(i < k - 1 ? i : (i == k - 1 ? p : i - 1));
  Matrix<Scalar> out(p + 1, p + 1);
  for (Index i = 0; i <= p; ++i)
    for (Index j = 0; j <= p; ++j) out(i, j) = Bp(order[i], order[j]);
  return out;
}

// (X^T X)^{-1} after deleting column k.
template <typename Scalar>
Matrix<Scalar> gram_inverse_delete_col(const Matrix<Scalar>& B, Index k, FlopCounter* fc = nullptr) {
  const Index p = B.rows();
  detail::require(B.cols() == p, Errc::DimensionMismatch, "B must be square");
  detail::require(k >= 1 && k <= p, Errc::PositionOutOfRange, "column position outside 1..p");
  std::vector<Index> order;
  for (Index i = 0; i < p; ++i)
    if (i != k - 1) order.push_back(i);
  order.push_back(k - 1);
  Matrix<Scalar> P(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) P(i, j) = B(order[i], order[j]);
  const Scalar d = P(p - 1, p - 1);
  const Vector<Scalar> u3 = P.col(p - 1).head(p - 1);
  const Vector<Scalar> u2 = u3 / d;
  charge::div(fc, p - 1);
  Matrix<Scalar> out = P.topLeftCorner(p - 1, p - 1) - u3 * u2.transpose();
  charge::mul(fc, (p - 1) * (p - 1));
  charge::sub(fc, (p - 1) * (p - 1));
  return out;
}

}  // namespace qrkit
