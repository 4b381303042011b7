#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "qrkit/linalg.hpp"

// Updating and downdating of a full factorization X = QR when rows or columns
// of X are inserted or removed. Positions are 1-based, as in the reference
// pseudocode; loop variables below keep that convention and subtract one on
// access.

namespace qrkit {

namespace detail {

inline void require(bool ok, Errc code, const char* what) {
  if (!ok) throw Error(code, what);
}

inline void check_positions(const std::vector<Index>& ks, Index p) {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    require(ks[i] >= 1 && ks[i] <= p, Errc::PositionOutOfRange, "column position outside 1..p");
    if (i > 0) {
      require(ks[i] != ks[i - 1], Errc::DuplicatePosition, "repeated column position");
      require(ks[i] > ks[i - 1], Errc::PositionOutOfRange, "positions must be increasing");
    }
  }
}

// Kept columns of 1..p after removing ks, plus the tail trimming used by the
// non-adjacent deletion: l is the last kept column, q the number of deleted
// columns that precede it.
struct NonAdjacentPlan {
  std::vector<Index> kept;
  Index l = 0;
  Index q = 0;
};

inline NonAdjacentPlan plan_nonadjacent(const std::vector<Index>& ks, Index p) {
  NonAdjacentPlan plan;
  std::size_t j = 0;
  for (Index c = 1; c <= p; ++c) {
    if (j < ks.size() && ks[j] == c)
      ++j;
    else
      plan.kept.push_back(c);
  }
  const Index m = static_cast<Index>(ks.size());
  plan.l = plan.kept.back();
  plan.q = m - (p - plan.l);
  return plan;
}

inline bool adjacent(const std::vector<Index>& ks, Index count) {
  return ks[count - 1] - ks[0] == count - 1;
}

}  // namespace detail

// One row x inserted at position k of X (Givens sweep).
template <typename Scalar, typename DX>
QrFactors<Scalar> qr_add_row(const QrFactors<Scalar>& f, Index k, const Eigen::MatrixBase<DX>& x_in,
                             FlopCounter* fc = nullptr) {
  const Index N = f.rows();
  const Index p = f.cols();
  detail::require(x_in.size() == p, Errc::DimensionMismatch, "new row must have p entries");
  detail::require(k >= 1 && k <= N + 1, Errc::PositionOutOfRange, "row position outside 1..N+1");
  Vector<Scalar> x = x_in;

  QrFactors<Scalar> out;
  auto& Q = out.Q;
  Q = Matrix<Scalar>::Zero(N + 1, N + 1);
  Q.topLeftCorner(k - 1, N) = f.Q.topRows(k - 1);
  Q(k - 1, N) = Scalar(1);
  Q.bottomLeftCorner(N - k + 1, N) = f.Q.bottomRows(N - k + 1);
  Matrix<Scalar> R = f.R;

  for (Index i = 1; i <= p; ++i) {
    const auto g = givens(R(i - 1, i - 1), x(i - 1), fc);
    R(i - 1, i - 1) = g.c * R(i - 1, i - 1) - g.s * x(i - 1);
    charge::mul(fc, 2);
    charge::sub(fc, 1);
    if (i < p) rotate(R.row(i - 1).segment(i, p - i), x.segment(i, p - i).transpose(), g, fc);
    rotate(Q.col(i - 1), Q.col(N), g, fc);
  }
  out.R = Matrix<Scalar>::Zero(N + 1, p);
  out.R.topRows(N) = R;
  return out;
}

// A block of m >= 2 rows inserted starting at position k, one Householder
// reflector per column acting on the diagonal entry and the new rows only.
template <typename Scalar>
QrFactors<Scalar> qr_add_rows_block(const QrFactors<Scalar>& f, Index k, Matrix<Scalar> U,
                                    FlopCounter* fc = nullptr) {
  const Index N = f.rows();
  const Index p = f.cols();
  const Index m = U.rows();
  detail::require(U.cols() == p, Errc::DimensionMismatch, "new rows must have p columns");
  detail::require(k >= 1 && k <= N + 1, Errc::PositionOutOfRange, "row position outside 1..N+1");

  QrFactors<Scalar> out;
  auto& Q = out.Q;
  Q = Matrix<Scalar>::Zero(N + m, N + m);
  Q.topLeftCorner(k - 1, N) = f.Q.topRows(k - 1);
  Q.block(k - 1, N, m, m).setIdentity();
  Q.bottomLeftCorner(N - k + 1, N) = f.Q.bottomRows(N - k + 1);
  Matrix<Scalar> R = f.R;
  const Index T = N + m;

  for (Index i = 1; i <= p; ++i) {
    const auto h = householder(R(i - 1, i - 1), U.col(i - 1), fc);
    const auto vt = h.v.tail(m);
    const Vector<Scalar> v1 = h.tau * vt;
    charge::mul(fc, m);
    R(i - 1, i - 1) = h.mu;
    if (i < p) {
      const Index w = p - i;
      auto Rrow = R.row(i - 1).segment(i, w);
      auto Ub = U.rightCols(w);
      const Vector<Scalar> r = h.tau * (Rrow.transpose() + Ub.transpose() * vt);
      charge::mul(fc, w * m + w);
      charge::add(fc, w * (m - 1) + w);
      Rrow -= r.transpose();
      charge::sub(fc, w);
      Ub.noalias() -= vt * r.transpose();
      charge::mul(fc, m * w);
      charge::sub(fc, m * w);
    }
    auto Qn = Q.rightCols(m);
    const Vector<Scalar> q = h.tau * Q.col(i - 1) + Qn * v1;
    charge::mul(fc, T + T * m);
    charge::add(fc, T * (m - 1) + T);
    Q.col(i - 1) -= q;
    charge::sub(fc, T);
    Qn.noalias() -= q * vt.transpose();
    charge::mul(fc, T * m);
    charge::sub(fc, T * m);
  }
  out.R = Matrix<Scalar>::Zero(N + m, p);
  out.R.topRows(N) = R;
  return out;
}

template <typename Scalar>
QrFactors<Scalar> qr_add_rows(const QrFactors<Scalar>& f, Index k, const Matrix<Scalar>& U,
                              FlopCounter* fc = nullptr) {
  detail::require(U.rows() >= 1, Errc::DimensionMismatch, "no rows to add");
  if (U.rows() == 1) return qr_add_row(f, k, U.row(0).transpose(), fc);
  return qr_add_rows_block(f, k, U, fc);
}

// Row k removed. The row of Q belonging to k is moved to the top and rotated
// onto e_1, which also turns the top row of R into the discarded one.
template <typename Scalar>
QrFactors<Scalar> qr_delete_row(const QrFactors<Scalar>& f, Index k, FlopCounter* fc = nullptr) {
  const Index N = f.rows();
  const Index p = f.cols();
  detail::require(k >= 1 && k <= N, Errc::PositionOutOfRange, "row position outside 1..N");
  detail::require(N - 1 >= p, Errc::WouldUnderdetermine, "deleting the row leaves fewer rows than columns");
  Matrix<Scalar> Q = f.Q;
  Matrix<Scalar> R = f.R;
  Vector<Scalar> q = Q.row(k - 1).transpose();
  if (k != 1) Q.middleRows(1, k - 1) = f.Q.topRows(k - 1);

  for (Index i = N; i > 1; --i) {
    const auto g = givens(q(i - 2), q(i - 1), fc);
    q(i - 2) = g.c * q(i - 2) - g.s * q(i - 1);
    charge::mul(fc, 2);
    charge::sub(fc, 1);
    if (i - 1 <= p) {
      const Index w = p - i + 2;
      rotate(R.row(i - 2).segment(i - 2, w), R.row(i - 1).segment(i - 2, w), g, fc);
    }
    rotate(Q.col(i - 2).tail(N - 1), Q.col(i - 1).tail(N - 1), g, fc);
  }
  return {Q.bottomRightCorner(N - 1, N - 1), R.bottomRows(N - 1)};
}

// Rows k..k+m-1 removed, m >= 2: the m rows of Q are gathered in W and
// reduced to [I 0] one row at a time.
template <typename Scalar>
QrFactors<Scalar> qr_delete_rows_block(const QrFactors<Scalar>& f, Index k, Index m,
                                       FlopCounter* fc = nullptr) {
  const Index N = f.rows();
  const Index p = f.cols();
  detail::require(m >= 1 && m < N, Errc::DimensionMismatch, "block size must be in 1..N-1");
  detail::require(k >= 1 && k <= N - m + 1, Errc::PositionOutOfRange, "row block outside 1..N");
  detail::require(N - m >= p, Errc::WouldUnderdetermine, "deleting the rows leaves fewer rows than columns");
  Matrix<Scalar> Q = f.Q;
  Matrix<Scalar> R = f.R;
  Matrix<Scalar> W = Q.middleRows(k - 1, m);
  if (k != 1) Q.middleRows(m, k - 1) = f.Q.topRows(k - 1);

  for (Index j = 1; j <= m; ++j) {
    for (Index i = N - 1; i >= j; --i) {
      const auto g = givens(W(j - 1, i - 1), W(j - 1, i), fc);
      W(j - 1, i - 1) = g.c * W(j - 1, i - 1) - g.s * W(j - 1, i);
      charge::mul(fc, 2);
      charge::sub(fc, 1);
      if (j < m) rotate(W.col(i - 1).tail(m - j), W.col(i).tail(m - j), g, fc);
      if (i <= p + j - 1) {
        const Index w = p - i + j;
        rotate(R.row(i - 1).segment(i - j, w), R.row(i).segment(i - j, w), g, fc);
      }
      rotate(Q.col(i - 1).tail(N - m), Q.col(i).tail(N - m), g, fc);
    }
  }
  return {Q.bottomRightCorner(N - m, N - m), R.bottomRows(N - m)};
}

template <typename Scalar>
QrFactors<Scalar> qr_delete_rows(const QrFactors<Scalar>& f, Index k, Index m,
                                 FlopCounter* fc = nullptr) {
  detail::require(m >= 1, Errc::DimensionMismatch, "no rows to delete");
  if (m == 1) return qr_delete_row(f, k, fc);
  return qr_delete_rows_block(f, k, m, fc);
}

// Column x inserted at position k.
template <typename Scalar, typename DX>
QrFactors<Scalar> qr_add_col(const QrFactors<Scalar>& f, Index k, const Eigen::MatrixBase<DX>& x,
                             FlopCounter* fc = nullptr) {
  const Index N = f.rows();
  const Index p = f.cols();
  detail::require(x.size() == N, Errc::DimensionMismatch, "new column must have N entries");
  detail::require(p + 1 <= N, Errc::DimensionMismatch, "adding the column needs p + 1 <= N");
  detail::require(k >= 1 && k <= p + 1, Errc::PositionOutOfRange, "column position outside 1..p+1");
  Matrix<Scalar> Q = f.Q;
  Matrix<Scalar> R = f.R;
  Vector<Scalar> v = Q.transpose() * x;
  charge::mul(fc, N * N);
  charge::add(fc, N * (N - 1));

  for (Index i = N; i > k; --i) {
    const auto g = givens(v(i - 2), v(i - 1), fc);
    v(i - 2) = g.c * v(i - 2) - g.s * v(i - 1);
    charge::mul(fc, 2);
    charge::sub(fc, 1);
    v(i - 1) = Scalar(0);
    if (i - 1 <= p) {
      const Index w = p - i + 2;
      rotate(R.row(i - 2).segment(i - 2, w), R.row(i - 1).segment(i - 2, w), g, fc);
    }
    rotate(Q.col(i - 2), Q.col(i - 1), g, fc);
  }
  QrFactors<Scalar> out{std::move(Q), Matrix<Scalar>(N, p + 1)};
  out.R << R.leftCols(k - 1), v, R.rightCols(p - k + 1);
  return out;
}

// Block of m >= 2 columns inserted starting at position k.
template <typename Scalar>
QrFactors<Scalar> qr_add_cols_block(const QrFactors<Scalar>& f, Index k, const Matrix<Scalar>& U,
                                    FlopCounter* fc = nullptr) {
  const Index N = f.rows();
  const Index p = f.cols();
  const Index m = U.cols();
  detail::require(U.rows() == N, Errc::DimensionMismatch, "new columns must have N rows");
  detail::require(p + m <= N, Errc::DimensionMismatch, "adding the columns needs p + m <= N");
  detail::require(k >= 1 && k <= p + 1, Errc::PositionOutOfRange, "column position outside 1..p+1");
  Matrix<Scalar> Q = f.Q;
  Matrix<Scalar> R = f.R;
  Matrix<Scalar> V = Q.transpose() * U;
  charge::mul(fc, N * N * m);
  charge::add(fc, (N - 1) * N * m);

  for (Index j = 1; j <= m; ++j) {
    for (Index i = N; i >= k + j; --i) {
      const auto g = givens(V(i - 2, j - 1), V(i - 1, j - 1), fc);
      V(i - 2, j - 1) = g.c * V(i - 2, j - 1) - g.s * V(i - 1, j - 1);
      charge::mul(fc, 2);
      charge::sub(fc, 1);
      V(i - 1, j - 1) = Scalar(0);
      if (j < m) rotate(V.row(i - 2).segment(j, m - j), V.row(i - 1).segment(j, m - j), g, fc);
      if (i <= p + j) {
        const Index w = p - i + j + 1;
        rotate(R.row(i - 2).segment(i - j - 1, w), R.row(i - 1).segment(i - j - 1, w), g, fc);
      }
      rotate(Q.col(i - 2), Q.col(i - 1), g, fc);
    }
  }
  QrFactors<Scalar> out{std::move(Q), Matrix<Scalar>(N, p + m)};
  out.R << R.leftCols(k - 1), V, R.rightCols(p - k + 1);
  return out;
}

template <typename Scalar>
QrFactors<Scalar> qr_add_cols(const QrFactors<Scalar>& f, Index k, const Matrix<Scalar>& U,
                              FlopCounter* fc = nullptr) {
  detail::require(U.cols() >= 1, Errc::DimensionMismatch, "no columns to add");
  if (U.cols() == 1) return qr_add_col(f, k, U.col(0), fc);
  return qr_add_cols_block(f, k, U, fc);
}

// Column k removed; the Hessenberg part right of k is swept with Givens.
template <typename Scalar>
QrFactors<Scalar> qr_delete_col(const QrFactors<Scalar>& f, Index k, FlopCounter* fc = nullptr) {
  const Index N = f.rows();
  const Index p = f.cols();
  detail::require(k >= 1 && k <= p, Errc::PositionOutOfRange, "column position outside 1..p");
  if (k == p) return {f.Q, f.R.leftCols(p - 1)};
  Matrix<Scalar> Q = f.Q;
  Matrix<Scalar> R(N, p - 1);
  R << f.R.leftCols(k - 1), f.R.rightCols(p - k);

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
    rotate(Q.col(i - 1), Q.col(i), g, fc);
  }
  return {std::move(Q), std::move(R)};
}

// Zeroes the a entries below R[i,i] with one Givens rotation (a = 1) or one
// Householder reflector (a > 1), applying the same transform to Q.
template <typename Scalar>
void qrstep_inplace(Matrix<Scalar>& Q, Matrix<Scalar>& R, Index i, Index a, FlopCounter* fc = nullptr) {
  const Index N = Q.rows();
  const Index l = R.cols();
  detail::require(i >= 1 && i <= l && a >= 1 && a <= R.rows() - i, Errc::PositionOutOfRange,
                  "qrstep column or fill count out of range");
  if (a > 1) {
    const auto h = householder(R(i - 1, i - 1), R.col(i - 1).segment(i, a), fc);
    const Vector<Scalar> vs = h.tau * h.v;
    charge::mul(fc, a + 1);
    R(i - 1, i - 1) = h.mu;
    R.col(i - 1).segment(i, a).setZero();
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
    auto C = Q.middleCols(i - 1, a + 1);
    const Vector<Scalar> cv = C * vs;
    charge::mul(fc, N * (a + 1));
    charge::add(fc, N * a);
    C.noalias() -= cv * h.v.transpose();
    charge::mul(fc, N * (a + 1));
    charge::sub(fc, N * (a + 1));
  } else {
    const auto g = givens(R(i - 1, i - 1), R(i, i - 1), fc);
    R(i - 1, i - 1) = g.c * R(i - 1, i - 1) - g.s * R(i, i - 1);
    charge::mul(fc, 2);
    charge::sub(fc, 1);
    R(i, i - 1) = Scalar(0);
    rotate(R.row(i - 1).segment(i, l - i), R.row(i).segment(i, l - i), g, fc);
    rotate(Q.col(i - 1), Q.col(i), g, fc);
  }
}

template <typename Scalar>
QrFactors<Scalar> qrstep(QrFactors<Scalar> f, Index i, Index a, FlopCounter* fc = nullptr) {
  qrstep_inplace(f.Q, f.R, i, a, fc);
  return f;
}

// Columns k..k+m-1 removed, m >= 2; each remaining column right of the gap
// has m entries below the diagonal, removed by one reflector.
template <typename Scalar>
QrFactors<Scalar> qr_delete_cols_block(const QrFactors<Scalar>& f, Index k, Index m,
                                       FlopCounter* fc = nullptr) {
  const Index p = f.cols();
  detail::require(m >= 1 && m <= p, Errc::PositionOutOfRange, "block size outside 1..p");
  detail::require(k >= 1 && k <= p - m + 1, Errc::PositionOutOfRange, "column block outside 1..p");
  if (k == p - m + 1) return {f.Q, f.R.leftCols(k - 1)};
  QrFactors<Scalar> out{f.Q, Matrix<Scalar>(f.rows(), p - m)};
  out.R << f.R.leftCols(k - 1), f.R.rightCols(p - m - k + 1);
  for (Index i = k; i <= p - m; ++i) qrstep_inplace(out.Q, out.R, i, m, fc);
  return out;
}

template <typename Scalar>
QrFactors<Scalar> qr_delete_cols(const QrFactors<Scalar>& f, Index k, Index m,
                                 FlopCounter* fc = nullptr) {
  detail::require(m >= 1, Errc::PositionOutOfRange, "no columns to delete");
  if (m == 1) return qr_delete_col(f, k, fc);
  return qr_delete_cols_block(f, k, m, fc);
}

// Arbitrary sorted set of columns removed. Trailing deleted columns are
// trimmed for free; adjacent sets fall through to the block routines;
// otherwise column i + k1 - 1 of the compacted R has a[i] subdiagonal
// entries, where a[i] counts the deleted columns to its left.
template <typename Scalar>
QrFactors<Scalar> qr_delete_cols_nonadjacent(const QrFactors<Scalar>& f, std::vector<Index> ks,
                                             FlopCounter* fc = nullptr) {
  const Index p = f.cols();
  const Index m = static_cast<Index>(ks.size());
  detail::require(m >= 1 && m < p, Errc::PositionOutOfRange, "need 1 <= |ks| < p");
  detail::check_positions(ks, p);
  if (m == 1) return qr_delete_col(f, ks[0], fc);
  if (detail::adjacent(ks, m)) return qr_delete_cols_block(f, ks[0], m, fc);

  const auto plan = detail::plan_nonadjacent(ks, p);
  const Index l = plan.l;
  const Index q = plan.q;
  charge::index_ops(fc, 2);
  ks.resize(q);
  QrFactors<Scalar> t{f.Q, f.R.leftCols(l)};
  if (q == 1) return qr_delete_col(t, ks[0], fc);
  if (detail::adjacent(ks, q)) return qr_delete_cols_block(t, ks[0], q, fc);

  QrFactors<Scalar> out{f.Q, Matrix<Scalar>(f.rows(), l - q)};
  for (Index j = 0; j < l - q; ++j) out.R.col(j) = f.R.col(plan.kept[j] - 1);
  const Index k1 = ks[0];
  // kbar[i] for i = 1.. is the kept column index of compacted column i + k1 - 1
  auto kbar = [&](Index i) { return plan.kept[k1 - 2 + i]; };
  Index a = kbar(1) - k1;
  charge::index_ops(fc, 1);
  const Index last = l - q - k1 + 1;
  for (Index i = 1; i <= last; ++i) {
    qrstep_inplace(out.Q, out.R, i + k1 - 1, a, fc);
    if (i < last) {
      a = a + (kbar(i + 1) - kbar(i)) - 1;
      charge::index_ops(fc, 3);
    }
  }
  return out;
}

// Permutation moving the m consecutive rows starting at `from` so they start
// at `to`, with the rows in between shifted to close the gap. Realized as an
// index map; nothing is materialized.
struct RowPermutationPlan {
  Index m = 1;
  Index from = 1;
  Index to = 1;

  // 1-based source row of destination row r in a matrix of n rows.
  Index source(Index r) const {
    if (from == to) return r;
    if (from < to) {
      if (r < from || r >= to + m) return r;
      if (r >= to) return from + (r - to);
      return r + m;
    }
    if (r < to || r >= from + m) return r;
    if (r < to + m) return from + (r - to);
    return r - m;
  }
};

template <typename Scalar>
Matrix<Scalar> permute_rows(const Matrix<Scalar>& A, const RowPermutationPlan& plan) {
  Matrix<Scalar> out(A.rows(), A.cols());
  for (Index r = 1; r <= A.rows(); ++r) out.row(r - 1) = A.row(plan.source(r) - 1);
  return out;
}

// Reorders the rows of X (through Q only; R is unchanged) so that the listed
// rows occupy positions 1..m in the given order. Combined with
// qr_delete_rows(f, 1, m) this removes a non-contiguous set of rows.
template <typename Scalar>
QrFactors<Scalar> gather_rows_to_front(const QrFactors<Scalar>& f, const std::vector<Index>& rows) {
  const Index N = f.rows();
  std::vector<char> taken(N, 0);
  std::vector<Index> order;
  order.reserve(N);
  for (Index r : rows) {
    detail::require(r >= 1 && r <= N, Errc::PositionOutOfRange, "row position outside 1..N");
    detail::require(!taken[r - 1], Errc::DuplicatePosition, "repeated row position");
    taken[r - 1] = 1;
    order.push_back(r);
  }
  for (Index r = 1; r <= N; ++r)
    if (!taken[r - 1]) order.push_back(r);
  QrFactors<Scalar> out{Matrix<Scalar>(N, N), f.R};
  for (Index i = 0; i < N; ++i) out.Q.row(i) = f.Q.row(order[i] - 1);
  return out;
}

}  // namespace qrkit
