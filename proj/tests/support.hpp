#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "qrkit/linalg.hpp"

namespace qrkit::test {

inline MatrixXd random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixXd A(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) A(i, j) = nd(rng);
  return A;
}

inline Index uniform_index(std::mt19937_64& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

// Sorted random subset of size m from 1..p.
inline std::vector<Index> random_subset(std::mt19937_64& rng, Index p, Index m) {
  std::vector<Index> all(p);
  for (Index i = 0; i < p; ++i) all[i] = i + 1;
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<Index> out(all.begin(), all.begin() + m);
  std::sort(out.begin(), out.end());
  return out;
}

// Reference triangular factor from Eigen with a non-negative diagonal.
inline MatrixXd reference_r(const MatrixXd& X) {
  Eigen::HouseholderQR<MatrixXd> qr(X);
  MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  return positive_diagonal(MatrixXd(R.topRows(X.cols())));
}

// The factor pair must be a QR factorization of X: orthogonal Q,
// upper-trapezoidal R, QR = X, and R agreeing with an independent
// factorization up to row signs.
inline void expect_valid_qr(const QrFactors<double>& f, const MatrixXd& X, double tol = 1e-10) {
  const Index N = X.rows();
  const Index p = X.cols();
  ASSERT_EQ(f.Q.rows(), N);
  ASSERT_EQ(f.Q.cols(), N);
  ASSERT_EQ(f.R.rows(), N);
  ASSERT_EQ(f.R.cols(), p);
  EXPECT_LT((f.Q.transpose() * f.Q - MatrixXd::Identity(N, N)).norm(), tol);
  EXPECT_LT(relative_error(f.Q * f.R, X), tol);
  for (Index j = 0; j < p; ++j)
    for (Index i = j + 1; i < N; ++i) EXPECT_EQ(f.R(i, j), 0.0) << "R(" << i << "," << j << ")";
  const MatrixXd R1 = positive_diagonal(MatrixXd(f.R.topRows(p)));
  EXPECT_LT(relative_error(R1, reference_r(X)), tol);
}

inline void expect_valid_r(const MatrixXd& R1, const MatrixXd& X, double tol = 1e-10) {
  const Index p = X.cols();
  ASSERT_EQ(R1.rows(), p);
  ASSERT_EQ(R1.cols(), p);
  for (Index j = 0; j < p; ++j)
    for (Index i = j + 1; i < p; ++i) EXPECT_EQ(R1(i, j), 0.0) << "R(" << i << "," << j << ")";
  EXPECT_LT(relative_error(positive_diagonal(R1), reference_r(X)), tol);
}

inline MatrixXd insert_rows(const MatrixXd& X, Index k, const MatrixXd& U) {
  MatrixXd out(X.rows() + U.rows(), X.cols());
  out << X.topRows(k - 1), U, X.bottomRows(X.rows() - k + 1);
  return out;
}

inline MatrixXd remove_rows(const MatrixXd& X, Index k, Index m) {
  MatrixXd out(X.rows() - m, X.cols());
  out << X.topRows(k - 1), X.bottomRows(X.rows() - k - m + 1);
  return out;
}

inline MatrixXd insert_cols(const MatrixXd& X, Index k, const MatrixXd& U) {
  MatrixXd out(X.rows(), X.cols() + U.cols());
  out << X.leftCols(k - 1), U, X.rightCols(X.cols() - k + 1);
  return out;
}

inline MatrixXd remove_cols(const MatrixXd& X, const std::vector<Index>& ks) {
  std::vector<Index> keep;
  for (Index j = 1; j <= X.cols(); ++j)
    if (std::find(ks.begin(), ks.end(), j) == ks.end()) keep.push_back(j - 1);
  MatrixXd out(X.rows(), static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) out.col(j) = X.col(keep[j]);
  return out;
}

}  // namespace qrkit::test
