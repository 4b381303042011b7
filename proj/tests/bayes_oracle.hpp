#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "qrkit/bayes.hpp"

namespace qrkit::test {

inline MatrixXd select_cols(const MatrixXd& X, const std::vector<Index>& cols) {
  MatrixXd out(X.rows(), Index(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(Index(i)) = X.col(cols[i]);
  return out;
}

struct DenseFit {
  double log_det_precision;  // log |Xγ^T Xγ + I/υ0|
  double s2;
};

// Explicit inverse of the ridge Gram matrix.
inline DenseFit dense_fit(const MatrixXd& X, const VectorXd& y, const std::vector<Index>& cols, double upsilon0) {
  const MatrixXd Xg = select_cols(X, cols);
  const Index k = Xg.cols();
  const MatrixXd P = Xg.transpose() * Xg + MatrixXd::Identity(k, k) / upsilon0;
  const MatrixXd Sigma = P.inverse();
  const VectorXd Xty = Xg.transpose() * y;
  return {std::log(P.determinant()), y.dot(y) - Xty.dot(Sigma * Xty)};
}

// The marginal likelihood with the constants the sampler drops.
inline double dense_log_marginal(const MatrixXd& X, const VectorXd& y, const std::vector<Index>& cols,
                                 const bayes::Hyperparams& hp) {
  const auto f = dense_fit(X, y, cols, hp.upsilon0);
  const double k = double(cols.size());
  return -0.5 * f.log_det_precision - 0.5 * k * std::log(hp.upsilon0) -
         (hp.nu + 0.5 * double(X.rows())) * std::log(hp.lambda + f.s2 / 2);
}

// log p(y | γ) including every normalizing constant.
inline double dense_log_evidence(const MatrixXd& X, const VectorXd& y, const std::vector<Index>& cols,
                                 const bayes::Hyperparams& hp) {
  const double n = double(X.rows());
  return dense_log_marginal(X, y, cols, hp) - 0.5 * n * std::log(2 * std::numbers::pi) +
         hp.nu * std::log(hp.lambda) + std::lgamma(hp.nu + n / 2) - std::lgamma(hp.nu);
}

// Predictive density of (x, y) after observing (X, y) as a ratio of evidences.
inline double dense_log_predictive(const MatrixXd& X, const VectorXd& y, const std::vector<Index>& cols,
                                   const bayes::Hyperparams& hp, const VectorXd& x, double ynew) {
  MatrixXd X2(X.rows() + 1, X.cols());
  X2 << X, x.transpose();
  VectorXd y2(y.size() + 1);
  y2 << y, ynew;
  return dense_log_evidence(X2, y2, cols, hp) - dense_log_evidence(X, y, cols, hp);
}

inline double log_choose(double n, double k) {
  return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

// Unnormalized posterior of every model by dense formulas, in the order of
// the bit patterns over the free covariates.
inline std::vector<double> dense_log_posteriors(const MatrixXd& X, const VectorXd& y, const bayes::Hyperparams& hp,
                                                std::vector<std::vector<Index>>* models = nullptr) {
  const Index pf = X.cols() - 1;
  std::vector<double> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << pf); ++mask) {
    std::vector<Index> cols{0};
    for (Index j = 1; j <= pf; ++j)
      if (mask >> (j - 1) & 1) cols.push_back(j);
    const double k = double(cols.size() - 1);
    const double a = hp.theta_xi, b = hp.theta_phi, p = double(pf);
    double prior = std::lgamma(k + a) + std::lgamma(p - k + b) - std::lgamma(p + a + b) -
                   (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    if (!hp.integrate_theta) prior = k * std::log(hp.mu_theta) + (p - k) * std::log(1 - hp.mu_theta);
    if (hp.binomial_coefficient) prior += log_choose(p, k);
    out.push_back(dense_log_marginal(X, y, cols, hp) + prior);
    if (models) models->push_back(cols);
  }
  return out;
}

inline std::vector<double> normalize_log(const std::vector<double>& lp) {
  double top = -INFINITY;
  for (double v : lp) top = std::max(top, v);
  double z = 0;
  for (double v : lp) z += std::exp(v - top);
  std::vector<double> out;
  for (double v : lp) out.push_back(std::exp(v - top) / z);
  return out;
}

}  // namespace qrkit::test
