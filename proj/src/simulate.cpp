#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "qrkit/bayes.hpp"

namespace qrkit::bayes {

MatrixXd generate_design(Index n, Index p, Design structure, double rho, std::uint64_t seed) {
  if (n < 1 || p < 1) throw Error(Errc::DimensionMismatch, "design needs n >= 1 and p >= 1");
  if (structure != Design::Independent && !(rho >= 0 && rho < 1))
    throw Error(Errc::InvalidQuery, "rho must lie in [0, 1)");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  const Index q = p - 1;
  MatrixXd Z(n, q);
  for (Index j = 0; j < q; ++j)
    for (Index i = 0; i < n; ++i) Z(i, j) = normal(gen);
  MatrixXd X(n, p);
  X.col(0).setOnes();
  if (q == 0) return X;
  if (structure == Design::Independent) {
    X.rightCols(q) = Z;
    return X;
  }
  MatrixXd S(q, q);
  for (Index a = 0; a < q; ++a)
    for (Index b = 0; b < q; ++b)
      S(a, b) = a == b ? 1.0
                : structure == Design::Equicorrelated ? rho
                                                      : std::pow(rho, double(std::abs(a - b)));
  const Eigen::LLT<MatrixXd> llt(S);
  X.rightCols(q) = Z * llt.matrixU();
  return X;
}

Response generate_response(const MatrixXd& X, Index p0, double sigma2, std::uint64_t seed) {
  const Index n = X.rows(), p = X.cols();
  if (p0 < 0 || p0 >= p) throw Error(Errc::InvalidQuery, "need 0 <= p0 < p");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution flip(0.4);
  Response r;
  r.beta = VectorXd::Zero(p);
  const double base = std::log(double(n)) / std::sqrt(double(n));
  for (Index j = 0; j < p0; ++j) {
    const double sign = flip(gen) ? -1.0 : 1.0;
    r.beta(j) = 5 * sign * (base + std::abs(normal(gen)));
  }
  r.y = X * r.beta;
  const double sd = std::sqrt(sigma2);
  for (Index i = 0; i < n; ++i) r.y(i) += sd * normal(gen);
  return r;
}

double auc(const std::vector<double>& scores, const std::vector<char>& truth) {
  if (scores.size() != truth.size()) throw Error(Errc::DimensionMismatch, "scores and truth differ in length");
  const std::size_t m = scores.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t(0));
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(m);
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j + 1 < m && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double r = 0.5 * double(i + j) + 1;
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
    i = j + 1;
  }
  double pos = 0, sum = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (truth[i]) {
      pos += 1;
      sum += rank[i];
    }
  const double neg = double(m) - pos;
  if (pos == 0 || neg == 0) return 0.5;
  return (sum - pos * (pos + 1) / 2) / (pos * neg);
}

Metrics metrics(const VectorXd& mip, const std::vector<char>& mask, const VectorXd& beta_hat,
                const VectorXd& beta_true) {
  const Index p = beta_true.size();
  if (mip.size() != p || Index(mask.size()) != p || beta_hat.size() != p)
    throw Error(Errc::DimensionMismatch, "metrics inputs must all have length p");
  std::vector<double> scores;
  std::vector<char> truth;
  double tp = 0, fp = 0, fn = 0;
  for (Index j = 1; j < p; ++j) {
    const bool t = beta_true(j) != 0;
    const bool s = mask[std::size_t(j)] != 0;
    scores.push_back(mip(j));
    truth.push_back(t);
    tp += t && s;
    fp += !t && s;
    fn += t && !s;
  }
  Metrics m;
  m.auc = auc(scores, truth);
  m.tpr = tp + fn > 0 ? tp / (tp + fn) : 0;
  m.fdr = tp + fp > 0 ? fp / (tp + fp) : 0;
  m.f1 = 2 * tp + fp + fn > 0 ? 2 * tp / (2 * tp + fp + fn) : 0;
  m.mse = (beta_hat - beta_true).squaredNorm() / double(p);
  return m;
}

}  // namespace qrkit::bayes
