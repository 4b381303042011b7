#include <algorithm>
#include <cmath>
#include <numbers>

#include "qrkit/bayes.hpp"
#include "qrkit/r_update.hpp"

namespace qrkit::bayes {

namespace {

// Plain sequential dot product: the summation order depends only on n, so
// results do not change when columns are permuted.
double dot(const double* a, const double* b, Index n) {
  double s = 0;
  for (Index i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

constexpr Index kGramCacheLimit = 256;

void finish(const Model& model, ModelState& s) {
  VectorXd b(s.size());
  for (Index i = 0; i < s.size(); ++i) b(i) = model.xty(s.cols[std::size_t(i)]);
  s.z = forward_substitution(s.R.transpose(), b);
  s.s2 = model.yty() - s.z.squaredNorm();
  s.log_marginal = log_marginal(s, model.n(), model.hp());
  s.log_prior = log_model_prior(s.size() - 1, model.p() - 1, model.hp());
}

}  // namespace

Model::Model(MatrixXd X, VectorXd y, Hyperparams hp, std::vector<std::uint64_t> ids)
    : X_(std::move(X)), y_(std::move(y)), hp_(hp), ids_(std::move(ids)) {
  const Index n = X_.rows(), p = X_.cols();
  if (y_.size() != n || p < 1 || n < 1)
    throw Error(Errc::DimensionMismatch, "X must be n×p with p >= 1 and y of length n");
  if (!(hp_.upsilon0 > 0)) throw Error(Errc::InvalidQuery, "upsilon0 must be positive");
  if (ids_.empty()) {
    for (Index j = 0; j < p; ++j) ids_.push_back(static_cast<std::uint64_t>(j));
  } else if (static_cast<Index>(ids_.size()) != p) {
    throw Error(Errc::DimensionMismatch, "one id per column");
  }
  yty_ = dot(y_.data(), y_.data(), n);
  xty_.resize(p);
  norm2_.resize(p);
  for (Index j = 0; j < p; ++j) {
    xty_(j) = dot(X_.col(j).data(), y_.data(), n);
    norm2_(j) = dot(X_.col(j).data(), X_.col(j).data(), n);
  }
  if (p <= kGramCacheLimit) {
    gram_.resize(p, p);
    for (Index a = 0; a < p; ++a)
      for (Index b = a; b < p; ++b)
        gram_(a, b) = gram_(b, a) = a == b ? norm2_(a) : dot(X_.col(a).data(), X_.col(b).data(), n);
  }
}

VectorXd Model::cross(const std::vector<Index>& cols, Index j) const {
  VectorXd out(static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const Index c = cols[i];
    out(Index(i)) = gram_.size() ? gram_(c, j) : dot(X_.col(c).data(), X_.col(j).data(), n());
  }
  return out;
}

std::vector<Index> ModelState::sorted_cols() const {
  auto c = cols;
  std::sort(c.begin(), c.end());
  return c;
}

double log_marginal(const MatrixXd& R, double s2, Index n, const Hyperparams& hp) {
  const double tail = hp.lambda + s2 / 2;
  if (!(tail > 0)) throw Error(Errc::NumericalBreakdown, "lambda + S^2/2 is not positive");
  double logdet = 0;
  for (Index i = 0; i < R.rows(); ++i) logdet += std::log(std::abs(R(i, i)));
  return -logdet - 0.5 * double(R.rows()) * std::log(hp.upsilon0) -
         (hp.nu + 0.5 * double(n)) * std::log(tail);
}

double log_marginal(const ModelState& s, Index n, const Hyperparams& hp) {
  return log_marginal(s.R, s.s2, n, hp);
}

ModelState state_from_scratch(const Model& model, std::vector<Index> cols) {
  if (cols.empty() || cols.front() != 0)
    throw Error(Errc::InvalidQuery, "the intercept must be the first column of every model");
  const Index n = model.n(), k = static_cast<Index>(cols.size());
  MatrixXd A = MatrixXd::Zero(n + k, k);
  for (Index i = 0; i < k; ++i) {
    const Index c = cols[std::size_t(i)];
    if (c < 0 || c >= model.p()) throw Error(Errc::PositionOutOfRange, "column outside the design");
    A.col(i).head(n) = model.X().col(c);
    A(n + i, i) = 1 / std::sqrt(model.hp().upsilon0);
  }
  ModelState s;
  s.cols = std::move(cols);
  s.R = positive_diagonal(thin_r(A));
  finish(model, s);
  return s;
}

ModelState with_column(const Model& model, const ModelState& s, Index j) {
  const VectorXd c = model.cross(s.cols, j);
  ModelState out;
  out.R = r_add_col_gram(s.R, c, model.col_norm2(j) + 1 / model.hp().upsilon0);
  out.cols = s.cols;
  out.cols.push_back(j);
  const Index k = s.size();
  const double zn = (model.xty(j) - out.R.col(k).head(k).dot(s.z)) / out.R(k, k);
  out.z.resize(k + 1);
  out.z << s.z, zn;
  out.s2 = s.s2 - zn * zn;
  out.log_marginal = log_marginal(out, model.n(), model.hp());
  out.log_prior = log_model_prior(k, model.p() - 1, model.hp());
  return out;
}

ModelState without_column(const Model& model, const ModelState& s, Index j) {
  const auto it = std::find(s.cols.begin(), s.cols.end(), j);
  if (it == s.cols.end() || j == 0)
    throw Error(Errc::PositionOutOfRange, "column " + std::to_string(j) + " is not a free included column");
  const Index t = static_cast<Index>(it - s.cols.begin()) + 1;
  ModelState out;
  out.R = r_delete_col(s.R, t);
  out.cols = s.cols;
  out.cols.erase(out.cols.begin() + (t - 1));
  finish(model, out);
  return out;
}

VectorXd posterior_mean(const ModelState& s, Index p) {
  const VectorXd b = backward_substitution(s.R, s.z);
  VectorXd beta = VectorXd::Zero(p);
  for (std::size_t i = 0; i < s.cols.size(); ++i) beta(s.cols[i]) = b(Index(i));
  return beta;
}

double student_t_logpdf(double y, double loc, double scale, double df) {
  const double u = (y - loc) / scale;
  return std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * std::numbers::pi) -
         std::log(scale) - (df + 1) / 2 * std::log1p(u * u / df);
}

double log_predictive(const ModelState& s, Index n, const Hyperparams& hp,
                      const Eigen::Ref<const VectorXd>& x, double y) {
  VectorXd xg(s.size());
  for (Index i = 0; i < s.size(); ++i) xg(i) = x(s.cols[std::size_t(i)]);
  const VectorXd w = forward_substitution(s.R.transpose(), xg);
  const double nu_star = hp.nu + 0.5 * double(n);
  const double lambda_star = hp.lambda + s.s2 / 2;
  const double scale = std::sqrt(lambda_star / nu_star * (1 + w.squaredNorm()));
  return student_t_logpdf(y, w.dot(s.z), scale, 2 * nu_star);
}

}  // namespace qrkit::bayes
