#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qrkit/bayes.hpp"
#include "qrkit/parallel.hpp"
#include "qrkit/r_update.hpp"

namespace qrkit::bayes {

namespace {

double log_sum_exp(const std::vector<double>& v) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : v) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double s = 0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

struct Fold {
  std::vector<Index> train;
  std::vector<Index> test;
};

MatrixXd rows_of(const MatrixXd& X, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(Index(i)) = X.row(rows[i]);
  return out;
}

VectorXd rows_of(const VectorXd& y, const std::vector<Index>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(Index(i)) = y(rows[i]);
  return out;
}

// The training-data state of a model, obtained by downdating the full-data
// factor with the held-out rows. Falls back to a fresh factorization of the
// training rows if the downdate breaks down.
ModelState training_state(const Model& full, const Model& train, const std::vector<Index>& cols,
                          const MatrixXd& Xtest) {
  const ModelState f = state_from_scratch(full, cols);
  const Index k = f.size();
  MatrixXd U(Xtest.rows(), k);
  for (Index i = 0; i < k; ++i) U.col(i) = Xtest.col(cols[std::size_t(i)]);
  ModelState s;
  s.cols = cols;
  try {
    s.R = r_delete_rows(f.R, U);
  } catch (const Error& e) {
    if (e.code() != Errc::DowndateBreakdown) throw;
    return state_from_scratch(train, cols);
  }
  VectorXd b(k);
  for (Index i = 0; i < k; ++i) b(i) = train.xty(cols[std::size_t(i)]);
  s.z = forward_substitution(s.R.transpose(), b);
  s.s2 = train.yty() - s.z.squaredNorm();
  s.log_marginal = log_marginal(s, train.n(), train.hp());
  s.log_prior = log_model_prior(k - 1, train.p() - 1, train.hp());
  return s;
}

}  // namespace

std::vector<Index> fold_assignment(Index n, Index folds, std::uint64_t seed) {
  if (folds < 2) throw Error(Errc::InvalidQuery, "at least two folds are needed");
  if (folds > n) throw Error(Errc::EmptyFold, std::to_string(folds) + " folds for " + std::to_string(n) + " rows");
  const KeyedRng rng{seed};
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::vector<std::uint64_t> key(order.size());
  for (Index i = 0; i < n; ++i) key[std::size_t(i)] = rng.bits(0, 7, std::uint64_t(i));
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return key[std::size_t(a)] != key[std::size_t(b)] ? key[std::size_t(a)] < key[std::size_t(b)] : a < b;
  });
  std::vector<Index> fold(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) fold[std::size_t(order[r])] = Index(r) % folds;
  return fold;
}

ScoreCurve log_predictive_score(const MatrixXd& X, const VectorXd& y, const Hyperparams& base,
                                const std::vector<double>& grid, const ScoreOptions& opt) {
  const Index n = X.rows();
  if (y.size() != n) throw Error(Errc::DimensionMismatch, "y must have one entry per row");
  if (grid.empty()) throw Error(Errc::InvalidQuery, "empty upsilon0 grid");
  const auto fold = fold_assignment(n, opt.folds, opt.seed);
  std::vector<Fold> folds(static_cast<std::size_t>(opt.folds));
  for (Index i = 0; i < n; ++i)
    for (Index f = 0; f < opt.folds; ++f) (f == fold[std::size_t(i)] ? folds[std::size_t(f)].test : folds[std::size_t(f)].train).push_back(i);
  for (const auto& f : folds)
    if (f.test.empty() || f.train.empty()) throw Error(Errc::EmptyFold, "a fold has no rows");

  const std::size_t G = grid.size(), K = folds.size();
  std::vector<std::vector<double>> logdens(G, std::vector<double>(std::size_t(n), 0));
  const KeyedRng root{opt.seed};

  parallel_for(G * K, opt.threads, [&](std::size_t task) {
    const std::size_t g = task / K, f = task % K;
    Hyperparams hp = base;
    hp.upsilon0 = grid[g];
    const Fold& fd = folds[f];
    const MatrixXd Xtest = rows_of(X, fd.test);
    const VectorXd ytest = rows_of(y, fd.test);
    const Model full(X, y, hp);
    const Model train(rows_of(X, fd.train), rows_of(y, fd.train), hp);

    // weighted list of models: (cols, log weight)
    std::vector<std::pair<std::vector<Index>, double>> models;
    if (opt.exact) {
      for (auto& m : enumerate_posterior(train)) models.emplace_back(std::move(m.cols), std::log(m.prob));
    } else {
      ChainOptions co;
      co.draws = opt.draws;
      co.burnin = opt.burnin;
      co.seed = root.child(task).seed;
      co.top_models = 0;
      const auto summary = run_chain(train, co);
      for (const auto& [cols, count] : summary.visits)
        models.emplace_back(cols, std::log(double(count) / double(summary.kept)));
    }
    std::vector<std::vector<double>> terms(fd.test.size());
    for (const auto& [cols, lw] : models) {
      if (!std::isfinite(lw)) continue;
      const ModelState s = training_state(full, train, cols, Xtest);
      for (std::size_t t = 0; t < fd.test.size(); ++t)
        terms[t].push_back(lw + log_predictive(s, train.n(), hp, Xtest.row(Index(t)).transpose(), ytest(Index(t))));
    }
    for (std::size_t t = 0; t < fd.test.size(); ++t) logdens[g][std::size_t(fd.test[t])] = log_sum_exp(terms[t]);
  });

  ScoreCurve out;
  out.upsilon0 = grid;
  for (std::size_t g = 0; g < G; ++g) {
    double s = 0;
    for (double v : logdens[g]) s += v;
    out.score.push_back(-s / double(n));
  }
  out.best = Index(std::min_element(out.score.begin(), out.score.end()) - out.score.begin());
  return out;
}

}  // namespace qrkit::bayes
