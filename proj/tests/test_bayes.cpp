#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "bayes_oracle.hpp"
#include "qrkit/bayes.hpp"
#include "support.hpp"

using namespace qrkit;
using namespace qrkit::bayes;
using qrkit::test::dense_log_marginal;

namespace {

struct Data {
  MatrixXd X;
  VectorXd y;
};

// Intercept plus p-1 Gaussian covariates; y loads on the listed columns.
Data planted(std::uint64_t seed, Index n, Index p, const std::vector<std::pair<Index, double>>& signal,
             double noise = 1.0) {
  std::mt19937_64 rng(seed);
  Data d;
  d.X = test::random_matrix(rng, n, p);
  d.X.col(0).setOnes();
  d.y = test::random_matrix(rng, n, 1) * noise;
  d.y.array() += 1.0;
  for (auto [j, b] : signal) d.y += b * d.X.col(j);
  return d;
}

Hyperparams hp_for(const Data& d) {
  return default_hyperparams(d.X.rows(), d.X.cols(), sample_variance(d.y));
}

// Exact binomial upper tail by forward pmf recurrence in long double.
long double tail_oracle(Index p, long double mu, Index K) {
  long double pmf = std::pow(1 - mu, (long double)p), tail = 0;
  for (Index j = 0; j <= p; ++j) {
    if (j > K) tail += pmf;
    pmf *= (long double)(p - j) / (long double)(j + 1) * mu / (1 - mu);
  }
  return tail;
}

std::map<std::vector<Index>, double> enumerated_map(const std::vector<ModelProbability>& e) {
  std::map<std::vector<Index>, double> m;
  for (const auto& x : e) m[x.cols] = x.prob;
  return m;
}

}  // namespace

TEST(Hyperparams, PiecewiseLambda) {
  EXPECT_EQ(default_lambda(500), 0.5);
  EXPECT_EQ(default_lambda(999), 0.5);
  EXPECT_EQ(default_lambda(1000), 10.0);
  EXPECT_EQ(default_lambda(5000), 10.0);
  EXPECT_EQ(default_lambda(10000), 15.0);
  EXPECT_EQ(default_hyperparams(100, 5000, 1.0).lambda, 10.0);
}

TEST(Hyperparams, SlabVarianceAtP500) {
  const auto hp = default_hyperparams(100, 500, 1.0);
  const double expected = std::max(std::exp(2.1 * std::log(500.0)) / 1e4, std::log(100.0));
  EXPECT_NEAR(hp.upsilon0, expected, 1e-12 * expected);
  EXPECT_NEAR(hp.upsilon0, 46.54113916590176, 1e-12);
  EXPECT_EQ(default_hyperparams(1000, 20, 2.5).upsilon0, 2.5 * std::log(1000.0));
}

TEST(Hyperparams, BisectionHitsTailTarget) {
  for (Index p : {41, 60, 100, 500, 1000, 5000}) {
    const auto hp = default_hyperparams(200, p, 1.0);
    EXPECT_FALSE(hp.mu_theta_fallback);
    EXPECT_NEAR(double(tail_oracle(p, hp.mu_theta, 40)), 0.1, 1e-6) << "p=" << p;
    EXPECT_NEAR(binomial_upper_tail(p, hp.mu_theta, 40), double(tail_oracle(p, hp.mu_theta, 40)), 1e-12);
  }
}

TEST(Hyperparams, SizeBoundUsesLogNForHugeN) {
  EXPECT_EQ(default_size_bound(100), 40.0);
  EXPECT_NEAR(default_size_bound(Index(1) << 60), 60 * std::log(2.0), 1e-9);
}

TEST(Hyperparams, BetaMomentsMatch) {
  for (Index p : {100, 500, 2000}) {
    const auto hp = default_hyperparams(100, p, 1.0);
    const double a = hp.theta_xi, b = hp.theta_phi;
    EXPECT_NEAR(a / (a + b), hp.mu_theta, 1e-12);
    EXPECT_NEAR(std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1))), hp.sigma_theta, 1e-12);
  }
}

TEST(Hyperparams, InfeasibleSdIsHalved) {
  EXPECT_THROW(beta_from_moments(0.003, 0.1), Error);
  try {
    beta_from_moments(0.003, 0.1);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InfeasibleThetaPrior);
  }
  const auto hp = default_hyperparams(100, 20000, 1.0);
  EXPECT_GT(hp.sigma_halvings, 0);
  EXPECT_GT(hp.theta_xi, 0);
  EXPECT_GT(hp.theta_phi, 0);
  EXPECT_NEAR(hp.sigma_theta, 0.1 / std::pow(2.0, hp.sigma_halvings), 1e-15);
}

TEST(Hyperparams, FewCovariatesFallBack) {
  const auto hp = default_hyperparams(100, 20, 1.0);
  EXPECT_TRUE(hp.mu_theta_fallback);
  EXPECT_EQ(hp.mu_theta, 0.1);
  EXPECT_FALSE(solve_mu_theta(40, 40.0).has_value());
  EXPECT_THROW(default_hyperparams(1, 10, 1.0), Error);
  EXPECT_THROW(default_hyperparams(10, 10, 0.0), Error);
}

TEST(Prior, HandValues) {
  EXPECT_NEAR(log_prior_gamma(0, 7, 0.5), 7 * std::log(0.5), 1e-14);
  EXPECT_NEAR(log_prior_gamma(2, 4, 0.25), std::log(6 * 0.25 * 0.25 * 0.75 * 0.75), 1e-14);
  EXPECT_NEAR(log_prior_gamma(2, 4, 0.25, false), std::log(0.25 * 0.25 * 0.75 * 0.75), 1e-14);
}

TEST(Prior, NormalizationOverModelsAndSizes) {
  for (Index p = 1; p <= 12; ++p) {
    for (double theta : {0.1, 0.5, 0.8}) {
      double over_models = 0, over_sizes = 0;
      for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << p); ++mask)
        over_models += std::exp(log_prior_gamma(std::popcount(mask), p, theta, false));
      for (Index k = 0; k <= p; ++k) over_sizes += std::exp(log_prior_gamma(k, p, theta, true));
      EXPECT_NEAR(over_models, 1.0, 1e-12);
      EXPECT_NEAR(over_sizes, 1.0, 1e-12);
    }
  }
}

TEST(Prior, BetaBinomialMatchesQuadrature) {
  const double xi = 2.3, phi = 7.1;
  const Index p = 9;
  for (Index k = 0; k <= p; ++k) {
    // composite Simpson on θ^k (1-θ)^(p-k) Beta(θ; ξ, φ)
    const int M = 20000;
    const double lb = std::lgamma(xi) + std::lgamma(phi) - std::lgamma(xi + phi);
    auto f = [&](double t) {
      if (t <= 0 || t >= 1) return 0.0;
      return std::exp((k + xi - 1) * std::log(t) + (p - k + phi - 1) * std::log1p(-t) - lb);
    };
    double s = f(0) + f(1);
    for (int i = 1; i < M; ++i) s += (i % 2 ? 4 : 2) * f(double(i) / M);
    const double integral = s / (3.0 * M);
    EXPECT_NEAR(std::exp(log_prior_gamma_beta_binomial(k, p, xi, phi, false)), integral, 1e-9) << k;
  }
  double total = 0;
  for (std::uint64_t mask = 0; mask < (1u << p); ++mask)
    total += std::exp(log_prior_gamma_beta_binomial(std::popcount(mask), p, xi, phi, false));
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Prior, ConfiguredVariant) {
  Hyperparams hp;
  hp.theta_xi = 1.5;
  hp.theta_phi = 4;
  hp.mu_theta = 0.3;
  EXPECT_EQ(log_model_prior(3, 10, hp), log_prior_gamma_beta_binomial(3, 10, 1.5, 4, true));
  hp.integrate_theta = false;
  hp.binomial_coefficient = false;
  EXPECT_EQ(log_model_prior(3, 10, hp), log_prior_gamma(3, 10, 0.3, false));
}

TEST(LogMarginal, MatchesDenseFormulaOnTinyInstances) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 8, p = 3 + trial % 4;
    auto d = planted(100 + trial, n, p, {{1, 0.7}});
    Hyperparams hp = hp_for(d);
    hp.upsilon0 = 0.5 + trial;
    const Model model(d.X, d.y, hp);
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << (p - 1)); ++mask) {
      std::vector<Index> cols{0};
      for (Index j = 1; j < p; ++j)
        if (mask >> (j - 1) & 1) cols.push_back(j);
      const auto s = state_from_scratch(model, cols);
      const double oracle = dense_log_marginal(d.X, d.y, cols, hp);
      EXPECT_NEAR(s.log_marginal, oracle, 1e-10 * std::max(1.0, std::abs(oracle)));
      const MatrixXd Xg = test::select_cols(d.X, cols);
      const MatrixXd P = Xg.transpose() * Xg + MatrixXd::Identity(s.size(), s.size()) / hp.upsilon0;
      EXPECT_LT(relative_error(s.R.transpose() * s.R, P), 1e-8);
      EXPECT_GE(s.s2, -1e-8 * d.y.squaredNorm());
    }
  }
}

TEST(LogMarginal, InterceptOnlyCenteredResponse) {
  auto d = planted(9, 30, 4, {});
  d.y.array() -= d.y.mean();
  Hyperparams hp = hp_for(d);
  const Model model(d.X, d.y, hp);
  const auto s = state_from_scratch(model, {0});
  const double n = 30;
  // ι^T y = 0, so nothing is projected out
  EXPECT_NEAR(s.s2, d.y.squaredNorm(), 1e-10 * d.y.squaredNorm());
  const double expected = -0.5 * std::log(n + 1 / hp.upsilon0) - 0.5 * std::log(hp.upsilon0) -
                          (hp.nu + n / 2) * std::log(hp.lambda + d.y.squaredNorm() / 2);
  EXPECT_NEAR(s.log_marginal, expected, 1e-10 * std::abs(expected));
}

TEST(LogMarginal, DuplicateColumnStaysFinite) {
  auto d = planted(10, 20, 3, {{1, 1.0}});
  d.X.col(2) = d.X.col(1);
  const Model model(d.X, d.y, hp_for(d));
  const auto s = state_from_scratch(model, {0, 1, 2});
  EXPECT_TRUE(std::isfinite(s.log_marginal));
  const auto t = with_column(model, state_from_scratch(model, {0, 1}), 2);
  EXPECT_NEAR(t.log_marginal, s.log_marginal, 1e-8 * std::abs(s.log_marginal));
}

TEST(LogMarginal, NonPositiveTailThrows) {
  Hyperparams hp;
  hp.lambda = 0.5;
  const MatrixXd R = MatrixXd::Identity(2, 2);
  EXPECT_THROW(log_marginal(R, -1.0, 10, hp), Error);
}

TEST(ModelState, IncrementalMovesMatchFromScratch) {
  std::mt19937_64 rng(21);
  auto d = planted(11, 60, 15, {{2, 1.5}, {5, -1.0}});
  const Model model(d.X, d.y, hp_for(d));
  ModelState s = state_from_scratch(model, {0});
  std::vector<char> in(15, 0);
  for (int step = 0; step < 300; ++step) {
    const Index j = test::uniform_index(rng, 1, 14);
    s = in[j] ? without_column(model, s, j) : with_column(model, s, j);
    in[j] ^= 1;
    const auto fresh = state_from_scratch(model, s.cols);
    EXPECT_NEAR(s.log_marginal, fresh.log_marginal, 1e-9 * std::abs(fresh.log_marginal));
    EXPECT_NEAR(s.log_prior, fresh.log_prior, 1e-12);
    EXPECT_LT(relative_error(positive_diagonal(s.R), fresh.R), 1e-9);
  }
  EXPECT_THROW(without_column(model, s, 0), Error);
}

TEST(ModelState, PosteriorMeanSolvesRidgeSystem) {
  auto d = planted(12, 40, 6, {{1, 2.0}});
  const Hyperparams hp = hp_for(d);
  const Model model(d.X, d.y, hp);
  const std::vector<Index> cols{0, 1, 4};
  const VectorXd beta = posterior_mean(state_from_scratch(model, cols), 6);
  const MatrixXd Xg = test::select_cols(d.X, cols);
  const VectorXd ref = (Xg.transpose() * Xg + MatrixXd::Identity(3, 3) / hp.upsilon0).ldlt().solve(Xg.transpose() * d.y);
  EXPECT_NEAR(beta(0), ref(0), 1e-10);
  EXPECT_NEAR(beta(1), ref(1), 1e-10);
  EXPECT_NEAR(beta(4), ref(2), 1e-10);
  EXPECT_EQ(beta(2), 0.0);
}

TEST(Enumeration, NormalizedAndMatchesDenseOracle) {
  auto d = planted(13, 50, 9, {{1, 1.0}, {3, 0.4}});
  const Hyperparams hp = hp_for(d);
  const auto e = enumerate_posterior(d.X, d.y, hp);
  ASSERT_EQ(e.size(), 256u);
  double total = 0;
  for (const auto& m : e) total += m.prob;
  EXPECT_NEAR(total, 1.0, 1e-12);
  std::vector<std::vector<Index>> models;
  const auto probs = test::normalize_log(test::dense_log_posteriors(d.X, d.y, hp, &models));
  const auto m = enumerated_map(e);
  for (std::size_t i = 0; i < models.size(); ++i) EXPECT_NEAR(m.at(models[i]), probs[i], 1e-10);
  for (std::size_t i = 1; i < e.size(); ++i) EXPECT_GE(e[i - 1].prob, e[i].prob);
}

TEST(Enumeration, TwoModelOrthogonalDesign) {
  const Index n = 40;
  MatrixXd X(n, 2);
  X.col(0).setOnes();
  for (Index i = 0; i < n; ++i) X(i, 1) = i % 2 ? 1.0 : -1.0;
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) y(i) = 2.0 + 0.3 * X(i, 1) + std::sin(double(i));
  Hyperparams hp;
  hp.upsilon0 = 10;
  hp.binomial_coefficient = false;
  hp.theta_xi = 2;
  hp.theta_phi = 3;
  // orthogonal columns: the ridge Gram is diagonal
  const double a = n + 1 / hp.upsilon0, b = X.col(1).squaredNorm() + 1 / hp.upsilon0;
  const double s0 = y.squaredNorm() - std::pow(y.sum(), 2) / a;
  const double s1 = s0 - std::pow(X.col(1).dot(y), 2) / b;
  const double e = hp.nu + n / 2.0;
  const double log_bf = -0.5 * std::log(b) - 0.5 * std::log(hp.upsilon0) - e * std::log(hp.lambda + s1 / 2) +
                        e * std::log(hp.lambda + s0 / 2);
  const double log_prior_odds = std::log(2.0 / 3.0);  // B(3,3)/B(2,4)
  const double p1 = 1 / (1 + std::exp(-(log_bf + log_prior_odds)));
  const auto m = enumerated_map(enumerate_posterior(X, y, hp));
  EXPECT_NEAR(m.at({0, 1}), p1, 1e-12);
  EXPECT_NEAR(m.at({0}), 1 - p1, 1e-12);
}

TEST(Enumeration, TooManyCovariates) {
  const MatrixXd X = MatrixXd::Random(30, 21);
  const VectorXd y = VectorXd::Random(30);
  try {
    enumerate_posterior(X, y, Hyperparams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooManyCovariates);
  }
}

TEST(Chain, StationaryFrequenciesMatchEnumerationP6) {
  auto d = planted(14, 60, 6, {{1, 0.5}, {2, 0.25}}, 1.0);
  const Model model(d.X, d.y, hp_for(d));
  ChainOptions opt;
  opt.draws = 250000;
  opt.burnin = 50000;
  opt.seed = 5;
  const auto c = run_chain(model, opt);
  EXPECT_EQ(c.kept, 200000);
  const auto exact = enumerated_map(enumerate_posterior(model));
  for (const auto& [cols, p] : exact) {
    const auto it = c.visits.find(cols);
    const double f = it == c.visits.end() ? 0.0 : double(it->second) / double(c.kept);
    EXPECT_NEAR(f, p, 0.02);
  }
  EXPECT_LE(c.max_audit_error, 1e-8);
  EXPECT_EQ(c.audits, 250);
}

TEST(Chain, TotalVariationP10) {
  auto d = planted(15, 100, 10, {{1, 0.35}, {4, 0.3}, {7, -0.2}}, 1.0);
  const Model model(d.X, d.y, hp_for(d));
  ChainOptions opt;
  opt.draws = 250000;
  opt.burnin = 50000;
  opt.seed = 6;
  const auto c = run_chain(model, opt);
  const auto exact = enumerate_posterior(model);
  double tv = 0;
  for (const auto& m : exact) {
    const auto it = c.visits.find(m.cols);
    tv += std::abs((it == c.visits.end() ? 0.0 : double(it->second) / double(c.kept)) - m.prob);
  }
  EXPECT_LE(tv / 2, 0.05);
  // the best visited model is the enumerated argmax when visited
  if (c.visits.count(exact.front().cols)) {
    std::vector<Index> map_cols;
    for (Index j = 0; j < 10; ++j)
      if (c.map[j]) map_cols.push_back(j);
    EXPECT_EQ(map_cols, exact.front().cols);
  }
  double freq = 0;
  for (const auto& v : c.pmp_top) freq += v.frequency;
  EXPECT_LE(freq, 1.0 + 1e-12);
  for (Index j = 0; j < 10; ++j) {
    EXPECT_GE(c.mip(j), 0.0);
    EXPECT_LE(c.mip(j), 1.0);
  }
}

TEST(Chain, SeedDeterminism) {
  auto d = planted(16, 80, 30, {{3, 1.0}, {9, -1.0}});
  const Hyperparams hp = hp_for(d);
  const auto a = run_chain(d.X, d.y, hp, 5000, 1000, 42);
  const auto b = run_chain(d.X, d.y, hp, 5000, 1000, 42);
  EXPECT_EQ(a.mip, b.mip);
  EXPECT_EQ(a.visits, b.visits);
  EXPECT_EQ(a.beta_bma, b.beta_bma);
  EXPECT_EQ(a.map, b.map);
  const auto c = run_chain(d.X, d.y, hp, 5000, 1000, 43);
  EXPECT_NE(a.visits, c.visits);
}

TEST(Chain, StrongSignalIsSelected) {
  auto d = planted(17, 100, 25, {{7, 3.0}});
  const auto c = run_chain(d.X, d.y, hp_for(d), 10000, 2000, 1);
  EXPECT_GT(c.mip(7), 0.95);
  EXPECT_EQ(c.mpm[7], 1);
  EXPECT_EQ(c.mip(0), 1.0);
  EXPECT_NEAR(c.beta_mpm(7), 3.0, 0.5);
}

// Pure-noise responses with the binomial coefficient dropped from the model
// prior. With the coefficient the null model is selected less often; see
// README.
TEST(Chain, NullDataSelectsNothing) {
  int clean = 0;
  const int runs = 40;
  for (int s = 0; s < runs; ++s) {
    const MatrixXd X = generate_design(200, 20, Design::Independent, 0, 500 + s);
    std::mt19937_64 g(900 + s);
    std::normal_distribution<double> nd;
    VectorXd y(200);
    for (auto& v : y) v = nd(g);
    Hyperparams hp = default_hyperparams(200, 20, sample_variance(y));
    hp.binomial_coefficient = false;
    const auto c = run_chain(X, y, hp, 10000, 2000, std::uint64_t(s));
    bool none = true;
    for (Index j = 1; j < 20; ++j) none &= c.mip(j) < 0.5;
    clean += none;
  }
  EXPECT_GE(double(clean) / runs, 0.95);
}

TEST(Chain, ExchangeableUnderColumnPermutation) {
  auto d = planted(18, 80, 16, {{2, 0.8}, {11, -0.6}, {5, 0.3}});
  const Hyperparams hp = hp_for(d);
  std::mt19937_64 rng(4);
  std::vector<Index> perm(15);
  std::iota(perm.begin(), perm.end(), Index(1));
  std::shuffle(perm.begin(), perm.end(), rng);
  MatrixXd Xp(80, 16);
  Xp.col(0) = d.X.col(0);
  std::vector<std::uint64_t> ids{0};
  for (Index j = 1; j < 16; ++j) {
    Xp.col(j) = d.X.col(perm[j - 1]);
    ids.push_back(std::uint64_t(perm[j - 1]));
  }
  ChainOptions opt;
  opt.draws = 20000;
  opt.seed = 8;
  const auto a = run_chain(Model(d.X, d.y, hp), opt);
  const auto b = run_chain(Model(Xp, d.y, hp, ids), opt);
  for (Index j = 1; j < 16; ++j) EXPECT_EQ(b.mip(j), a.mip(perm[j - 1])) << j;
}

TEST(Chain, BadArguments) {
  auto d = planted(19, 20, 4, {});
  EXPECT_THROW(run_chain(d.X, d.y, hp_for(d), 100, 100, 1), Error);
  EXPECT_THROW(run_chain(d.X, VectorXd::Zero(5), hp_for(d), 100, 10, 1), Error);
}

TEST(Chain, StepProposesOnlyPossibleMoves) {
  auto d = planted(20, 30, 2, {{1, 1.0}});
  const Model model(d.X, d.y, hp_for(d));
  ModelState s = state_from_scratch(model, {0});
  const KeyedRng rng{3};
  for (std::uint64_t step = 0; step < 200; ++step) {
    const Index before = s.size();
    const auto r = rj_step(model, s, rng, step);
    if (r.move == Move::Swap) EXPECT_FALSE(r.proposed);
    if (r.move == Move::Birth && before == 2) EXPECT_FALSE(r.proposed);
    if (r.move == Move::Death && before == 1) EXPECT_FALSE(r.proposed);
    if (!r.accepted) EXPECT_EQ(s.size(), before);
  }
}

TEST(Predictive, StudentTMatchesEvidenceRatio) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    auto d = planted(200 + trial, 25, 5, {{1, 1.0}, {3, -0.5}});
    const Hyperparams hp = hp_for(d);
    const Model model(d.X, d.y, hp);
    const std::vector<Index> cols = trial % 2 ? std::vector<Index>{0, 1, 3} : std::vector<Index>{0, 2, 3, 4};
    const auto s = state_from_scratch(model, cols);
    const VectorXd x = test::random_matrix(rng, 5, 1);
    const double ynew = std::normal_distribution<double>(0, 2)(rng);
    EXPECT_NEAR(log_predictive(s, 25, hp, x, ynew), test::dense_log_predictive(d.X, d.y, cols, hp, x, ynew), 1e-9);
  }
}

TEST(Predictive, ScaleMixtureQuadrature) {
  // ∫ N(y; m, σ²(1+q)) IG(σ²; ν*, λ*) dσ², integrated over log σ²
  const double m = 0.7, q = 0.3, nus = 6.5, lams = 4.2, y = 2.1;
  auto integrand = [&](double t) {
    const double s2 = std::exp(t);
    const double v = s2 * (1 + q);
    const double normal = std::exp(-(y - m) * (y - m) / (2 * v)) / std::sqrt(2 * std::numbers::pi * v);
    const double ig = std::exp(nus * std::log(lams) - std::lgamma(nus) - (nus + 1) * std::log(s2) - lams / s2);
    return normal * ig * s2;
  };
  const int M = 200000;
  const double lo = -15, hi = 15, h = (hi - lo) / M;
  double s = integrand(lo) + integrand(hi);
  for (int i = 1; i < M; ++i) s += (i % 2 ? 4 : 2) * integrand(lo + i * h);
  const double quad = s * h / 3;
  const double t = std::exp(student_t_logpdf(y, m, std::sqrt(lams / nus * (1 + q)), 2 * nus));
  EXPECT_NEAR(t, quad, 1e-10);
}

TEST(Predictive, FoldsAreBalancedAndSeeded) {
  const auto f = fold_assignment(23, 5, 9);
  std::vector<int> count(5, 0);
  for (Index v : f) ++count[v];
  for (int c : count) EXPECT_TRUE(c == 4 || c == 5);
  EXPECT_EQ(f, fold_assignment(23, 5, 9));
  EXPECT_NE(f, fold_assignment(23, 5, 10));
  try {
    fold_assignment(4, 5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyFold);
  }
  EXPECT_THROW(fold_assignment(10, 1, 1), Error);
}

TEST(Predictive, ExactScoreMatchesDenseOracle) {
  auto d = planted(23, 30, 4, {{1, 0.8}});
  const Hyperparams base = hp_for(d);
  const std::vector<double> grid{0.5, 5.0, 50.0};
  ScoreOptions opt;
  opt.folds = 3;
  opt.exact = true;
  opt.seed = 4;
  opt.threads = 2;
  const auto curve = log_predictive_score(d.X, d.y, base, grid, opt);
  const auto fold = fold_assignment(30, 3, 4);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    Hyperparams hp = base;
    hp.upsilon0 = grid[g];
    double total = 0;
    for (Index k = 0; k < 3; ++k) {
      std::vector<Index> tr, te;
      for (Index i = 0; i < 30; ++i) (fold[i] == k ? te : tr).push_back(i);
      MatrixXd Xt(Index(tr.size()), 4);
      VectorXd yt(Index(tr.size()));
      for (std::size_t i = 0; i < tr.size(); ++i) {
        Xt.row(Index(i)) = d.X.row(tr[i]);
        yt(Index(i)) = d.y(tr[i]);
      }
      std::vector<std::vector<Index>> models;
      const auto post = test::normalize_log(test::dense_log_posteriors(Xt, yt, hp, &models));
      for (Index i : te) {
        double dens = 0;
        for (std::size_t m = 0; m < models.size(); ++m)
          dens += post[m] * std::exp(test::dense_log_predictive(Xt, yt, models[m], hp, d.X.row(i).transpose(), d.y(i)));
        total += std::log(dens);
      }
    }
    EXPECT_NEAR(curve.score[g], -total / 30, 1e-9);
  }
}

TEST(Predictive, ChainScoreConvergesToExact) {
  auto d = planted(24, 60, 6, {{1, 0.6}, {2, 0.3}});
  const Hyperparams base = hp_for(d);
  const std::vector<double> grid{1.0, 20.0};
  ScoreOptions opt;
  opt.folds = 4;
  opt.seed = 2;
  opt.threads = 4;
  opt.exact = true;
  const auto exact = log_predictive_score(d.X, d.y, base, grid, opt);
  opt.exact = false;
  opt.draws = 60000;
  const auto mc = log_predictive_score(d.X, d.y, base, grid, opt);
  for (std::size_t g = 0; g < grid.size(); ++g) EXPECT_NEAR(mc.score[g], exact.score[g], 0.01);
  opt.threads = 1;
  const auto serial = log_predictive_score(d.X, d.y, base, grid, opt);
  EXPECT_EQ(serial.score, mc.score);
}

// With unit noise the generated signals are strong: a larger slab variance
// only penalizes the noise covariates more, and the score flattens out
// instead of turning up. A noisier instance has a genuine interior optimum.
TEST(Predictive, CurveShapeOnGeneratedInstances) {
  const MatrixXd X = generate_design(100, 10, Design::Independent, 0, 31);
  std::vector<double> grid;
  for (int e = -4; e <= 10; ++e) grid.push_back(std::pow(10.0, e));
  ScoreOptions opt;
  opt.exact = true;
  opt.threads = 4;

  const auto strong = generate_response(X, 4, 1.0, 32);
  const auto a = log_predictive_score(X, strong.y, default_hyperparams(100, 10, sample_variance(strong.y)), grid, opt);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_LE(a.score[i], a.score[i - 1] + 1e-12);

  const auto noisy = generate_response(X, 4, 64.0, 32);
  const auto c = log_predictive_score(X, noisy.y, default_hyperparams(100, 10, sample_variance(noisy.y)), grid, opt);
  for (double s : c.score) EXPECT_TRUE(std::isfinite(s));
  EXPECT_GT(c.best, 0);
  EXPECT_LT(c.best, Index(grid.size()) - 1);
  EXPECT_EQ(std::count(c.score.begin(), c.score.end(), c.score[std::size_t(c.best)]), 1);
  EXPECT_EQ(c.upsilon0[std::size_t(c.best)], 1e4);
}

TEST(Generators, DesignCorrelations) {
  auto corr = [](const MatrixXd& X, Index a, Index b) {
    const VectorXd u = X.col(a).array() - X.col(a).mean();
    const VectorXd v = X.col(b).array() - X.col(b).mean();
    return u.dot(v) / std::sqrt(u.squaredNorm() * v.squaredNorm());
  };
  const MatrixXd I = generate_design(10000, 6, Design::Independent, 0, 1);
  const MatrixXd E = generate_design(10000, 6, Design::Equicorrelated, 0.5, 2);
  const MatrixXd D = generate_design(10000, 6, Design::Decaying, 0.5, 3);
  for (const MatrixXd* X : {&I, &E, &D}) EXPECT_TRUE(X->col(0).isOnes());
  for (Index a = 1; a < 6; ++a)
    for (Index b = a + 1; b < 6; ++b) {
      EXPECT_LT(std::abs(corr(I, a, b)), 0.1);
      EXPECT_NEAR(corr(E, a, b), 0.5, 0.05);
      EXPECT_NEAR(corr(D, a, b), std::pow(0.5, double(b - a)), 0.05);
    }
  EXPECT_NEAR(corr(D, 1, 3), 0.25, 0.05);
  EXPECT_EQ(generate_design(50, 4, Design::Decaying, 0.3, 7), generate_design(50, 4, Design::Decaying, 0.3, 7));
  EXPECT_THROW(generate_design(10, 3, Design::Equicorrelated, 1.0, 1), Error);
}

TEST(Generators, ResponseFollowsTheCoefficientRecipe) {
  const MatrixXd X = generate_design(300, 8, Design::Independent, 0, 4);
  const auto zero = generate_response(X, 0, 0.0, 5);
  EXPECT_TRUE(zero.y.isZero());
  EXPECT_TRUE(zero.beta.isZero());
  const auto r = generate_response(X, 5, 0.0, 6);
  EXPECT_LT((r.y - X * r.beta).norm(), 1e-12);
  for (Index j = 0; j < 8; ++j) {
    if (j < 5)
      EXPECT_GE(std::abs(r.beta(j)), 5 * std::log(300.0) / std::sqrt(300.0));
    else
      EXPECT_EQ(r.beta(j), 0.0);
  }
  EXPECT_THROW(generate_response(X, 8, 1.0, 1), Error);
}

TEST(Generators, OlsRecoversCoefficients) {
  const MatrixXd X = generate_design(2000, 12, Design::Equicorrelated, 0.5, 8);
  const auto r = generate_response(X, 6, 1.0, 9);
  const MatrixXd Xs = X.leftCols(6);
  const VectorXd b = Xs.colPivHouseholderQr().solve(r.y);
  const MatrixXd cov = (Xs.transpose() * Xs).inverse();
  for (Index j = 0; j < 6; ++j) EXPECT_LT(std::abs(b(j) - r.beta(j)), 5 * std::sqrt(cov(j, j)));
}

TEST(Metrics, PerfectAndTiedScores) {
  VectorXd beta(5);
  beta << 1, 2, 0, -1, 0;
  VectorXd mip(5);
  mip << 1, 0.9, 0.1, 0.8, 0.2;
  std::vector<char> mask{1, 1, 0, 1, 0};
  const auto m = metrics(mip, mask, beta, beta);
  EXPECT_EQ(m.auc, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(m.tpr, 1.0);
  EXPECT_EQ(m.fdr, 0.0);
  EXPECT_EQ(m.mse, 0.0);
  EXPECT_EQ(metrics(VectorXd::Constant(5, 0.3), mask, beta, beta).auc, 0.5);
  const auto empty = metrics(mip, std::vector<char>{1, 0, 0, 0, 0}, VectorXd::Zero(5), beta);
  EXPECT_EQ(empty.fdr, 0.0);
  EXPECT_EQ(empty.tpr, 0.0);
  EXPECT_EQ(empty.f1, 0.0);
  EXPECT_NEAR(empty.mse, 6.0 / 5, 1e-15);
}

TEST(Metrics, AucMatchesPairwiseCount) {
  std::mt19937_64 rng(30);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(12);
    std::vector<char> t(12);
    for (int i = 0; i < 12; ++i) {
      s[i] = double(test::uniform_index(rng, 0, 5)) / 5;
      t[i] = char(test::uniform_index(rng, 0, 1));
    }
    double wins = 0, pairs = 0;
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j)
        if (t[i] && !t[j]) {
          pairs += 1;
          wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    if (pairs == 0) continue;
    EXPECT_NEAR(auc(s, t), wins / pairs, 1e-15);
  }
}

TEST(Metrics, Counts) {
  VectorXd beta(6);
  beta << 1, 1, 1, 0, 0, 0;
  std::vector<char> mask{1, 1, 0, 1, 1, 0};
  const auto m = metrics(VectorXd::Zero(6), mask, VectorXd::Zero(6), beta);
  // tp = 1, fn = 1, fp = 2
  EXPECT_DOUBLE_EQ(m.tpr, 0.5);
  EXPECT_DOUBLE_EQ(m.fdr, 2.0 / 3);
  EXPECT_DOUBLE_EQ(m.f1, 2.0 / 5);
}

TEST(Study, DeterministicAcrossThreadCounts) {
  std::vector<StudySetting> s{{60, 20, 3}, {80, 30, 5}};
  StudyOptions opt;
  opt.reps = 3;
  opt.draws = 3000;
  opt.threads = 1;
  const auto a = run_study(s, opt);
  opt.threads = 4;
  const auto b = run_study(s, opt);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].auc.mean, b[i].auc.mean);
    EXPECT_EQ(a[i].mse.mean, b[i].mse.mean);
    EXPECT_EQ(a[i].f1.se, b[i].f1.se);
    EXPECT_GT(a[i].seconds.mean, 0.0);
  }
}
