#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "qrkit/keyed_rng.hpp"
#include "qrkit/linalg.hpp"

namespace qrkit::bayes {

// Conjugate linear model y | β, σ² ~ N(Xγ βγ, σ² I), βγ | σ² ~ N(0, σ² υ0 I),
// σ² ~ IG(ν, λ), with a Beta(ξ, φ) hyperprior on the inclusion probability θ.
struct Hyperparams {
  double nu = 0.5;
  double lambda = 0.5;
  double upsilon0 = 1.0;
  double theta_xi = 1.0;
  double theta_phi = 1.0;
  double mu_theta = 0.5;
  double sigma_theta = 0.1;
  int sigma_halvings = 0;
  // set when P(Bin(p, μθ) > K) = 0.1 has no root (p <= K); μθ is then 0.1
  bool mu_theta_fallback = false;
  // false fixes θ = μθ instead of integrating it out
  bool integrate_theta = true;
  bool binomial_coefficient = true;
};

double default_lambda(Index p);
double default_upsilon0(Index n, Index p, double var_y);
double default_size_bound(Index n);

// P(Bin(p, mu) > K), summed exactly in log space.
double binomial_upper_tail(Index p, double mu, double K);

// Root of P(Bin(p, mu) > K) = target by bisection; nullopt when the tail is
// identically zero (p <= K).
std::optional<double> solve_mu_theta(Index p, double K, double target = 0.1);

struct BetaShape {
  double xi;
  double phi;
};

// Beta parameters with mean mu and standard deviation sigma. Throws
// InfeasibleThetaPrior when either comes out nonpositive.
BetaShape beta_from_moments(double mu, double sigma);

Hyperparams default_hyperparams(Index n, Index p, double var_y);

// log C(p,k) θ^k (1-θ)^(p-k); the coefficient can be dropped.
double log_prior_gamma(Index k, Index p, double theta, bool binomial_coefficient = true);

// θ integrated against Beta(ξ, φ): log C(p,k) B(k+ξ, p-k+φ) / B(ξ, φ).
double log_prior_gamma_beta_binomial(Index k, Index p, double xi, double phi,
                                     bool binomial_coefficient = true);

// Prior of a model with k of the p free covariates, as configured in hp.
double log_model_prior(Index k, Index p, const Hyperparams& hp);

// Data and precomputed products shared by every model. Column 0 is the
// intercept and is always included. Covariate ids key the random stream of
// each column; they default to the column index.
class Model {
 public:
  Model(MatrixXd X, VectorXd y, Hyperparams hp, std::vector<std::uint64_t> ids = {});

  Index n() const { return X_.rows(); }
  Index p() const { return X_.cols(); }
  const MatrixXd& X() const { return X_; }
  const VectorXd& y() const { return y_; }
  const Hyperparams& hp() const { return hp_; }
  double yty() const { return yty_; }
  double xty(Index j) const { return xty_(j); }
  double col_norm2(Index j) const { return norm2_(j); }
  std::uint64_t id(Index j) const { return ids_[static_cast<std::size_t>(j)]; }

  // x_c^T x_j for each c in cols
  VectorXd cross(const std::vector<Index>& cols, Index j) const;

 private:
  MatrixXd X_;
  VectorXd y_;
  Hyperparams hp_;
  std::vector<std::uint64_t> ids_;
  double yty_ = 0;
  VectorXd xty_;
  VectorXd norm2_;
  MatrixXd gram_;  // empty unless p is small
};

// R is the triangular factor of the augmented design [Xγ; υ0^{-1/2} I] with
// columns in the order of `cols`; R^T z = Xγ^T y.
struct ModelState {
  std::vector<Index> cols;
  MatrixXd R;
  VectorXd z;
  double s2 = 0;
  double log_marginal = 0;
  double log_prior = 0;

  double log_post() const { return log_marginal + log_prior; }
  Index size() const { return static_cast<Index>(cols.size()); }
  std::vector<Index> sorted_cols() const;
};

// -½ log|R^T R| - (pγ/2) log υ0 - (ν + n/2) log(λ + S²/2).
// Throws NumericalBreakdown when λ + S²/2 <= 0.
double log_marginal(const MatrixXd& R, double s2, Index n, const Hyperparams& hp);
double log_marginal(const ModelState& s, Index n, const Hyperparams& hp);

// Factor of the augmented design built by Householder QR.
ModelState state_from_scratch(const Model& model, std::vector<Index> cols);
ModelState with_column(const Model& model, const ModelState& s, Index j);
ModelState without_column(const Model& model, const ModelState& s, Index j);

// Posterior mean of β given γ, scattered to length p.
VectorXd posterior_mean(const ModelState& s, Index p);

enum class Move { Birth, Death, Swap };

struct StepResult {
  Move move = Move::Birth;
  bool proposed = false;
  bool accepted = false;
};

// One reversible-jump Metropolis-Hastings step on the free covariates.
StepResult rj_step(const Model& model, ModelState& s, const KeyedRng& rng, std::uint64_t step);

struct ChainOptions {
  Index draws = 50000;
  Index burnin = -1;  // -1 uses 20% of draws
  std::uint64_t seed = 1;
  Index audit_every = 1000;
  double audit_tol = 1e-8;
  Index top_models = 10;
};

struct VisitedModel {
  std::vector<Index> cols;  // sorted, intercept included
  double frequency = 0;
  double log_post = 0;
};

struct ChainSummary {
  VectorXd mip;
  std::vector<char> mpm;
  std::vector<char> map;
  double map_log_post = 0;
  std::vector<VisitedModel> pmp_top;
  std::map<std::vector<Index>, Index> visits;
  VectorXd beta_bma;
  VectorXd beta_mpm;
  Index kept = 0;
  double acceptance_rate = 0;
  Index audits = 0;
  double max_audit_error = 0;
};

ChainSummary run_chain(const Model& model, const ChainOptions& opt);
ChainSummary run_chain(const MatrixXd& X, const VectorXd& y, const Hyperparams& hp, Index draws,
                       Index burnin, std::uint64_t seed);

struct ModelProbability {
  std::vector<Index> cols;
  double log_post = 0;
  double prob = 0;
};

// All 2^(p-1) models, sorted by decreasing probability. Throws
// TooManyCovariates when p > 20.
std::vector<ModelProbability> enumerate_posterior(const Model& model);
std::vector<ModelProbability> enumerate_posterior(const MatrixXd& X, const VectorXd& y,
                                                  const Hyperparams& hp);

// Predictive density of a new response at x (length p, entries outside the
// model ignored): Student-t with 2ν* degrees of freedom, location x^T β̂ and
// squared scale (λ*/ν*)(1 + x^T Σ̂ x).
double log_predictive(const ModelState& s, Index n, const Hyperparams& hp,
                      const Eigen::Ref<const VectorXd>& x, double y);

double student_t_logpdf(double y, double loc, double scale, double df);

struct ScoreOptions {
  Index folds = 5;
  Index draws = 5000;
  Index burnin = -1;
  std::uint64_t seed = 1;
  int threads = 1;
  // weight every model by its exact posterior instead of running chains
  bool exact = false;
};

struct ScoreCurve {
  std::vector<double> upsilon0;
  std::vector<double> score;
  Index best = 0;
};

// Fold assignment used by log_predictive_score: a seeded shuffle dealt
// round-robin. Throws EmptyFold when some fold would be empty.
std::vector<Index> fold_assignment(Index n, Index folds, std::uint64_t seed);

// Cross-validated -(1/n) Σ log π̂(y_i | y_-κ(i)) for each υ0 in the grid.
ScoreCurve log_predictive_score(const MatrixXd& X, const VectorXd& y, const Hyperparams& base,
                                const std::vector<double>& grid, const ScoreOptions& opt);

enum class Design { Independent, Equicorrelated, Decaying };

MatrixXd generate_design(Index n, Index p, Design structure, double rho, std::uint64_t seed);

struct Response {
  VectorXd y;
  VectorXd beta;
};

// β has p0 nonzero leading entries 5(-1)^u (log n/√n + |z|).
Response generate_response(const MatrixXd& X, Index p0, double sigma2, std::uint64_t seed);

struct Metrics {
  double auc = 0;
  double f1 = 0;
  double tpr = 0;
  double fdr = 0;
  double mse = 0;
};

// Rank-statistic AUC with tied scores counted one half.
double auc(const std::vector<double>& scores, const std::vector<char>& truth);

// Scores and masks cover covariates 2..p (the intercept is skipped); MSE
// covers the full coefficient vector.
Metrics metrics(const VectorXd& mip, const std::vector<char>& mask, const VectorXd& beta_hat,
                const VectorXd& beta_true);

struct StudySetting {
  Index n = 100;
  Index p = 100;
  Index p0 = 10;
  Design design = Design::Independent;
  double rho = 0.5;
};

struct StudyOptions {
  Index reps = 10;
  Index draws = 50000;
  double sigma2 = 1.0;
  std::uint64_t seed = 1;
  int threads = 1;
  bool integrate_theta = true;
  bool binomial_coefficient = true;
};

struct MeanSe {
  double mean = 0;
  double se = 0;
};

struct StudyRow {
  StudySetting setting;
  MeanSe auc, f1, f1_map, tpr, fdr, mse, seconds;
};

// Replications of generate_design / generate_response / run_chain with
// default hyperparameters, fanned out over `threads` workers. Every
// replication has its own seeds, so results do not depend on scheduling.
std::vector<StudyRow> run_study(const std::vector<StudySetting>& settings, const StudyOptions& opt);

double sample_variance(const VectorXd& v);

}  // namespace qrkit::bayes
