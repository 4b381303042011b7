#include <algorithm>
#include <cmath>

#include "qrkit/bayes.hpp"

namespace qrkit::bayes {

namespace {

double log_choose(double n, double k) {
  return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace

double default_lambda(Index p) {
  if (p < 1000) return 0.5;
  if (p < 10000) return 10.0;
  return 15.0;
}

double default_upsilon0(Index n, Index p, double var_y) {
  const double a = std::pow(static_cast<double>(p), 2.1) / (100.0 * static_cast<double>(n));
  return var_y * std::max(a, std::log(static_cast<double>(n)));
}

double default_size_bound(Index n) { return std::max(40.0, std::log(static_cast<double>(n))); }

double binomial_upper_tail(Index p, double mu, double K) {
  if (mu <= 0) return 0;
  if (mu >= 1) return static_cast<double>(p) > K ? 1 : 0;
  const Index j0 = static_cast<Index>(std::floor(K)) + 1;
  if (j0 > p) return 0;
  const double lm = std::log(mu);
  const double l1m = std::log1p(-mu);
  double top = -INFINITY;
  std::vector<double> terms;
  for (Index j = std::max<Index>(j0, 0); j <= p; ++j) {
    const double t = log_choose(double(p), double(j)) + double(j) * lm + double(p - j) * l1m;
    terms.push_back(t);
    top = std::max(top, t);
  }
  double s = 0;
  for (double t : terms) s += std::exp(t - top);
  return std::min(1.0, std::exp(top) * s);
}

std::optional<double> solve_mu_theta(Index p, double K, double target) {
  if (static_cast<double>(p) <= K) return std::nullopt;
  double lo = 0, hi = 1;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (binomial_upper_tail(p, mid, K) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

BetaShape beta_from_moments(double mu, double sigma) {
  if (!(mu > 0 && mu < 1) || !(sigma > 0))
    throw Error(Errc::InfeasibleThetaPrior, "mean must lie in (0,1) and sd must be positive");
  const double c = mu * (1 - mu) / (sigma * sigma) - 1;
  const BetaShape b{mu * c, (1 - mu) * c};
  if (!(b.xi > 0 && b.phi > 0))
    throw Error(Errc::InfeasibleThetaPrior, "sd too large for mean " + std::to_string(mu));
  return b;
}

Hyperparams default_hyperparams(Index n, Index p, double var_y) {
  if (n < 2 || p < 1 || !(var_y > 0))
    throw Error(Errc::InvalidQuery, "default_hyperparams needs n >= 2, p >= 1, var_y > 0");
  Hyperparams hp;
  hp.nu = 0.5;
  hp.lambda = default_lambda(p);
  hp.upsilon0 = default_upsilon0(n, p, var_y);
  const auto mu = solve_mu_theta(p, default_size_bound(n));
  hp.mu_theta = mu.value_or(0.1);
  hp.mu_theta_fallback = !mu;
  hp.sigma_theta = 0.1;
  for (;;) {
    try {
      const auto b = beta_from_moments(hp.mu_theta, hp.sigma_theta);
      hp.theta_xi = b.xi;
      hp.theta_phi = b.phi;
      break;
    } catch (const Error&) {
      hp.sigma_theta /= 2;
      ++hp.sigma_halvings;
    }
  }
  return hp;
}

double log_prior_gamma(Index k, Index p, double theta, bool binomial_coefficient) {
  double r = double(k) * std::log(theta) + double(p - k) * std::log1p(-theta);
  if (binomial_coefficient) r += log_choose(double(p), double(k));
  return r;
}

double log_prior_gamma_beta_binomial(Index k, Index p, double xi, double phi, bool binomial_coefficient) {
  double r = log_beta(double(k) + xi, double(p - k) + phi) - log_beta(xi, phi);
  if (binomial_coefficient) r += log_choose(double(p), double(k));
  return r;
}

double log_model_prior(Index k, Index p, const Hyperparams& hp) {
  if (hp.integrate_theta)
    return log_prior_gamma_beta_binomial(k, p, hp.theta_xi, hp.theta_phi, hp.binomial_coefficient);
  return log_prior_gamma(k, p, hp.mu_theta, hp.binomial_coefficient);
}

}  // namespace qrkit::bayes
