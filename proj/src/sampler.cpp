#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "qrkit/bayes.hpp"

namespace qrkit::bayes {

namespace {

enum Stream : std::uint64_t { kMove = 1, kBirth = 2, kDeath = 3, kAccept = 4 };

constexpr double kBirthProb = 0.4;
constexpr double kDeathProb = 0.4;

// The candidate with the smallest keyed uniform, so the choice follows
// covariate identity rather than column position.
Index pick(const Model& model, const std::vector<char>& in, bool included, const KeyedRng& rng,
           std::uint64_t step, std::uint64_t stream) {
  Index best = -1;
  double best_u = 2;
  for (Index j = 1; j < model.p(); ++j) {
    if (bool(in[std::size_t(j)]) != included) continue;
    const double u = rng.uniform(step, stream, model.id(j));
    if (u < best_u) {
      best_u = u;
      best = j;
    }
  }
  return best;
}

}  // namespace

StepResult rj_step(const Model& model, ModelState& s, const KeyedRng& rng, std::uint64_t step) {
  const Index pf = model.p() - 1;
  const Index k = s.size() - 1;
  StepResult r;
  const double um = rng.uniform(step, kMove);
  r.move = um < kBirthProb ? Move::Birth : um < kBirthProb + kDeathProb ? Move::Death : Move::Swap;

  std::vector<char> in(std::size_t(model.p()), 0);
  for (Index c : s.cols) in[std::size_t(c)] = 1;

  ModelState next;
  double log_q = 0;
  switch (r.move) {
    case Move::Birth: {
      if (k == pf) return r;
      next = with_column(model, s, pick(model, in, false, rng, step, kBirth));
      log_q = std::log(double(pf - k) / double(k + 1));
      break;
    }
    case Move::Death: {
      if (k == 0) return r;
      next = without_column(model, s, pick(model, in, true, rng, step, kDeath));
      log_q = std::log(double(k) / double(pf - k + 1));
      break;
    }
    case Move::Swap: {
      if (k == 0 || k == pf) return r;
      const Index out = pick(model, in, true, rng, step, kDeath);
      const Index add = pick(model, in, false, rng, step, kBirth);
      next = with_column(model, without_column(model, s, out), add);
      break;
    }
  }
  r.proposed = true;
  const double log_alpha = next.log_post() - s.log_post() + log_q;
  if (std::log(rng.uniform(step, kAccept)) < log_alpha) {
    s = std::move(next);
    r.accepted = true;
  }
  return r;
}

ChainSummary run_chain(const Model& model, const ChainOptions& opt) {
  const Index burnin = opt.burnin < 0 ? opt.draws / 5 : opt.burnin;
  if (opt.draws <= burnin) throw Error(Errc::InvalidQuery, "draws must exceed burn-in");
  const Index p = model.p();
  const KeyedRng rng{opt.seed};

  ChainSummary out;
  VectorXd counts = VectorXd::Zero(p);
  VectorXd beta_sum = VectorXd::Zero(p);
  ModelState s = state_from_scratch(model, {0});
  VectorXd beta = posterior_mean(s, p);
  std::vector<Index> best_cols = s.sorted_cols();
  double best = s.log_post();
  auto visit = out.visits.end();
  Index accepted = 0;

  for (Index step = 0; step < opt.draws; ++step) {
    const auto r = rj_step(model, s, rng, std::uint64_t(step));
    if (r.accepted) {
      ++accepted;
      beta = posterior_mean(s, p);
      visit = out.visits.end();
      if (s.log_post() > best) {
        best = s.log_post();
        best_cols = s.sorted_cols();
      }
    }
    if (opt.audit_every > 0 && (step + 1) % opt.audit_every == 0) {
      const ModelState fresh = state_from_scratch(model, s.cols);
      const double err = std::abs(fresh.log_marginal - s.log_marginal) / std::max(1.0, std::abs(fresh.log_marginal));
      out.max_audit_error = std::max(out.max_audit_error, err);
      ++out.audits;
    }
    if (step < burnin) continue;
    for (Index c : s.cols) counts(c) += 1;
    beta_sum += beta;
    if (visit == out.visits.end()) visit = out.visits.try_emplace(s.sorted_cols(), 0).first;
    ++visit->second;
  }

  out.kept = opt.draws - burnin;
  const double kept = double(out.kept);
  out.mip = counts / kept;
  out.beta_bma = beta_sum / kept;
  out.acceptance_rate = double(accepted) / double(opt.draws);
  out.mpm.assign(std::size_t(p), 0);
  std::vector<Index> mpm_cols;
  for (Index j = 0; j < p; ++j) {
    if (j == 0 || out.mip(j) >= 0.5) {
      out.mpm[std::size_t(j)] = 1;
      mpm_cols.push_back(j);
    }
  }
  out.map.assign(std::size_t(p), 0);
  for (Index c : best_cols) out.map[std::size_t(c)] = 1;
  out.map_log_post = best;
  out.beta_mpm = posterior_mean(state_from_scratch(model, mpm_cols), p);

  std::vector<std::pair<Index, const std::vector<Index>*>> ranked;
  for (const auto& [cols, n] : out.visits) ranked.emplace_back(n, &cols);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const std::size_t top = std::min<std::size_t>(ranked.size(), std::size_t(std::max<Index>(opt.top_models, 0)));
  for (std::size_t i = 0; i < top; ++i) {
    VisitedModel v;
    v.cols = *ranked[i].second;
    v.frequency = double(ranked[i].first) / kept;
    v.log_post = state_from_scratch(model, v.cols).log_post();
    out.pmp_top.push_back(std::move(v));
  }
  return out;
}

ChainSummary run_chain(const MatrixXd& X, const VectorXd& y, const Hyperparams& hp, Index draws, Index burnin,
                       std::uint64_t seed) {
  ChainOptions opt;
  opt.draws = draws;
  opt.burnin = burnin;
  opt.seed = seed;
  return run_chain(Model(X, y, hp), opt);
}

std::vector<ModelProbability> enumerate_posterior(const Model& model) {
  const Index p = model.p();
  if (p > 20) throw Error(Errc::TooManyCovariates, "enumeration is limited to p <= 20");
  const Index pf = p - 1;
  const std::uint64_t total = std::uint64_t(1) << pf;
  std::vector<ModelProbability> out;
  out.reserve(total);
  // Gray-code walk: each step adds or removes one covariate, with a fresh
  // factorization every 256 steps.
  ModelState s = state_from_scratch(model, {0});
  out.push_back({s.sorted_cols(), s.log_post(), 0});
  std::vector<char> in(std::size_t(p), 0);
  for (std::uint64_t i = 1; i < total; ++i) {
    const Index j = Index(std::countr_zero(i)) + 1;
    in[std::size_t(j)] ^= 1;
    if (i % 256 == 0) {
      std::vector<Index> cols{0};
      for (Index c = 1; c < p; ++c)
        if (in[std::size_t(c)]) cols.push_back(c);
      s = state_from_scratch(model, cols);
    } else {
      s = in[std::size_t(j)] ? with_column(model, s, j) : without_column(model, s, j);
    }
    out.push_back({s.sorted_cols(), s.log_post(), 0});
  }
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& m : out) top = std::max(top, m.log_post);
  double z = 0;
  for (const auto& m : out) z += std::exp(m.log_post - top);
  for (auto& m : out) m.prob = std::exp(m.log_post - top) / z;
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.log_post > b.log_post; });
  return out;
}

std::vector<ModelProbability> enumerate_posterior(const MatrixXd& X, const VectorXd& y, const Hyperparams& hp) {
  return enumerate_posterior(Model(X, y, hp));
}

}  // namespace qrkit::bayes
