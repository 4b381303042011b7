#include <chrono>
#include <cmath>

#include "qrkit/bayes.hpp"
#include "qrkit/parallel.hpp"

namespace qrkit::bayes {

namespace {

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  const double n = double(v.size());
  for (double x : v) r.mean += x / n;
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / (n - 1) / n);
  }
  return r;
}

}  // namespace

double sample_variance(const VectorXd& v) {
  if (v.size() < 2) return 0;
  return (v.array() - v.mean()).square().sum() / double(v.size() - 1);
}

std::vector<StudyRow> run_study(const std::vector<StudySetting>& settings, const StudyOptions& opt) {
  const std::size_t S = settings.size(), R = std::size_t(opt.reps);
  struct Rep {
    Metrics m;
    double f1_map = 0;
    double seconds = 0;
  };
  std::vector<Rep> reps(S * R);
  const KeyedRng root{opt.seed};

  parallel_for(S * R, opt.threads, [&](std::size_t task) {
    const StudySetting& st = settings[task / R];
    const KeyedRng rng = root.child(task / R).child(task % R);
    const MatrixXd X = generate_design(st.n, st.p, st.design, st.rho, rng.bits(0, 1));
    const Response resp = generate_response(X, st.p0, opt.sigma2, rng.bits(0, 2));
    Hyperparams hp = default_hyperparams(st.n, st.p, sample_variance(resp.y));
    hp.integrate_theta = opt.integrate_theta;
    hp.binomial_coefficient = opt.binomial_coefficient;
    ChainOptions co;
    co.draws = opt.draws;
    co.seed = rng.bits(0, 3);
    co.top_models = 0;
    const auto t0 = std::chrono::steady_clock::now();
    const ChainSummary c = run_chain(Model(X, resp.y, hp), co);
    Rep& r = reps[task];
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.m = metrics(c.mip, c.mpm, c.beta_bma, resp.beta);
    r.f1_map = metrics(c.mip, c.map, c.beta_bma, resp.beta).f1;
  });

  std::vector<StudyRow> out;
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<double> auc, f1, f1m, tpr, fdr, mse, sec;
    for (std::size_t r = 0; r < R; ++r) {
      const Rep& x = reps[s * R + r];
      auc.push_back(x.m.auc);
      f1.push_back(x.m.f1);
      f1m.push_back(x.f1_map);
      tpr.push_back(x.m.tpr);
      fdr.push_back(x.m.fdr);
      mse.push_back(x.m.mse);
      sec.push_back(x.seconds);
    }
    out.push_back({settings[s], mean_se(auc), mean_se(f1), mean_se(f1m), mean_se(tpr), mean_se(fdr), mean_se(mse),
                   mean_se(sec)});
  }
  return out;
}

}  // namespace qrkit::bayes
