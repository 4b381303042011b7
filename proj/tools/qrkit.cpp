#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qrkit/bayes.hpp"
#include "qrkit/csv.hpp"
#include "qrkit/flops.hpp"
#include "qrkit/verify.hpp"

using namespace qrkit;
using json = nlohmann::json;

namespace {

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(Errc::ParseError, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

json load_config(const std::string& path, const std::set<std::string>& allowed) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(Errc::ParseError, path + ": top level must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw Error(Errc::ParseError, path + ": unknown key '" + key + "'");
  return j;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, "config key '" + key + "': " + e.what());
  }
}

int default_threads() {
  if (const char* env = std::getenv("QRKIT_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return 1;
}

bayes::Design parse_design(const std::string& s) {
  if (s == "independent") return bayes::Design::Independent;
  if (s == "equicorrelated") return bayes::Design::Equicorrelated;
  if (s == "decaying") return bayes::Design::Decaying;
  throw Error(Errc::ParseError, "unknown design '" + s + "'");
}

const char* design_name(bayes::Design d) {
  switch (d) {
    case bayes::Design::Independent: return "independent";
    case bayes::Design::Equicorrelated: return "equicorrelated";
    case bayes::Design::Decaying: return "decaying";
  }
  return "?";
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, "bad number '" + item + "' in list");
    }
  }
  if (out.empty()) throw Error(Errc::ParseError, "empty list");
  return out;
}

// ---- verify

struct VerifyArgs {
  VerifyOptions opt;
  bool list = false;
  std::string out;
};

int cmd_verify(const VerifyArgs& a) {
  Output o(a.out);
  if (a.list) {
    for (const auto& n : check_inventory()) o.stream() << n << '\n';
    return 0;
  }
  if (!a.opt.perturb.empty()) {
    const auto& inv = check_inventory();
    if (std::find(inv.begin(), inv.end(), a.opt.perturb) == inv.end())
      throw Error(Errc::InvalidQuery, "no check named '" + a.opt.perturb + "'");
  }
  const auto rows = run_checks(a.opt);
  write_check_csv(o.stream(), rows);
  bool ok = true;
  for (const auto& r : rows) {
    if (!r.passed) std::cerr << "FAIL " << r.name << " max_error=" << r.max_error << " tol=" << r.tolerance << '\n';
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

// ---- costs

struct CostsArgs {
  std::string config, out;
  Index max_measured_n = 2000;
  int threads = 1;
};

int cmd_costs(const CostsArgs& a) {
  const json cfg = load_config(a.config, {"queries", "max_measured_n"});
  std::vector<CostQuery> queries;
  if (cfg.contains("queries")) {
    for (const auto& q : cfg.at("queries")) {
      const auto op = parse_cost_op(get_or<std::string>(q, "op", ""));
      if (!op) throw Error(Errc::ParseError, "unknown operation in query " + q.dump());
      CostQuery c{*op, get_or<Index>(q, "N", 0), get_or<Index>(q, "p", 0), get_or<Index>(q, "m", 1),
                  get_or<Index>(q, "k", 1), get_or<std::vector<Index>>(q, "ks", {})};
      validate(c);
      queries.push_back(std::move(c));
    }
  } else {
    queries = cost_curve_queries();
  }
  const Index max_n = get_or<Index>(cfg, "max_measured_n", a.max_measured_n);
  Output o(a.out);
  write_cost_csv(o.stream(), cost_grid(queries, max_n, a.threads));
  return 0;
}

// ---- simulate

struct SimulateArgs {
  std::string config, out, data_out, truth_out;
  std::uint64_t seed = 1;
  int threads = 1;
  Index reps = 10, draws = 50000;
  bool seed_set = false, reps_set = false, draws_set = false;
  // single synthetic dataset
  Index n = 100, p = 20, p0 = 5;
  double sigma2 = 1.0, rho = 0.5;
  std::string design = "independent";
};

std::vector<bayes::StudySetting> desk_grid() {
  std::vector<bayes::StudySetting> out;
  for (Index p : {100, 1000})
    for (Index p0 : {10, 20})
      for (Index n : {100, 500}) out.push_back({n, p, p0, bayes::Design::Independent, 0.5});
  return out;
}

void write_mean_se(CsvWriter& w, const bayes::MeanSe& v) { w.field(v.mean).field(v.se); }

int write_dataset(const SimulateArgs& a) {
  const KeyedRng rng{a.seed};
  const MatrixXd X = bayes::generate_design(a.n, a.p, parse_design(a.design), a.rho, rng.bits(0, 1));
  const auto r = bayes::generate_response(X, a.p0, a.sigma2, rng.bits(0, 2));
  Output o(a.data_out);
  CsvWriter w(o.stream());
  w.field("y");
  for (Index j = 1; j < a.p; ++j) w.field("x" + std::to_string(j));
  w.end_row();
  for (Index i = 0; i < a.n; ++i) {
    w.field(r.y(i));
    for (Index j = 1; j < a.p; ++j) w.field(X(i, j));
    w.end_row();
  }
  if (!a.truth_out.empty()) {
    Output t(a.truth_out);
    CsvWriter tw(t.stream());
    tw.row({"covariate", "beta"});
    for (Index j = 0; j < a.p; ++j) tw.field(j == 0 ? std::string("intercept") : "x" + std::to_string(j)).field(r.beta(j)).end_row();
  }
  return 0;
}

int cmd_simulate(const SimulateArgs& a) {
  if (!a.data_out.empty()) return write_dataset(a);
  const json cfg = load_config(
      a.config, {"settings", "reps", "draws", "sigma2", "seed", "integrate_theta", "binomial_coefficient"});
  std::vector<bayes::StudySetting> settings;
  if (cfg.contains("settings")) {
    for (const auto& s : cfg.at("settings"))
      settings.push_back({get_or<Index>(s, "n", 100), get_or<Index>(s, "p", 100), get_or<Index>(s, "p0", 10),
                          parse_design(get_or<std::string>(s, "design", "independent")), get_or<double>(s, "rho", 0.5)});
  } else {
    settings = desk_grid();
  }
  bayes::StudyOptions so;
  so.reps = a.reps_set ? a.reps : get_or<Index>(cfg, "reps", a.reps);
  so.draws = a.draws_set ? a.draws : get_or<Index>(cfg, "draws", a.draws);
  so.seed = a.seed_set ? a.seed : get_or<std::uint64_t>(cfg, "seed", a.seed);
  so.sigma2 = get_or<double>(cfg, "sigma2", 1.0);
  so.integrate_theta = get_or<bool>(cfg, "integrate_theta", true);
  so.binomial_coefficient = get_or<bool>(cfg, "binomial_coefficient", true);
  so.threads = a.threads;
  if (so.reps < 1 || so.draws < 1) throw Error(Errc::InvalidQuery, "reps and draws must be positive");

  const auto rows = bayes::run_study(settings, so);
  Output o(a.out);
  CsvWriter w(o.stream());
  w.row({"n", "p", "p0", "design", "rho", "reps", "auc_mean", "auc_se", "f1_mean", "f1_se", "f1_map_mean",
         "f1_map_se", "tpr_mean", "tpr_se", "fdr_mean", "fdr_se", "mse_mean", "mse_se", "seconds_mean",
         "seconds_se"});
  for (const auto& r : rows) {
    w.field(static_cast<long long>(r.setting.n)).field(static_cast<long long>(r.setting.p));
    w.field(static_cast<long long>(r.setting.p0)).field(design_name(r.setting.design)).field(r.setting.rho);
    w.field(static_cast<long long>(so.reps));
    for (const auto* v : {&r.auc, &r.f1, &r.f1_map, &r.tpr, &r.fdr, &r.mse, &r.seconds}) write_mean_se(w, *v);
    w.end_row();
  }
  return 0;
}

// ---- select

struct SelectArgs {
  std::string data, config, out, pmp_out;
  std::uint64_t seed = 1;
  Index draws = 50000;
  bool seed_set = false, draws_set = false;
  bool enumerate = false, add_intercept = false;
  std::string upsilon_grid;
  int threads = 1;
};

std::string model_label(const std::vector<Index>& cols, const std::vector<std::string>& names) {
  std::string s;
  for (Index c : cols) {
    if (!s.empty()) s += '+';
    s += names[std::size_t(c)];
  }
  return s;
}

int cmd_select(const SelectArgs& a) {
  const json cfg = load_config(a.config, {"nu", "lambda", "upsilon0", "mu_theta", "sigma_theta", "integrate_theta",
                                          "binomial_coefficient", "draws", "burnin", "seed", "top_models",
                                          "audit_every", "upsilon_grid", "folds", "cv_draws", "add_intercept"});
  const CsvTable t = read_csv_file(a.data);
  if (t.data.cols() < 2) throw Error(Errc::DimensionMismatch, "need y and at least one covariate column");
  const bool intercept = a.add_intercept || get_or<bool>(cfg, "add_intercept", false);
  const Index n = t.data.rows(), q = t.data.cols() - 1;
  const VectorXd y = t.data.col(0);
  MatrixXd X(n, q + (intercept ? 1 : 0));
  std::vector<std::string> names;
  if (intercept) {
    X.col(0).setOnes();
    names.push_back("intercept");
  }
  X.rightCols(q) = t.data.rightCols(q);
  for (Index j = 1; j <= q; ++j) names.push_back(t.header[std::size_t(j)]);
  const Index p = X.cols();

  bayes::Hyperparams hp = bayes::default_hyperparams(n, p, bayes::sample_variance(y));
  hp.nu = get_or<double>(cfg, "nu", hp.nu);
  hp.lambda = get_or<double>(cfg, "lambda", hp.lambda);
  hp.upsilon0 = get_or<double>(cfg, "upsilon0", hp.upsilon0);
  if (cfg.contains("mu_theta") || cfg.contains("sigma_theta")) {
    hp.mu_theta = get_or<double>(cfg, "mu_theta", hp.mu_theta);
    hp.sigma_theta = get_or<double>(cfg, "sigma_theta", hp.sigma_theta);
    const auto shape = bayes::beta_from_moments(hp.mu_theta, hp.sigma_theta);
    hp.theta_xi = shape.xi;
    hp.theta_phi = shape.phi;
  }
  hp.integrate_theta = get_or<bool>(cfg, "integrate_theta", hp.integrate_theta);
  hp.binomial_coefficient = get_or<bool>(cfg, "binomial_coefficient", hp.binomial_coefficient);

  bayes::ChainOptions co;
  co.draws = a.draws_set ? a.draws : get_or<Index>(cfg, "draws", a.draws);
  co.burnin = get_or<Index>(cfg, "burnin", -1);
  co.seed = a.seed_set ? a.seed : get_or<std::uint64_t>(cfg, "seed", a.seed);
  co.top_models = get_or<Index>(cfg, "top_models", 10);
  co.audit_every = get_or<Index>(cfg, "audit_every", co.audit_every);

  std::vector<double> grid =
      a.upsilon_grid.empty() ? get_or<std::vector<double>>(cfg, "upsilon_grid", {}) : parse_list(a.upsilon_grid);
  if (!grid.empty()) {
    bayes::ScoreOptions so;
    so.folds = get_or<Index>(cfg, "folds", 5);
    so.draws = get_or<Index>(cfg, "cv_draws", 5000);
    so.seed = co.seed;
    so.threads = a.threads;
    const auto curve = bayes::log_predictive_score(X, y, hp, grid, so);
    for (std::size_t i = 0; i < grid.size(); ++i)
      std::cerr << "upsilon0=" << format_double(curve.upsilon0[i]) << " score=" << format_double(curve.score[i])
                << '\n';
    hp.upsilon0 = curve.upsilon0[std::size_t(curve.best)];
  }

  const bayes::Model model(X, y, hp);
  const auto chain = bayes::run_chain(model, co);
  std::cerr << "n=" << n << " p=" << p << " upsilon0=" << format_double(hp.upsilon0)
            << " mu_theta=" << format_double(hp.mu_theta) << " acceptance=" << chain.acceptance_rate
            << " kept=" << chain.kept << " max_audit_error=" << chain.max_audit_error << '\n';

  {
    Output o(a.out);
    CsvWriter w(o.stream());
    w.row({"covariate", "mip", "mpm", "map", "beta_bma", "beta_mpm"});
    for (Index j = 0; j < p; ++j) {
      w.field(names[std::size_t(j)]).field(chain.mip(j));
      w.field(static_cast<long long>(chain.mpm[std::size_t(j)])).field(static_cast<long long>(chain.map[std::size_t(j)]));
      w.field(chain.beta_bma(j)).field(chain.beta_mpm(j)).end_row();
    }
  }

  if (!a.pmp_out.empty() || a.enumerate) {
    std::map<std::vector<Index>, double> exact;
    std::vector<std::vector<Index>> order;
    for (const auto& m : chain.pmp_top) order.push_back(m.cols);
    if (a.enumerate) {
      const auto all = bayes::enumerate_posterior(model);
      for (const auto& m : all) exact[m.cols] = m.prob;
      for (std::size_t i = 0; i < all.size() && i < std::size_t(co.top_models); ++i)
        if (std::find(order.begin(), order.end(), all[i].cols) == order.end()) order.push_back(all[i].cols);
    }
    Output o(a.pmp_out);
    CsvWriter w(o.stream());
    std::vector<std::string> header{"rank", "model", "size", "frequency", "log_post"};
    if (a.enumerate) header.push_back("exact");
    w.row(header);
    Index rank = 0;
    for (const auto& cols : order) {
      const auto it = chain.visits.find(cols);
      const double freq = it == chain.visits.end() ? 0.0 : double(it->second) / double(chain.kept);
      const auto state = bayes::state_from_scratch(model, cols);
      w.field(static_cast<long long>(++rank)).field(model_label(cols, names));
      w.field(static_cast<long long>(cols.size())).field(freq).field(state.log_post());
      if (a.enumerate) w.field(exact.at(cols));
      w.end_row();
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QR and R factor updating, FLOP cost model and Bayesian variable selection"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = default_threads();
  app.add_option("--threads", threads, "worker threads (default: QRKIT_THREADS or 1)")->check(CLI::PositiveNumber);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "oracle, roundtrip and FLOP-exactness checks; CSV report");
  verify->add_option("--seed", va.opt.seed);
  verify->add_option("--cases", va.opt.cases, "random cases per check")->check(CLI::PositiveNumber);
  verify->add_option("--max-rows", va.opt.max_rows);
  verify->add_option("--max-cols", va.opt.max_cols);
  verify->add_option("--max-block", va.opt.max_block);
  verify->add_option("--perturb", va.opt.perturb, "corrupt the result of the named check");
  verify->add_flag("--list", va.list, "print the check inventory and exit");
  verify->add_option("--out", va.out);

  CostsArgs ca;
  auto* costs = app.add_subcommand("costs", "predicted and measured FLOP counts over the cost-curve grids");
  costs->add_option("--config", ca.config, "JSON with optional 'queries' and 'max_measured_n'");
  costs->add_option("--max-measured-n", ca.max_measured_n, "measure counts only up to this N");
  costs->add_option("--out", ca.out);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "replicated simulation study, or one synthetic dataset");
  sim->add_option("--config", sa.config, "JSON with 'settings', 'reps', 'draws', 'sigma2', 'seed', ...");
  auto* sim_seed = sim->add_option("--seed", sa.seed);
  auto* sim_reps = sim->add_option("--reps", sa.reps);
  auto* sim_draws = sim->add_option("--draws", sa.draws);
  sim->add_option("--out", sa.out);
  sim->add_option("--data-out", sa.data_out, "write one dataset (y first, then covariates) instead");
  sim->add_option("--truth-out", sa.truth_out, "with --data-out: write the true coefficients");
  sim->add_option("--n", sa.n);
  sim->add_option("--p", sa.p, "columns including the intercept");
  sim->add_option("--p0", sa.p0, "nonzero coefficients including the intercept");
  sim->add_option("--sigma2", sa.sigma2);
  sim->add_option("--design", sa.design)->check(CLI::IsMember({"independent", "equicorrelated", "decaying"}));
  sim->add_option("--rho", sa.rho);

  SelectArgs sel;
  auto* select = app.add_subcommand("select", "variable selection on a CSV dataset (y in the first column)");
  select->add_option("data", sel.data, "CSV file with a header line")->required();
  select->add_option("--config", sel.config, "JSON hyperparameters and chain settings");
  auto* sel_seed = select->add_option("--seed", sel.seed);
  auto* sel_draws = select->add_option("--draws", sel.draws);
  select->add_flag("--add-intercept", sel.add_intercept, "prepend a column of ones");
  select->add_flag("--enumerate", sel.enumerate, "add exact posterior probabilities to the model table");
  select->add_option("--upsilon-grid", sel.upsilon_grid, "comma-separated slab variances tuned by cross-validation");
  select->add_option("--out", sel.out, "inclusion table");
  select->add_option("--pmp-out", sel.pmp_out, "model table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) return cmd_verify(va);
    if (*costs) {
      ca.threads = threads;
      return cmd_costs(ca);
    }
    if (*sim) {
      sa.threads = threads;
      sa.seed_set = bool(*sim_seed);
      sa.reps_set = bool(*sim_reps);
      sa.draws_set = bool(*sim_draws);
      return cmd_simulate(sa);
    }
    if (*select) {
      sel.threads = threads;
      sel.seed_set = bool(*sel_seed);
      sel.draws_set = bool(*sel_draws);
      return cmd_select(sel);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
