#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include "qrkit/csv.hpp"
#include "qrkit/flops.hpp"
#include "qrkit/keyed_rng.hpp"
#include "qrkit/qr_update.hpp"
#include "qrkit/r_update.hpp"
#include "qrkit/verify.hpp"

namespace qrkit {

namespace {

constexpr double kOracleTol = 1e-9;
constexpr double kRoundTripTol = 1e-8;
constexpr double kPerturbation = 1e-6;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  Index uniform(Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng_); }

  MatrixXd matrix(Index rows, Index cols) {
    MatrixXd A(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) A(i, j) = normal_(rng_);
    return A;
  }

  // sorted subset of 1..p with s elements
  std::vector<Index> subset(Index p, Index s) {
    std::vector<Index> all(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i) all[std::size_t(i)] = i + 1;
    std::shuffle(all.begin(), all.end(), rng_);
    std::vector<Index> out(all.begin(), all.begin() + s);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

MatrixXd reference_r(const MatrixXd& X) {
  const Eigen::HouseholderQR<MatrixXd> qr(X);
  const MatrixXd R = qr.matrixQR().topRows(X.cols()).triangularView<Eigen::Upper>();
  return positive_diagonal(R);
}

double below_diagonal(const MatrixXd& R) {
  double worst = 0;
  for (Index j = 0; j < R.cols(); ++j)
    for (Index i = j + 1; i < R.rows(); ++i) worst = std::max(worst, std::abs(R(i, j)));
  return worst;
}

double r_error(const MatrixXd& R, const MatrixXd& X) {
  if (R.rows() != X.cols() || R.cols() != X.cols()) return INFINITY;
  return std::max(relative_error(positive_diagonal(R), reference_r(X)), below_diagonal(R) / X.norm());
}

double qr_error(const QrFactors<double>& f, const MatrixXd& X) {
  const Index N = X.rows(), p = X.cols();
  if (f.Q.rows() != N || f.Q.cols() != N || f.R.rows() != N || f.R.cols() != p) return INFINITY;
  const double orth = (f.Q.transpose() * f.Q - MatrixXd::Identity(N, N)).norm() / std::sqrt(double(N));
  return std::max({orth, relative_error(f.Q * f.R, X), r_error(f.R.topRows(p), X),
                   below_diagonal(f.R) / X.norm()});
}

MatrixXd insert_rows(const MatrixXd& X, Index k, const MatrixXd& U) {
  MatrixXd out(X.rows() + U.rows(), X.cols());
  out << X.topRows(k - 1), U, X.bottomRows(X.rows() - k + 1);
  return out;
}

MatrixXd remove_rows(const MatrixXd& X, Index k, Index m) {
  MatrixXd out(X.rows() - m, X.cols());
  out << X.topRows(k - 1), X.bottomRows(X.rows() - k - m + 1);
  return out;
}

MatrixXd insert_cols(const MatrixXd& X, Index k, const MatrixXd& U) {
  MatrixXd out(X.rows(), X.cols() + U.cols());
  out << X.leftCols(k - 1), U, X.rightCols(X.cols() - k + 1);
  return out;
}

MatrixXd remove_cols(const MatrixXd& X, const std::vector<Index>& ks) {
  std::vector<Index> keep;
  for (Index j = 1; j <= X.cols(); ++j)
    if (!std::binary_search(ks.begin(), ks.end(), j)) keep.push_back(j - 1);
  MatrixXd out(X.rows(), Index(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) out.col(Index(j)) = X.col(keep[j]);
  return out;
}

std::vector<Index> block_positions(Index k, Index m) {
  std::vector<Index> ks;
  for (Index i = 0; i < m; ++i) ks.push_back(k + i);
  return ks;
}

// A random instance for one row or column operation.
struct Instance {
  Index N = 0, p = 0, m = 1, k = 1;
  std::vector<Index> ks;
  MatrixXd X, U;
};

enum class Kind { AddRows, DeleteRows, AddCols, DeleteCols, DeleteNonAdjacent };

Instance draw(Gen& g, const VerifyOptions& o, Kind kind, bool single) {
  Instance c;
  const Index mb = std::max<Index>(2, o.max_block);
  c.m = single ? 1 : g.uniform(2, mb);
  switch (kind) {
    case Kind::AddRows:
      c.p = g.uniform(1, o.max_cols);
      c.N = g.uniform(c.p, o.max_rows - c.m);
      c.k = g.uniform(1, c.N + 1);
      c.U = g.matrix(c.m, c.p);
      break;
    case Kind::DeleteRows:
      c.p = g.uniform(1, o.max_cols);
      c.N = g.uniform(c.p + c.m, o.max_rows);
      c.k = g.uniform(1, c.N - c.m + 1);
      break;
    case Kind::AddCols:
      c.p = g.uniform(1, o.max_cols - c.m);
      c.N = g.uniform(c.p + c.m, o.max_rows);
      c.k = g.uniform(1, c.p + 1);
      c.U = g.matrix(c.N, c.m);
      break;
    case Kind::DeleteCols:
      c.p = g.uniform(c.m + 1, o.max_cols);
      c.N = g.uniform(c.p, o.max_rows);
      c.k = g.uniform(1, c.p - c.m + 1);
      c.ks = block_positions(c.k, c.m);
      break;
    case Kind::DeleteNonAdjacent:
      c.p = g.uniform(2, o.max_cols);
      c.N = g.uniform(c.p, o.max_rows);
      c.m = g.uniform(1, std::min(mb, c.p - 1));
      c.ks = g.subset(c.p, c.m);
      break;
  }
  c.X = g.matrix(c.N, c.p);
  return c;
}

struct Suite {
  const VerifyOptions& opt;
  std::vector<CheckResult> out;

  bool perturbed(const std::string& name) const { return opt.perturb == name; }

  template <typename M>
  void disturb(const std::string& name, M& A) const {
    if (perturbed(name) && A.size() > 0) A(0, 0) += kPerturbation * (1 + std::abs(A(0, 0)));
  }

  Gen gen(const std::string& name) const {
    return Gen(KeyedRng{opt.seed}.bits(std::hash<std::string>{}(name), 0));
  }

  void record(const std::string& name, Index cases, double err, double tol, std::string note = {}) {
    out.push_back({name, cases, err, tol, err <= tol, std::move(note)});
  }

  // Update result vs an independent factorization of the modified matrix.
  void oracle(const std::string& name, Kind kind, bool single, bool thin) {
    Gen g = gen(name);
    double worst = 0;
    for (Index t = 0; t < opt.cases; ++t) {
      Instance c = draw(g, opt, kind, single);
      MatrixXd target;
      switch (kind) {
        case Kind::AddRows: target = insert_rows(c.X, c.k, c.U); break;
        case Kind::DeleteRows: target = remove_rows(c.X, c.k, c.m); break;
        case Kind::AddCols: target = thin ? insert_cols(c.X, c.p + 1, c.U) : insert_cols(c.X, c.k, c.U); break;
        case Kind::DeleteCols:
        case Kind::DeleteNonAdjacent: target = remove_cols(c.X, c.ks); break;
      }
      if (thin) {
        MatrixXd R = run_r(kind, c, thin_r(c.X));
        disturb(name, R);
        worst = std::max(worst, r_error(R, target));
      } else {
        QrFactors<double> f = run_qr(kind, c, qr_factorize(c.X));
        disturb(name, f.R);
        worst = std::max(worst, qr_error(f, target));
      }
    }
    record(name, opt.cases, worst, kOracleTol);
  }

  static QrFactors<double> run_qr(Kind kind, const Instance& c, const QrFactors<double>& f) {
    switch (kind) {
      case Kind::AddRows: return qr_add_rows(f, c.k, c.U);
      case Kind::DeleteRows: return qr_delete_rows(f, c.k, c.m);
      case Kind::AddCols: return qr_add_cols(f, c.k, c.U);
      case Kind::DeleteCols: return qr_delete_cols(f, c.k, c.m);
      case Kind::DeleteNonAdjacent: return qr_delete_cols_nonadjacent(f, c.ks);
    }
    return f;
  }

  static MatrixXd run_r(Kind kind, const Instance& c, const MatrixXd& R) {
    switch (kind) {
      case Kind::AddRows: return r_add_rows(R, c.U);
      case Kind::DeleteRows: return r_delete_rows(R, MatrixXd(c.X.middleRows(c.k - 1, c.m)));
      case Kind::AddCols: return r_add_cols(R, c.X, c.U);
      case Kind::DeleteCols: return r_delete_cols(R, c.k, c.m);
      case Kind::DeleteNonAdjacent: return r_delete_cols_nonadjacent(R, c.ks);
    }
    return R;
  }

  void factorize() {
    const std::string name = "qr_factorize";
    Gen g = gen(name);
    double worst = 0;
    for (Index t = 0; t < opt.cases; ++t) {
      const Index p = g.uniform(1, opt.max_cols);
      const MatrixXd X = g.matrix(g.uniform(p, opt.max_rows), p);
      auto f = qr_factorize(X);
      disturb(name, f.R);
      worst = std::max(worst, qr_error(f, X));
    }
    record(name, opt.cases, worst, kOracleTol);
  }

  // r-update result vs the leading block of the matching qr-update.
  void thin_full() {
    const std::string name = "thin_full_consistency";
    Gen g = gen(name);
    double worst = 0;
    Index cases = 0;
    for (Kind kind : {Kind::AddRows, Kind::DeleteRows, Kind::AddCols, Kind::DeleteCols, Kind::DeleteNonAdjacent}) {
      for (bool single : {true, false}) {
        if (kind == Kind::DeleteNonAdjacent && !single) continue;
        for (Index t = 0; t < opt.cases; ++t, ++cases) {
          Instance c = draw(g, opt, kind, single);
          if (kind == Kind::AddCols) c.k = c.p + 1;
          const auto f = run_qr(kind, c, qr_factorize(c.X));
          MatrixXd R = run_r(kind, c, MatrixXd(qr_factorize(c.X).R.topRows(c.p)));
          disturb(name, R);
          const MatrixXd full = f.R.topRows(f.R.cols());
          worst = std::max(worst, relative_error(positive_diagonal(R), positive_diagonal(full)));
        }
      }
    }
    record(name, cases, worst, kOracleTol);
  }

  void roundtrip_rows() {
    const std::string name = "roundtrip_rows";
    Gen g = gen(name);
    double worst = 0;
    for (Index t = 0; t < opt.cases; ++t) {
      const bool single = t % 2 == 0;
      Instance c = draw(g, opt, Kind::AddRows, single);
      const auto f0 = qr_factorize(c.X);
      auto f2 = qr_delete_rows(qr_add_rows(f0, c.k, c.U), c.k, c.m);
      MatrixXd R2 = r_delete_rows(r_add_rows(MatrixXd(f0.R.topRows(c.p)), c.U), c.U);
      disturb(name, f2.R);
      const MatrixXd R0 = positive_diagonal(MatrixXd(f0.R.topRows(c.p)));
      worst = std::max({worst, relative_error(positive_diagonal(MatrixXd(f2.R.topRows(c.p))), R0),
                        relative_error(positive_diagonal(R2), R0)});
    }
    record(name, opt.cases, worst, kRoundTripTol);
  }

  void roundtrip_cols() {
    const std::string name = "roundtrip_cols";
    Gen g = gen(name);
    double worst = 0;
    for (Index t = 0; t < opt.cases; ++t) {
      Instance c = draw(g, opt, Kind::AddCols, t % 2 == 0);
      const auto f0 = qr_factorize(c.X);
      auto f2 = qr_delete_cols(qr_add_cols(f0, c.k, c.U), c.k, c.m);
      const MatrixXd R0 = f0.R.topRows(c.p);
      MatrixXd R2 = r_delete_cols(r_add_cols(R0, c.X, c.U), c.p + 1, c.m);
      disturb(name, R2);
      worst = std::max({worst, relative_error(positive_diagonal(MatrixXd(f2.R.topRows(c.p))), positive_diagonal(R0)),
                        relative_error(positive_diagonal(R2), positive_diagonal(R0))});
    }
    record(name, opt.cases, worst, kRoundTripTol);
  }

  // Columns inserted one at a time at scattered positions, then removed as a
  // non-adjacent set.
  void roundtrip_nonadjacent() {
    const std::string name = "roundtrip_nonadjacent";
    Gen g = gen(name);
    double worst = 0;
    for (Index t = 0; t < opt.cases; ++t) {
      const Index p = g.uniform(1, opt.max_cols - 1);
      const Index m = g.uniform(1, std::min(std::max<Index>(2, opt.max_block), opt.max_cols - p));
      const Index N = g.uniform(p + m, opt.max_rows);
      const auto ks = g.subset(p + m, m);
      const MatrixXd X = g.matrix(N, p);
      const auto f0 = qr_factorize(X);
      auto f = f0;
      for (Index k : ks) f = qr_add_col(f, k, g.matrix(N, 1).col(0));
      auto f2 = qr_delete_cols_nonadjacent(f, ks);
      MatrixXd R2 = r_delete_cols_nonadjacent(MatrixXd(f.R.topRows(p + m)), ks);
      disturb(name, f2.R);
      const MatrixXd R0 = positive_diagonal(MatrixXd(f0.R.topRows(p)));
      worst = std::max({worst, relative_error(positive_diagonal(MatrixXd(f2.R.topRows(p))), R0),
                        relative_error(positive_diagonal(R2), R0)});
    }
    record(name, opt.cases, worst, kRoundTripTol);
  }

  void sherman_morrison(bool add) {
    const std::string name = add ? "gram_inverse_add" : "gram_inverse_delete";
    Gen g = gen(name);
    double worst = 0;
    for (Index t = 0; t < opt.cases; ++t) {
      const Index p = g.uniform(add ? 1 : 2, opt.max_cols - 1);
      const Index N = g.uniform(p + 4, opt.max_rows);
      const MatrixXd X = g.matrix(N, p);
      const MatrixXd B = (X.transpose() * X).inverse();
      MatrixXd got, want;
      if (add) {
        const Index k = g.uniform(1, p + 1);
        const MatrixXd x = g.matrix(N, 1);
        got = gram_inverse_add_col(B, X, k, x.col(0));
        const MatrixXd X2 = insert_cols(X, k, x);
        want = (X2.transpose() * X2).inverse();
      } else {
        const Index k = g.uniform(1, p);
        got = gram_inverse_delete_col(B, k);
        const MatrixXd X2 = remove_cols(X, {k});
        want = (X2.transpose() * X2).inverse();
      }
      disturb(name, got);
      worst = std::max(worst, relative_error(got, want));
    }
    record(name, opt.cases, worst, kOracleTol);
  }

  // Instrumented counts vs closed forms on the small grid, with k at the
  // first, middle and last valid position of each operation.
  void flop_exactness() {
    const std::string name = "flop_exactness";
    double worst = 0;
    Index cases = 0, printed_mismatch = 0;
    std::set<std::string> mismatch_ops;
    for (const auto& q : flop_grid_queries()) {
      const std::int64_t predicted = predict_cost(q);
      std::int64_t measured = measure_cost(q, opt.seed + std::uint64_t(cases)).total();
      if (perturbed(name)) measured += 1;
      worst = std::max(worst, double(std::llabs(measured - predicted)));
      if (printed_cost(q) != predicted) {
        ++printed_mismatch;
        mismatch_ops.insert(cost_op_name(q.op));
      }
      ++cases;
    }
    std::string note = "printed closed form differs at " + std::to_string(printed_mismatch) + " points";
    for (const auto& s : mismatch_ops) note += " " + s;
    record(name, cases, worst, 0, note);
  }

  void flop_zero_cost() {
    const std::string name = "flop_zero_cost";
    double worst = 0;
    Index cases = 0;
    for (Index N : {16, 32, 64})
      for (Index p : {4, 8, 12})
        for (Index m : {2, 3}) {
          for (CostOp op : {CostOp::QrDelCol, CostOp::RDelCol, CostOp::QrDelColsBlock, CostOp::RDelColsBlock}) {
            const bool block = op == CostOp::QrDelColsBlock || op == CostOp::RDelColsBlock;
            CostQuery q{op, N, p, block ? m : 1, block ? p - m + 1 : p, {}};
            std::int64_t measured = measure_cost(q, opt.seed).total();
            if (perturbed(name)) measured += 1;
            worst = std::max({worst, double(std::llabs(measured)), double(std::llabs(predict_cost(q)))});
            ++cases;
          }
        }
    record(name, cases, worst, 0);
  }

  void triangular_solve_charge() {
    const std::string name = "triangular_solve_charge";
    Gen g = gen(name);
    double worst = 0;
    Index cases = 0;
    for (Index p = 1; p <= opt.max_cols; ++p)
      for (Index r = 1; r <= 3; ++r) {
        MatrixXd U = g.matrix(p, p).triangularView<Eigen::Upper>();
        U.diagonal().array() += 4.0;
        const MatrixXd b = g.matrix(p, r);
        FlopCounter f1, f2;
        forward_substitution(U.transpose(), b, &f1);
        backward_substitution(U, b, &f2);
        std::int64_t got = f1.total();
        if (perturbed(name)) got += 1;
        worst = std::max({worst, double(std::llabs(got - r * p * p)), double(std::llabs(f2.total() - r * p * p))});
        ++cases;
      }
    record(name, cases, worst, 0);
  }

  static std::vector<CostQuery> flop_grid_queries() {
    std::vector<CostQuery> out;
    std::set<std::string> seen;
    auto add = [&](CostQuery q) {
      try {
        validate(q);
      } catch (const Error&) {
        return;
      }
      std::string key = std::string(cost_op_name(q.op)) + ":" + std::to_string(q.N) + ":" + std::to_string(q.p) +
                        ":" + std::to_string(q.m) + ":" + std::to_string(q.k);
      for (Index k : q.ks) key += "," + std::to_string(k);
      if (seen.insert(key).second) out.push_back(std::move(q));
    };
    for (Index N : {16, 32, 64})
      for (Index p : {4, 8, 12})
        for (Index m : {1, 2, 4})
          for (CostOp op : kAllCostOps) {
            Index kmax = 1;
            switch (op) {
              case CostOp::QrAddRow: kmax = N + 1; break;
              case CostOp::QrDelRow: kmax = N; break;
              case CostOp::QrAddRowsBlock: kmax = N + 1; break;
              case CostOp::QrDelRowsBlock: kmax = N - m + 1; break;
              case CostOp::QrAddCol: case CostOp::QrAddColsBlock: kmax = p + 1; break;
              case CostOp::QrDelCol: case CostOp::RDelCol: kmax = p; break;
              case CostOp::QrDelColsBlock: case CostOp::RDelColsBlock: kmax = p - m + 1; break;
              case CostOp::RAddCol: case CostOp::RAddColsBlock: kmax = p + 1; break;
              default: kmax = 1; break;
            }
            if (op == CostOp::QrDelColsNonAdj || op == CostOp::RDelColsNonAdj) {
              if (m >= p) continue;
              // spread out, packed at the front, packed at the back
              std::vector<Index> spread, front, back;
              for (Index i = 0; i < m; ++i) {
                spread.push_back(1 + i * (p - 1) / std::max<Index>(m, 1));
                front.push_back(i + 1);
                back.push_back(p - m + 1 + i);
              }
              std::sort(spread.begin(), spread.end());
              spread.erase(std::unique(spread.begin(), spread.end()), spread.end());
              for (auto ks : {spread, front, back}) add({op, N, p, Index(ks.size()), 1, ks});
              continue;
            }
            for (Index k : {Index(1), std::max<Index>(1, (kmax + 1) / 2), kmax}) add({op, N, p, m, k, {}});
          }
    return out;
  }
};

}  // namespace

const std::vector<std::string>& check_inventory() {
  static const std::vector<std::string> names{
      "qr_factorize",
      "qr_add_row",
      "qr_add_rows",
      "qr_delete_row",
      "qr_delete_rows",
      "qr_add_col",
      "qr_add_cols",
      "qr_delete_col",
      "qr_delete_cols",
      "qr_delete_cols_nonadjacent",
      "r_add_row",
      "r_add_rows",
      "r_delete_row",
      "r_delete_rows",
      "r_add_col",
      "r_add_cols",
      "r_delete_col",
      "r_delete_cols",
      "r_delete_cols_nonadjacent",
      "thin_full_consistency",
      "roundtrip_rows",
      "roundtrip_cols",
      "roundtrip_nonadjacent",
      "gram_inverse_add",
      "gram_inverse_delete",
      "flop_exactness",
      "flop_zero_cost",
      "triangular_solve_charge",
  };
  return names;
}

std::vector<CheckResult> run_checks(const VerifyOptions& opt) {
  if (opt.max_cols < 3 || opt.max_rows < opt.max_cols + std::max<Index>(2, opt.max_block) || opt.cases < 1)
    throw Error(Errc::InvalidQuery, "verification sizes too small");
  Suite s{opt, {}};
  s.factorize();
  for (bool thin : {false, true}) {
    const std::string pre = thin ? "r_" : "qr_";
    s.oracle(pre + "add_row", Kind::AddRows, true, thin);
    s.oracle(pre + "add_rows", Kind::AddRows, false, thin);
    s.oracle(pre + "delete_row", Kind::DeleteRows, true, thin);
    s.oracle(pre + "delete_rows", Kind::DeleteRows, false, thin);
    s.oracle(pre + "add_col", Kind::AddCols, true, thin);
    s.oracle(pre + "add_cols", Kind::AddCols, false, thin);
    s.oracle(pre + "delete_col", Kind::DeleteCols, true, thin);
    s.oracle(pre + "delete_cols", Kind::DeleteCols, false, thin);
    s.oracle(pre + "delete_cols_nonadjacent", Kind::DeleteNonAdjacent, true, thin);
  }
  s.thin_full();
  s.roundtrip_rows();
  s.roundtrip_cols();
  s.roundtrip_nonadjacent();
  s.sherman_morrison(true);
  s.sherman_morrison(false);
  s.flop_exactness();
  s.flop_zero_cost();
  s.triangular_solve_charge();
  return std::move(s.out);
}

void write_check_csv(std::ostream& os, const std::vector<CheckResult>& rows) {
  CsvWriter w(os);
  w.row({"name", "cases", "max_error", "tolerance", "passed", "note"});
  for (const auto& r : rows) {
    w.field(r.name).field(static_cast<long long>(r.cases)).field(r.max_error).field(r.tolerance);
    w.field(r.passed ? "true" : "false").field(r.note);
    w.end_row();
  }
}

}  // namespace qrkit
