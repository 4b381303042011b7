#include "qrkit/flops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <thread>

#include "qrkit/qr_update.hpp"
#include "qrkit/r_update.hpp"

namespace qrkit {

namespace {

using I = std::int64_t;

struct OpInfo {
  CostOp op;
  const char* name;
};

constexpr OpInfo kOpNames[] = {
    {CostOp::QrAddRow, "QrAddRow"},
    {CostOp::QrDelRow, "QrDelRow"},
    {CostOp::QrAddCol, "QrAddCol"},
    {CostOp::QrDelCol, "QrDelCol"},
    {CostOp::QrAddRowsBlock, "QrAddRowsBlock"},
    {CostOp::QrDelRowsBlock, "QrDelRowsBlock"},
    {CostOp::QrAddColsBlock, "QrAddColsBlock"},
    {CostOp::QrDelColsBlock, "QrDelColsBlock"},
    {CostOp::QrDelColsNonAdj, "QrDelColsNonAdj"},
    {CostOp::RAddRow, "RAddRow"},
    {CostOp::RDelRow, "RDelRow"},
    {CostOp::RAddCol, "RAddCol"},
    {CostOp::RDelCol, "RDelCol"},
    {CostOp::RAddRowsBlock, "RAddRowsBlock"},
    {CostOp::RDelRowsBlock, "RDelRowsBlock"},
    {CostOp::RAddColsBlock, "RAddColsBlock"},
    {CostOp::RDelColsBlock, "RDelColsBlock"},
    {CostOp::RDelColsNonAdj, "RDelColsNonAdj"},
};

[[noreturn]] void invalid(const CostQuery& q, const std::string& why) {
  throw Error(Errc::InvalidQuery, std::string(cost_op_name(q.op)) + ": " + why);
}

void need(bool ok, const CostQuery& q, const char* why) {
  if (!ok) invalid(q, why);
}

// Exact division of a scaled rational closed form.
I exact(I scaled, I den) {
  if (scaled % den != 0) throw Error(Errc::NumericalBreakdown, "closed form is not an integer");
  return scaled / den;
}

I sq(I x) { return x * x; }

// Non-adjacent deletion after trimming: l last kept column, q deleted
// columns before it, and the subdiagonal counts a_1..a_L of the compacted
// columns k1, k1+1, ...
struct NonAdj {
  enum Case { Single, Adjacent, TrimSingle, TrimAdjacent, GapInside, GapAtEnd, FirstAdjacent };
  Case kind = Single;
  I l = 0, q = 0, k1 = 0, k2 = 0;
  std::vector<I> a;  // a[i-1] = a_i

  I sum_a(I from, I to) const {
    I s = 0;
    for (I i = from; i <= to; ++i) s += a[i - 1];
    return s;
  }
  I sum_ia(I from, I to) const {
    I s = 0;
    for (I i = from; i <= to; ++i) s += i * a[i - 1];
    return s;
  }
};

NonAdj classify(const CostQuery& q) {
  const I p = q.p;
  const auto& ks = q.ks;
  const I m = static_cast<I>(ks.size());
  NonAdj c;
  c.k1 = ks[0];
  if (m == 1) return c;
  if (ks.back() - ks.front() == m - 1) {
    c.kind = NonAdj::Adjacent;
    return c;
  }
  std::vector<I> kept;
  for (I j = 1, t = 0; j <= p; ++j) {
    if (t < m && ks[t] == j)
      ++t;
    else
      kept.push_back(j);
  }
  c.l = kept.back();
  c.q = m - (p - c.l);
  if (c.q == 1) {
    c.kind = NonAdj::TrimSingle;
    return c;
  }
  if (ks[c.q - 1] - c.k1 == c.q - 1) {
    c.kind = NonAdj::TrimAdjacent;
    return c;
  }
  c.k2 = ks[1];
  const I len = c.l - c.q - c.k1 + 1;
  c.a.push_back(kept[c.k1 - 1] - c.k1);
  for (I i = 1; i < len; ++i) c.a.push_back(c.a.back() + kept[c.k1 - 1 + i] - kept[c.k1 - 2 + i] - 1);
  const I d = c.k2 - c.k1;
  if (d > 1 && d <= c.l - c.q - c.k1)
    c.kind = NonAdj::GapInside;
  else if (d == c.l - c.q - c.k1 + 1)
    c.kind = NonAdj::GapAtEnd;
  else
    c.kind = NonAdj::FirstAdjacent;
  return c;
}

// Closed forms exactly as tabulated.

I p_qr_add_row(I N, I p) { return 12 * p + 6 * N * p + 3 * p * p; }
I p_qr_del_row(I N, I p) { return 3 * (N - 1) * (2 * N - 1) + 3 * (p + 2) * (p - 1) + 6; }
I p_qr_add_col(I N, I p, I k) {
  if (k == p + 1) return 8 * N * N + 8 * N - (6 * N + 9) * (p + 1);
  return 3 * sq(p - k) + 9 * (p - 2 * k) + 8 * (N * N + N) - 6 * N * k + 6;
}
I p_qr_del_col(I N, I p, I k) { return k == p ? 0 : 3 * sq(p - k) + 6 * (N + 1) * (p - k); }
I p_qr_add_rows(I N, I p, I m) {
  return p * p * (2 * m + 1) + 2 * p * (2 * m * (m + 1) + N * (2 * m + 1) + 4) - 2 * m - 7;
}
I p_qr_del_rows(I N, I p, I m) {
  return exact(18 * N * m * (2 * N - 2 * m + 1) + m * (12 * m * m + 9 * m - 21) + 18 * m * p * (p + 1), 6);
}
I p_qr_add_cols(I N, I p, I m, I k) {
  if (k == p + 1)
    return exact(48 * m * N * N + 12 * m * N - 36 * m * p * (N + 1) - m * (6 * m * m + 27 * m + 21) -
                     18 * m * m * p,
                 6);
  return exact(12 * N * (4 * m * N + 4 * m - 3 * m * k) + 18 * m * (p * (p + 3) + k * (k - m - 2 * p - 5)) +
                   51 * m - 6 * m * m * m - 9 * m * m,
               6);
}
// Block column deletion with a trailing constant c (10 in the block
// closed form, 12 in the trimmed non-adjacent case).
I qr_blk(I N, I p, I m, I k, I c) {
  return exact(p * p * (12 * m + 9) + p * (6 * m * (4 * N + 3 - 4 * m - 4 * k) + 18 * (N - k) + 69) +
                   6 * N * (m * (1 - 4 * m - 4 * k) - 3 * k + 3) + m * m * (12 * m + 24 * k - 27) -
                   m * (12 * k * k - 18 * k - 45) + 9 * k * k - 69 * k + 6 * c,
               6);
}
I p_qr_del_cols(I N, I p, I m, I k) { return k == p - m + 1 ? 0 : qr_blk(N, p, m, k, 10); }

I p_r_add_row(I p) { return 3 * p * (p + 2); }
I p_r_del_row(I p) { return 3 * p * p + 3 * p - 2; }
I p_r_add_col(I N, I p) { return p * p + p * (2 * N + 1) + 2 * N; }
I p_r_del_col(I p, I k) { return k == p ? 0 : 3 * sq(p - k) + 6 * (p - k); }
I p_r_add_rows(I p, I m) { return (2 * m + 1) * p * p + p * (m + 8) - m - 7; }
I p_r_del_rows(I p, I m) { return 2 * p * p * (m + 1) + p * (6 + m) - m - 6; }
I p_r_add_cols(I N, I p, I m) {
  return exact(12 * N * m * p + 6 * m * p * p + 6 * m * m * (N + p) + m * (6 * N + 2 * m * m - 2), 6);
}
I r_blk(I p, I m, I k, I c) {
  return exact(p * p * (12 * m + 9) - p * (24 * m * m + 6 * k * (4 * m + 3) - 18 * m - 69) +
                   m * (12 * m * m - 27 * m - 57) + 6 * m * k * (4 * m + 2 * k - 3) + 9 * k * k - 69 * k + 6 * c,
               6);
}
I p_r_del_cols(I p, I m, I k) { return k == p - m + 1 ? 0 : r_blk(p, m, k, 2); }

I p_qr_nonadj(I N, I p, const NonAdj& c, I m) {
  const I l = c.l, q = c.q, k1 = c.k1, k2 = c.k2;
  switch (c.kind) {
    case NonAdj::Single: return p_qr_del_col(N, p, k1);
    case NonAdj::Adjacent: return p_qr_del_cols(N, p, m, k1);
    case NonAdj::TrimSingle: return 3 * sq(l - k1) + 6 * (N + 1) * (l - k1) + 2;
    case NonAdj::TrimAdjacent: return qr_blk(N, l, q, k1, 12);
    case NonAdj::GapInside: {
      const I S = c.sum_a(k2 - k1, l - q - k1), T = c.sum_ia(k2 - k1, l - q - k1);
      return exact(3 * sq(l - q) + 6 * (k2 - k1) * (l - q) - 6 * k1 * (k1 - k2 + 3) + 6 * (l - q - k1 + 1) -
                       k2 * (3 * k2 - 1) + 2 * N * (3 * (l + k2 - 2 * k1) + q) - 3 * q + 11 * l + 22 +
                       8 * (N + 1 + l - q) * S - 8 * T,
                   2);
    }
    case NonAdj::GapAtEnd:
      return 6 * (N + l - q) * (k2 - k1) + 12 * (k2 - k1) - 3 * sq(k2 - k1) - 3 * (N + 2 * l) + 10 * q +
             4 * N * q + 1 + 3 * (l - q - k1 + 1);
    case NonAdj::FirstAdjacent: {
      const I S = c.sum_a(1, l - q - k1), T = c.sum_ia(1, l - q - k1);
      return exact(3 * sq(l - q) + 2 * N * (q + 3 * (l - k1 + 1)) - 3 * k1 * k1 - 17 * (k1 - l) - 9 * q + 20 +
                       6 * (l - q - k1 + 1) + 8 * (N + 1 + l - q) * S - 8 * T,
                   2);
    }
  }
  return 0;
}

I p_r_nonadj(I p, const NonAdj& c, I m) {
  const I l = c.l, q = c.q, k1 = c.k1, k2 = c.k2;
  switch (c.kind) {
    case NonAdj::Single: return p_r_del_col(p, k1);
    case NonAdj::Adjacent: return p_r_del_cols(p, m, k1);
    case NonAdj::TrimSingle: return 3 * sq(l - k1) + 6 * (l - k1) + 2;
    case NonAdj::TrimAdjacent: return r_blk(l, q, k1, 4);
    case NonAdj::GapInside: {
      const I S = c.sum_a(k2 - k1, l - q - k1), T = c.sum_ia(k2 - k1, l - q - k1);
      return exact(3 * sq(l - q) + 11 * (l - q) - 6 * (k1 - k2) * (l - q) - 6 * k1 * (k1 - k2 + 3) -
                       k2 * (3 * k2 - 1) + 2 + 8 * (l - q + 1) * S - 8 * T + 6 * (l - k1) - 2 * q + 10,
                   2);
    }
    case NonAdj::GapAtEnd:
      return -3 * sq(k1 - k2) + 6 * (k2 - k1) * (l - q + 2) - 6 * (l - q) - 4 + 3 * (l - k1) - q;
    case NonAdj::FirstAdjacent: {
      const I S = c.sum_a(1, l - q - k1), T = c.sum_ia(1, l - q - k1);
      return exact(3 * sq(l - q) + 17 * (l - q - k1) - 3 * k1 * k1 + 8 * (l - q + 1) * S - 8 * T + 6 * (l - k1) -
                       2 * q + 10,
                   2);
    }
  }
  return 0;
}

// Amount by which the tabulated total misses the line-by-line tally in the
// three gap cases; identical for the QR and R variants.
I nonadj_gap_shortfall(const NonAdj& c) {
  const I l = c.l, q = c.q, k1 = c.k1, k2 = c.k2;
  I d = 0;
  switch (c.kind) {
    case NonAdj::GapInside:
      d = 6 * (k2 - k1 - 1) + 4 * c.sum_a(k2 - k1, l - q - k1) + 3 * (l - q - k2 + 1);
      break;
    case NonAdj::GapAtEnd: d = 6 * (l - q - k1); break;
    case NonAdj::FirstAdjacent: d = 4 * c.sum_a(1, l - q - k1) + 3 * (l - q - k1); break;
    default: return 0;
  }
  return (k1 - 1) * d;
}

I block_col_shortfall(I m, I k) { return m * (4 * k * k - 6 * k - 15); }

}  // namespace

const char* cost_op_name(CostOp op) noexcept {
  for (const auto& e : kOpNames)
    if (e.op == op) return e.name;
  return "?";
}

std::optional<CostOp> parse_cost_op(const std::string& name) {
  for (const auto& e : kOpNames)
    if (name == e.name) return e.op;
  return std::nullopt;
}

bool is_r_op(CostOp op) noexcept { return static_cast<int>(op) >= static_cast<int>(CostOp::RAddRow); }

CostOp qr_counterpart(CostOp op) noexcept {
  if (!is_r_op(op)) return op;
  return static_cast<CostOp>(static_cast<int>(op) - static_cast<int>(CostOp::RAddRow));
}

void validate(const CostQuery& q) {
  const I N = q.N, p = q.p, m = q.m, k = q.k;
  need(p >= 1, q, "p must be at least 1");
  const bool r = is_r_op(q.op);
  if (!r) need(N >= p, q, "N must be at least p");
  switch (q.op) {
    case CostOp::QrAddRow:
      need(k >= 1 && k <= N + 1, q, "k outside 1..N+1");
      break;
    case CostOp::QrDelRow:
      need(N - 1 >= p, q, "N-1 must be at least p");
      need(k >= 1 && k <= N, q, "k outside 1..N");
      break;
    case CostOp::QrAddCol:
      need(N >= p + 1, q, "N must be at least p+1");
      need(k >= 1 && k <= p + 1, q, "k outside 1..p+1");
      break;
    case CostOp::QrDelCol:
    case CostOp::RDelCol:
      need(k >= 1 && k <= p, q, "k outside 1..p");
      break;
    case CostOp::QrAddRowsBlock:
      need(m >= 2, q, "block operations need m >= 2");
      need(k >= 1 && k <= N + 1, q, "k outside 1..N+1");
      break;
    case CostOp::QrDelRowsBlock:
      need(m >= 2, q, "block operations need m >= 2");
      need(N - m >= p, q, "N-m must be at least p");
      need(k >= 1 && k <= N - m + 1, q, "k outside 1..N-m+1");
      break;
    case CostOp::QrAddColsBlock:
      need(m >= 2, q, "block operations need m >= 2");
      need(N >= p + m, q, "N must be at least p+m");
      need(k >= 1 && k <= p + 1, q, "k outside 1..p+1");
      break;
    case CostOp::QrDelColsBlock:
    case CostOp::RDelColsBlock:
      need(m >= 2, q, "block operations need m >= 2");
      need(m < p, q, "m must be below p");
      need(k >= 1 && k <= p - m + 1, q, "k outside 1..p-m+1");
      break;
    case CostOp::QrDelColsNonAdj:
    case CostOp::RDelColsNonAdj: {
      const I mm = static_cast<I>(q.ks.size());
      need(mm >= 1 && mm < p, q, "need 1 <= |ks| < p");
      for (I i = 0; i < mm; ++i) {
        need(q.ks[i] >= 1 && q.ks[i] <= p, q, "position outside 1..p");
        if (i > 0) need(q.ks[i] > q.ks[i - 1], q, "positions must be strictly increasing");
      }
      break;
    }
    case CostOp::RAddRow:
    case CostOp::RDelRow:
      break;
    case CostOp::RAddCol:
      need(N >= p + 1, q, "N must be at least p+1");
      break;
    case CostOp::RAddRowsBlock:
      need(m >= 2, q, "block operations need m >= 2");
      break;
    case CostOp::RDelRowsBlock:
      need(m >= 2, q, "block operations need m >= 2");
      break;
    case CostOp::RAddColsBlock:
      need(m >= 2, q, "block operations need m >= 2");
      need(N >= p + m, q, "N must be at least p+m");
      break;
  }
}

std::int64_t printed_cost(const CostQuery& q) {
  validate(q);
  const I N = q.N, p = q.p, m = q.m, k = q.k;
  switch (q.op) {
    case CostOp::QrAddRow: return p_qr_add_row(N, p);
    case CostOp::QrDelRow: return p_qr_del_row(N, p);
    case CostOp::QrAddCol: return p_qr_add_col(N, p, k);
    case CostOp::QrDelCol: return p_qr_del_col(N, p, k);
    case CostOp::QrAddRowsBlock: return p_qr_add_rows(N, p, m);
    case CostOp::QrDelRowsBlock: return p_qr_del_rows(N, p, m);
    case CostOp::QrAddColsBlock: return p_qr_add_cols(N, p, m, k);
    case CostOp::QrDelColsBlock: return p_qr_del_cols(N, p, m, k);
    case CostOp::QrDelColsNonAdj: return p_qr_nonadj(N, p, classify(q), static_cast<I>(q.ks.size()));
    case CostOp::RAddRow: return p_r_add_row(p);
    case CostOp::RDelRow: return p_r_del_row(p);
    case CostOp::RAddCol: return p_r_add_col(N, p);
    case CostOp::RDelCol: return p_r_del_col(p, k);
    case CostOp::RAddRowsBlock: return p_r_add_rows(p, m);
    case CostOp::RDelRowsBlock: return p_r_del_rows(p, m);
    case CostOp::RAddColsBlock: return p_r_add_cols(N, p, m);
    case CostOp::RDelColsBlock: return p_r_del_cols(p, m, k);
    case CostOp::RDelColsNonAdj: return p_r_nonadj(p, classify(q), static_cast<I>(q.ks.size()));
  }
  return 0;
}

std::int64_t predict_cost(const CostQuery& q) {
  const I base = printed_cost(q);
  const I N = q.N, p = q.p, m = q.m, k = q.k;
  switch (q.op) {
    // Q is rotated at every step of the sweep, the last one included
    case CostOp::QrDelRow: return base + 6 * (N - 1);
    // a reflector is also formed for the last column and its scaled tail
    // feeds the Q update
    case CostOp::QrAddRowsBlock: return base + 2 * m + 7;
    case CostOp::QrDelRowsBlock: return base - 3 * m * m;
    case CostOp::QrDelColsBlock: return k == p - m + 1 ? base : base + block_col_shortfall(m, k);
    case CostOp::QrDelColsNonAdj: {
      const NonAdj c = classify(q);
      const I mm = static_cast<I>(q.ks.size());
      if (c.kind == NonAdj::Adjacent && c.k1 != p - mm + 1) return base + block_col_shortfall(mm, c.k1);
      if (c.kind == NonAdj::TrimAdjacent) return base + block_col_shortfall(c.q, c.k1);
      return base - nonadj_gap_shortfall(c);
    }
    case CostOp::RDelColsNonAdj: return base - nonadj_gap_shortfall(classify(q));
    default: return base;
  }
}

std::optional<double> dominant_term(const CostQuery& q) {
  validate(q);
  const double N = double(q.N), p = double(q.p), m = double(q.m), k = double(q.k);
  switch (q.op) {
    case CostOp::QrAddRow: return 6 * N * p;
    case CostOp::QrDelRow: return 6 * N * N;
    case CostOp::QrAddCol: return 8 * N * N;
    case CostOp::QrDelCol: return 6 * N * (p - k);
    case CostOp::QrAddRowsBlock: return 4 * m * N * p;
    case CostOp::QrDelRowsBlock: return 6 * m * N * N;
    case CostOp::QrAddColsBlock: return 8 * m * N * N;
    case CostOp::QrDelColsBlock: return 4 * m * N * p;
    case CostOp::RAddRow: return 3 * p * p;
    case CostOp::RDelRow: return 3 * p * p;
    case CostOp::RAddCol: return 2 * N * p;
    case CostOp::RDelCol: return 3 * (p - k) * (p - k);
    case CostOp::RAddRowsBlock: return 2 * m * p * p;
    case CostOp::RDelRowsBlock: return 2 * m * p * p;
    case CostOp::RAddColsBlock: return 2 * m * N * p;
    case CostOp::RDelColsBlock: return 2 * m * p * p;
    default: return std::nullopt;
  }
}

namespace {

struct Instance {
  MatrixXd X;
  QrFactors<double> f;
};

Instance make_instance(Index N, Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Instance in;
  in.X.resize(N, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < N; ++i) in.X(i, j) = nd(rng);
  in.f = qr_factorize(in.X);
  return in;
}

MatrixXd random_block(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  MatrixXd A(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) A(i, j) = nd(rng);
  return A;
}

FlopCounter run_counted(const CostQuery& q, const Instance& in, std::uint64_t seed) {
  const Index N = q.N, p = q.p, m = q.m, k = q.k;
  FlopCounter fc;
  const auto& f = in.f;
  const MatrixXd R1 = f.R.topRows(p);
  switch (q.op) {
    case CostOp::QrAddRow: qr_add_row(f, k, VectorXd(random_block(p, 1, seed)), &fc); break;
    case CostOp::QrDelRow: qr_delete_row(f, k, &fc); break;
    case CostOp::QrAddCol: qr_add_col(f, k, VectorXd(random_block(N, 1, seed)), &fc); break;
    case CostOp::QrDelCol: qr_delete_col(f, k, &fc); break;
    case CostOp::QrAddRowsBlock: qr_add_rows_block(f, k, random_block(m, p, seed), &fc); break;
    case CostOp::QrDelRowsBlock: qr_delete_rows_block(f, k, m, &fc); break;
    case CostOp::QrAddColsBlock: qr_add_cols_block(f, k, random_block(N, m, seed), &fc); break;
    case CostOp::QrDelColsBlock: qr_delete_cols_block(f, k, m, &fc); break;
    case CostOp::QrDelColsNonAdj: qr_delete_cols_nonadjacent(f, q.ks, &fc); break;
    case CostOp::RAddRow: r_add_row(R1, VectorXd(random_block(p, 1, seed)), &fc); break;
    case CostOp::RDelRow: r_delete_row(R1, VectorXd(in.X.row(0).transpose()), &fc); break;
    case CostOp::RAddCol: r_add_col(R1, in.X, VectorXd(random_block(N, 1, seed)), &fc); break;
    case CostOp::RDelCol: r_delete_col(R1, k, &fc); break;
    case CostOp::RAddRowsBlock: r_add_rows_block(R1, random_block(m, p, seed), &fc); break;
    case CostOp::RDelRowsBlock: r_delete_rows_block(R1, MatrixXd(in.X.topRows(m)), &fc); break;
    case CostOp::RAddColsBlock: r_add_cols(R1, in.X, random_block(N, m, seed), &fc); break;
    case CostOp::RDelColsBlock: r_delete_cols_block(R1, k, m, &fc); break;
    case CostOp::RDelColsNonAdj: r_delete_cols_nonadjacent(R1, q.ks, &fc); break;
  }
  return fc;
}

// Row count of the data the R-only operations start from. Only column
// additions depend on N; the rest just need a full-rank remainder after
// deleting m rows.
Index instance_rows(const CostQuery& q) {
  if (!is_r_op(q.op) || q.op == CostOp::RAddCol || q.op == CostOp::RAddColsBlock) return q.N;
  return std::max<Index>(q.N, q.p + q.m + 2);
}

}  // namespace

FlopCounter measure_cost(const CostQuery& q, std::uint64_t seed) {
  validate(q);
  const Instance in = make_instance(instance_rows(q), q.p, seed);
  return run_counted(q, in, seed + 1);
}

std::vector<CostQuery> cost_curve_queries() {
  const CostOp add_rows[2][2] = {{CostOp::QrAddRow, CostOp::QrAddRowsBlock}, {CostOp::RAddRow, CostOp::RAddRowsBlock}};
  const CostOp del_rows[2][2] = {{CostOp::QrDelRow, CostOp::QrDelRowsBlock}, {CostOp::RDelRow, CostOp::RDelRowsBlock}};
  const CostOp add_cols[2][2] = {{CostOp::QrAddCol, CostOp::QrAddColsBlock}, {CostOp::RAddCol, CostOp::RAddColsBlock}};
  const CostOp del_cols[2][2] = {{CostOp::QrDelCol, CostOp::QrDelColsBlock}, {CostOp::RDelCol, CostOp::RDelColsBlock}};
  std::vector<std::pair<Index, Index>> sizes;
  for (Index p : {20, 50, 100, 200, 500, 800}) sizes.emplace_back(1000, p);
  for (Index N : {200, 500, 800, 1000, 2000, 5000})
    if (N != 1000) sizes.emplace_back(N, 100);
  std::vector<CostQuery> out;
  for (auto [N, p] : sizes)
    for (Index m : {1, 5, 10})
      for (int r = 0; r < 2; ++r) {
        const int b = m > 1 ? 1 : 0;
        out.push_back({add_rows[r][b], N, p, m, 1, {}});
        out.push_back({del_rows[r][b], N, p, m, 1, {}});
        out.push_back({add_cols[r][b], N, p, m, p + 1, {}});
        out.push_back({del_cols[r][b], N, p, m, (p - m) / 2 + 1, {}});
      }
  return out;
}

std::vector<CostRow> cost_grid(const std::vector<CostQuery>& queries, Index max_measured_n, int threads) {
  std::vector<CostRow> rows(queries.size());
  std::map<std::pair<Index, Index>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    rows[i].query = queries[i];
    rows[i].predicted = predict_cost(queries[i]);
    if (queries[i].N <= max_measured_n) groups[{instance_rows(queries[i]), queries[i].p}].push_back(i);
  }
  std::vector<std::pair<std::pair<Index, Index>, std::vector<std::size_t>>> work(groups.begin(), groups.end());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t g; (g = next.fetch_add(1)) < work.size();) {
      const auto& [size, idx] = work[g];
      const Instance in = make_instance(size.first, size.second, 1000003u * size.first + size.second);
      for (std::size_t i : idx) rows[i].measured = run_counted(queries[i], in, 17 + i).total();
    }
  };
  const int n = std::max(1, threads);
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

void write_cost_csv(std::ostream& os, const std::vector<CostRow>& rows) {
  os << "operation,N,p,m,k,predicted,measured,log10_predicted\n";
  for (const auto& r : rows) {
    const auto& q = r.query;
    os << cost_op_name(q.op) << ',' << q.N << ',' << q.p << ',' << q.m << ',' << q.k << ',' << r.predicted << ',';
    if (r.measured) os << *r.measured;
    os << ',';
    // zero-cost rows have no logarithm
    if (r.predicted > 0) os << std::setprecision(17) << std::log10(static_cast<double>(r.predicted));
    os << '\n';
  }
}

}  // namespace qrkit
