#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qrkit/flop_counter.hpp"
#include "qrkit/linalg.hpp"

namespace qrkit {

enum class CostOp {
  QrAddRow,
  QrDelRow,
  QrAddCol,
  QrDelCol,
  QrAddRowsBlock,
  QrDelRowsBlock,
  QrAddColsBlock,
  QrDelColsBlock,
  QrDelColsNonAdj,
  RAddRow,
  RDelRow,
  RAddCol,
  RDelCol,
  RAddRowsBlock,
  RDelRowsBlock,
  RAddColsBlock,
  RDelColsBlock,
  RDelColsNonAdj,
};

inline constexpr CostOp kAllCostOps[] = {
    CostOp::QrAddRow,       CostOp::QrDelRow,       CostOp::QrAddCol,       CostOp::QrDelCol,
    CostOp::QrAddRowsBlock, CostOp::QrDelRowsBlock, CostOp::QrAddColsBlock, CostOp::QrDelColsBlock,
    CostOp::QrDelColsNonAdj, CostOp::RAddRow,       CostOp::RDelRow,        CostOp::RAddCol,
    CostOp::RDelCol,        CostOp::RAddRowsBlock,  CostOp::RDelRowsBlock,  CostOp::RAddColsBlock,
    CostOp::RDelColsBlock,  CostOp::RDelColsNonAdj,
};

const char* cost_op_name(CostOp op) noexcept;
std::optional<CostOp> parse_cost_op(const std::string& name);
bool is_r_op(CostOp op) noexcept;
// The QR operation performing the same modification as an R operation.
CostOp qr_counterpart(CostOp op) noexcept;

// Row operations ignore k for R; column appends in R are always at p+1.
// ks is used by the non-adjacent deletions only (sorted, 1-based).
struct CostQuery {
  CostOp op = CostOp::QrAddRow;
  Index N = 0;
  Index p = 0;
  Index m = 1;
  Index k = 1;
  std::vector<Index> ks;
};

// Throws InvalidQuery when the parameters fall outside the valid range of
// the operation.
void validate(const CostQuery& q);

// Exact count of the implemented algorithms.
std::int64_t predict_cost(const CostQuery& q);

// The closed forms as tabulated in the reference cost tables. They
// differ from predict_cost for QrDelRow, QrAddRowsBlock, QrDelRowsBlock,
// QrDelColsBlock and the non-adjacent deletions; see README.
std::int64_t printed_cost(const CostQuery& q);

// Leading term from the "most relevant term" column; the non-adjacent
// deletions have none and return nullopt.
std::optional<double> dominant_term(const CostQuery& q);

// Runs the operation on random data and returns its instrumented count.
FlopCounter measure_cost(const CostQuery& q, std::uint64_t seed = 1);

template <typename F, typename... Args>
auto counted(F&& f, Args&&... args) {
  FlopCounter fc;
  auto result = std::forward<F>(f)(std::forward<Args>(args)..., &fc);
  return std::pair{std::move(result), fc};
}

struct CostRow {
  CostQuery query;
  std::int64_t predicted = 0;
  std::optional<std::int64_t> measured;
};

// Cost-curve grids: N = 1000 with p in {20,50,100,200,500,800} and p = 100
// with N in {200,500,800,1000,2000,5000}, m in {1,5,10}, for row/column
// additions and deletions, QR and R. Columns are appended at the right end
// and deleted from the middle.
std::vector<CostQuery> cost_curve_queries();

// Predicted cost of every query, and the measured count where N <= max_measured_n.
std::vector<CostRow> cost_grid(const std::vector<CostQuery>& queries, Index max_measured_n = 2000,
                               int threads = 1);

// operation,N,p,m,k,predicted,measured,log10_predicted
void write_cost_csv(std::ostream& os, const std::vector<CostRow>& rows);

}  // namespace qrkit
