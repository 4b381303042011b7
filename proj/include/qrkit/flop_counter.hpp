#pragma once

#include <cstdint>

namespace qrkit {

// Arithmetic tally following the usual textbook accounting: every add, sub,
// mul, div and sqrt is one flop; sign flips, copies and permutations are free.
struct FlopCounter {
  std::int64_t adds = 0;
  std::int64_t subs = 0;
  std::int64_t muls = 0;
  std::int64_t divs = 0;
  std::int64_t sqrts = 0;

  std::int64_t total() const { return adds + subs + muls + divs + sqrts; }

  FlopCounter& operator+=(const FlopCounter& o) {
    adds += o.adds;
    subs += o.subs;
    muls += o.muls;
    divs += o.divs;
    sqrts += o.sqrts;
    return *this;
  }
};

// Null-safe charging helpers. Every kernel takes a FlopCounter* that may be
// nullptr, so the counted and uncounted paths run the same arithmetic.
namespace charge {

inline void add(FlopCounter* fc, std::int64_t n) { if (fc) fc->adds += n; }
inline void sub(FlopCounter* fc, std::int64_t n) { if (fc) fc->subs += n; }
inline void mul(FlopCounter* fc, std::int64_t n) { if (fc) fc->muls += n; }
inline void div(FlopCounter* fc, std::int64_t n) { if (fc) fc->divs += n; }
inline void sqrt(FlopCounter* fc, std::int64_t n) { if (fc) fc->sqrts += n; }

// length-n inner product: n products, n-1 sums
inline void dot(FlopCounter* fc, std::int64_t n) {
  if (n <= 0) return;
  mul(fc, n);
  add(fc, n - 1);
}

// Integer bookkeeping that the reference cost tables charge as arithmetic
// (index arithmetic in the non-adjacent deletion).
inline void index_ops(FlopCounter* fc, std::int64_t n) { add(fc, n); }

}  // namespace charge
}  // namespace qrkit
