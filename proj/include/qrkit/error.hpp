#pragma once

#include <stdexcept>
#include <string>

namespace qrkit {

enum class Errc {
  DimensionMismatch,
  PositionOutOfRange,
  DuplicatePosition,
  RankDeficient,
  SingularTriangular,
  WouldUnderdetermine,
  DowndateBreakdown,
  NearDependentColumn,
  SingularUpdate,
  InvalidQuery,
  NumericalBreakdown,
  TooManyCovariates,
  EmptyFold,
  InfeasibleThetaPrior,
  ParseError,
};

const char* errc_name(Errc e) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace qrkit
