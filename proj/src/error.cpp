#include "qrkit/error.hpp"

namespace qrkit {

const char* errc_name(Errc e) noexcept {
  switch (e) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::PositionOutOfRange: return "PositionOutOfRange";
    case Errc::DuplicatePosition: return "DuplicatePosition";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::SingularTriangular: return "SingularTriangular";
    case Errc::WouldUnderdetermine: return "WouldUnderdetermine";
    case Errc::DowndateBreakdown: return "DowndateBreakdown";
    case Errc::NearDependentColumn: return "NearDependentColumn";
    case Errc::SingularUpdate: return "SingularUpdate";
    case Errc::InvalidQuery: return "InvalidQuery";
    case Errc::NumericalBreakdown: return "NumericalBreakdown";
    case Errc::TooManyCovariates: return "TooManyCovariates";
    case Errc::EmptyFold: return "EmptyFold";
    case Errc::InfeasibleThetaPrior: return "InfeasibleThetaPrior";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace qrkit
