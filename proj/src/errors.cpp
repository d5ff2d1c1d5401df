#include "rankaudit/errors.hpp"

namespace rankaudit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptyLabeledPool: return "EmptyLabeledPool";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::CutoffOutOfRange: return "CutoffOutOfRange";
    case ErrorKind::ZeroTargetProportion: return "ZeroTargetProportion";
    case ErrorKind::DegenerateProportion: return "DegenerateProportion";
    case ErrorKind::DayMissing: return "DayMissing";
    case ErrorKind::InvalidDayPair: return "InvalidDayPair";
    case ErrorKind::EmptyPool: return "EmptyPool";
    case ErrorKind::LabelWithoutProportion: return "LabelWithoutProportion";
    case ErrorKind::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::TooFewGroups: return "TooFewGroups";
    case ErrorKind::CoefficientMissing: return "CoefficientMissing";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IntegrityError: return "IntegrityError";
    case ErrorKind::InconsistentGrid: return "InconsistentGrid";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace rankaudit
