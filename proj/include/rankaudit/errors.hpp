#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rankaudit {

enum class ErrorKind {
  InvalidArgument,
  EmptyLabeledPool,
  MalformedRow,
  UnknownLabel,
  CutoffOutOfRange,
  ZeroTargetProportion,
  DegenerateProportion,
  DayMissing,
  InvalidDayPair,
  EmptyPool,
  LabelWithoutProportion,
  RankDeficientDesign,
  NonConvergence,
  TooFewGroups,
  CoefficientMissing,
  InvalidConfig,
  ParseError,
  IntegrityError,
  InconsistentGrid,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rankaudit
