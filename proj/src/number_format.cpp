#include "rankaudit/number_format.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "rankaudit/errors.hpp"

namespace rankaudit {

std::string format_real(double value) {
  if (value == 0.0) return "0";
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.10g", value);
  return buffer;
}

std::string format_cell(const MetricCell& cell) {
  switch (cell.kind()) {
    case MetricCell::Kind::Value: return format_real(cell.get());
    case MetricCell::Kind::Undefined: return "undefined";
    case MetricCell::Kind::NegInfinite: return "-inf";
  }
  return "undefined";
}

MetricCell parse_cell(std::string_view text) {
  if (text == "undefined") return MetricCell::undefined();
  if (text == "-inf") return MetricCell::neg_infinite();
  const std::string owned(text);
  char* end = nullptr;
  const double value = std::strtod(owned.c_str(), &end);
  if (owned.empty() || end != owned.c_str() + owned.size() || !std::isfinite(value)) {
    throw Error(ErrorKind::ParseError, "not a metric value: '" + owned + "'");
  }
  return MetricCell::value(value);
}

double round_to_format(double value) {
  if (!std::isfinite(value)) return value;
  return std::strtod(format_real(value).c_str(), nullptr);
}

}  // namespace rankaudit
