#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "rankaudit/exposure_metrics.hpp"

namespace rankaudit {

// Shortest "%.10g" rendering; negative zero prints as "0".
std::string format_real(double value);

// Value cells as format_real, otherwise "undefined" or "-inf".
std::string format_cell(const MetricCell& cell);

// Inverse of format_cell. Throws Error(ParseError).
MetricCell parse_cell(std::string_view text);

// The double nearest to the 10-significant-digit decimal of `value`.
double round_to_format(double value);

}  // namespace rankaudit
