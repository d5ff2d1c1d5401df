#pragma once

// Minimal RFC-4180 reader/writer. Output always uses LF line endings; input
// accepts LF or CRLF.

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rankaudit::csv {

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Reads the next record into `row`. Returns false at end of input.
  // Throws Error(ParseError) on an unterminated quoted field.
  bool next(std::vector<std::string>& row);

  // 1-based physical line on which the last returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  std::size_t next_line_ = 1;
  std::size_t record_line_ = 0;
};

// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, std::span<const std::string> fields);
void write_row(std::ostream& out, std::initializer_list<std::string_view> fields);

}  // namespace rankaudit::csv
