#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rigscan::csv {

struct Row {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
// Blank lines are skipped. Throws ParseError on an unterminated quote.
std::vector<Row> read(std::istream& in);

// Quotes a field only when it contains a delimiter, quote or line break.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

// Strict full-string parse; returns false on trailing garbage or overflow.
bool parse_double(std::string_view text, double& value);

std::string_view trim(std::string_view text);

}  // namespace rigscan::csv
