#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace prefkit::csv {

// Minimal RFC 4180 reader/writer. Quoted fields may contain commas, escaped
// quotes ("") and newlines. Rows are returned without the trailing newline.

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the row started
};

// Reads all rows. Throws prefkit::DataError on an unterminated quote.
std::vector<Row> read_all(std::istream& in);

std::vector<Row> read_all(const std::string& text);

// Quotes a field only when needed.
std::string escape(const std::string& field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace prefkit::csv
