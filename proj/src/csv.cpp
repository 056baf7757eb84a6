#include "prefkit/csv.hpp"

#include <sstream>

#include "prefkit/common.hpp"

namespace prefkit::csv {

std::vector<Row> read_all(std::istream& in) {
  std::vector<Row> rows;
  std::string field;
  Row row;
  row.line = 1;
  std::size_t line = 1;
  bool in_quotes = false;
  bool row_started = false;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row = Row{};
    row.line = line;
    row_started = false;
  };

  char c;
  while (in.get(c)) {
    if (c == '\n') ++line;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      row_started = true;
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_started = true;
        break;
      case ',':
        end_field();
        row_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_started || !field.empty() || !row.fields.empty()) end_row();
        row.line = line;
        break;
      default:
        field += c;
        row_started = true;
        break;
    }
  }
  if (in_quotes)
    throw DataError("csv: unterminated quoted field starting near line " +
                    std::to_string(row.line));
  if (row_started || !field.empty() || !row.fields.empty()) end_row();
  return rows;
}

std::vector<Row> read_all(const std::string& text) {
  std::istringstream in(text);
  return read_all(in);
}

std::string escape(const std::string& field) {
  bool needs_quote = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace prefkit::csv
