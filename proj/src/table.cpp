#include "contrarank/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "contrarank/errors.hpp"

namespace contrarank {

TableFormat parse_table_format(std::string_view text) {
  if (text == "csv") return TableFormat::kCsv;
  if (text == "markdown" || text == "md") return TableFormat::kMarkdown;
  throw ConfigError("unknown table format '" + std::string(text) + "' (expected csv or markdown)");
}

std::string_view file_extension(TableFormat format) {
  return format == TableFormat::kCsv ? ".csv" : ".md";
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  // no "-0.00"
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string format_percent(std::optional<double> value) {
  if (!value || !std::isfinite(*value)) return std::string(kUndefinedCell);
  return format_fixed(100.0 * *value, 2);
}

std::string format_number(std::optional<double> value, int decimals) {
  if (!value || !std::isfinite(*value)) return std::string(kUndefinedCell);
  return format_fixed(*value, decimals);
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void csv_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += csv_cell(cells[i]);
  }
  out += '\n';
}

void md_line(std::string& out, const std::vector<std::string>& cells) {
  out += '|';
  for (const auto& c : cells) {
    out += ' ';
    for (char ch : c) {
      if (ch == '|') out += '\\';
      out += ch;
    }
    out += " |";
  }
  out += '\n';
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  csv_line(out, table.header);
  for (const auto& row : table.rows) csv_line(out, row);
  return out;
}

std::string to_markdown(const Table& table) {
  std::string out;
  md_line(out, table.header);
  out += '|';
  for (std::size_t i = 0; i < table.header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
  out += '\n';
  for (const auto& row : table.rows) md_line(out, row);
  return out;
}

std::string render(const Table& table, TableFormat format) {
  return format == TableFormat::kCsv ? to_csv(table) : to_markdown(table);
}

Table parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  std::size_t line_no = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_no;
        cell += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n') {
      row.push_back(std::move(cell));
      cell.clear();
      lines.push_back(std::move(row));
      row.clear();
      any = false;
      ++line_no;
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted CSV cell");
  if (any) {
    row.push_back(std::move(cell));
    lines.push_back(std::move(row));
  }
  Table t;
  if (lines.empty()) return t;
  t.header = std::move(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].size() != t.header.size())
      throw ParseError(i + 1, "CSV row has " + std::to_string(lines[i].size()) + " cells, header has " +
                                  std::to_string(t.header.size()));
    t.rows.push_back(std::move(lines[i]));
  }
  return t;
}

}  // namespace contrarank
