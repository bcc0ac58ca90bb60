#pragma once

// Plain string tables rendered as CSV (RFC 4180 quoting) or GitHub markdown.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace contrarank {

enum class TableFormat { kCsv, kMarkdown };

// "csv" | "markdown" | "md". Throws ConfigError.
TableFormat parse_table_format(std::string_view text);
std::string_view file_extension(TableFormat format);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const Table&) const = default;
};

// Marker for metrics whose denominator is zero or whose inputs are degenerate.
inline constexpr std::string_view kUndefinedCell = "undef";
// Marker for cells whose prerequisites (e.g. a calibration model) are missing.
inline constexpr std::string_view kMissingCell = "NA";

std::string format_fixed(double value, int decimals = 2);
// 100 * value with two decimals; undefined -> "undef".
std::string format_percent(std::optional<double> value);
std::string format_number(std::optional<double> value, int decimals = 2);

std::string to_csv(const Table& table);
std::string to_markdown(const Table& table);
std::string render(const Table& table, TableFormat format);

// Parses CSV produced by to_csv; first line is the header. Throws ParseError
// on unbalanced quotes or ragged rows.
Table parse_csv(std::string_view text);

}  // namespace contrarank
