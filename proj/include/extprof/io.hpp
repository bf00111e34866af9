#pragma once

// Canonical CSV and JSON emission for run outputs. Every file embeds the
// run configuration (as '#' comment lines in CSV, as a "config" object in
// JSON), numbers are printed with 17 significant digits so doubles
// round-trip losslessly, and identical records emit byte-identical text.
// Non-finite numbers anywhere in the payload abort emission before any
// output is produced.

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace extprof {

using Cell = std::variant<double, std::string>;

struct OutputRecord {
  std::string schema_version = "extprof/1";
  /// Ordered run-configuration echo; emitted verbatim.
  std::vector<std::pair<std::string, std::string>> config;
  /// Tabular payload: header plus rows of numeric or text cells.
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// Named scalar results. In CSV they become the table when no columns are
  /// set, comment lines otherwise; in JSON they are top-level members.
  std::vector<std::pair<std::string, Cell>> scalars;
  /// Named diagnostic numbers (residual maxima, check counts, ...).
  std::vector<std::pair<std::string, double>> diagnostics;
};

/// Shortest representation that restores the exact double (17 significant
/// digits, '.' decimal separator, C locale independent of the process).
std::string format_double(double x);

/// RFC-4180-style table prefixed with '#' metadata lines. Empty rows yield
/// a header-only table. Errc::non_finite_payload on any NaN or infinity.
std::string emit_csv(const OutputRecord& record);

/// Single JSON object with config nested and scalars hoisted to the top
/// level. Errc::non_finite_payload on any NaN or infinity.
std::string emit_json(const OutputRecord& record);

/// Inverse of emit_csv for canonical files: re-emitting the parsed record
/// reproduces the input byte for byte. Errc::io_failure on malformed input.
OutputRecord parse_csv(const std::string& text);

/// Writes content atomically enough for tooling: open, write, flush, close;
/// Errc::io_failure if any step fails.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace extprof
