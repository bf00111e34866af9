#include "extprof/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "extprof/errors.hpp"

namespace extprof {
namespace {

void ensure_finite(const OutputRecord& record) {
  const auto check = [](double x) {
    if (!std::isfinite(x)) raise(Errc::non_finite_payload, "non-finite number in output payload");
  };
  for (const auto& row : record.rows) {
    for (const Cell& cell : row) {
      if (const double* x = std::get_if<double>(&cell)) check(*x);
    }
  }
  for (const auto& [name, cell] : record.scalars) {
    if (const double* x = std::get_if<double>(&cell)) check(*x);
  }
  for (const auto& [name, x] : record.diagnostics) check(x);
}

std::string cell_text(const Cell& cell) {
  if (const double* x = std::get_if<double>(&cell)) return format_double(*x);
  return std::get<std::string>(cell);
}

bool needs_quoting(const std::string& field) {
  if (field.empty()) return false;
  if (field.front() == ' ' || field.back() == ' ') return true;
  return field.find_first_of(",\"\n\r") != std::string::npos;
}

std::string csv_field(const std::string& field) {
  if (!needs_quoting(field)) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void append_csv_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_field(fields[i]);
  }
  out += '\n';
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

std::string json_cell(const Cell& cell) {
  if (const double* x = std::get_if<double>(&cell)) return format_double(*x);
  return json_string(std::get<std::string>(cell));
}

/// Splits one CSV line into fields, honoring RFC-4180 quoting.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

Cell parse_cell(const std::string& text) {
  if (!text.empty()) {
    char* end = nullptr;
    const double x = std::strtod(text.c_str(), &end);
    if (end == text.c_str() + text.size()) return Cell{x};
  }
  return Cell{text};
}

/// '# key = value' metadata line; returns false for plain comments.
bool parse_meta(const std::string& line, std::string& key, std::string& value) {
  if (line.size() < 2 || line[0] != '#' || line[1] != ' ') return false;
  const std::size_t sep = line.find(" = ", 2);
  if (sep == std::string::npos) return false;
  key = line.substr(2, sep - 2);
  value = line.substr(sep + 3);
  return true;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string emit_csv(const OutputRecord& record) {
  ensure_finite(record);
  std::string out;
  out += "# schema_version = " + record.schema_version + '\n';
  for (const auto& [key, value] : record.config) {
    out += "# " + key + " = " + value + '\n';
  }
  const bool table = !record.columns.empty();
  if (table) {
    for (const auto& [name, cell] : record.scalars) {
      out += "# scalar " + name + " = " + cell_text(cell) + '\n';
    }
  }
  for (const auto& [name, x] : record.diagnostics) {
    out += "# diagnostic " + name + " = " + format_double(x) + '\n';
  }
  if (table) {
    append_csv_row(out, record.columns);
    std::vector<std::string> fields;
    for (const auto& row : record.rows) {
      fields.clear();
      for (const Cell& cell : row) fields.push_back(cell_text(cell));
      append_csv_row(out, fields);
    }
  } else if (!record.scalars.empty()) {
    // Scalar-only records become a one-row table.
    std::vector<std::string> header, values;
    for (const auto& [name, cell] : record.scalars) {
      header.push_back(name);
      values.push_back(cell_text(cell));
    }
    append_csv_row(out, header);
    append_csv_row(out, values);
  }
  return out;
}

std::string emit_json(const OutputRecord& record) {
  ensure_finite(record);
  std::string out = "{\n";
  out += "  \"schema_version\": " + json_string(record.schema_version) + ",\n";
  out += "  \"config\": {";
  for (std::size_t i = 0; i < record.config.size(); ++i) {
    out += (i == 0) ? "\n" : ",\n";
    out += "    " + json_string(record.config[i].first) + ": " +
           json_string(record.config[i].second);
  }
  out += record.config.empty() ? "}" : "\n  }";
  for (const auto& [name, cell] : record.scalars) {
    out += ",\n  " + json_string(name) + ": " + json_cell(cell);
  }
  if (!record.columns.empty()) {
    out += ",\n  \"columns\": [";
    for (std::size_t i = 0; i < record.columns.size(); ++i) {
      if (i > 0) out += ", ";
      out += json_string(record.columns[i]);
    }
    out += "],\n  \"rows\": [";
    for (std::size_t i = 0; i < record.rows.size(); ++i) {
      out += (i == 0) ? "\n" : ",\n";
      out += "    [";
      for (std::size_t j = 0; j < record.rows[i].size(); ++j) {
        if (j > 0) out += ", ";
        out += json_cell(record.rows[i][j]);
      }
      out += "]";
    }
    out += record.rows.empty() ? "]" : "\n  ]";
  }
  if (!record.diagnostics.empty()) {
    out += ",\n  \"diagnostics\": {";
    for (std::size_t i = 0; i < record.diagnostics.size(); ++i) {
      out += (i == 0) ? "\n" : ",\n";
      out += "    " + json_string(record.diagnostics[i].first) + ": " +
             format_double(record.diagnostics[i].second);
    }
    out += "\n  }";
  }
  out += "\n}\n";
  return out;
}

OutputRecord parse_csv(const std::string& text) {
  OutputRecord record;
  record.schema_version.clear();
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') {
      std::string key, value;
      if (!parse_meta(line, key, value)) {
        raise(Errc::io_failure, "unrecognized comment line in CSV input");
      }
      if (key == "schema_version") {
        record.schema_version = value;
      } else if (key.rfind("scalar ", 0) == 0) {
        record.scalars.emplace_back(key.substr(7), parse_cell(value));
      } else if (key.rfind("diagnostic ", 0) == 0) {
        const Cell cell = parse_cell(value);
        if (!std::holds_alternative<double>(cell)) {
          raise(Errc::io_failure, "non-numeric diagnostic in CSV input");
        }
        record.diagnostics.emplace_back(key.substr(11), std::get<double>(cell));
      } else {
        record.config.emplace_back(key, value);
      }
      continue;
    }
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (!have_header) {
      record.columns = fields;
      have_header = true;
      continue;
    }
    std::vector<Cell> row;
    row.reserve(fields.size());
    for (const std::string& f : fields) row.push_back(parse_cell(f));
    record.rows.push_back(std::move(row));
  }
  if (record.schema_version.empty()) {
    raise(Errc::io_failure, "missing schema_version line in CSV input");
  }
  // A scalar-only record emits its scalars as a one-row table; fold that
  // table back so emit(parse(emit(x))) is byte-stable.
  if (record.scalars.empty() && record.rows.size() == 1 && !record.columns.empty() &&
      record.rows[0].size() == record.columns.size()) {
    bool plain = true;
    for (const std::string& name : record.columns) {
      plain = plain && !name.empty() && name.find_first_of(",\"\n\r") == std::string::npos;
    }
    if (plain) {
      for (std::size_t i = 0; i < record.columns.size(); ++i) {
        record.scalars.emplace_back(record.columns[i], record.rows[0][i]);
      }
      record.columns.clear();
      record.rows.clear();
    }
  }
  return record;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_failure, "cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) raise(Errc::io_failure, "write failed: " + path);
}

}  // namespace extprof
