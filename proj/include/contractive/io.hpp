#pragma once

// Matrix and matrix-path text formats.
//
//   CSV:   one row per line, comma-separated decimals ("-2,1\n2,-3").
//   JSON:  {"n": 2, "rows": [[-2, 1], [2, -3]]}
//   Path:  [{"t": 0, "rows": [...], "drows": [...]}, ...]  ("drows" optional, all or none)

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "contractive/errors.hpp"
#include "contractive/linalg.hpp"
#include "contractive/timevary.hpp"

namespace contractive {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool looks_like_json(std::string_view text) {
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
    return c == '{' || c == '[';
  }
  return false;
}

/// 1-based line and column of a byte offset.
inline std::pair<int, int> locate(std::string_view text, std::size_t offset) {
  int line = 1, column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

inline Matrix parse_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    if (!trim(line).empty()) {
      std::vector<double> row;
      std::size_t cell_start = 0;
      while (true) {
        const std::size_t comma = std::min(line.find(',', cell_start), line.size());
        const std::string_view raw = line.substr(cell_start, comma - cell_start);
        const std::string_view cell = trim(raw);
        const int column = static_cast<int>(cell_start + (cell.empty() ? 0 : cell.data() - raw.data())) + 1;
        if (cell.empty()) throw ParseError("empty cell", line_no, column);
        std::string_view digits = cell;
        if (digits.front() == '+') digits.remove_prefix(1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || !std::isfinite(v))
          throw ParseError("not a finite number: '" + std::string(cell) + "'", line_no, column);
        row.push_back(v);
        if (comma == line.size()) break;
        cell_start = comma + 1;
      }
      if (!rows.empty() && row.size() != rows.front().size()) {
        throw ParseError("row has " + std::to_string(row.size()) + " entries, expected " +
                             std::to_string(rows.front().size()),
                         line_no, 1);
      }
      rows.push_back(std::move(row));
      row_lines.push_back(line_no);
    }
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  if (rows.empty()) throw ParseError("no matrix rows", 1, 1);
  const std::size_t n = rows.size();
  if (rows.front().size() != n) {
    throw ParseError("matrix is " + std::to_string(n) + "x" + std::to_string(rows.front().size()) +
                         ", expected square",
                     row_lines.back(), 1);
  }
  Matrix a(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return a;
}

inline nlohmann::json parse_json_text(std::string_view text) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = locate(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(std::string("invalid JSON: ") + e.what(), line, column);
  }
}

/// Structural errors inside a JSON document carry no byte offsets; they are reported at
/// the document start and name the offending element.
[[noreturn]] inline void json_error(const std::string& what) { throw ParseError(what, 1, 1); }

inline Matrix rows_to_matrix(const nlohmann::json& rows, const std::string& context, Index expected_n = -1) {
  if (!rows.is_array() || rows.empty()) json_error(context + ": \"rows\" must be a non-empty array");
  const Index n = static_cast<Index>(rows.size());
  if (expected_n >= 0 && n != expected_n)
    json_error(context + ": " + std::to_string(n) + " rows, expected " + std::to_string(expected_n));
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i) {
    const nlohmann::json& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n)
      json_error(context + ": row " + std::to_string(i + 1) + " must have " + std::to_string(n) + " entries");
    for (Index j = 0; j < n; ++j) {
      const nlohmann::json& v = row[static_cast<std::size_t>(j)];
      if (!v.is_number())
        json_error(context + ": entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") is not a number");
      a(i, j) = v.get<double>();
    }
  }
  return a;
}

inline Matrix parse_json_matrix(std::string_view text) {
  const nlohmann::json doc = parse_json_text(text);
  if (!doc.is_object()) json_error("matrix document must be an object with \"n\" and \"rows\"");
  if (!doc.contains("n") || !doc["n"].is_number_integer() || doc["n"].get<long long>() < 1)
    json_error("\"n\" must be a positive integer");
  if (!doc.contains("rows")) json_error("missing \"rows\"");
  return rows_to_matrix(doc["rows"], "matrix", static_cast<Index>(doc["n"].get<long long>()));
}

}  // namespace detail

/// CSV or {"n", "rows"} JSON, chosen by the first non-blank character.
inline Matrix parse_matrix(std::string_view text) {
  return detail::looks_like_json(text) ? detail::parse_json_matrix(text) : detail::parse_csv(text);
}

inline std::string serialize_matrix_csv(const Matrix& a) {
  std::string out;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(a(i, j));
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json matrix_to_json(const Matrix& a) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Index i = 0; i < a.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixPath parse_matrix_path(std::string_view text) {
  const nlohmann::json doc = detail::parse_json_text(text);
  if (!doc.is_array() || doc.empty()) detail::json_error("path must be a non-empty array of samples");
  MatrixPath path;
  Index n = -1;
  const bool with_drows = doc.front().is_object() && doc.front().contains("drows");
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const nlohmann::json& s = doc[k];
    const std::string ctx = "sample " + std::to_string(k + 1);
    if (!s.is_object()) detail::json_error(ctx + ": must be an object");
    if (!s.contains("t") || !s["t"].is_number()) detail::json_error(ctx + ": \"t\" must be a number");
    if (!s.contains("rows")) detail::json_error(ctx + ": missing \"rows\"");
    const double t = s["t"].get<double>();
    if (!path.times.empty() && !(t > path.times.back())) detail::json_error(ctx + ": t must be strictly increasing");
    Matrix a = detail::rows_to_matrix(s["rows"], ctx, n);
    n = a.rows();
    if (s.contains("drows") != with_drows) detail::json_error(ctx + ": \"drows\" must be given for all samples or none");
    if (with_drows) path.derivatives.push_back(detail::rows_to_matrix(s["drows"], ctx + " drows", n));
    path.times.push_back(t);
    path.samples.push_back(std::move(a));
  }
  if (!with_drows && path.size() < 2)
    detail::json_error("a path without \"drows\" needs at least two samples for finite differences");
  return path;
}

}  // namespace contractive
