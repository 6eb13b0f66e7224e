#include "uglad/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "uglad/errors.hpp"

namespace uglad {

namespace {

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line = 1;
  std::size_t line_start = 0;
  const std::string* source;

  bool done() const { return pos >= text.size(); }
  std::size_t column() const { return pos - line_start + 1; }

  [[noreturn]] void fail(const std::string& what, std::size_t col) const {
    throw Error(ErrorCode::ParseError,
                *source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
};

struct Cell {
  std::string text;
  std::size_t column;
  bool quoted = false;
};

// Reads one record. Returns false at end of input.
bool read_record(Cursor& c, std::vector<Cell>& cells) {
  cells.clear();
  if (c.done()) return false;
  while (true) {
    Cell cell{{}, c.column()};
    if (!c.done() && c.text[c.pos] == '"') {
      cell.quoted = true;
      ++c.pos;
      while (true) {
        if (c.done()) c.fail("unterminated quoted field", cell.column);
        const char ch = c.text[c.pos++];
        if (ch == '"') {
          if (!c.done() && c.text[c.pos] == '"') {
            cell.text.push_back('"');
            ++c.pos;
          } else {
            break;
          }
        } else {
          if (ch == '\n') {
            ++c.line;
            c.line_start = c.pos;
          }
          cell.text.push_back(ch);
        }
      }
      if (!c.done() && c.text[c.pos] != ',' && c.text[c.pos] != '\n' && c.text[c.pos] != '\r') {
        c.fail("unexpected character after closing quote", c.column());
      }
    } else {
      while (!c.done() && c.text[c.pos] != ',' && c.text[c.pos] != '\n' && c.text[c.pos] != '\r') {
        cell.text.push_back(c.text[c.pos++]);
      }
    }
    cells.push_back(std::move(cell));
    if (c.done()) return true;
    const char sep = c.text[c.pos++];
    if (sep == ',') continue;
    if (sep == '\r' && !c.done() && c.text[c.pos] == '\n') ++c.pos;
    ++c.line;
    c.line_start = c.pos;
    return true;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_nan_token(std::string_view s) {
  return s.size() == 3 && std::tolower(static_cast<unsigned char>(s[0])) == 'n' &&
         std::tolower(static_cast<unsigned char>(s[1])) == 'a' &&
         std::tolower(static_cast<unsigned char>(s[2])) == 'n';
}

bool blank(const std::vector<Cell>& cells) {
  return cells.size() == 1 && !cells[0].quoted && trim(cells[0].text).empty();
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Dataset parse_csv(std::string_view text, const std::string& source) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  Cursor c{text, 0, 1, 0, &source};
  std::vector<Cell> cells;

  std::size_t header_line = 0;
  do {
    header_line = c.line;
    if (!read_record(c, cells)) c.fail("missing header row", 1);
  } while (blank(cells));

  std::vector<std::string> names;
  for (const Cell& cell : cells) {
    const std::string name(trim(cell.text));
    if (name.empty()) {
      throw Error(ErrorCode::ParseError, source + ":" + std::to_string(header_line) + ":" +
                                             std::to_string(cell.column) + ": empty feature name");
    }
    names.push_back(name);
  }
  const std::size_t d = names.size();

  std::vector<double> values;
  std::vector<std::uint8_t> mask;
  bool any_missing = false;
  std::size_t rows = 0;
  while (true) {
    const std::size_t line = c.line;
    if (!read_record(c, cells)) break;
    if (blank(cells)) continue;
    if (cells.size() != d) {
      throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ":1: expected " +
                                             std::to_string(d) + " fields, found " +
                                             std::to_string(cells.size()));
    }
    for (const Cell& cell : cells) {
      const std::string_view t = trim(cell.text);
      if (t.empty() || is_nan_token(t)) {
        values.push_back(std::numeric_limits<double>::quiet_NaN());
        mask.push_back(1);
        any_missing = true;
        continue;
      }
      double v = 0.0;
      const char* first = t.data();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ":" +
                                               std::to_string(cell.column) + ": invalid number '" +
                                               std::string(t) + "'");
      }
      values.push_back(v);
      mask.push_back(0);
    }
    ++rows;
  }

  Dataset x;
  x.values = Matrix(rows, d, std::move(values));
  if (any_missing) x.missing = std::move(mask);
  x.features = std::move(names);
  return x;
}

Dataset read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

std::string format_csv(const Dataset& x) {
  std::string out;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (j) out.push_back(',');
    out += quote_if_needed(j < x.features.size() ? x.features[j] : "x" + std::to_string(j + 1));
  }
  out.push_back('\n');
  char buf[64];
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (j) out.push_back(',');
      if (x.is_missing(i, j) || std::isnan(x.values(i, j))) continue;
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x.values(i, j));
      out.append(buf, ptr);
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const std::string& path, const Dataset& x) { write_file(path, format_csv(x)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed for '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace uglad
