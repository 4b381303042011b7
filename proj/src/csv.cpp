#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qrkit/csv.hpp"

namespace qrkit {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(std::size_t line, std::size_t col, const std::string& what) {
  throw Error(Errc::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
}

}  // namespace

CsvTable read_csv(std::istream& in, bool has_header) {
  CsvTable t;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0, width = 0;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line) == "\r") continue;
    auto fields = split(line);
    if (header_pending) {
      for (auto& f : fields) t.header.push_back(trim(f));
      width = fields.size();
      header_pending = false;
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      fail(lineno, std::min(fields.size(), width) + 1,
           "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string f = trim(fields[c]);
      double v = 0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size())
        fail(lineno, c + 1, "not a number: '" + f + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  t.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) t.data(Index(r), Index(c)) = rows[r][c];
  return t;
}

CsvTable read_csv_file(const std::string& path, bool has_header) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::ParseError, "cannot open " + path);
  return read_csv(f, has_header);
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

CsvWriter& CsvWriter::field(const std::string& s) {
  if (!first_) os_ << ',';
  os_ << s;
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::field(double v) { return field(format_double(v)); }

CsvWriter& CsvWriter::field(long long v) { return field(std::to_string(v)); }

CsvWriter& CsvWriter::empty() { return field(std::string()); }

void CsvWriter::end_row() {
  os_ << '\n';
  first_ = true;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (const auto& f : fields) field(f);
  end_row();
}

}  // namespace qrkit
