#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qrkit/linalg.hpp"

namespace qrkit {

struct CsvTable {
  std::vector<std::string> header;
  MatrixXd data;
};

// Numeric CSV with an optional header line. Blank lines are skipped. Throws
// ParseError naming the 1-based line and column of the first bad field.
CsvTable read_csv(std::istream& in, bool has_header = true);
CsvTable read_csv_file(const std::string& path, bool has_header = true);

// 17 significant digits, enough to read back the same double.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  CsvWriter& field(const std::string& s);
  CsvWriter& field(double v);
  CsvWriter& field(long long v);
  CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
  CsvWriter& field(long v) { return field(static_cast<long long>(v)); }
  CsvWriter& field(const char* s) { return field(std::string(s)); }
  CsvWriter& empty();
  void end_row();
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& os_;
  bool first_ = true;
};

}  // namespace qrkit
