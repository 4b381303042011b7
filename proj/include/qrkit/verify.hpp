#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrkit/linalg.hpp"

namespace qrkit {

struct CheckResult {
  std::string name;
  Index cases = 0;
  double max_error = 0;
  double tolerance = 0;
  bool passed = false;
  std::string note;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  Index cases = 100;
  Index max_rows = 64;
  Index max_cols = 16;
  Index max_block = 5;
  // name of a check whose computed result is perturbed, to confirm that the
  // check can fail
  std::string perturb;
};

// Names of every check run_checks reports, in report order.
const std::vector<std::string>& check_inventory();

std::vector<CheckResult> run_checks(const VerifyOptions& opt);

// name,cases,max_error,tolerance,passed,note
void write_check_csv(std::ostream& os, const std::vector<CheckResult>& rows);

}  // namespace qrkit
