#pragma once

#include <string>
#include <vector>

namespace per1 {

// One acceptance check. measured/tolerance are the part closest to failing.
struct CheckResult {
  std::string id;
  bool pass = false;
  double measured = 0;
  double tolerance = 0;
  double seconds = 0;
  double time_limit = 0;
  std::string detail;  // every part as name=measured/tolerance
};

// core, boettcher, fatou, model, puzzle, atlas, all
std::vector<std::string> suite_names();
std::vector<CheckResult> run_suite(const std::string& suite, int threads = 1);

std::string report_text(const std::vector<CheckResult>& results);
std::string report_json(const std::vector<CheckResult>& results);

}  // namespace per1
