#pragma once

#include <functional>
#include <string>
#include <vector>

namespace fgf::acceptance {

struct Result {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0;
  double limit_seconds = 0;
};

struct Options {
  bool quick = false;     // reduced sample counts and ranges; runtime limits not enforced
  std::vector<int> only;  // empty: all criteria
};

constexpr int kCriteria = 15;

// Runs the selected criteria in order, calling `sink` after each one.
std::vector<Result> run(const Options& opt, const std::function<void(const Result&)>& sink = {});

// One line: status, id, title, measurements, runtime against its limit.
std::string format(const Result& r);

}  // namespace fgf::acceptance
