#pragma once

#include <string>
#include <vector>

namespace irsynth {

/// Outcome of one named self-check.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  std::vector<std::string> failures;  // offending items, when itemised
};

inline bool all_passed(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

}  // namespace irsynth
