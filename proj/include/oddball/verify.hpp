#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace oddball {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Fast built-in self checks: analytic-vs-finite-difference gradients on a
// 6x4x3 net, softmax normalization, selection-sampling statistics, dropout
// and dither statistics, and the gradient-averaging oracle. An empty filter
// runs everything; otherwise only the check with that exact name runs.
// Throws std::invalid_argument for an unknown filter name.
std::vector<CheckResult> run_self_checks(std::string_view only = {});

std::vector<std::string> self_check_names();

}  // namespace oddball
