#pragma once

#include <span>
#include <string>
#include <vector>

#include "oddball/trainer.hpp"

namespace oddball {

// "%.9g" — enough digits to reproduce plots, short enough to diff.
std::string format_g9(double v);

// Header `variant,equivalent_sweep,steps,test_error,wall_ms,seed` plus one
// row per evaluation point, LF line endings.
std::string csv_body(const MetricsLog& log);

struct SummaryRow {
  Variant variant;
  double best_test_error = 1.0;
  double sweeps_to_best = -1.0;          // first sweep attaining the best error
  double sweeps_to_uniform_best = -1.0;  // first sweep at or below E*, -1 = never
  double speedup_vs_best_uniform = -1.0;
};

struct Summary {
  std::vector<SummaryRow> rows;
  bool has_uniform = false;
  Variant best_uniform = Variant::baseline;
  double uniform_best_error = 1.0;   // E*: best error any uniform variant reached
  double uniform_target_sweep = -1;  // when the best uniform variant got there
};

// Time-to-target scans the rows in order for the first error <= target; no
// interpolation, so reported speedups round down.
Summary summarize(std::span<const MetricsLog> logs);

std::string summary_csv(const Summary& summary);

void write_file(const std::string& path, const std::string& content);

std::string now_iso8601_utc();

}  // namespace oddball
