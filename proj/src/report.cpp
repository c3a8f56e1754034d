#include "oddball/report.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace oddball {

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string csv_body(const MetricsLog& log) {
  std::string out = "variant,equivalent_sweep,steps,test_error,wall_ms,seed\n";
  for (const MetricsRow& r : log.rows) {
    out += variant_name(r.variant);
    out += ',';
    out += format_g9(r.equivalent_sweep);
    out += ',';
    out += std::to_string(r.steps);
    out += ',';
    out += format_g9(r.test_error);
    out += ',';
    out += std::to_string(r.wall_ms);
    out += ',';
    out += std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

namespace {

double first_sweep_at_or_below(const MetricsLog& log, double target) {
  for (const MetricsRow& r : log.rows)
    if (r.test_error <= target) return r.equivalent_sweep;
  return -1.0;
}

}  // namespace

Summary summarize(std::span<const MetricsLog> logs) {
  Summary s;
  s.rows.resize(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const MetricsLog& log = logs[i];
    SummaryRow& row = s.rows[i];
    if (log.rows.empty()) continue;
    row.variant = log.rows[0].variant;
    for (const MetricsRow& r : log.rows)
      if (r.test_error < row.best_test_error) row.best_test_error = r.test_error;
    row.sweeps_to_best = first_sweep_at_or_below(log, row.best_test_error);
    const bool uniform = row.variant != Variant::oddball;
    if (uniform && (!s.has_uniform || row.best_test_error < s.uniform_best_error)) {
      s.has_uniform = true;
      s.best_uniform = row.variant;
      s.uniform_best_error = row.best_test_error;
    }
  }
  if (!s.has_uniform) return s;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    SummaryRow& row = s.rows[i];
    if (row.variant == s.best_uniform)
      s.uniform_target_sweep = row.sweeps_to_best;
  }
  for (std::size_t i = 0; i < logs.size(); ++i) {
    SummaryRow& row = s.rows[i];
    row.sweeps_to_uniform_best =
        first_sweep_at_or_below(logs[i], s.uniform_best_error);
    if (row.sweeps_to_uniform_best > 0.0 && s.uniform_target_sweep > 0.0)
      row.speedup_vs_best_uniform =
          s.uniform_target_sweep / row.sweeps_to_uniform_best;
  }
  return s;
}

std::string summary_csv(const Summary& summary) {
  std::string out =
      "variant,best_test_error,sweeps_to_best,sweeps_to_uniform_best,"
      "speedup_vs_best_uniform\n";
  for (const SummaryRow& r : summary.rows) {
    out += variant_name(r.variant);
    out += ',';
    out += format_g9(r.best_test_error);
    out += ',';
    out += format_g9(r.sweeps_to_best);
    out += ',';
    out += format_g9(r.sweeps_to_uniform_best);
    out += ',';
    out += format_g9(r.speedup_vs_best_uniform);
    out += '\n';
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string now_iso8601_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace oddball
