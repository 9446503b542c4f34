#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "profit/eval.hpp"
#include "profit/stats.hpp"

namespace profit {

// Generic TSV with a header row; blank cells stay empty strings.
struct RefTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws MalformedRow
  std::optional<double> number(std::size_t row, const std::string& name) const;
  const std::string& cell(std::size_t row, const std::string& name) const;
};

RefTable load_ref_table(const std::string& path);

// Per-language seed means for one (task, method, backend, K) group.
struct PerformanceRow {
  std::string task_id, method, backend_name;
  int k = kFullData;
  std::map<std::string, double> mean_accuracy;  // language -> mean over seeds
  std::map<std::string, int> seed_count;        // language -> #seeds
  double avg = 0.0;                             // non-source mean
  bool avg_defined = false;                     // false when only source present
};

struct PerformanceReport {
  std::vector<PerformanceRow> rows;
};

PerformanceReport performance_report(const std::vector<RunRecord>& records,
                                     const std::string& source = "en");

std::string performance_tsv(const PerformanceReport& report);
// Text table; languages observed with a single seed are marked "(n=1)".
std::string performance_text(const PerformanceReport& report);

std::string correlation_tsv(const CorrelationReport& report);
// Text table; cells with p > 0.05 carry a trailing "*".
std::string correlation_text(const CorrelationReport& report);

// Normative TSV plus a best-effort SVG line chart; x positions are
// log2(K) with FULL one slot after the largest K.
void plot_deltas(const DeltaTable& table, const std::string& tsv_path,
                 const std::string& svg_path);

}  // namespace profit
