#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "profit/errors.hpp"

namespace profit {

// Regularized incomplete beta I_x(a, b), Lentz continued fraction.
double betainc(double a, double b, double x);

// Two-tailed tail mass of Student's t with the given degrees of freedom.
double student_t_two_tailed_p(double t, int df);

// Average (fractional) ranks, 1-based; ties share their mean rank.
std::vector<double> fractional_ranks(const std::vector<double>& v);

struct CorrStat {
  double r = 0.0;
  double p = 1.0;
  int n = 0;
};

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  int df = 0;
};

CorrStat pearson(const std::vector<double>& x, const std::vector<double>& y);
CorrStat spearman(const std::vector<double>& x, const std::vector<double>& y);

// Two-tailed paired t on d = b - a, df = n - 1.
TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

struct LanguageFeatureRow {
  std::string language;
  double syn = 0, pho = 0, inv = 0, fam = 0, geo = 0;
  std::optional<double> umap, svd;
  std::optional<double> sim1_printed, sim2_printed;
  std::optional<double> size;
  // keyed "<task>-<backend>", e.g. "xnli-M"
  std::map<std::string, double> accuracy;
};

std::vector<LanguageFeatureRow> load_language_features(const std::string& path);

double sim1(const LanguageFeatureRow& row);  // mean of syn, pho, inv, fam, geo
double sim2(const LanguageFeatureRow& row);  // mean of umap, svd

struct CorrelationCell {
  std::string task;
  std::string backend;
  std::string factor;  // sim1 | sim2 | size
  bool ok = false;
  std::string error;  // set when !ok (too few points / zero variance)
  CorrStat pearson;
  CorrStat spearman;
};

struct CorrelationReport {
  std::vector<CorrelationCell> cells;
  const CorrelationCell* find(const std::string& task, const std::string& backend,
                              const std::string& factor) const;
};

// Correlates each factor with per-language accuracy, pairwise-dropping
// missing entries. With a baseline, correlates accuracy - baseline instead
// (keyed like the accuracy columns, then by language).
CorrelationReport correlation_report(
    const std::vector<LanguageFeatureRow>& rows,
    const std::map<std::string, std::map<std::string, double>>* baseline = nullptr);

}  // namespace profit
