#include "profit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace profit {

namespace {

// Continued fraction for I_x(a,b), modified Lentz.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-14;
  constexpr double kTiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double betainc(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, int df) {
  if (df < 1) throw TooFewPoints("t distribution needs df >= 1");
  if (!std::isfinite(t)) return 1e-300;
  double x = df / (df + t * t);
  double p = betainc(df / 2.0, 0.5, x);
  return std::max(p, 1e-300);
}

std::vector<double> fractional_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

CorrStat pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw LengthMismatch("pearson: unequal lengths");
  const int n = static_cast<int>(x.size());
  if (n < 3) throw TooFewPoints("pearson: need at least 3 points");
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    double dx = x[static_cast<std::size_t>(i)] - mx;
    double dy = y[static_cast<std::size_t>(i)] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ZeroVariance("pearson: constant input");
  double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  double p;
  if (1.0 - r * r < 1e-15) {
    p = 1e-300;
  } else {
    double t = r * std::sqrt((n - 2) / (1.0 - r * r));
    p = student_t_two_tailed_p(t, n - 2);
  }
  return {r, p, n};
}

CorrStat spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw LengthMismatch("spearman: unequal lengths");
  return pearson(fractional_ranks(x), fractional_ranks(y));
}

TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw LengthMismatch("paired_ttest: unequal lengths");
  const int n = static_cast<int>(a.size());
  if (n < 2) throw TooFewPoints("paired_ttest: need at least 2 pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
  double md = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0;
  for (double v : d) ss += (v - md) * (v - md);
  if (ss == 0.0) throw ZeroVariance("paired_ttest: differences are constant");
  double sd = std::sqrt(ss / (n - 1));
  double t = md / (sd / std::sqrt(static_cast<double>(n)));
  return {t, student_t_two_tailed_p(t, n - 1), n - 1};
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> opt_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

std::vector<LanguageFeatureRow> load_language_features(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingFile("cannot open language features: " + path);
  std::string line;
  if (!std::getline(is, line)) throw MalformedRow(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cols = split_tabs(line);
  auto col = [&](const std::string& name) {
    auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw MalformedRow(path + ": missing column " + name);
    return static_cast<std::size_t>(it - cols.begin());
  };
  std::size_t c_lang = col("lang"), c_syn = col("syn"), c_pho = col("pho"),
              c_inv = col("inv"), c_fam = col("fam"), c_geo = col("geo"),
              c_sim1 = col("sim1"), c_umap = col("umap"), c_svd = col("svd"),
              c_sim2 = col("sim2"), c_size = col("size");
  std::vector<std::size_t> acc_cols;
  for (std::size_t i = 0; i < cols.size(); ++i)
    if (cols[i].find('-') != std::string::npos) acc_cols.push_back(i);

  std::vector<LanguageFeatureRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_tabs(line);
    if (cells.size() != cols.size())
      throw MalformedRow(path + ":" + std::to_string(lineno) + ": field count mismatch");
    LanguageFeatureRow r;
    r.language = cells[c_lang];
    r.syn = std::stod(cells[c_syn]);
    r.pho = std::stod(cells[c_pho]);
    r.inv = std::stod(cells[c_inv]);
    r.fam = std::stod(cells[c_fam]);
    r.geo = std::stod(cells[c_geo]);
    r.umap = opt_cell(cells[c_umap]);
    r.svd = opt_cell(cells[c_svd]);
    r.sim1_printed = opt_cell(cells[c_sim1]);
    r.sim2_printed = opt_cell(cells[c_sim2]);
    r.size = opt_cell(cells[c_size]);
    for (std::size_t c : acc_cols)
      if (auto v = opt_cell(cells[c])) r.accuracy[cols[c]] = *v;
    rows.push_back(std::move(r));
  }
  return rows;
}

double sim1(const LanguageFeatureRow& row) {
  return (row.syn + row.pho + row.inv + row.fam + row.geo) / 5.0;
}

double sim2(const LanguageFeatureRow& row) {
  if (!row.umap || !row.svd)
    throw MissingFeature("sim2 undefined for " + row.language + ": no umap/svd");
  return (*row.umap + *row.svd) / 2.0;
}

const CorrelationCell* CorrelationReport::find(const std::string& task,
                                               const std::string& backend,
                                               const std::string& factor) const {
  for (const CorrelationCell& c : cells)
    if (c.task == task && c.backend == backend && c.factor == factor) return &c;
  return nullptr;
}

CorrelationReport correlation_report(
    const std::vector<LanguageFeatureRow>& rows,
    const std::map<std::string, std::map<std::string, double>>* baseline) {
  // Column keys "<task>-<backend>" discovered from the data.
  std::vector<std::string> keys;
  for (const LanguageFeatureRow& r : rows)
    for (const auto& [key, _] : r.accuracy)
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  std::sort(keys.begin(), keys.end());

  CorrelationReport report;
  for (const std::string& key : keys) {
    std::size_t dash = key.rfind('-');
    std::string task = key.substr(0, dash);
    std::string backend = key.substr(dash + 1);
    for (const std::string& factor : {"sim1", "sim2", "size"}) {
      CorrelationCell cell;
      cell.task = task;
      cell.backend = backend;
      cell.factor = factor;
      std::vector<double> xs, ys;
      for (const LanguageFeatureRow& r : rows) {
        auto it = r.accuracy.find(key);
        if (it == r.accuracy.end()) continue;
        double acc = it->second;
        if (baseline) {
          auto bt = baseline->find(key);
          if (bt == baseline->end()) continue;
          auto bl = bt->second.find(r.language);
          if (bl == bt->second.end()) continue;
          acc -= bl->second;
        }
        if (factor == std::string("sim1")) {
          xs.push_back(sim1(r));
        } else if (factor == std::string("sim2")) {
          if (!r.umap || !r.svd) continue;
          xs.push_back(sim2(r));
        } else {
          if (!r.size) continue;
          xs.push_back(*r.size);
        }
        ys.push_back(acc);
      }
      try {
        cell.pearson = pearson(xs, ys);
        cell.spearman = spearman(xs, ys);
        cell.ok = true;
      } catch (const Error& e) {
        cell.ok = false;
        cell.error = e.what();
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace profit
