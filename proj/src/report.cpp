#include "profit/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace profit {

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

}  // namespace

std::size_t RefTable::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw MalformedRow("no such column: " + name);
  return static_cast<std::size_t>(it - columns.begin());
}

std::optional<double> RefTable::number(std::size_t row, const std::string& name) const {
  const std::string& s = rows.at(row).at(column(name));
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

const std::string& RefTable::cell(std::size_t row, const std::string& name) const {
  return rows.at(row).at(column(name));
}

RefTable load_ref_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingFile("cannot open table: " + path);
  RefTable t;
  std::string line;
  if (!std::getline(is, line)) throw MalformedRow(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.columns = split_tabs(line);
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_tabs(line);
    if (cells.size() != t.columns.size())
      throw MalformedRow(path + ":" + std::to_string(lineno) + ": field count mismatch");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

namespace {

bool k_less(int a, int b) {
  if (a == kFullData) return false;
  if (b == kFullData) return true;
  return a < b;
}

}  // namespace

PerformanceReport performance_report(const std::vector<RunRecord>& records,
                                     const std::string& source) {
  if (records.empty()) throw EmptyStore("no records to report");
  using Key = std::tuple<std::string, std::string, std::string, int>;
  std::map<Key, std::map<std::string, std::pair<double, int>>> groups;
  for (const RunRecord& r : records) {
    auto& cell = groups[{r.task_id, r.method, r.backend_name, r.k}][r.language];
    cell.first += r.accuracy;
    cell.second += 1;
  }
  PerformanceReport report;
  for (const auto& [key, langs] : groups) {
    PerformanceRow row;
    std::tie(row.task_id, row.method, row.backend_name, row.k) = key;
    double sum = 0.0;
    int n = 0;
    for (const auto& [lang, cell] : langs) {
      double mean = cell.first / cell.second;
      row.mean_accuracy[lang] = mean;
      row.seed_count[lang] = cell.second;
      if (lang != source) {
        sum += mean;
        ++n;
      }
    }
    if (n > 0) {
      row.avg = sum / n;
      row.avg_defined = true;
    }
    report.rows.push_back(std::move(row));
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const PerformanceRow& a, const PerformanceRow& b) {
              if (a.task_id != b.task_id) return a.task_id < b.task_id;
              if (a.method != b.method) return a.method < b.method;
              if (a.backend_name != b.backend_name)
                return a.backend_name < b.backend_name;
              return k_less(a.k, b.k);
            });
  return report;
}

std::string performance_tsv(const PerformanceReport& report) {
  std::set<std::string> langs;
  for (const PerformanceRow& row : report.rows)
    for (const auto& [lang, _] : row.mean_accuracy) langs.insert(lang);
  std::ostringstream os;
  os << "task\tmethod\tbackend\tK";
  for (const std::string& lang : langs) os << '\t' << lang;
  os << "\tavg\n";
  os.setf(std::ios::fixed);
  os << std::setprecision(4);
  for (const PerformanceRow& row : report.rows) {
    os << row.task_id << '\t' << row.method << '\t' << row.backend_name << '\t'
       << k_to_string(row.k);
    for (const std::string& lang : langs) {
      os << '\t';
      auto it = row.mean_accuracy.find(lang);
      if (it != row.mean_accuracy.end()) os << it->second;
    }
    os << '\t';
    if (row.avg_defined) os << row.avg;
    os << '\n';
  }
  return os.str();
}

std::string performance_text(const PerformanceReport& report) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os << std::setprecision(4);
  for (const PerformanceRow& row : report.rows) {
    os << row.task_id << " / " << row.method << " / " << row.backend_name
       << " / K=" << k_to_string(row.k) << "\n";
    for (const auto& [lang, mean] : row.mean_accuracy) {
      os << "  " << lang << ": " << mean;
      if (row.seed_count.at(lang) == 1) os << " (n=1)";
      os << "\n";
    }
    os << "  avg: ";
    if (row.avg_defined)
      os << row.avg;
    else
      os << "n/a (no target languages)";
    os << "\n";
  }
  return os.str();
}

std::string correlation_tsv(const CorrelationReport& report) {
  std::ostringstream os;
  os << "task\tbackend\tfactor\tpearson_r\tpearson_p\tspearman_r\tspearman_p\tn\n";
  for (const CorrelationCell& c : report.cells) {
    os << c.task << '\t' << c.backend << '\t' << c.factor << '\t';
    if (c.ok)
      os << c.pearson.r << '\t' << c.pearson.p << '\t' << c.spearman.r << '\t'
         << c.spearman.p << '\t' << c.pearson.n;
    else
      os << "\t\t\t\t" << c.error;
    os << '\n';
  }
  return os.str();
}

namespace {

std::string corr_cell(double r, double p) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os << std::setprecision(2) << r;
  if (p > 0.05) os << "*";
  os << " (p=" << std::scientific << std::setprecision(0) << p << ")";
  return os.str();
}

}  // namespace

std::string correlation_text(const CorrelationReport& report) {
  std::ostringstream os;
  for (const CorrelationCell& c : report.cells) {
    os << c.task << " / " << c.backend << " / " << c.factor << ": ";
    if (!c.ok) {
      os << "unavailable (" << c.error << ")\n";
      continue;
    }
    os << "P " << corr_cell(c.pearson.r, c.pearson.p) << "  S "
       << corr_cell(c.spearman.r, c.spearman.p) << "  n=" << c.pearson.n << "\n";
  }
  return os.str();
}

void plot_deltas(const DeltaTable& table, const std::string& tsv_path,
                 const std::string& svg_path) {
  if (table.rows.empty()) throw EmptyInput("plot_deltas: empty table");

  {
    std::ofstream os(tsv_path);
    if (!os) throw MissingFile("cannot open for writing: " + tsv_path);
    os << "task\tbackend\tK\tdelta\n";
    os.setf(std::ios::fixed);
    os << std::setprecision(6);
    for (const DeltaTable::Row& row : table.rows)
      for (const auto& [k, delta] : row.deltas)
        os << row.task_id << '\t' << row.backend_name << '\t' << k_to_string(k)
           << '\t' << delta << '\n';
  }

  // x position: log2(K); FULL sits one slot past the largest K.
  double max_log = 0.0, min_d = 0.0, max_d = 0.0;
  bool has_full = false;
  for (const DeltaTable::Row& row : table.rows)
    for (const auto& [k, delta] : row.deltas) {
      if (k == kFullData)
        has_full = true;
      else
        max_log = std::max(max_log, std::log2(static_cast<double>(k)));
      min_d = std::min(min_d, delta);
      max_d = std::max(max_d, delta);
    }
  double x_span = max_log + (has_full ? 1.0 : 0.0);
  if (x_span == 0.0) x_span = 1.0;
  if (max_d - min_d < 1e-12) {
    max_d += 1.0;
    min_d -= 1.0;
  }
  const double w = 640, h = 400, ml = 50, mr = 20, mt = 20, mb = 40;
  auto px = [&](int k) {
    double lx = k == kFullData ? max_log + 1.0 : std::log2(static_cast<double>(k));
    return ml + lx / x_span * (w - ml - mr);
  };
  auto py = [&](double d) {
    return mt + (max_d - d) / (max_d - min_d) * (h - mt - mb);
  };
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                  "#d62728", "#9467bd", "#8c564b"};

  std::ofstream os(svg_path);
  if (!os) throw MissingFile("cannot open for writing: " + svg_path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
     << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << py(0.0) << "\" x2=\"" << w - mr
     << "\" y2=\"" << py(0.0) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  std::size_t series = 0;
  for (const DeltaTable::Row& row : table.rows) {
    const char* color = kColors[series % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [k, delta] : row.deltas) os << px(k) << ',' << py(delta) << ' ';
    os << "\"/>\n";
    for (const auto& [k, delta] : row.deltas)
      os << "<circle cx=\"" << px(k) << "\" cy=\"" << py(delta)
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 14 * (series + 1)
       << "\" fill=\"" << color << "\" font-size=\"12\">" << row.task_id << " ("
       << row.backend_name << ")</text>\n";
    ++series;
  }
  std::set<int> ks;
  for (const DeltaTable::Row& row : table.rows)
    for (const auto& [k, _] : row.deltas) ks.insert(k);
  for (int k : ks)
    os << "<text x=\"" << px(k) << "\" y=\"" << h - mb + 16
       << "\" text-anchor=\"middle\" font-size=\"11\">" << k_to_string(k)
       << "</text>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"" << h - 8
     << "\" text-anchor=\"middle\" font-size=\"12\">K (log scale)</text>\n";
  os << "</svg>\n";
}

}  // namespace profit
