#include "profit/eval.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <tuple>

#include "profit/prng.hpp"
#include "profit/pvp.hpp"

namespace profit {

std::string k_to_string(int k) {
  return k == kFullData ? "FULL" : std::to_string(k);
}

int k_from_string(const std::string& s) {
  if (s == "FULL") return kFullData;
  return std::stoi(s);
}

double evaluate(const BackendModel& backend, Method method, const TaskSpec& task,
                const Dataset& test) {
  if (test.empty()) throw EmptyDataset("evaluate: empty test set");
  int hits = 0;
  for (const Example& ex : test.examples) {
    if (!ex.label) throw UnknownLabel("evaluate: unlabeled test example");
    int pred;
    if (method == Method::Vanilla) {
      std::string text;
      for (std::size_t i = 0; i < ex.segments.size(); ++i) {
        if (i) text += ' ';
        text += ex.segments[i];
      }
      Eigen::VectorXd p = backend.cls_distribution(
          backend.tokenize(backend.token_prefix(text, 128)), task.task_id,
          task.num_labels);
      pred = 0;
      for (int y = 1; y < task.num_labels; ++y)
        if (p[y] > p[pred]) pred = y;
    } else if (method == Method::ProFiT || method == Method::Direct) {
      pred = predict_label(backend, task.pvp, ex, 128);
    } else {
      throw ConfigInvalid("evaluate: MAJ has no model predictor, use run_maj");
    }
    hits += (pred == *ex.label);
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

double aggregate_excluding_source(const std::map<std::string, double>& per_language,
                                  const std::string& source) {
  double sum = 0.0;
  int n = 0;
  for (const auto& [lang, acc] : per_language) {
    if (lang == source) continue;
    sum += acc;
    ++n;
  }
  if (n == 0) throw OnlySourcePresent("no non-source languages to aggregate");
  return sum / n;
}

namespace {

std::string timestamp_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

std::vector<RunRecord> multi_seed_run(const BackendModel& pretrained,
                                      const TaskSpec& task, const Dataset& train_pool,
                                      const Dataset& dev_pool,
                                      const std::vector<Dataset>& tests,
                                      const RunConfig& base,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::string& run_id,
                                      const std::string& backend_name) {
  if (seeds.empty()) throw ConfigInvalid("multi_seed_run: no seeds");
  std::vector<RunRecord> records;
  std::string stamp = timestamp_now();
  for (std::uint64_t seed : seeds) {
    RunConfig cfg = base;
    cfg.seed = seed;

    Dataset train = train_pool;
    Dataset dev = dev_pool;
    if (cfg.k != kFullData)
      std::tie(train, dev) = sample_few_shot(train_pool, cfg.k, seed, task.num_labels);

    std::unique_ptr<BackendModel> model = pretrained.clone();
    if (cfg.method == Method::Vanilla || cfg.method == Method::ProFiT)
      finetune(*model, cfg.method, task, train, dev, cfg);

    for (const Dataset& test : tests) {
      double acc = cfg.method == Method::Maj ? run_maj(train, test)
                                             : evaluate(*model, cfg.method, task, test);
      records.push_back(RunRecord{run_id, task.task_id, method_name(cfg.method),
                                  backend_name, seed, cfg.k, test.language, acc, stamp});
    }
  }
  return records;
}

namespace {

// (task, backend, K) -> per-language seed-mean accuracy, per method.
std::map<std::string, double> language_means(const std::vector<RunRecord>& records,
                                             const std::string& task,
                                             const std::string& backend,
                                             const std::string& method, int k) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const RunRecord& r : records) {
    if (r.task_id != task || r.backend_name != backend || r.method != method || r.k != k)
      continue;
    acc[r.language].first += r.accuracy;
    acc[r.language].second += 1;
  }
  std::map<std::string, double> out;
  for (auto& [lang, s] : acc) out[lang] = s.first / s.second;
  return out;
}

bool k_less(int a, int b) {  // ascending, FULL last
  if (a == kFullData) return false;
  if (b == kFullData) return true;
  return a < b;
}

}  // namespace

DeltaTable delta_table_from_records(const std::vector<RunRecord>& records,
                                    const std::string& source_language) {
  std::set<std::pair<std::string, std::string>> groups;
  std::set<int> ks;
  for (const RunRecord& r : records) {
    groups.insert({r.task_id, r.backend_name});
    ks.insert(r.k);
  }
  std::vector<int> k_sorted(ks.begin(), ks.end());
  std::sort(k_sorted.begin(), k_sorted.end(), k_less);

  DeltaTable dt;
  for (const auto& [task, backend] : groups) {
    DeltaTable::Row row{task, backend, {}};
    for (int k : k_sorted) {
      auto profit = language_means(records, task, backend, "ProFiT", k);
      auto vanilla = language_means(records, task, backend, "Vanilla", k);
      if (profit.empty() || vanilla.empty()) continue;
      row.deltas.emplace_back(k, aggregate_excluding_source(profit, source_language) -
                                     aggregate_excluding_source(vanilla, source_language));
    }
    if (!row.deltas.empty()) dt.rows.push_back(std::move(row));
  }
  if (dt.rows.empty()) throw EmptyInput("no (ProFiT, Vanilla) record pairs found");
  return dt;
}

DeltaTable fewshot_sweep(const BackendModel& pretrained, const TaskSpec& task,
                         const Dataset& train_pool, const Dataset& dev_pool,
                         const std::vector<Dataset>& tests, const RunConfig& base,
                         const std::vector<int>& k_list,
                         const std::vector<std::uint64_t>& seeds,
                         std::vector<RunRecord>* records,
                         const std::string& source_language) {
  std::vector<RunRecord> all;
  for (int k : k_list) {
    for (Method method : {Method::Vanilla, Method::ProFiT}) {
      RunConfig cfg = base;
      cfg.method = method;
      cfg.k = k;
      std::string run_id = task.task_id + "-" + method_name(method) + "-k" + k_to_string(k);
      auto recs = multi_seed_run(pretrained, task, train_pool, dev_pool, tests, cfg,
                                 seeds, run_id, pretrained.name());
      all.insert(all.end(), recs.begin(), recs.end());
    }
  }
  if (records) *records = all;
  return delta_table_from_records(all, source_language);
}

const char* ResultsStore::header() {
  return "run_id\ttask\tmethod\tbackend\tseed\tK\tlanguage\taccuracy";
}

bool ResultsStore::exists() const { return std::filesystem::exists(path_); }

void ResultsStore::append(const std::vector<RunRecord>& records) {
  std::vector<RunRecord> all;
  if (exists()) all = read();
  all.insert(all.end(), records.begin(), records.end());

  std::string tmp = path_ + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw MissingFile("cannot open store temp file: " + tmp);
    os << "# profit-results-v1 " << std::hex << hash_bytes(header()) << std::dec << "\n";
    os << header() << "\n";
    os.setf(std::ios::fixed);
    os.precision(10);
    for (const RunRecord& r : all)
      os << r.run_id << '\t' << r.task_id << '\t' << r.method << '\t' << r.backend_name
         << '\t' << r.seed << '\t' << k_to_string(r.k) << '\t' << r.language << '\t'
         << r.accuracy << '\n';
  }
  std::filesystem::rename(tmp, path_);
}

std::vector<RunRecord> ResultsStore::read() const {
  std::ifstream is(path_);
  if (!is) throw EmptyStore("results store not found: " + path_);
  std::string line;
  if (!std::getline(is, line)) throw EmptyStore("results store is empty: " + path_);
  std::ostringstream expect;
  expect << "# profit-results-v1 " << std::hex << hash_bytes(header());
  if (line != expect.str())
    throw DataError("results store checksum line mismatch in " + path_);
  std::getline(is, line);  // header row
  std::vector<RunRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    RunRecord r;
    std::string seed, k, acc;
    if (!std::getline(ls, r.run_id, '\t') || !std::getline(ls, r.task_id, '\t') ||
        !std::getline(ls, r.method, '\t') || !std::getline(ls, r.backend_name, '\t') ||
        !std::getline(ls, seed, '\t') || !std::getline(ls, k, '\t') ||
        !std::getline(ls, r.language, '\t') || !std::getline(ls, acc, '\t'))
      throw MalformedRow("bad record line in " + path_ + ": " + line);
    r.seed = std::stoull(seed);
    r.k = k_from_string(k);
    r.accuracy = std::stod(acc);
    out.push_back(std::move(r));
  }
  return out;
}

bool ResultsStore::has_run(const std::string& run_id) const {
  if (!exists()) return false;
  for (const RunRecord& r : read())
    if (r.run_id == run_id) return true;
  return false;
}

}  // namespace profit
