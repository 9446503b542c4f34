#pragma once

#include <map>
#include <string>
#include <vector>

#include "profit/train.hpp"

namespace profit {

// One (task, method, backend, seed, K, language) -> accuracy observation.
struct RunRecord {
  std::string run_id;
  std::string task_id;
  std::string method;
  std::string backend_name;
  std::uint64_t seed = 0;
  int k = kFullData;  // kFullData renders as "FULL"
  std::string language;
  double accuracy = 0.0;
  std::string timestamp;
};

std::string k_to_string(int k);
int k_from_string(const std::string& s);

// Exact-match accuracy of the method's predictor on a labeled test set.
double evaluate(const BackendModel& backend, Method method, const TaskSpec& task,
                const Dataset& test);

// Unweighted mean over non-source languages (Table-2-style "avg").
double aggregate_excluding_source(const std::map<std::string, double>& per_language,
                                  const std::string& source = "en");

// One full train+eval per seed; accuracy recorded per test language.
std::vector<RunRecord> multi_seed_run(const BackendModel& pretrained,
                                      const TaskSpec& task, const Dataset& train_pool,
                                      const Dataset& dev_pool,
                                      const std::vector<Dataset>& tests,
                                      const RunConfig& base,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::string& run_id,
                                      const std::string& backend_name);

// Mean ProFiT accuracy minus mean Vanilla accuracy per (task, backend, K),
// seeds averaged first, then target languages, source excluded.
struct DeltaTable {
  struct Row {
    std::string task_id;
    std::string backend_name;
    std::vector<std::pair<int, double>> deltas;  // K ascending, FULL last
  };
  std::vector<Row> rows;
};

DeltaTable fewshot_sweep(const BackendModel& pretrained, const TaskSpec& task,
                         const Dataset& train_pool, const Dataset& dev_pool,
                         const std::vector<Dataset>& tests, const RunConfig& base,
                         const std::vector<int>& k_list,
                         const std::vector<std::uint64_t>& seeds,
                         std::vector<RunRecord>* records = nullptr,
                         const std::string& source_language = "en");

DeltaTable delta_table_from_records(const std::vector<RunRecord>& records,
                                    const std::string& source_language = "en");

// Append-only TSV store with a checksum-carrying header; appends go
// through a temp file and an atomic rename.
class ResultsStore {
 public:
  explicit ResultsStore(std::string path) : path_(std::move(path)) {}

  void append(const std::vector<RunRecord>& records);
  std::vector<RunRecord> read() const;
  bool exists() const;
  bool has_run(const std::string& run_id) const;

  static const char* header();

 private:
  std::string path_;
};

}  // namespace profit
