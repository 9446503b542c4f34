#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "profit/backend.hpp"
#include "profit/dataset.hpp"

namespace profit {

enum class Method { Maj, Direct, Vanilla, ProFiT };
std::string method_name(Method m);
Method method_from_name(const std::string& name);

// K sentinel for full-data runs.
constexpr int kFullData = -1;

const std::vector<std::uint64_t>& canonical_seeds();  // {10, 42, 421, 510, 1218}

struct RunConfig {
  std::string task_id;
  Method method = Method::ProFiT;
  std::uint64_t seed = 42;
  int k = kFullData;
  int epochs = 5;
  double lr = 1e-5;
  int batch_size = 8;
  int grad_accum_steps = 4;
  int max_seq_length = 128;
  int early_stopping_patience = 0;  // 0 = disabled

  static RunConfig full_defaults();     // 5 epochs, lr 1e-5, batch 8, accum 4
  static RunConfig fewshot_defaults();  // 50 epochs, lr 1e-5, batch 1, accum 2, patience 3
  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;    // one entry per completed epoch
  std::vector<double> dev_accuracy;  // same length
  int stopped_epoch = 0;             // 1-based epoch at which training stopped
  int best_epoch = 0;                // 1-based epoch whose parameters were kept
};

// Majority-class baseline: prevalence in test of the train-majority label.
int majority_label(const Dataset& train);
double run_maj(const Dataset& train, const Dataset& test);

struct DirectResult {
  std::vector<int> predictions;
  double accuracy = 0.0;
};

// Zero-shot prediction through the PVP; never updates parameters.
DirectResult run_direct(const BackendModel& backend, const TaskSpec& task,
                        const Dataset& test);

// Seed-deterministic epoch loop with gradient accumulation (mean of the
// accumulated batch gradients) and optional dev-accuracy early stopping
// with best-parameter restoration. ProFiT trains the MLM head through the
// pattern, Vanilla trains the CLS head on the raw input.
TrainHistory finetune(BackendModel& backend, Method method, const TaskSpec& task,
                      const Dataset& train, const Dataset& dev,
                      const RunConfig& config);

}  // namespace profit
