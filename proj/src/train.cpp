#include "profit/train.hpp"

#include <algorithm>
#include <cmath>

#include "profit/prng.hpp"
#include "profit/pvp.hpp"

namespace profit {

std::string method_name(Method m) {
  switch (m) {
    case Method::Maj: return "MAJ";
    case Method::Direct: return "Direct";
    case Method::Vanilla: return "Vanilla";
    case Method::ProFiT: return "ProFiT";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "MAJ") return Method::Maj;
  if (name == "Direct") return Method::Direct;
  if (name == "Vanilla") return Method::Vanilla;
  if (name == "ProFiT") return Method::ProFiT;
  throw ConfigInvalid("unknown method: " + name);
}

const std::vector<std::uint64_t>& canonical_seeds() {
  static const std::vector<std::uint64_t> seeds = {10, 42, 421, 510, 1218};
  return seeds;
}

RunConfig RunConfig::full_defaults() {
  RunConfig c;
  c.k = kFullData;
  c.epochs = 5;
  c.lr = 1e-5;
  c.batch_size = 8;
  c.grad_accum_steps = 4;
  c.max_seq_length = 128;
  c.early_stopping_patience = 0;
  return c;
}

RunConfig RunConfig::fewshot_defaults() {
  RunConfig c;
  c.epochs = 50;
  c.lr = 1e-5;
  c.batch_size = 1;
  c.grad_accum_steps = 2;
  c.max_seq_length = 128;
  c.early_stopping_patience = 3;
  return c;
}

void RunConfig::validate() const {
  if (epochs < 1 || lr <= 0 || batch_size < 1 || grad_accum_steps < 1 ||
      max_seq_length < 2 || early_stopping_patience < 0 ||
      (k != kFullData && k < 1))
    throw ConfigInvalid("invalid training configuration");
}

int majority_label(const Dataset& train) {
  if (train.empty()) throw EmptyDataset("majority_label: empty training set");
  std::map<int, int> counts;
  for (const Example& ex : train.examples) {
    if (!ex.label) throw UnknownLabel("majority_label: unlabeled example");
    ++counts[*ex.label];
  }
  int best = -1, best_count = -1;
  for (auto [label, count] : counts)
    if (count > best_count) {  // map iterates ascending, so ties keep the lowest id
      best = label;
      best_count = count;
    }
  return best;
}

double run_maj(const Dataset& train, const Dataset& test) {
  if (test.empty()) throw EmptyDataset("run_maj: empty test set");
  int maj = majority_label(train);
  int hits = 0;
  for (const Example& ex : test.examples) hits += (ex.label && *ex.label == maj);
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

DirectResult run_direct(const BackendModel& backend, const TaskSpec& task,
                        const Dataset& test) {
  if (test.empty()) throw EmptyDataset("run_direct: empty test set");
  DirectResult r;
  int hits = 0;
  for (const Example& ex : test.examples) {
    int pred = predict_label(backend, task.pvp, ex, 128);
    r.predictions.push_back(pred);
    hits += (ex.label && *ex.label == pred);
  }
  r.accuracy = static_cast<double>(hits) / static_cast<double>(test.size());
  return r;
}

namespace {

std::string vanilla_input(const Example& ex) {
  std::string s;
  for (std::size_t i = 0; i < ex.segments.size(); ++i) {
    if (i) s += ' ';
    s += ex.segments[i];
  }
  return s;
}

struct PreparedSet {
  std::vector<TrainItem> items;
  std::vector<int> labels;
};

PreparedSet prepare(const BackendModel& backend, Method method, const TaskSpec& task,
                    const Dataset& data, int max_len,
                    const std::vector<int>& candidates) {
  PreparedSet out;
  for (const Example& ex : data.examples) {
    if (!ex.label) throw UnknownLabel("finetune: unlabeled example");
    TrainItem item;
    if (method == Method::ProFiT) {
      item.tokens = backend.tokenize(apply_pattern(task.pvp, ex, backend, max_len));
      item.target = candidates[static_cast<std::size_t>(*ex.label)];
    } else {
      std::string text = backend.token_prefix(vanilla_input(ex), max_len);
      item.tokens = backend.tokenize(text);
      item.target = *ex.label;
    }
    out.items.push_back(std::move(item));
    out.labels.push_back(*ex.label);
  }
  return out;
}

double item_loss(const BackendModel& backend, const TrainItem& item, Head head,
                 const std::string& task_id, int num_labels) {
  Eigen::VectorXd p = head == Head::Mlm
                          ? backend.mask_distribution(item.tokens)
                          : backend.cls_distribution(item.tokens, task_id, num_labels);
  return -std::log(p[item.target]);
}

int predict_item(const BackendModel& backend, const TrainItem& item, Head head,
                 const std::string& task_id, int num_labels,
                 const std::vector<int>& candidates) {
  Eigen::VectorXd p = head == Head::Mlm
                          ? backend.mask_distribution(item.tokens)
                          : backend.cls_distribution(item.tokens, task_id, num_labels);
  int best = 0;
  if (head == Head::Mlm) {
    for (std::size_t y = 1; y < candidates.size(); ++y)
      if (p[candidates[y]] > p[candidates[best]]) best = static_cast<int>(y);
  } else {
    for (int y = 1; y < num_labels; ++y)
      if (p[y] > p[best]) best = y;
  }
  return best;
}

}  // namespace

TrainHistory finetune(BackendModel& backend, Method method, const TaskSpec& task,
                      const Dataset& train, const Dataset& dev,
                      const RunConfig& config) {
  if (method != Method::Vanilla && method != Method::ProFiT)
    throw ConfigInvalid("finetune supports Vanilla and ProFiT only");
  config.validate();
  if (train.empty()) throw EmptyDataset("finetune: empty training set");
  if (dev.empty()) throw EmptyDataset("finetune: empty dev set");

  const Head head = method == Method::ProFiT ? Head::Mlm : Head::Cls;
  std::vector<int> candidates;
  if (method == Method::ProFiT) candidates = candidate_token_ids(task.pvp, backend);

  PreparedSet tr = prepare(backend, method, task, train, config.max_seq_length, candidates);
  PreparedSet dv = prepare(backend, method, task, dev, config.max_seq_length, candidates);

  TrainHistory history;
  double best_dev = -1.0;
  Eigen::VectorXd best_params;
  int bad_epochs = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Prng prng(stream_seed(config.seed, "shuffle") + static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> order = shuffled_indices(tr.items.size(), prng);

    double loss_sum = 0.0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      Eigen::VectorXd accum;
      int batches = 0;
      for (int step = 0; step < config.grad_accum_steps && pos < order.size(); ++step) {
        std::vector<TrainItem> batch;
        for (int i = 0; i < config.batch_size && pos < order.size(); ++i, ++pos)
          batch.push_back(tr.items[order[pos]]);
        for (const TrainItem& item : batch)
          loss_sum += item_loss(backend, item, head, task.task_id, task.num_labels);
        Eigen::VectorXd g = backend.gradient(batch, head, task.task_id, task.num_labels);
        if (batches == 0)
          accum = g;
        else
          accum += g;
        ++batches;
      }
      accum /= static_cast<double>(batches);
      backend.sgd_step(accum, head, task.task_id, task.num_labels, config.lr);
    }
    history.train_loss.push_back(loss_sum / static_cast<double>(tr.items.size()));

    int hits = 0;
    for (std::size_t i = 0; i < dv.items.size(); ++i)
      hits += predict_item(backend, dv.items[i], head, task.task_id, task.num_labels,
                           candidates) == dv.labels[i];
    double dev_acc = static_cast<double>(hits) / static_cast<double>(dv.items.size());
    history.dev_accuracy.push_back(dev_acc);
    history.stopped_epoch = epoch;

    if (config.early_stopping_patience > 0) {
      if (dev_acc > best_dev) {
        best_dev = dev_acc;
        history.best_epoch = epoch;
        best_params = backend.head_parameters(head, task.task_id, task.num_labels);
        bad_epochs = 0;
      } else {
        ++bad_epochs;
        if (bad_epochs >= config.early_stopping_patience) break;
      }
    } else {
      history.best_epoch = epoch;
    }
  }

  if (config.early_stopping_patience > 0 && best_params.size() > 0 &&
      history.best_epoch != history.stopped_epoch)
    backend.set_head_parameters(head, task.task_id, task.num_labels, best_params);
  return history;
}

}  // namespace profit
