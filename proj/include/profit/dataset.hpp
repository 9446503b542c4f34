#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "profit/pvp.hpp"

namespace profit {

enum class Split { Train, Dev, Test };
std::string split_name(Split s);

struct Dataset {
  std::string task_id;
  std::string language;
  Split split = Split::Train;
  std::vector<Example> examples;

  bool empty() const { return examples.empty(); }
  std::size_t size() const { return examples.size(); }
};

// TSV with header `seg1[\tseg2]\tlabel`, UTF-8, CRLF tolerated. Tabs are
// banned inside segments; labels are range-checked against the task.
Dataset load_tsv(const std::string& path, const TaskSpec& task,
                 const std::string& language, Split split);
void save_tsv(const Dataset& dataset, const std::string& path, int arity);

// K train + K dev examples per class, drawn class-major from a
// Fisher-Yates shuffle of each class's indices under the "fewshot" stream
// of `seed`. Train and dev are disjoint.
std::pair<Dataset, Dataset> sample_few_shot(const Dataset& train, int k,
                                            std::uint64_t seed, int num_labels);

const std::vector<int>& canonical_shot_counts();  // 1..1024 powers of two

struct SynthConfig {
  int num_languages = 3;
  int vocab_size = 48;
  double anchor_fraction = 1.0;  // rho
  int sentences_per_language = 120;
  int num_labels = 3;
  std::uint64_t seed = 1;

  void validate() const;
};

// Desk-scale multilingual corpus: language 0 ("en") is the source; every
// other language renames the non-anchor part of the vocabulary. All
// languages share the same underlying sentences, so rho = 1 yields
// verbatim copies.
struct SynthCorpus {
  TaskSpec task;
  Dataset train;               // source language
  Dataset dev;                 // source language
  std::vector<Dataset> tests;  // one per language, source first
  std::vector<std::string> pretrain;  // unlabeled sentences + filled source prompts
  std::vector<std::string> anchors;   // shared surface forms
};

SynthCorpus synth_corpus(const SynthConfig& cfg);

std::string synth_language_name(int index);  // "en", "l1", "l2", ...

}  // namespace profit
