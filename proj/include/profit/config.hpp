#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "profit/dataset.hpp"
#include "profit/train.hpp"

namespace profit {

// Everything needed to reconstruct a run together with its input files.
struct ExperimentManifest {
  int version = 1;
  RunConfig run;
  std::vector<std::uint64_t> seeds;  // empty -> {run.seed}
  std::string run_id;

  std::string data_dir;  // falls back to $PROFIT_DATA_DIR
  std::string train_path, dev_path;
  std::map<std::string, std::string> test_paths;  // language -> path
  bool use_synth = false;
  SynthConfig synth;

  std::string checkpoint;  // empty -> freshly initialized reference backend
  int feature_dim = 4096;
  std::string out_dir = ".";

  std::vector<std::string> decisions;  // recorded run-policy strings

  std::vector<std::uint64_t> effective_seeds() const;
};

std::vector<std::string> default_decisions();

// Flat key = value lines under [section] headers; '#' comments; unknown
// keys are rejected. Training keys absent from the file take the standard
// defaults for the run's K (few-shot defaults when K is set, full-data
// defaults otherwise).
ExperimentManifest parse_config(const std::string& path);
ExperimentManifest parse_config_text(const std::string& text);

// Serialized form; parse_config_text(manifest_text(m)) reproduces m.
std::string manifest_text(const ExperimentManifest& m);

bool operator==(const ExperimentManifest& a, const ExperimentManifest& b);

}  // namespace profit
