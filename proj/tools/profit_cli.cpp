#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "profit/config.hpp"
#include "profit/report.hpp"

namespace fs = std::filesystem;
using namespace profit;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTrain = 4;
constexpr int kExitDuplicate = 5;

std::string join_path(const std::string& dir, const std::string& leaf) {
  if (leaf.empty() || leaf.front() == '/' || dir.empty()) return leaf;
  return (fs::path(dir) / leaf).string();
}

TaskSpec resolve_task(const std::string& task_id, const std::string& data_dir) {
  if (is_builtin_task(task_id)) return builtin_task(task_id);
  std::string path = join_path(data_dir, task_id);
  if (fs::exists(path)) return load_task_file(path);
  throw ConfigInvalid("unknown task: " + task_id);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingFile("cannot open corpus: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw MissingFile("cannot open for writing: " + path);
  os << text;
}

struct LoadedData {
  TaskSpec task;
  Dataset train, dev;
  std::vector<Dataset> tests;
  std::unique_ptr<BackendModel> backend;
};

LoadedData load_experiment(const ExperimentManifest& m) {
  LoadedData d;
  if (m.use_synth) {
    SynthCorpus corpus = synth_corpus(m.synth);
    d.task = corpus.task;
    d.train = corpus.train;
    d.dev = corpus.dev;
    d.tests = corpus.tests;
    if (!m.checkpoint.empty()) {
      d.backend = std::make_unique<ReferenceBackend>(
          ReferenceBackend::load(join_path(m.data_dir, m.checkpoint)));
    } else {
      PretrainConfig pc;
      pc.seed = m.synth.seed;
      pc.feature_dim = m.feature_dim;
      d.backend = std::make_unique<ReferenceBackend>(
          pretrain_reference(corpus.pretrain, pc));
    }
    return d;
  }
  d.task = resolve_task(m.run.task_id, m.data_dir);
  if (m.train_path.empty()) throw ConfigInvalid("data.train is required");
  d.train = load_tsv(join_path(m.data_dir, m.train_path), d.task, "en", Split::Train);
  if (!m.dev_path.empty())
    d.dev = load_tsv(join_path(m.data_dir, m.dev_path), d.task, "en", Split::Dev);
  for (const auto& [lang, path] : m.test_paths)
    d.tests.push_back(load_tsv(join_path(m.data_dir, path), d.task, lang, Split::Test));
  if (d.tests.empty()) throw ConfigInvalid("at least one data.test.<lang> is required");

  if (!m.checkpoint.empty()) {
    d.backend = std::make_unique<ReferenceBackend>(
        ReferenceBackend::load(join_path(m.data_dir, m.checkpoint)));
  } else {
    // Vocabulary from the training texts plus pattern literals and
    // verbalizer words; weights stay zero-initialized.
    std::vector<std::string> corpus;
    for (const Example& ex : d.train.examples)
      for (const std::string& seg : ex.segments) corpus.push_back(seg);
    for (const Example& ex : d.dev.examples)
      for (const std::string& seg : ex.segments) corpus.push_back(seg);
    for (const PatternPart& part : d.task.pvp.parts)
      if (part.kind == PatternPart::Kind::Literal) corpus.push_back(part.text);
    for (const std::string& word : d.task.pvp.verbalizer) corpus.push_back(word);
    d.backend = std::make_unique<ReferenceBackend>(corpus, m.feature_dim);
  }
  return d;
}

int cmd_run(const std::string& config_path, bool force) {
  ExperimentManifest m = parse_config(config_path);
  m.run.validate();
  if (m.run_id.empty()) throw ConfigInvalid("run.run_id is required for `run`");
  fs::create_directories(m.out_dir);
  ResultsStore store((fs::path(m.out_dir) / "results.tsv").string());
  if (!force && store.has_run(m.run_id))
    throw DuplicateRun("run_id already in store: " + m.run_id);

  LoadedData d = load_experiment(m);
  Dataset dev = m.run.k != kFullData || !d.dev.empty() ? d.dev : d.train;
  std::vector<RunRecord> records =
      multi_seed_run(*d.backend, d.task, d.train, dev, d.tests, m.run,
                     m.effective_seeds(), m.run_id, d.backend->name());
  store.append(records);
  write_text((fs::path(m.out_dir) / (m.run_id + ".manifest")).string(),
             manifest_text(m));
  std::cout << "recorded " << records.size() << " results for run " << m.run_id
            << "\n";
  return 0;
}

int cmd_sample(const std::string& config_path, std::uint64_t seed, int k,
               const std::string& out_dir) {
  ExperimentManifest m = parse_config(config_path);
  LoadedData d = load_experiment(m);
  auto [train, dev] = sample_few_shot(d.train, k, seed, d.task.num_labels);
  fs::create_directories(out_dir);
  save_tsv(train, (fs::path(out_dir) / "train.tsv").string(), d.task.arity);
  save_tsv(dev, (fs::path(out_dir) / "dev.tsv").string(), d.task.arity);
  std::cout << "sampled " << train.size() << " train / " << dev.size()
            << " dev examples\n";
  return 0;
}

int cmd_pretrain(const std::string& corpus_path, std::uint64_t seed,
                 const std::string& out_path) {
  PretrainConfig pc;
  pc.seed = seed;
  ReferenceBackend backend = pretrain_reference(read_lines(corpus_path), pc);
  backend.save(out_path);
  std::cout << "saved checkpoint (" << backend.vocab_size() << " words) to "
            << out_path << "\n";
  return 0;
}

int cmd_synth(const std::string& config_path, std::uint64_t seed,
              const std::string& out_dir) {
  SynthConfig cfg;
  if (!config_path.empty()) cfg = parse_config(config_path).synth;
  cfg.seed = seed;
  SynthCorpus corpus = synth_corpus(cfg);
  fs::create_directories(out_dir);
  save_tsv(corpus.train, (fs::path(out_dir) / "train.tsv").string(), 1);
  save_tsv(corpus.dev, (fs::path(out_dir) / "dev.tsv").string(), 1);
  for (const Dataset& test : corpus.tests)
    save_tsv(test, (fs::path(out_dir) / ("test." + test.language + ".tsv")).string(),
             1);
  std::string pretrain;
  for (const std::string& line : corpus.pretrain) pretrain += line + "\n";
  write_text((fs::path(out_dir) / "pretrain.txt").string(), pretrain);
  write_text((fs::path(out_dir) / "task.txt").string(), task_to_text(corpus.task));
  std::cout << "wrote synth corpus (" << corpus.tests.size() << " languages) to "
            << out_dir << "\n";
  return 0;
}

int cmd_report(const std::string& store_path, const std::string& features_path,
               const std::string& out_dir) {
  ResultsStore store(store_path);
  PerformanceReport perf = performance_report(store.read());
  fs::create_directories(out_dir);
  write_text((fs::path(out_dir) / "performance.tsv").string(), performance_tsv(perf));
  write_text((fs::path(out_dir) / "performance.txt").string(), performance_text(perf));
  if (!features_path.empty()) {
    CorrelationReport corr = correlation_report(load_language_features(features_path));
    write_text((fs::path(out_dir) / "correlations.tsv").string(),
               correlation_tsv(corr));
    write_text((fs::path(out_dir) / "correlations.txt").string(),
               correlation_text(corr));
  }
  std::cout << "wrote report to " << out_dir << "\n";
  return 0;
}

int cmd_plot(const std::string& store_path, const std::string& out_dir) {
  ResultsStore store(store_path);
  DeltaTable table = delta_table_from_records(store.read());
  fs::create_directories(out_dir);
  plot_deltas(table, (fs::path(out_dir) / "deltas.tsv").string(),
              (fs::path(out_dir) / "deltas.svg").string());
  std::cout << "wrote delta plot to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prompt-based finetuning pipeline"};
  app.require_subcommand(1);

  std::string config_path, out = "out", store_path, features_path, corpus_path;
  std::uint64_t seed = 42;
  int k = 1;
  bool force = false;

  CLI::App* run = app.add_subcommand("run", "execute a configured experiment");
  run->add_option("--config", config_path)->required();
  run->add_flag("--force", force, "overwrite an existing run_id");

  CLI::App* sample = app.add_subcommand("sample", "draw a few-shot train/dev split");
  sample->add_option("--config", config_path)->required();
  sample->add_option("--seed", seed);
  sample->add_option("--k", k);
  sample->add_option("--out", out);

  CLI::App* pretrain = app.add_subcommand("pretrain", "pretrain the reference backend");
  pretrain->add_option("--corpus", corpus_path)->required();
  pretrain->add_option("--seed", seed);
  pretrain->add_option("--out", out);

  CLI::App* synth = app.add_subcommand("synth", "emit the synthetic corpus");
  synth->add_option("--config", config_path);
  synth->add_option("--seed", seed)->capture_default_str();
  synth->add_option("--out", out);

  CLI::App* report = app.add_subcommand("report", "summarize a results store");
  report->add_option("--store", store_path)->required();
  report->add_option("--features", features_path);
  report->add_option("--out", out);

  CLI::App* plot = app.add_subcommand("plot", "plot ProFiT-minus-Vanilla deltas");
  plot->add_option("--store", store_path)->required();
  plot->add_option("--out", out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, force);
    if (sample->parsed()) return cmd_sample(config_path, seed, k, out);
    if (pretrain->parsed())
      return cmd_pretrain(corpus_path, seed,
                          out == "out" ? "backend.ckpt" : out);
    if (synth->parsed()) return cmd_synth(config_path, seed, out);
    if (report->parsed()) return cmd_report(store_path, features_path, out);
    if (plot->parsed()) return cmd_plot(store_path, out);
  } catch (const DuplicateRun& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDuplicate;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const TrainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTrain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
