#include "profit/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace profit {

std::vector<std::uint64_t> ExperimentManifest::effective_seeds() const {
  if (!seeds.empty()) return seeds;
  return {run.seed};
}

std::vector<std::string> default_decisions() {
  return {
      "tie-break: argmax prefers the lowest label id",
      "truncation: trim the longer input segment first, alternating on ties",
      "dev-metric: accuracy, evaluated once per epoch",
      "few-shot dev: K examples per class, sampled with the training shots",
  };
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_type(const std::string& key, const std::string& value) {
  throw TypeError("config key '" + key + "': cannot parse value '" + value + "'");
}

long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    long v = std::stol(value, &pos);
    if (pos != value.size()) bad_type(key, value);
    return v;
  } catch (const TypeError&) {
    throw;
  } catch (const std::exception&) {
    bad_type(key, value);
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) bad_type(key, value);
    return v;
  } catch (const TypeError&) {
    throw;
  } catch (const std::exception&) {
    bad_type(key, value);
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_type(key, value);
}

int parse_k(const std::string& key, const std::string& value) {
  if (value == "FULL") return kFullData;
  return static_cast<int>(to_int(key, value));
}

}  // namespace

ExperimentManifest parse_config_text(const std::string& text) {
  struct Entry {
    std::string key, value;
  };
  std::vector<Entry> entries;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid("config line " + std::to_string(lineno) +
                          ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigInvalid("config line " + std::to_string(lineno) + ": empty key");
    entries.push_back({section.empty() ? key : section + "." + key, value});
  }

  ExperimentManifest m;
  bool k_given = false;
  // First pass: find K so training defaults can be chosen before overrides.
  for (const Entry& e : entries)
    if (e.key == "run.k") {
      m.run.k = parse_k(e.key, e.value);
      k_given = true;
    }
  RunConfig defaults =
      (k_given && m.run.k != kFullData) ? RunConfig::fewshot_defaults()
                                        : RunConfig::full_defaults();
  int k = m.run.k;
  m.run = defaults;
  m.run.k = k_given ? k : defaults.k;

  bool decisions_given = false;
  for (const Entry& e : entries) {
    const std::string& key = e.key;
    const std::string& v = e.value;
    if (key == "manifest.version") m.version = static_cast<int>(to_int(key, v));
    else if (key == "run.task") m.run.task_id = v;
    else if (key == "run.method") m.run.method = method_from_name(v);
    else if (key == "run.seed") m.run.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "run.seeds") {
      m.seeds.clear();
      std::istringstream ls(v);
      std::string tok;
      while (std::getline(ls, tok, ','))
        m.seeds.push_back(static_cast<std::uint64_t>(to_int(key, trim(tok))));
    } else if (key == "run.k") { /* handled above */ }
    else if (key == "run.epochs") m.run.epochs = static_cast<int>(to_int(key, v));
    else if (key == "run.learning_rate") m.run.lr = to_double(key, v);
    else if (key == "run.batch_size") m.run.batch_size = static_cast<int>(to_int(key, v));
    else if (key == "run.grad_accum_steps")
      m.run.grad_accum_steps = static_cast<int>(to_int(key, v));
    else if (key == "run.max_seq_length")
      m.run.max_seq_length = static_cast<int>(to_int(key, v));
    else if (key == "run.early_stopping_patience")
      m.run.early_stopping_patience = static_cast<int>(to_int(key, v));
    else if (key == "run.run_id") m.run_id = v;
    else if (key == "data.dir") m.data_dir = v;
    else if (key == "data.train") m.train_path = v;
    else if (key == "data.dev") m.dev_path = v;
    else if (key.rfind("data.test.", 0) == 0) m.test_paths[key.substr(10)] = v;
    else if (key == "data.synth") m.use_synth = to_bool(key, v);
    else if (key == "data.synth.languages")
      m.synth.num_languages = static_cast<int>(to_int(key, v));
    else if (key == "data.synth.vocab")
      m.synth.vocab_size = static_cast<int>(to_int(key, v));
    else if (key == "data.synth.anchor_fraction")
      m.synth.anchor_fraction = to_double(key, v);
    else if (key == "data.synth.sentences")
      m.synth.sentences_per_language = static_cast<int>(to_int(key, v));
    else if (key == "data.synth.labels")
      m.synth.num_labels = static_cast<int>(to_int(key, v));
    else if (key == "data.synth.seed")
      m.synth.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "backend.checkpoint") m.checkpoint = v;
    else if (key == "backend.feature_dim")
      m.feature_dim = static_cast<int>(to_int(key, v));
    else if (key == "output.dir") m.out_dir = v;
    else if (key.rfind("decisions.d", 0) == 0) {
      if (!decisions_given) m.decisions.clear();
      decisions_given = true;
      m.decisions.push_back(v);
    } else {
      throw UnknownKey("unknown config key: " + key);
    }
  }

  if (!decisions_given) m.decisions = default_decisions();
  if (m.data_dir.empty())
    if (const char* env = std::getenv("PROFIT_DATA_DIR")) m.data_dir = env;
  return m;
}

ExperimentManifest parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingFile("cannot open config: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

std::string manifest_text(const ExperimentManifest& m) {
  std::ostringstream os;
  os << "[manifest]\nversion = " << m.version << "\n\n[run]\n";
  os << "task = " << m.run.task_id << "\n";
  os << "method = " << method_name(m.run.method) << "\n";
  os << "seed = " << m.run.seed << "\n";
  if (!m.seeds.empty()) {
    os << "seeds = ";
    for (std::size_t i = 0; i < m.seeds.size(); ++i)
      os << (i ? "," : "") << m.seeds[i];
    os << "\n";
  }
  os << "k = " << (m.run.k == kFullData ? "FULL" : std::to_string(m.run.k)) << "\n";
  os << "epochs = " << m.run.epochs << "\n";
  os << "learning_rate = " << m.run.lr << "\n";
  os << "batch_size = " << m.run.batch_size << "\n";
  os << "grad_accum_steps = " << m.run.grad_accum_steps << "\n";
  os << "max_seq_length = " << m.run.max_seq_length << "\n";
  os << "early_stopping_patience = " << m.run.early_stopping_patience << "\n";
  if (!m.run_id.empty()) os << "run_id = " << m.run_id << "\n";
  os << "\n[data]\n";
  if (!m.data_dir.empty()) os << "dir = " << m.data_dir << "\n";
  if (!m.train_path.empty()) os << "train = " << m.train_path << "\n";
  if (!m.dev_path.empty()) os << "dev = " << m.dev_path << "\n";
  for (const auto& [lang, path] : m.test_paths)
    os << "test." << lang << " = " << path << "\n";
  os << "synth = " << (m.use_synth ? "true" : "false") << "\n";
  os << "synth.languages = " << m.synth.num_languages << "\n";
  os << "synth.vocab = " << m.synth.vocab_size << "\n";
  os << "synth.anchor_fraction = " << m.synth.anchor_fraction << "\n";
  os << "synth.sentences = " << m.synth.sentences_per_language << "\n";
  os << "synth.labels = " << m.synth.num_labels << "\n";
  os << "synth.seed = " << m.synth.seed << "\n";
  os << "\n[backend]\n";
  if (!m.checkpoint.empty()) os << "checkpoint = " << m.checkpoint << "\n";
  os << "feature_dim = " << m.feature_dim << "\n";
  os << "\n[output]\ndir = " << m.out_dir << "\n";
  os << "\n[decisions]\n";
  for (std::size_t i = 0; i < m.decisions.size(); ++i)
    os << "d" << i << " = " << m.decisions[i] << "\n";
  return os.str();
}

bool operator==(const ExperimentManifest& a, const ExperimentManifest& b) {
  return a.version == b.version && a.run.task_id == b.run.task_id &&
         a.run.method == b.run.method && a.run.seed == b.run.seed &&
         a.run.k == b.run.k && a.run.epochs == b.run.epochs && a.run.lr == b.run.lr &&
         a.run.batch_size == b.run.batch_size &&
         a.run.grad_accum_steps == b.run.grad_accum_steps &&
         a.run.max_seq_length == b.run.max_seq_length &&
         a.run.early_stopping_patience == b.run.early_stopping_patience &&
         a.seeds == b.seeds && a.run_id == b.run_id && a.data_dir == b.data_dir &&
         a.train_path == b.train_path && a.dev_path == b.dev_path &&
         a.test_paths == b.test_paths && a.use_synth == b.use_synth &&
         a.synth.num_languages == b.synth.num_languages &&
         a.synth.vocab_size == b.synth.vocab_size &&
         a.synth.anchor_fraction == b.synth.anchor_fraction &&
         a.synth.sentences_per_language == b.synth.sentences_per_language &&
         a.synth.num_labels == b.synth.num_labels && a.synth.seed == b.synth.seed &&
         a.checkpoint == b.checkpoint && a.feature_dim == b.feature_dim &&
         a.out_dir == b.out_dir && a.decisions == b.decisions;
}

}  // namespace profit
