#include "profit/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "profit/prng.hpp"

namespace profit {

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
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

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

Dataset load_tsv(const std::string& path, const TaskSpec& task,
                 const std::string& language, Split split) {
  std::ifstream is(path);
  if (!is) throw MissingFile("cannot open dataset: " + path);
  Dataset ds;
  ds.task_id = task.task_id;
  ds.language = language;
  ds.split = split;

  const std::size_t fields = static_cast<std::size_t>(task.arity) + 1;
  std::string line;
  if (!std::getline(is, line))
    throw MalformedRow(path + ": missing header row");
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> cells = split_tabs(line);
    if (cells.size() != fields)
      throw MalformedRow(path + ":" + std::to_string(lineno) + ": expected " +
                         std::to_string(fields) + " tab-separated fields, got " +
                         std::to_string(cells.size()));
    Example ex;
    ex.language = language;
    for (int i = 0; i < task.arity; ++i) ex.segments.push_back(cells[static_cast<std::size_t>(i)]);
    const std::string& lab = cells.back();
    int label;
    try {
      std::size_t pos = 0;
      label = std::stoi(lab, &pos);
      if (pos != lab.size()) throw std::invalid_argument(lab);
    } catch (const std::exception&) {
      throw MalformedRow(path + ":" + std::to_string(lineno) +
                         ": label is not an integer: '" + lab + "'");
    }
    if (label < 0 || label >= task.num_labels)
      throw LabelOutOfRange(path + ":" + std::to_string(lineno) + ": label " +
                            std::to_string(label) + " outside [0," +
                            std::to_string(task.num_labels - 1) + "]");
    ex.label = label;
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

void save_tsv(const Dataset& dataset, const std::string& path, int arity) {
  std::ofstream os(path);
  if (!os) throw MissingFile("cannot open for writing: " + path);
  os << (arity == 2 ? "seg1\tseg2\tlabel\n" : "seg1\tlabel\n");
  for (const Example& ex : dataset.examples) {
    for (const std::string& seg : ex.segments) {
      if (seg.find('\t') != std::string::npos)
        throw MalformedRow("segment contains a tab character");
      os << seg << '\t';
    }
    os << (ex.label ? *ex.label : -1) << '\n';
  }
}

std::pair<Dataset, Dataset> sample_few_shot(const Dataset& train, int k,
                                            std::uint64_t seed, int num_labels) {
  if (k <= 0) throw ConfigInvalid("sample_few_shot: K must be positive");
  Prng prng(stream_seed(seed, "fewshot"));
  Dataset few_train{train.task_id, train.language, Split::Train, {}};
  Dataset few_dev{train.task_id, train.language, Split::Dev, {}};
  for (int label = 0; label < num_labels; ++label) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < train.examples.size(); ++i)
      if (train.examples[i].label && *train.examples[i].label == label)
        idx.push_back(i);
    if (static_cast<int>(idx.size()) < 2 * k)
      throw InsufficientExamples("class " + std::to_string(label) + " has " +
                                 std::to_string(idx.size()) + " examples, need " +
                                 std::to_string(2 * k));
    fisher_yates(idx, prng);
    for (int j = 0; j < k; ++j)
      few_train.examples.push_back(train.examples[idx[static_cast<std::size_t>(j)]]);
    for (int j = k; j < 2 * k; ++j)
      few_dev.examples.push_back(train.examples[idx[static_cast<std::size_t>(j)]]);
  }
  return {std::move(few_train), std::move(few_dev)};
}

const std::vector<int>& canonical_shot_counts() {
  static const std::vector<int> k = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  return k;
}

void SynthConfig::validate() const {
  if (num_languages < 1 || vocab_size < num_labels * 4 || num_labels < 2 ||
      sentences_per_language < num_labels * 2 || anchor_fraction < 0.0 ||
      anchor_fraction > 1.0)
    throw ConfigInvalid("synth config out of range");
}

std::string synth_language_name(int index) {
  return index == 0 ? "en" : "l" + std::to_string(index);
}

namespace {

// Sentence over abstract word ids; rendered per language below.
struct AbstractSentence {
  std::vector<int> words;
  int label;
};

}  // namespace

SynthCorpus synth_corpus(const SynthConfig& cfg) {
  cfg.validate();
  const int v = cfg.vocab_size;
  const int l = cfg.num_labels;
  constexpr int kKeywordsPerLabel = 2;

  // Anchor subset: words that keep their surface form in every language.
  Prng anchor_prng(stream_seed(cfg.seed, "synth-anchors"));
  std::vector<std::size_t> order = shuffled_indices(static_cast<std::size_t>(v), anchor_prng);
  const int num_anchors = static_cast<int>(cfg.anchor_fraction * v);
  std::vector<bool> is_anchor(static_cast<std::size_t>(v), false);
  for (int i = 0; i < num_anchors; ++i) is_anchor[order[static_cast<std::size_t>(i)]] = true;

  // Seeded keyword-label association; the rest of the vocabulary is filler.
  Prng label_prng(stream_seed(cfg.seed, "synth-labelwords"));
  std::vector<std::size_t> word_order = shuffled_indices(static_cast<std::size_t>(v), label_prng);
  std::vector<std::vector<int>> keywords(static_cast<std::size_t>(l));
  std::vector<int> filler;
  for (int i = 0; i < v; ++i) {
    int w = static_cast<int>(word_order[static_cast<std::size_t>(i)]);
    if (i < l * kKeywordsPerLabel)
      keywords[static_cast<std::size_t>(i / kKeywordsPerLabel)].push_back(w);
    else
      filler.push_back(w);
  }

  auto surface = [&](int word, int lang) {
    std::string s = "w" + std::to_string(word);
    if (lang > 0 && !is_anchor[static_cast<std::size_t>(word)])
      s += "x" + std::to_string(lang);
    return s;
  };

  Prng gen(stream_seed(cfg.seed, "synth-sentences"));
  auto make_sentence = [&](int label) {
    AbstractSentence s;
    s.label = label;
    const auto& kw = keywords[static_cast<std::size_t>(label)];
    std::size_t len = 5 + gen.next_below(4);
    for (std::size_t i = 0; i < len; ++i) {
      bool key = i == 0 || gen.next_unit() < 0.5;
      if (key)
        s.words.push_back(kw[gen.next_below(kw.size())]);
      else
        s.words.push_back(filler[gen.next_below(filler.size())]);
    }
    return s;
  };
  auto make_pool = [&](int count) {
    std::vector<AbstractSentence> pool;
    for (int i = 0; i < count; ++i) pool.push_back(make_sentence(i % l));
    return pool;
  };
  const int dev_count = std::max(2 * l, cfg.sentences_per_language / 5);
  const int test_count = std::max(2 * l, cfg.sentences_per_language / 2);
  std::vector<AbstractSentence> train_pool = make_pool(cfg.sentences_per_language);
  std::vector<AbstractSentence> dev_pool = make_pool(dev_count);
  std::vector<AbstractSentence> test_pool = make_pool(test_count);

  auto render_text = [&](const AbstractSentence& s, int lang) {
    std::string text;
    for (std::size_t i = 0; i < s.words.size(); ++i) {
      if (i) text += ' ';
      text += surface(s.words[i], lang);
    }
    return text;
  };
  auto render_dataset = [&](const std::vector<AbstractSentence>& pool, int lang,
                            Split split) {
    Dataset ds{"synth", synth_language_name(lang), split, {}};
    for (const AbstractSentence& s : pool) {
      Example ex;
      ex.segments = {render_text(s, lang)};
      ex.label = s.label;
      ex.language = ds.language;
      ds.examples.push_back(std::move(ex));
    }
    return ds;
  };

  SynthCorpus out;
  std::vector<std::string> words;
  for (int y = 0; y < l; ++y) words.push_back("lab" + std::to_string(y));
  std::vector<std::string> names;
  for (int y = 0; y < l; ++y) names.push_back("c" + std::to_string(y));
  out.task = TaskSpec{};
  out.task.task_id = "synth";
  out.task.arity = 1;
  out.task.num_labels = l;
  out.task.pvp.task_id = "synth";
  out.task.pvp.parts = PatternVerbalizerPair::parse_template("{1} It was {MASK}.");
  out.task.pvp.verbalizer = words;
  out.task.label_names = names;
  out.task.pvp.validate(1);

  out.train = render_dataset(train_pool, 0, Split::Train);
  out.dev = render_dataset(dev_pool, 0, Split::Dev);
  for (int lang = 0; lang < cfg.num_languages; ++lang)
    out.tests.push_back(render_dataset(test_pool, lang, Split::Test));

  // Pretraining corpus: raw sentences in every language, plus the source
  // training prompts with the verbalizer word filled in. Target-language
  // keywords never co-occur with label words, so cross-lingual signal
  // flows through anchors only.
  for (int lang = 0; lang < cfg.num_languages; ++lang)
    for (const AbstractSentence& s : train_pool)
      out.pretrain.push_back(render_text(s, lang));
  for (const AbstractSentence& s : train_pool)
    out.pretrain.push_back(render_text(s, 0) + " It was " +
                           words[static_cast<std::size_t>(s.label)] + ".");

  for (int w = 0; w < v; ++w)
    if (is_anchor[static_cast<std::size_t>(w)]) out.anchors.push_back(surface(w, 0));
  return out;
}

}  // namespace profit
