#include "profit/pvp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace profit {

std::vector<PatternPart> PatternVerbalizerPair::parse_template(
    const std::string& tpl) {
  std::vector<PatternPart> parts;
  std::string literal;
  auto flush = [&] {
    if (!literal.empty()) {
      parts.push_back({PatternPart::Kind::Literal, literal, 0});
      literal.clear();
    }
  };
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl.compare(i, 3, "{1}") == 0 || tpl.compare(i, 3, "{2}") == 0) {
      flush();
      parts.push_back({PatternPart::Kind::Input, "", tpl[i + 1] - '0'});
      i += 3;
    } else if (tpl.compare(i, 6, "{MASK}") == 0) {
      flush();
      parts.push_back({PatternPart::Kind::Mask, "", 0});
      i += 6;
    } else {
      literal += tpl[i++];
    }
  }
  flush();
  return parts;
}

std::string PatternVerbalizerPair::template_string() const {
  std::string out;
  for (const PatternPart& p : parts) {
    switch (p.kind) {
      case PatternPart::Kind::Literal: out += p.text; break;
      case PatternPart::Kind::Input: out += "{" + std::to_string(p.slot) + "}"; break;
      case PatternPart::Kind::Mask: out += "{MASK}"; break;
    }
  }
  return out;
}

void PatternVerbalizerPair::validate(int arity) const {
  int masks = 0;
  for (const PatternPart& p : parts) {
    if (p.kind == PatternPart::Kind::Mask) ++masks;
    if (p.kind == PatternPart::Kind::Input && (p.slot < 1 || p.slot > arity))
      throw ArityMismatch("pattern references slot " + std::to_string(p.slot) +
                          " but task arity is " + std::to_string(arity));
  }
  if (masks != 1)
    throw ConfigInvalid("pattern must contain exactly one mask slot, found " +
                        std::to_string(masks));
  if (verbalizer.size() < 2)
    throw ConfigInvalid("verbalizer needs at least 2 labels");
  std::set<std::string> distinct(verbalizer.begin(), verbalizer.end());
  if (distinct.size() != verbalizer.size())
    throw ConfigInvalid("verbalizer words must be distinct");
}

namespace {

TaskSpec make_task(std::string id, int arity, std::string tpl,
                   std::vector<std::string> words,
                   std::vector<std::string> label_names) {
  TaskSpec t;
  t.task_id = id;
  t.arity = arity;
  t.num_labels = static_cast<int>(words.size());
  t.pvp.task_id = std::move(id);
  t.pvp.parts = PatternVerbalizerPair::parse_template(tpl);
  t.pvp.verbalizer = std::move(words);
  t.label_names = std::move(label_names);
  t.pvp.validate(t.arity);
  return t;
}

}  // namespace

TaskSpec builtin_task(const std::string& task_id) {
  // Star labels 1-5 map to ids 0-4.
  if (task_id == "amazon")
    return make_task("amazon", 1, "{1} All in all, it was {MASK}.",
                     {"terrible", "bad", "ok", "good", "great"},
                     {"1", "2", "3", "4", "5"});
  if (task_id == "pawsx")
    return make_task("pawsx", 2, "{1}? {MASK}, {2}", {"Wrong", "Right"},
                     {"not-paraphrase", "paraphrase"});
  if (task_id == "xnli")
    return make_task("xnli", 2, "{1}? {MASK}, {2}", {"Yes", "Maybe", "No"},
                     {"entailment", "neutral", "contradiction"});
  throw ConfigInvalid("unknown built-in task: " + task_id);
}

bool is_builtin_task(const std::string& task_id) {
  return task_id == "amazon" || task_id == "pawsx" || task_id == "xnli";
}

namespace {

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::string task_to_text(const TaskSpec& task) {
  std::ostringstream os;
  os << "task_id = " << task.task_id << "\n"
     << "arity = " << task.arity << "\n"
     << "num_labels = " << task.num_labels << "\n"
     << "pattern = " << task.pvp.template_string() << "\n"
     << "labels = " << join(task.label_names, ",") << "\n"
     << "verbalizer = " << join(task.pvp.verbalizer, ",") << "\n";
  return os.str();
}

TaskSpec task_from_text(const std::string& text) {
  TaskSpec t;
  bool have_pattern = false;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid("task file: expected key = value, got: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "task_id") {
      t.task_id = value;
      t.pvp.task_id = value;
    } else if (key == "arity") {
      t.arity = std::stoi(value);
    } else if (key == "num_labels") {
      t.num_labels = std::stoi(value);
    } else if (key == "pattern") {
      t.pvp.parts = PatternVerbalizerPair::parse_template(value);
      have_pattern = true;
    } else if (key == "labels") {
      t.label_names = split(value, ',');
    } else if (key == "verbalizer") {
      t.pvp.verbalizer = split(value, ',');
    } else {
      throw UnknownKey("task file: unknown key '" + key + "'");
    }
  }
  if (t.task_id.empty() || !have_pattern || t.pvp.verbalizer.empty())
    throw ConfigInvalid("task file: task_id, pattern and verbalizer are required");
  if (t.num_labels != static_cast<int>(t.pvp.verbalizer.size()))
    throw ConfigInvalid("task file: num_labels does not match verbalizer size");
  if (t.label_names.empty())
    for (int i = 0; i < t.num_labels; ++i) t.label_names.push_back(std::to_string(i));
  t.pvp.validate(t.arity);
  return t;
}

TaskSpec load_task_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingFile("cannot open task file: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return task_from_text(os.str());
}

std::string apply_pattern(const PatternVerbalizerPair& pvp, const Example& example,
                          const BackendModel& backend, int max_len) {
  int max_slot = 0;
  int masks = 0;
  std::size_t literal_tokens = 0;
  for (const PatternPart& p : pvp.parts) {
    if (p.kind == PatternPart::Kind::Input) max_slot = std::max(max_slot, p.slot);
    if (p.kind == PatternPart::Kind::Mask) ++masks;
    if (p.kind == PatternPart::Kind::Literal)
      literal_tokens += token_spans(p.text, backend.mask_token()).size();
  }
  if (masks != 1)
    throw ConfigInvalid("pattern must contain exactly one mask slot");
  if (static_cast<int>(example.segments.size()) != max_slot)
    throw ArityMismatch("example has " + std::to_string(example.segments.size()) +
                        " segments, pattern uses " + std::to_string(max_slot));
  const int fixed = static_cast<int>(literal_tokens) + 1;  // literals + mask
  if (fixed > max_len)
    throw PatternOverflow("pattern literals and mask need " + std::to_string(fixed) +
                          " tokens, max_len is " + std::to_string(max_len));

  std::vector<int> kept;
  int total = 0;
  for (const std::string& seg : example.segments) {
    int n = static_cast<int>(token_spans(seg, backend.mask_token()).size());
    kept.push_back(n);
    total += n;
  }
  const int budget = max_len - fixed;
  int tie_turn = 0;
  while (total > budget) {
    int cut;
    if (kept.size() == 1) {
      cut = 0;
    } else if (kept[0] != kept[1]) {
      cut = kept[0] > kept[1] ? 0 : 1;
    } else {
      cut = tie_turn;
      tie_turn ^= 1;
    }
    --kept[cut];
    --total;
  }

  std::vector<std::string> seg_text;
  for (std::size_t i = 0; i < example.segments.size(); ++i) {
    const std::string& seg = example.segments[i];
    int orig = static_cast<int>(token_spans(seg, backend.mask_token()).size());
    seg_text.push_back(kept[i] == orig ? seg : backend.token_prefix(seg, kept[i]));
  }

  std::string out;
  for (const PatternPart& p : pvp.parts) {
    switch (p.kind) {
      case PatternPart::Kind::Literal: out += p.text; break;
      case PatternPart::Kind::Input: out += seg_text[p.slot - 1]; break;
      case PatternPart::Kind::Mask: out += backend.mask_token(); break;
    }
  }
  return out;
}

const std::string& verbalize(const PatternVerbalizerPair& pvp, int label) {
  if (label < 0 || label >= static_cast<int>(pvp.verbalizer.size()))
    throw UnknownLabel("label " + std::to_string(label) + " outside verbalizer domain of size " +
                       std::to_string(pvp.verbalizer.size()));
  return pvp.verbalizer[static_cast<std::size_t>(label)];
}

int inverse_verbalize(const PatternVerbalizerPair& pvp, const std::string& word) {
  for (std::size_t i = 0; i < pvp.verbalizer.size(); ++i)
    if (pvp.verbalizer[i] == word) return static_cast<int>(i);
  throw UnknownLabel("word '" + word + "' is not a verbalizer word");
}

std::vector<int> candidate_token_ids(const PatternVerbalizerPair& pvp,
                                     const BackendModel& backend) {
  std::vector<int> ids;
  for (const std::string& word : pvp.verbalizer) {
    std::vector<std::string> toks = backend.tokenize(word);
    if (toks.size() != 1)
      throw VerbalizerNotSingleToken("verbalizer word '" + word +
                                     "' does not tokenize to a single token");
    int id = backend.vocab_id(toks[0]);
    if (id < 0)
      throw VerbalizerNotSingleToken("verbalizer word '" + word +
                                     "' is not in the backend vocabulary");
    ids.push_back(id);
  }
  std::set<int> distinct(ids.begin(), ids.end());
  if (distinct.size() != ids.size())
    throw VerbalizerNotSingleToken("verbalizer words collide in the backend vocabulary");
  return ids;
}

int predict_label(const BackendModel& backend, const PatternVerbalizerPair& pvp,
                  const Example& example, int max_len) {
  std::vector<int> cand = candidate_token_ids(pvp, backend);
  std::string prompt = apply_pattern(pvp, example, backend, max_len);
  Eigen::VectorXd p = backend.mask_distribution(backend.tokenize(prompt));
  int best = 0;
  for (std::size_t y = 1; y < cand.size(); ++y)
    if (p[cand[y]] > p[cand[best]]) best = static_cast<int>(y);
  return best;
}

double verbalizer_loss(const BackendModel& backend, const PatternVerbalizerPair& pvp,
                       const std::vector<Example>& batch, int max_len) {
  if (batch.empty()) throw EmptyBatch("verbalizer_loss: empty batch");
  std::vector<int> cand = candidate_token_ids(pvp, backend);
  double sum = 0.0;
  for (const Example& ex : batch) {
    if (!ex.label)
      throw UnknownLabel("verbalizer_loss: unlabeled example in batch");
    verbalize(pvp, *ex.label);  // range check
    std::string prompt = apply_pattern(pvp, ex, backend, max_len);
    Eigen::VectorXd p = backend.mask_distribution(backend.tokenize(prompt));
    sum += -std::log(p[cand[static_cast<std::size_t>(*ex.label)]]);
  }
  return sum / static_cast<double>(batch.size());
}

}  // namespace profit
