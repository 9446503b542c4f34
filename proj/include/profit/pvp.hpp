#pragma once

#include <optional>
#include <string>
#include <vector>

#include "profit/backend.hpp"
#include "profit/errors.hpp"

namespace profit {

// One piece of a prompt template: literal text, an input slot {1}/{2}, or
// the abstract mask slot {MASK} (rendered with the backend's mask token).
struct PatternPart {
  enum class Kind { Literal, Input, Mask };
  Kind kind = Kind::Literal;
  std::string text;  // Literal only
  int slot = 0;      // Input only, 1-based
};

struct PatternVerbalizerPair {
  std::vector<PatternPart> parts;
  std::vector<std::string> verbalizer;  // label id -> word
  std::string task_id;

  // Parses "{1}", "{2}" and "{MASK}" placeholders.
  static std::vector<PatternPart> parse_template(const std::string& tpl);
  std::string template_string() const;

  // Exactly one mask slot, injective verbalizer with >= 2 labels, slots
  // within arity.
  void validate(int arity) const;
};

struct Example {
  std::vector<std::string> segments;
  std::optional<int> label;
  std::string language;
};

struct TaskSpec {
  std::string task_id;
  int arity = 1;
  int num_labels = 2;
  PatternVerbalizerPair pvp;
  std::vector<std::string> label_names;
};

// Built-in task specs: "amazon", "pawsx", "xnli".
TaskSpec builtin_task(const std::string& task_id);
bool is_builtin_task(const std::string& task_id);

std::string task_to_text(const TaskSpec& task);
TaskSpec task_from_text(const std::string& text);
TaskSpec load_task_file(const std::string& path);

// Fills the template with the example's segments and renders the mask with
// the backend's mask token. Input segments are truncated token-by-token
// (longer segment first, alternating on ties) until the tokenized result
// fits max_len; pattern literals and the mask are never truncated.
std::string apply_pattern(const PatternVerbalizerPair& pvp, const Example& example,
                          const BackendModel& backend, int max_len);

const std::string& verbalize(const PatternVerbalizerPair& pvp, int label);
int inverse_verbalize(const PatternVerbalizerPair& pvp, const std::string& word);

// One vocabulary id per label, in label order.
std::vector<int> candidate_token_ids(const PatternVerbalizerPair& pvp,
                                     const BackendModel& backend);

// argmax over labels of the mask-position probability of the verbalized
// word; ties break to the lowest label id.
int predict_label(const BackendModel& backend, const PatternVerbalizerPair& pvp,
                  const Example& example, int max_len);

// Mean over the batch of -log p(v(y)) under the full-vocabulary mask
// distribution.
double verbalizer_loss(const BackendModel& backend, const PatternVerbalizerPair& pvp,
                       const std::vector<Example>& batch, int max_len);

}  // namespace profit
