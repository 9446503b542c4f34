#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "profit/errors.hpp"

namespace profit {

enum class Head { Mlm, Cls };

// One training observation: already-tokenized input plus the target id
// (a vocabulary id for the MLM head, a label id for the CLS head).
struct TrainItem {
  std::vector<std::string> tokens;
  int target = -1;
};

// Byte span of one token in the original text.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Splits on whitespace, separates punctuation into single-char tokens and
// keeps occurrences of mask_token atomic. Spans index into text.
std::vector<TokenSpan> token_spans(const std::string& text,
                                   const std::string& mask_token);

// Masked-LM / classification-head contract. Anything implementing this is
// interchangeable across the whole pipeline.
class BackendModel {
 public:
  virtual ~BackendModel() = default;

  virtual std::string name() const = 0;
  virtual const std::string& mask_token() const = 0;
  virtual int vocab_size() const = 0;
  // -1 when the word is not in the vocabulary.
  virtual int vocab_id(const std::string& word) const = 0;

  // Lowercased tokens of text; mask tokens preserved verbatim.
  virtual std::vector<std::string> tokenize(const std::string& text) const;

  // Longest prefix of text spanning at most n_tokens tokens.
  virtual std::string token_prefix(const std::string& text, int n_tokens) const;

  // Probability vector over the vocabulary for the single mask position.
  virtual Eigen::VectorXd mask_distribution(
      const std::vector<std::string>& tokens) const = 0;

  // Probability vector over num_labels task labels; the head is created
  // zero-initialized on first use.
  virtual Eigen::VectorXd cls_distribution(const std::vector<std::string>& tokens,
                                           const std::string& task_id,
                                           int num_labels) const = 0;

  // Analytic gradient of the mean cross-entropy over the batch, flattened
  // to the addressed head's parameter layout.
  virtual Eigen::VectorXd gradient(const std::vector<TrainItem>& batch, Head head,
                                   const std::string& task_id,
                                   int num_labels) const = 0;

  // theta <- theta - lr * grad on the addressed head.
  virtual void sgd_step(const Eigen::VectorXd& grad, Head head,
                        const std::string& task_id, int num_labels, double lr) = 0;

  virtual Eigen::VectorXd head_parameters(Head head, const std::string& task_id,
                                          int num_labels) const = 0;
  virtual void set_head_parameters(Head head, const std::string& task_id,
                                   int num_labels, const Eigen::VectorXd& params) = 0;

  // All parameters (MLM head followed by task heads) as one flat vector.
  virtual Eigen::VectorXd parameters() const = 0;

  virtual std::unique_ptr<BackendModel> clone() const = 0;

  std::uint64_t parameter_hash() const;
};

std::uint64_t hash_vector(const Eigen::VectorXd& v);

// Deterministic trainable stand-in for a multilingual masked LM: hashed
// bag-of-context features into a linear softmax layer per head.
class ReferenceBackend : public BackendModel {
 public:
  static constexpr int kDefaultFeatureDim = 4096;

  // Vocabulary = [MASK], [UNK], then corpus tokens in first-appearance
  // order. All weights start at zero.
  explicit ReferenceBackend(const std::vector<std::string>& corpus,
                            int feature_dim = kDefaultFeatureDim);

  std::string name() const override { return "reference"; }
  const std::string& mask_token() const override { return mask_token_; }
  int vocab_size() const override { return static_cast<int>(vocab_.size()); }
  int vocab_id(const std::string& word) const override;
  int feature_dim() const { return dim_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }

  Eigen::VectorXd mask_distribution(
      const std::vector<std::string>& tokens) const override;
  Eigen::VectorXd cls_distribution(const std::vector<std::string>& tokens,
                                   const std::string& task_id,
                                   int num_labels) const override;
  Eigen::VectorXd gradient(const std::vector<TrainItem>& batch, Head head,
                           const std::string& task_id, int num_labels) const override;
  void sgd_step(const Eigen::VectorXd& grad, Head head, const std::string& task_id,
                int num_labels, double lr) override;
  Eigen::VectorXd head_parameters(Head head, const std::string& task_id,
                                  int num_labels) const override;
  void set_head_parameters(Head head, const std::string& task_id, int num_labels,
                           const Eigen::VectorXd& params) override;
  Eigen::VectorXd parameters() const override;
  std::unique_ptr<BackendModel> clone() const override;

  // Hashed bag of tokens; skip_mask drops mask tokens from the bag.
  std::vector<std::pair<int, double>> featurize(
      const std::vector<std::string>& tokens, bool skip_mask) const;

  void save(const std::string& path) const;
  static ReferenceBackend load(const std::string& path);

 private:
  ReferenceBackend() = default;

  struct ClsHead {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
  };
  ClsHead& ensure_head(const std::string& task_id, int num_labels) const;

  std::string mask_token_ = "[MASK]";
  std::string unk_token_ = "[UNK]";
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> ids_;
  int dim_ = kDefaultFeatureDim;
  Eigen::MatrixXd w_;  // V x D
  Eigen::VectorXd b_;  // V
  mutable std::map<std::string, ClsHead> heads_;
};

struct PretrainConfig {
  int epochs = 10;
  double lr = 0.1;
  std::uint64_t seed = 1;
  int feature_dim = ReferenceBackend::kDefaultFeatureDim;
};

// Builds the vocabulary from the corpus, then runs MLM SGD over one masked
// example per (sentence, position). Deterministic given config.seed.
ReferenceBackend pretrain_reference(const std::vector<std::string>& corpus,
                                    const PretrainConfig& config);

}  // namespace profit
