#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "profit/backend.hpp"

namespace testutil {

// Independent SplitMix64 reference, written from the published definition
// rather than shared with the library.
struct OracleSplitMix64 {
  std::uint64_t x;
  explicit OracleSplitMix64(std::uint64_t seed) : x(seed) {}
  std::uint64_t operator()() {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

inline std::vector<std::size_t> oracle_shuffle(std::size_t n, OracleSplitMix64& rng) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
  return v;
}

// Backend with a prescribed, input-independent mask distribution; lets
// tests pin exact probabilities. No trainable state.
class FixedBackend : public profit::BackendModel {
 public:
  FixedBackend(std::vector<std::string> vocab, Eigen::VectorXd mask_dist)
      : vocab_(std::move(vocab)), mask_dist_(std::move(mask_dist)) {}

  std::string name() const override { return "fixed"; }
  const std::string& mask_token() const override { return mask_; }
  int vocab_size() const override { return static_cast<int>(vocab_.size()); }
  int vocab_id(const std::string& word) const override {
    for (std::size_t i = 0; i < vocab_.size(); ++i)
      if (vocab_[i] == word) return static_cast<int>(i);
    return -1;
  }
  Eigen::VectorXd mask_distribution(const std::vector<std::string>&) const override {
    return mask_dist_;
  }
  Eigen::VectorXd cls_distribution(const std::vector<std::string>&,
                                   const std::string&, int num_labels) const override {
    if (cls_dist_.size() == num_labels) return cls_dist_;
    return Eigen::VectorXd::Constant(num_labels, 1.0 / num_labels);
  }
  Eigen::VectorXd gradient(const std::vector<profit::TrainItem>& batch, profit::Head,
                           const std::string&, int) const override {
    if (batch.empty()) throw profit::EmptyBatch("empty batch");
    return Eigen::VectorXd::Zero(1);
  }
  void sgd_step(const Eigen::VectorXd&, profit::Head, const std::string&, int,
                double) override {}
  Eigen::VectorXd head_parameters(profit::Head, const std::string&,
                                  int) const override {
    return Eigen::VectorXd::Zero(1);
  }
  void set_head_parameters(profit::Head, const std::string&, int,
                           const Eigen::VectorXd&) override {}
  Eigen::VectorXd parameters() const override { return Eigen::VectorXd::Zero(1); }
  std::unique_ptr<profit::BackendModel> clone() const override {
    return std::make_unique<FixedBackend>(*this);
  }

  void set_cls(Eigen::VectorXd d) { cls_dist_ = std::move(d); }

 private:
  std::string mask_ = "[MASK]";
  std::vector<std::string> vocab_;
  Eigen::VectorXd mask_dist_;
  Eigen::VectorXd cls_dist_;
};

}  // namespace testutil
