#include "profit/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "profit/prng.hpp"

namespace profit {

std::vector<TokenSpan> token_spans(const std::string& text,
                                   const std::string& mask_token) {
  std::vector<TokenSpan> spans;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (!mask_token.empty() && text.compare(i, mask_token.size(), mask_token) == 0) {
      spans.push_back({i, i + mask_token.size()});
      i += mask_token.size();
      continue;
    }
    if (std::isalnum(c) || c >= 0x80) {
      // Word run; non-ASCII bytes are treated as word characters.
      std::size_t j = i;
      while (j < n) {
        unsigned char d = static_cast<unsigned char>(text[j]);
        if (!(std::isalnum(d) || d >= 0x80)) break;
        ++j;
      }
      spans.push_back({i, j});
      i = j;
    } else {
      spans.push_back({i, i + 1});
      ++i;
    }
  }
  return spans;
}

std::vector<std::string> BackendModel::tokenize(const std::string& text) const {
  std::vector<std::string> out;
  for (const TokenSpan& s : token_spans(text, mask_token())) {
    std::string tok = text.substr(s.begin, s.end - s.begin);
    if (tok != mask_token()) {
      for (char& ch : tok)
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    out.push_back(std::move(tok));
  }
  return out;
}

std::string BackendModel::token_prefix(const std::string& text, int n_tokens) const {
  if (n_tokens <= 0) return "";
  std::vector<TokenSpan> spans = token_spans(text, mask_token());
  if (static_cast<int>(spans.size()) <= n_tokens) return text;
  return text.substr(0, spans[static_cast<std::size_t>(n_tokens) - 1].end);
}

std::uint64_t hash_vector(const Eigen::VectorXd& v) {
  std::uint64_t h = hash_bytes("vec");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    double x = v[i];
    std::memcpy(&bits, &x, sizeof bits);
    h = mix64(h ^ bits) + kGolden;
  }
  return h;
}

std::uint64_t BackendModel::parameter_hash() const {
  return hash_vector(parameters());
}

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd z = (logits.array() - logits.maxCoeff()).exp();
  return z / z.sum();
}

int count_masks(const std::vector<std::string>& tokens, const std::string& mask) {
  int c = 0;
  for (const auto& t : tokens) c += (t == mask);
  return c;
}

}  // namespace

ReferenceBackend::ReferenceBackend(const std::vector<std::string>& corpus,
                                   int feature_dim)
    : dim_(feature_dim) {
  vocab_ = {mask_token_, unk_token_};
  ids_ = {{mask_token_, 0}, {unk_token_, 1}};
  for (const std::string& sentence : corpus) {
    for (const std::string& tok : tokenize(sentence)) {
      if (ids_.emplace(tok, static_cast<int>(vocab_.size())).second)
        vocab_.push_back(tok);
    }
  }
  w_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocab_.size()), dim_);
  b_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab_.size()));
}

int ReferenceBackend::vocab_id(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? -1 : it->second;
}

std::vector<std::pair<int, double>> ReferenceBackend::featurize(
    const std::vector<std::string>& tokens, bool skip_mask) const {
  std::unordered_map<int, double> counts;
  for (const std::string& tok : tokens) {
    if (skip_mask && tok == mask_token_) continue;
    int bucket = static_cast<int>(hash_bytes(tok) % static_cast<std::uint64_t>(dim_));
    counts[bucket] += 1.0;
  }
  std::vector<std::pair<int, double>> feat(counts.begin(), counts.end());
  // Bucket order must not affect arithmetic; sort so summation order is fixed.
  std::sort(feat.begin(), feat.end());
  return feat;
}

Eigen::VectorXd ReferenceBackend::mask_distribution(
    const std::vector<std::string>& tokens) const {
  int masks = count_masks(tokens, mask_token_);
  if (masks == 0) throw NoMask("mask_distribution: no mask token in input");
  if (masks > 1) throw MultipleMasks("mask_distribution: more than one mask token");
  auto feat = featurize(tokens, /*skip_mask=*/true);
  Eigen::VectorXd logits = b_;
  for (auto [bucket, value] : feat) logits += value * w_.col(bucket);
  return softmax(logits);
}

ReferenceBackend::ClsHead& ReferenceBackend::ensure_head(const std::string& task_id,
                                                         int num_labels) const {
  auto it = heads_.find(task_id);
  if (it == heads_.end()) {
    ClsHead head;
    head.w = Eigen::MatrixXd::Zero(num_labels, dim_);
    head.b = Eigen::VectorXd::Zero(num_labels);
    it = heads_.emplace(task_id, std::move(head)).first;
  }
  if (it->second.b.size() != num_labels)
    throw ShapeMismatch("cls head for task '" + task_id + "' has label count " +
                        std::to_string(it->second.b.size()) + ", expected " +
                        std::to_string(num_labels));
  return it->second;
}

Eigen::VectorXd ReferenceBackend::cls_distribution(
    const std::vector<std::string>& tokens, const std::string& task_id,
    int num_labels) const {
  const ClsHead& head = ensure_head(task_id, num_labels);
  auto feat = featurize(tokens, /*skip_mask=*/false);
  Eigen::VectorXd logits = head.b;
  for (auto [bucket, value] : feat) logits += value * head.w.col(bucket);
  return softmax(logits);
}

Eigen::VectorXd ReferenceBackend::gradient(const std::vector<TrainItem>& batch,
                                           Head head, const std::string& task_id,
                                           int num_labels) const {
  if (batch.empty()) throw EmptyBatch("gradient: empty batch");
  const bool mlm = head == Head::Mlm;
  const Eigen::Index rows = mlm ? static_cast<Eigen::Index>(vocab_.size())
                                : static_cast<Eigen::Index>(num_labels);
  if (!mlm) ensure_head(task_id, num_labels);

  Eigen::MatrixXd dw = Eigen::MatrixXd::Zero(rows, dim_);
  Eigen::VectorXd db = Eigen::VectorXd::Zero(rows);
  for (const TrainItem& item : batch) {
    if (item.target < 0 || item.target >= rows)
      throw ShapeMismatch("gradient: target out of range");
    Eigen::VectorXd p = mlm ? mask_distribution(item.tokens)
                            : cls_distribution(item.tokens, task_id, num_labels);
    p[item.target] -= 1.0;  // dL/dlogits for cross-entropy
    auto feat = featurize(item.tokens, mlm);
    for (auto [bucket, value] : feat) dw.col(bucket) += value * p;
    db += p;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  Eigen::VectorXd flat(rows * dim_ + rows);
  Eigen::Map<Eigen::MatrixXd>(flat.data(), rows, dim_) = dw * inv;
  flat.tail(rows) = db * inv;
  return flat;
}

void ReferenceBackend::sgd_step(const Eigen::VectorXd& grad, Head head,
                                const std::string& task_id, int num_labels,
                                double lr) {
  if (lr <= 0) throw ConfigInvalid("sgd_step: learning rate must be positive");
  if (head == Head::Mlm) {
    const Eigen::Index v = w_.rows();
    if (grad.size() != v * dim_ + v)
      throw ShapeMismatch("sgd_step: mlm gradient length mismatch");
    w_ -= lr * Eigen::Map<const Eigen::MatrixXd>(grad.data(), v, dim_);
    b_ -= lr * grad.tail(v);
  } else {
    ClsHead& h = ensure_head(task_id, num_labels);
    const Eigen::Index l = h.b.size();
    if (grad.size() != l * dim_ + l)
      throw ShapeMismatch("sgd_step: cls gradient length mismatch");
    h.w -= lr * Eigen::Map<const Eigen::MatrixXd>(grad.data(), l, dim_);
    h.b -= lr * grad.tail(l);
  }
}

Eigen::VectorXd ReferenceBackend::head_parameters(Head head,
                                                  const std::string& task_id,
                                                  int num_labels) const {
  if (head == Head::Mlm) {
    const Eigen::Index v = w_.rows();
    Eigen::VectorXd flat(v * dim_ + v);
    Eigen::Map<Eigen::MatrixXd>(flat.data(), v, dim_) = w_;
    flat.tail(v) = b_;
    return flat;
  }
  const ClsHead& h = ensure_head(task_id, num_labels);
  const Eigen::Index l = h.b.size();
  Eigen::VectorXd flat(l * dim_ + l);
  Eigen::Map<Eigen::MatrixXd>(flat.data(), l, dim_) = h.w;
  flat.tail(l) = h.b;
  return flat;
}

void ReferenceBackend::set_head_parameters(Head head, const std::string& task_id,
                                           int num_labels,
                                           const Eigen::VectorXd& params) {
  if (head == Head::Mlm) {
    const Eigen::Index v = w_.rows();
    if (params.size() != v * dim_ + v)
      throw ShapeMismatch("set_head_parameters: mlm length mismatch");
    w_ = Eigen::Map<const Eigen::MatrixXd>(params.data(), v, dim_);
    b_ = params.tail(v);
  } else {
    ClsHead& h = ensure_head(task_id, num_labels);
    const Eigen::Index l = h.b.size();
    if (params.size() != l * dim_ + l)
      throw ShapeMismatch("set_head_parameters: cls length mismatch");
    h.w = Eigen::Map<const Eigen::MatrixXd>(params.data(), l, dim_);
    h.b = params.tail(l);
  }
}

Eigen::VectorXd ReferenceBackend::parameters() const {
  Eigen::Index total = w_.rows() * dim_ + b_.size();
  for (const auto& [id, h] : heads_) total += h.b.size() * dim_ + h.b.size();
  Eigen::VectorXd flat(total);
  Eigen::Index off = 0;
  Eigen::Map<Eigen::MatrixXd>(flat.data(), w_.rows(), dim_) = w_;
  off += w_.rows() * dim_;
  flat.segment(off, b_.size()) = b_;
  off += b_.size();
  for (const auto& [id, h] : heads_) {
    Eigen::Map<Eigen::MatrixXd>(flat.data() + off, h.b.size(), dim_) = h.w;
    off += h.b.size() * dim_;
    flat.segment(off, h.b.size()) = h.b;
    off += h.b.size();
  }
  return flat;
}

std::unique_ptr<BackendModel> ReferenceBackend::clone() const {
  return std::make_unique<ReferenceBackend>(*this);
}

namespace {

constexpr char kMagic[6] = {'P', 'F', 'I', 'T', 'B', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_str(std::istream& is) {
  std::string s(read_u32(is), '\0');
  is.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}
void write_f64(std::ostream& os, const Eigen::VectorXd& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}
void read_f64(std::istream& is, Eigen::VectorXd& v) {
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void ReferenceBackend::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw MissingFile("cannot open checkpoint for writing: " + path);
  os.write(kMagic, sizeof kMagic);
  write_u32(os, static_cast<std::uint32_t>(vocab_.size()));
  for (const std::string& w : vocab_) write_str(os, w);
  write_u32(os, static_cast<std::uint32_t>(dim_));
  write_u32(os, static_cast<std::uint32_t>(heads_.size()));
  for (const auto& [id, h] : heads_) {
    write_str(os, id);
    write_u32(os, static_cast<std::uint32_t>(h.b.size()));
  }
  Eigen::VectorXd flat = parameters();
  write_f64(os, flat);
}

ReferenceBackend ReferenceBackend::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingFile("cannot open checkpoint: " + path);
  char magic[6];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw DataError("bad checkpoint magic in " + path);
  ReferenceBackend m;
  std::uint32_t v = read_u32(is);
  m.vocab_.reserve(v);
  for (std::uint32_t i = 0; i < v; ++i) {
    m.vocab_.push_back(read_str(is));
    m.ids_[m.vocab_.back()] = static_cast<int>(i);
  }
  m.dim_ = static_cast<int>(read_u32(is));
  std::uint32_t nheads = read_u32(is);
  std::vector<std::pair<std::string, int>> head_shapes;
  for (std::uint32_t i = 0; i < nheads; ++i) {
    std::string id = read_str(is);
    head_shapes.emplace_back(id, static_cast<int>(read_u32(is)));
  }
  m.w_.resize(v, m.dim_);
  m.b_.resize(v);
  Eigen::Index total = static_cast<Eigen::Index>(v) * m.dim_ + v;
  for (auto& [id, l] : head_shapes) total += static_cast<Eigen::Index>(l) * m.dim_ + l;
  Eigen::VectorXd flat(total);
  read_f64(is, flat);
  if (!is) throw DataError("truncated checkpoint: " + path);
  Eigen::Index off = 0;
  m.w_ = Eigen::Map<const Eigen::MatrixXd>(flat.data(), v, m.dim_);
  off += static_cast<Eigen::Index>(v) * m.dim_;
  m.b_ = flat.segment(off, v);
  off += v;
  for (auto& [id, l] : head_shapes) {
    ClsHead h;
    h.w = Eigen::Map<const Eigen::MatrixXd>(flat.data() + off, l, m.dim_);
    off += static_cast<Eigen::Index>(l) * m.dim_;
    h.b = flat.segment(off, l);
    off += l;
    m.heads_.emplace(id, std::move(h));
  }
  return m;
}

ReferenceBackend pretrain_reference(const std::vector<std::string>& corpus,
                                    const PretrainConfig& config) {
  if (corpus.empty()) throw EmptyCorpus("pretrain_reference: empty corpus");
  ReferenceBackend model(corpus, config.feature_dim);

  std::vector<TrainItem> items;
  for (const std::string& sentence : corpus) {
    std::vector<std::string> toks = model.tokenize(sentence);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      TrainItem item;
      item.tokens = toks;
      item.tokens[i] = model.mask_token();
      int id = model.vocab_id(toks[i]);
      item.target = id < 0 ? model.vocab_id("[UNK]") : id;
      items.push_back(std::move(item));
    }
  }
  if (items.empty()) return model;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Prng prng(stream_seed(config.seed, "pretrain-shuffle") +
              static_cast<std::uint64_t>(epoch));
    for (std::size_t idx : shuffled_indices(items.size(), prng)) {
      Eigen::VectorXd g = model.gradient({items[idx]}, Head::Mlm, "", 0);
      model.sgd_step(g, Head::Mlm, "", 0, config.lr);
    }
  }
  return model;
}

}  // namespace profit
