// Copyright 2026 The attnclust Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "attnclust/han.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <memory>
#include <numeric>

#include <json.hpp>

namespace attnclust {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

// Calls f(name, tensor_of_each...) for every trainable tensor, in a fixed order.
template <typename F, typename... H>
void visit_tensors(F&& f, H&... ps) {
  f("embedding", ps.embedding.rows...);
  auto lstm = [&](const std::string& prefix, auto&... ls) {
    f(prefix + ".W", ls.W...);
    f(prefix + ".U", ls.U...);
    f(prefix + ".b", ls.b...);
  };
  auto attn = [&](const std::string& prefix, auto&... as) {
    f(prefix + ".W", as.W...);
    f(prefix + ".b", as.b...);
    f(prefix + ".context", as.context...);
  };
  lstm("word_fwd", ps.word_fwd...);
  lstm("word_bwd", ps.word_bwd...);
  attn("word_attn", ps.word_attn...);
  lstm("sent_fwd", ps.sent_fwd...);
  lstm("sent_bwd", ps.sent_bwd...);
  attn("sent_attn", ps.sent_attn...);
  f("classifier.W", ps.classifier_W...);
  f("classifier.b", ps.classifier_b...);
}

struct SentenceCache {
  std::vector<TokenId> ids;
  BiLstmCache lstm;
  AttentionCache attn;
};

struct DocCache {
  std::vector<SentenceCache> sentences;
  BiLstmCache lstm;
  AttentionCache attn;
};

struct Encoded {
  Vec doc_vector;
  std::vector<Vec> word_attention;
  Vec sentence_attention;
};

Encoded encode_document(const HanParams& p, const TokenizedDocument& doc, DocCache* cache) {
  const auto vocab = static_cast<TokenId>(p.embedding.vocab_size());
  const auto d = p.embedding.rows.cols();
  Encoded enc;
  std::vector<Vec> sentence_vectors;
  for (const auto& sentence : doc.sentences) {
    std::size_t len = sentence.size();
    while (len > 0 && sentence[len - 1] == Vocabulary::kPad) --len;
    if (len == 0) continue;
    Mat x(d, idx(len));
    auto mask = std::make_unique<bool[]>(len);
    bool any_masked = false;
    for (std::size_t t = 0; t < len; ++t) {
      const TokenId id = sentence[t];
      if (id < 0 || id >= vocab)
        throw std::invalid_argument("forward_classify: token id " + std::to_string(id) +
                                    " outside embedding table of " + std::to_string(vocab));
      x.col(idx(t)) = p.embedding.rows.row(id).transpose();
      mask[t] = id != Vocabulary::kPad;
      any_masked |= !mask[t];
    }
    SentenceCache* sc = nullptr;
    if (cache) {
      cache->sentences.emplace_back();
      sc = &cache->sentences.back();
      sc->ids.assign(sentence.begin(), sentence.begin() + static_cast<long>(len));
    }
    Mat states = bilstm_encode(x, p.word_fwd, p.word_bwd, sc ? &sc->lstm : nullptr);
    // Interior PADs only; an all-live sentence passes no mask.
    const auto live = any_masked ? std::span<const bool>(mask.get(), len) : std::span<const bool>{};
    auto pooled = attention_pool(states, p.word_attn, live, sc ? &sc->attn : nullptr);
    sentence_vectors.push_back(std::move(pooled.pooled));
    enc.word_attention.push_back(std::move(pooled.weights));
  }
  if (sentence_vectors.empty())
    throw std::invalid_argument("forward_classify: document '" + doc.id + "' has no tokens");

  Mat sents(sentence_vectors.front().size(), idx(sentence_vectors.size()));
  for (std::size_t s = 0; s < sentence_vectors.size(); ++s) sents.col(idx(s)) = sentence_vectors[s];
  Mat doc_states = bilstm_encode(sents, p.sent_fwd, p.sent_bwd, cache ? &cache->lstm : nullptr);
  auto pooled = attention_pool(doc_states, p.sent_attn, {}, cache ? &cache->attn : nullptr);
  enc.doc_vector = std::move(pooled.pooled);
  enc.sentence_attention = std::move(pooled.weights);
  return enc;
}

// Appends little-endian encodings.
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint64_t u64() { return read_le(8); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(read_le(4)); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      throw CheckpointError("checkpoint truncated at byte " + std::to_string(bytes_.size()));
  }
  std::uint64_t read_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kMagic{"ATTNHAN\0", 8};

}  // namespace

std::string to_string(EmbeddingMode mode) {
  switch (mode) {
    case EmbeddingMode::kRandom: return "random";
    case EmbeddingMode::kSelfTrained: return "self-trained";
    case EmbeddingMode::kPretrained: return "pretrained";
  }
  return "unknown";
}

EmbeddingMode embedding_mode_from_string(std::string_view s) {
  if (s == "random") return EmbeddingMode::kRandom;
  if (s == "self-trained") return EmbeddingMode::kSelfTrained;
  if (s == "pretrained") return EmbeddingMode::kPretrained;
  throw std::invalid_argument("unknown embedding mode '" + std::string(s) + "'");
}

void HanConfig::validate() const {
  if (!embed_dim || !word_hidden || !sent_hidden || !attention_dim || !batch_size)
    throw std::invalid_argument("HanConfig: dimensions and batch size must be positive");
  if (classes < 2) throw std::invalid_argument("HanConfig: need at least 2 classes");
  if (!(learning_rate > 0.0) || !(clip_norm > 0.0) || !(lr_decay > 0.0))
    throw std::invalid_argument("HanConfig: learning rate, decay and clip norm must be positive");
}

std::string HanConfig::to_json() const {
  nlohmann::json j;
  j["mode"] = to_string(mode);
  j["embed_dim"] = embed_dim;
  j["word_hidden"] = word_hidden;
  j["sent_hidden"] = sent_hidden;
  j["attention_dim"] = attention_dim;
  j["classes"] = classes;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["lr_decay"] = lr_decay;
  j["decay_every"] = decay_every;
  j["clip_norm"] = clip_norm;
  j["seed"] = seed;
  j["fine_tune_embeddings"] = fine_tune_embeddings;
  return j.dump();
}

HanConfig HanConfig::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    HanConfig c;
    c.mode = embedding_mode_from_string(j.at("mode").get<std::string>());
    c.embed_dim = j.at("embed_dim");
    c.word_hidden = j.at("word_hidden");
    c.sent_hidden = j.at("sent_hidden");
    c.attention_dim = j.at("attention_dim");
    c.classes = j.at("classes");
    c.epochs = j.at("epochs");
    c.batch_size = j.at("batch_size");
    c.learning_rate = j.at("learning_rate");
    c.lr_decay = j.at("lr_decay");
    c.decay_every = j.at("decay_every");
    c.clip_norm = j.at("clip_norm");
    c.seed = j.at("seed");
    c.fine_tune_embeddings = j.at("fine_tune_embeddings");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("han config: ") + e.what());
  }
}

HanParams HanParams::initialize(const HanConfig& config, EmbeddingMatrix embedding) {
  config.validate();
  if (embedding.dim() != config.embed_dim)
    throw std::invalid_argument("HanParams: embedding width " + std::to_string(embedding.dim()) +
                                " != embed_dim " + std::to_string(config.embed_dim));
  Rng rng(config.seed);
  HanParams p;
  p.embedding = std::move(embedding);
  const std::size_t word_out = 2 * config.word_hidden;
  const std::size_t doc_out = 2 * config.sent_hidden;
  p.word_fwd = LstmParams::xavier(config.embed_dim, config.word_hidden, rng);
  p.word_bwd = LstmParams::xavier(config.embed_dim, config.word_hidden, rng);
  p.word_attn = AttentionParams::xavier(word_out, config.attention_dim, rng);
  p.sent_fwd = LstmParams::xavier(word_out, config.sent_hidden, rng);
  p.sent_bwd = LstmParams::xavier(word_out, config.sent_hidden, rng);
  p.sent_attn = AttentionParams::xavier(doc_out, config.attention_dim, rng);
  p.classifier_W = Mat::Zero(idx(config.classes), idx(doc_out));
  const double limit = std::sqrt(6.0 / static_cast<double>(config.classes + doc_out));
  for (Eigen::Index c = 0; c < p.classifier_W.cols(); ++c)
    for (Eigen::Index r = 0; r < p.classifier_W.rows(); ++r)
      p.classifier_W(r, c) = uniform_real(rng, -limit, limit);
  p.classifier_b = Vec::Zero(idx(config.classes));
  return p;
}

HanParams HanParams::zeros_like() const {
  HanParams z = *this;
  visit_tensors([](const std::string&, auto& t) { t.setZero(); }, z);
  return z;
}

ParamStore HanParams::to_store() const {
  ParamStore store;
  visit_tensors([&](const std::string& name, const auto& t) { store.add(name, Mat(t)); }, *this);
  return store;
}

HanParams HanParams::from_store(const ParamStore& store, std::uint64_t vocab_hash) {
  HanParams p;
  p.embedding.vocab_hash = vocab_hash;
  visit_tensors(
      [&](const std::string& name, auto& t) {
        if (!store.contains(name)) throw std::invalid_argument("ParamStore lacks tensor " + name);
        const Mat& m = store.value(name);
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Vec>) {
          if (m.cols() != 1) throw std::invalid_argument("tensor " + name + " must be a column");
          t = m.col(0);
        } else {
          t = m;
        }
      },
      p);
  const auto d = p.embedding.rows.cols();
  const auto hw = p.word_fwd.U.cols();
  const auto hs = p.sent_fwd.U.cols();
  const bool ok = p.word_fwd.W.cols() == d && p.word_bwd.W.cols() == d &&
                  p.word_bwd.U.cols() == hw && p.word_attn.W.cols() == 2 * hw &&
                  p.sent_fwd.W.cols() == 2 * hw && p.sent_bwd.W.cols() == 2 * hw &&
                  p.sent_bwd.U.cols() == hs && p.sent_attn.W.cols() == 2 * hs &&
                  p.classifier_W.cols() == 2 * hs &&
                  p.classifier_b.size() == p.classifier_W.rows() &&
                  p.word_attn.b.size() == p.word_attn.W.rows() &&
                  p.sent_attn.b.size() == p.sent_attn.W.rows();
  if (!ok) throw std::invalid_argument("HanParams: inconsistent tensor shapes");
  return p;
}

HanForward forward_classify(const HanParams& params, const TokenizedDocument& doc) {
  auto enc = encode_document(params, doc, nullptr);
  HanForward out;
  out.probabilities = softmax(params.classifier_W * enc.doc_vector + params.classifier_b);
  out.vector = {doc.id, std::move(enc.doc_vector)};
  out.word_attention = std::move(enc.word_attention);
  out.sentence_attention = std::move(enc.sentence_attention);
  return out;
}

double han_loss(const HanParams& params, const TokenizedDocument& doc, int label,
                HanParams* grads, Vec* probabilities) {
  DocCache cache;
  auto enc = encode_document(params, doc, grads ? &cache : nullptr);
  auto head = dense_softmax_xent(enc.doc_vector, label, params.classifier_W, params.classifier_b);
  if (probabilities) *probabilities = head.probabilities;
  if (!grads) return head.loss;

  HanParams& g = *grads;
  g.classifier_W += head.d_W;
  g.classifier_b += head.d_b;
  Mat d_doc_states = attention_backward(cache.attn, params.sent_attn, head.d_input, g.sent_attn);
  Mat d_sents = bilstm_backward(cache.lstm, params.sent_fwd, params.sent_bwd, d_doc_states,
                                g.sent_fwd, g.sent_bwd);
  for (std::size_t s = 0; s < cache.sentences.size(); ++s) {
    const auto& sc = cache.sentences[s];
    Mat d_states = attention_backward(sc.attn, params.word_attn, d_sents.col(idx(s)), g.word_attn);
    Mat d_x = bilstm_backward(sc.lstm, params.word_fwd, params.word_bwd, d_states, g.word_fwd,
                              g.word_bwd);
    for (std::size_t t = 0; t < sc.ids.size(); ++t)
      g.embedding.rows.row(sc.ids[t]) += d_x.col(idx(t)).transpose();
  }
  return head.loss;
}

TrainedHan train_han(const HanConfig& config, std::span<const TokenizedDocument> docs,
                     EmbeddingMatrix embeddings) {
  config.validate();
  if (docs.empty()) throw std::invalid_argument("train_han: no documents");
  for (const auto& d : docs)
    if (!d.label || *d.label < 0 || static_cast<std::size_t>(*d.label) >= config.classes)
      throw std::invalid_argument("train_han: document '" + d.id + "' lacks a valid label");

  TrainedHan out;
  out.params = HanParams::initialize(config, std::move(embeddings));
  HanParams& p = out.params;
  HanParams grads = p.zeros_like();
  Rng rng(config.seed ^ 0x5851f42d4c957f2dULL);
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double lr = config.learning_rate;
    if (config.decay_every)
      lr *= std::pow(config.lr_decay, static_cast<double>(epoch / config.decay_every));
    seeded_shuffle(order, rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      visit_tensors([](const std::string&, auto& t) { t.setZero(); }, grads);
      for (std::size_t k = start; k < end; ++k) {
        const auto& doc = docs[order[k]];
        Vec probs;
        try {
          loss_sum += han_loss(p, doc, *doc.label, &grads, &probs);
        } catch (const std::domain_error&) {
          throw TrainingDiverged(epoch);
        }
        Eigen::Index best = 0;
        probs.maxCoeff(&best);
        correct += best == *doc.label;
      }
      if (!std::isfinite(loss_sum)) throw TrainingDiverged(epoch);
      const double scale = 1.0 / static_cast<double>(end - start);
      double sq = 0.0;
      visit_tensors(
          [&](const std::string& name, auto& g) {
            g *= scale;
            if (name != "embedding" || config.fine_tune_embeddings) sq += g.squaredNorm();
          },
          grads);
      const double norm = std::sqrt(sq);
      const double step = norm > config.clip_norm ? lr * config.clip_norm / norm : lr;
      visit_tensors(
          [&](const std::string& name, auto& w, auto& g) {
            if (name == "embedding" && !config.fine_tune_embeddings) return;
            w -= step * g;
          },
          p, grads);
      p.embedding.rows.row(Vocabulary::kPad).setZero();
      bool finite = true;
      visit_tensors([&](const std::string&, const auto& w) { finite = finite && w.allFinite(); }, p);
      if (!finite) throw TrainingDiverged(epoch);
    }
    out.history.loss.push_back(loss_sum / static_cast<double>(docs.size()));
    out.history.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(docs.size()));
  }
  return out;
}

std::vector<DocumentVector> encode_corpus(const HanParams& params,
                                          std::span<const TokenizedDocument> docs) {
  std::vector<DocumentVector> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back({d.id, encode_document(params, d, nullptr).doc_vector});
  return out;
}

std::string serialize_checkpoint(const HanConfig& config, const HanParams& params) {
  std::string out(kMagic);
  put_u32(out, kCheckpointVersion);
  put_u64(out, params.embedding.vocab_hash);
  const std::string cfg = config.to_json();
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  const ParamStore store = params.to_store();
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& name = store.name(i);
    const Mat& m = store.value(i);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_u64(out, std::bit_cast<std::uint64_t>(m(r, c)));
  }
  return out;
}

HanCheckpoint parse_checkpoint(std::string_view bytes,
                               std::optional<std::uint64_t> expected_vocab_hash) {
  Reader in(bytes);
  if (in.take(kMagic.size()) != kMagic) throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = in.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto vocab_hash = in.u64();
  if (expected_vocab_hash && *expected_vocab_hash != vocab_hash)
    throw CheckpointError("vocabulary hash mismatch: checkpoint " + hex64(vocab_hash) +
                          ", expected " + hex64(*expected_vocab_hash));
  HanCheckpoint ck;
  const auto cfg_len = in.u32();
  try {
    ck.config = HanConfig::from_json(in.take(cfg_len));
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("bad config block: ") + e.what());
  }
  const auto count = in.u32();
  ParamStore store;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = in.u32();
    std::string name(in.take(name_len));
    const auto rows = in.u64();
    const auto cols = in.u64();
    if (rows > bytes.size() || cols > bytes.size() || rows * cols * 8 > bytes.size())
      throw CheckpointError("tensor " + name + " larger than the file");
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = in.f64();
    try {
      store.add(name, std::move(m));
    } catch (const std::exception& e) {
      throw CheckpointError(e.what());
    }
  }
  if (!in.done()) throw CheckpointError("trailing bytes after last tensor");
  try {
    ck.params = HanParams::from_store(store, vocab_hash);
    check_embeddings(ck.params.embedding);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("bad tensors: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const HanConfig& config,
                     const HanParams& params) {
  write_file_atomic(path, serialize_checkpoint(config, params));
}

HanCheckpoint load_checkpoint(const std::filesystem::path& path,
                              std::optional<std::uint64_t> expected_vocab_hash) {
  return parse_checkpoint(read_file(path), expected_vocab_hash);
}

}  // namespace attnclust
