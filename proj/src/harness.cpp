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

#include "attnclust/harness.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <functional>
#include <set>

#include "attnclust/common.hpp"
#include "attnclust/metrics.hpp"

namespace attnclust {

namespace {

// ---------------------------------------------------------------------------
// Config keys
// ---------------------------------------------------------------------------

std::size_t to_size(std::string_view v) {
  std::size_t used = 0;
  const std::string s(v);
  if (s.empty() || s[0] == '-') throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
  const auto x = std::stoull(s, &used);
  if (used != s.size()) throw std::invalid_argument("expected an integer, got '" + s + "'");
  return static_cast<std::size_t>(x);
}

double to_double(std::string_view v) {
  std::size_t used = 0;
  const std::string s(v);
  const double x = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("expected a number, got '" + s + "'");
  return x;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected true/false, got '" + std::string(v) + "'");
}

char to_delimiter(std::string_view v) {
  if (v == "auto") return 0;
  if (v == "tab" || v == "\\t") return '\t';
  if (v == "comma") return ',';
  if (v.size() == 1) return v[0];
  throw std::invalid_argument("bad delimiter '" + std::string(v) + "'");
}

std::string delimiter_name(char c) {
  if (c == 0) return "auto";
  if (c == '\t') return "tab";
  if (c == ',') return "comma";
  return std::string(1, c);
}

std::string linkage_name(Linkage l) {
  switch (l) {
    case Linkage::kWard: return "ward";
    case Linkage::kComplete: return "complete";
    case Linkage::kAverage: return "average";
  }
  return "?";
}

Linkage to_linkage(std::string_view v) {
  for (auto l : {Linkage::kWard, Linkage::kComplete, Linkage::kAverage})
    if (linkage_name(l) == v) return l;
  throw std::invalid_argument("bad linkage '" + std::string(v) + "'");
}

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SIZE_KEY(name, field)                                                        \
  Key {                                                                              \
    name, [](ExperimentConfig& c, std::string_view v) { c.field = to_size(v); },     \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }            \
  }
#define DOUBLE_KEY(name, field)                                                      \
  Key {                                                                              \
    name, [](ExperimentConfig& c, std::string_view v) { c.field = to_double(v); },   \
        [](const ExperimentConfig& c) { return format_double(c.field); }             \
  }
#define STRING_KEY(name, field)                                                      \
  Key {                                                                              \
    name, [](ExperimentConfig& c, std::string_view v) { c.field = std::string(v); }, \
        [](const ExperimentConfig& c) { return std::string(c.field); }               \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      STRING_KEY("data.path", dataset),
      STRING_KEY("data.pretrained", pretrained),
      STRING_KEY("data.text_col", schema.text_col),
      STRING_KEY("data.label_col", schema.label_col),
      STRING_KEY("data.id_col", schema.id_col),
      Key{"data.delimiter", [](ExperimentConfig& c, std::string_view v) { c.schema.delimiter = to_delimiter(v); },
          [](const ExperimentConfig& c) { return delimiter_name(c.schema.delimiter); }},
      SIZE_KEY("data.min_per_class", min_per_class),
      SIZE_KEY("data.max_per_class", max_per_class),
      SIZE_KEY("data.min_freq", min_freq),
      SIZE_KEY("data.max_sentences", limits.max_sentences),
      SIZE_KEY("data.max_words", limits.max_words),
      SIZE_KEY("han.embed_dim", han.embed_dim),
      SIZE_KEY("han.word_hidden", han.word_hidden),
      SIZE_KEY("han.sent_hidden", han.sent_hidden),
      SIZE_KEY("han.attention_dim", han.attention_dim),
      SIZE_KEY("han.epochs", han.epochs),
      SIZE_KEY("han.batch_size", han.batch_size),
      DOUBLE_KEY("han.learning_rate", han.learning_rate),
      DOUBLE_KEY("han.lr_decay", han.lr_decay),
      SIZE_KEY("han.decay_every", han.decay_every),
      DOUBLE_KEY("han.clip_norm", han.clip_norm),
      Key{"han.fine_tune_embeddings",
          [](ExperimentConfig& c, std::string_view v) { c.han.fine_tune_embeddings = to_bool(v); },
          [](const ExperimentConfig& c) { return std::string(c.han.fine_tune_embeddings ? "true" : "false"); }},
      Key{"han.fine_tune_pretrained",
          [](ExperimentConfig& c, std::string_view v) { c.fine_tune_pretrained = to_bool(v); },
          [](const ExperimentConfig& c) { return std::string(c.fine_tune_pretrained ? "true" : "false"); }},
      SIZE_KEY("skipgram.window", skipgram.window),
      SIZE_KEY("skipgram.negatives", skipgram.negatives),
      SIZE_KEY("skipgram.epochs", skipgram.epochs),
      DOUBLE_KEY("skipgram.learning_rate", skipgram.learning_rate),
      SIZE_KEY("doc2vec.dim", doc2vec.dim),
      SIZE_KEY("doc2vec.negatives", doc2vec.negatives),
      SIZE_KEY("doc2vec.epochs", doc2vec.epochs),
      DOUBLE_KEY("doc2vec.learning_rate", doc2vec.learning_rate),
      SIZE_KEY("cluster.kmeans_n_init", clustering.kmeans_n_init),
      SIZE_KEY("cluster.kmeans_max_iter", clustering.kmeans_max_iter),
      SIZE_KEY("cluster.minibatch_size", clustering.minibatch_size),
      SIZE_KEY("cluster.minibatch_max_iter", clustering.minibatch_max_iter),
      Key{"cluster.linkage", [](ExperimentConfig& c, std::string_view v) { c.clustering.linkage = to_linkage(v); },
          [](const ExperimentConfig& c) { return linkage_name(c.clustering.linkage); }},
      DOUBLE_KEY("cluster.dbscan_eps", clustering.dbscan_eps),
      SIZE_KEY("cluster.dbscan_min_samples", clustering.dbscan_min_samples),
      DOUBLE_KEY("cluster.bandwidth", clustering.bandwidth),
      SIZE_KEY("cluster.meanshift_max_iter", clustering.meanshift_max_iter),
      DOUBLE_KEY("cluster.birch_threshold", clustering.birch_threshold),
      SIZE_KEY("cluster.birch_branching", clustering.birch_branching),
      DOUBLE_KEY("cluster.ap_damping", clustering.ap_damping),
      SIZE_KEY("cluster.ap_max_iter", clustering.ap_max_iter),
      SIZE_KEY("cluster.ap_convergence_iter", clustering.ap_convergence_iter),
      STRING_KEY("out_dir", out_dir),
  };
  return table;
}

#undef SIZE_KEY
#undef DOUBLE_KEY
#undef STRING_KEY

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

std::string ExperimentConfig::canonical() const {
  std::vector<std::pair<std::string, std::string>> lines;
  for (const auto& k : keys()) lines.emplace_back(k.name, k.get(*this));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& [k, v] : lines) out += k + " = " + v + "\n";
  return out;
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(canonical())); }

void ExperimentConfig::check_files(bool need_pretrained) const {
  if (dataset.empty()) throw StageError("config", "data.path is not set");
  if (!std::filesystem::is_regular_file(dataset))
    throw StageError("config", "dataset not found: " + dataset.string());
  if (need_pretrained) {
    if (pretrained.empty()) throw StageError("config", "data.pretrained is required for AP variations");
    if (!std::filesystem::is_regular_file(pretrained))
      throw StageError("config", "pretrained vectors not found: " + pretrained.string());
  }
}

void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  for (const auto& k : keys())
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line(raw);
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!seen.insert(key).second) throw ParseError("duplicate key '" + key + "'", line_no);
    try {
      set_config_value(config, key, value);
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  auto config = parse_experiment_config(read_file(path));
  // Relative data paths resolve against the config file's directory.
  const auto base = path.parent_path();
  if (!config.dataset.empty() && config.dataset.is_relative()) config.dataset = base / config.dataset;
  if (!config.pretrained.empty() && config.pretrained.is_relative()) config.pretrained = base / config.pretrained;
  return config;
}

PreparedData prepare_data(const ExperimentConfig& config, double fraction, std::uint64_t seed) {
  PreparedData data;
  const auto loaded = stage("load", [&] { return load_records(config.dataset, config.schema); });
  data.corpus = stage("filter", [&] {
    auto fc = filter_classes(loaded.records, config.min_per_class, config.max_per_class, seed);
    if (fc.class_counts.size() < 2) throw std::runtime_error("fewer than 2 classes survive the filter");
    return fc;
  });
  data.split = stage("split", [&] { return stratified_split(data.corpus, fraction, seed); });
  stage("tokenize", [&] {
    data.labels = LabelEncoder::fit(data.corpus.records);
    std::vector<std::vector<std::string>> streams;
    for (const auto& r : data.corpus.records) streams.push_back(word_stream(r.text));
    data.vocab = build_vocabulary(streams, config.min_freq);
    for (const auto& r : data.corpus.records) {
      auto doc = tokenize_document(r.text, data.vocab, config.limits);
      doc.id = r.id;
      doc.label = data.labels.encode(r.class_label);
      data.docs.push_back(std::move(doc));
    }
    return 0;
  });
  return data;
}

std::vector<TokenizedDocument> training_documents(const PreparedData& data) {
  std::vector<TokenizedDocument> out;
  for (auto i : data.split.training) out.push_back(data.docs[i]);
  return out;
}

std::vector<TokenizedDocument> clustering_documents(const PreparedData& data,
                                                    std::vector<int>* true_labels) {
  std::vector<TokenizedDocument> out;
  if (true_labels) true_labels->clear();
  for (auto i : data.split.clustering) {
    out.push_back(data.docs[i]);
    if (true_labels) true_labels->push_back(*out.back().label);
    out.back().label.reset();
  }
  return out;
}

ResultTable cluster_and_score(const std::string& code, std::span<const DocumentVector> vectors,
                              std::span<const int> true_labels, const ClusteringParams& params,
                              const std::filesystem::path& out_dir) {
  if (vectors.size() != true_labels.size())
    throw StageError("cluster", "vector and label counts differ");
  const auto points = PointSet::from_vectors(vectors);
  const std::size_t k = std::set<int>(true_labels.begin(), true_labels.end()).size();
  ResultTable table;
  table.code = code;
  for (auto algorithm : kAllAlgorithms) {
    const std::string name(algorithm_name(algorithm));
    const auto assignment = stage("cluster", [&] {
      return run_algorithm(algorithm, points, std::min(k, points.size()), params);
    });
    const auto predicted = labels_with_noise_cluster(assignment);
    ResultRow row;
    row.algorithm = name;
    row.k_found = assignment.k_found;
    row.report = stage("evaluate", [&] { return evaluate(true_labels, predicted, points.coords); });
    for (const auto& note : assignment.notes) table.provenance.notes.push_back(name + ": " + note);
    table.rows.push_back(std::move(row));
    if (!out_dir.empty())
      stage("write", [&] {
        write_file_atomic(out_dir / (code + "_" + name + ".csv"), format_assignment_csv(points, assignment));
        write_file_atomic(out_dir / (code + "_" + name + ".json"), format_diagnostics_json(assignment));
        return 0;
      });
  }
  return table;
}

ResultTable run_variation(const VariationSpec& spec, const ExperimentConfig& config) {
  if (spec.family == Family::kPlain) return run_plain(config, spec.seed);
  if (spec.fraction_tenths < 1 || spec.fraction_tenths > 9)
    throw StageError("config", "fraction must be 1..9 tenths");
  const std::string started = utc_now();
  config.check_files(spec.family == Family::kAP);
  const auto data = prepare_data(config, spec.fraction(), spec.seed);
  std::vector<std::string> notes = data.split.warnings;

  const auto embeddings = stage("embeddings", [&] {
    if (spec.family == Family::kAS) {
      SkipgramConfig sg = config.skipgram;
      sg.dim = config.han.embed_dim;
      sg.seed = spec.seed;
      return train_skipgram(data.docs, data.vocab, sg).embeddings;
    }
    auto loaded = load_pretrained(config.pretrained, data.vocab, config.han.embed_dim, spec.seed);
    notes.push_back("pretrained coverage " + format_double(loaded.coverage));
    for (auto& w : loaded.warnings) notes.push_back(std::move(w));
    return loaded.embeddings;
  });

  const auto train_docs = training_documents(data);
  const auto trained = stage("train", [&] {
    if (train_docs.empty()) throw std::runtime_error("training split is empty");
    HanConfig hc = config.han;
    hc.mode = spec.family == Family::kAS ? EmbeddingMode::kSelfTrained : EmbeddingMode::kPretrained;
    hc.classes = data.labels.size();
    hc.seed = spec.seed;
    if (spec.family == Family::kAP) hc.fine_tune_embeddings = config.fine_tune_pretrained;
    return train_han(hc, train_docs, embeddings);
  });

  std::vector<int> truth;
  const auto cluster_docs = clustering_documents(data, &truth);
  const auto vectors = stage("encode", [&] {
    if (cluster_docs.empty()) throw std::runtime_error("clustering split is empty");
    return encode_corpus(trained.params, cluster_docs);
  });

  ClusteringParams cp = config.clustering;
  cp.seed = spec.seed;
  if (!config.out_dir.empty())
    stage("write", [&] {
      std::filesystem::create_directories(config.out_dir);
      write_file_atomic(config.out_dir / (spec.code() + "_vectors.csv"), format_vectors_csv(vectors));
      return 0;
    });
  auto table = cluster_and_score(spec.code(), vectors, truth, cp, config.out_dir);
  table.provenance.config_hash = config.hash();
  table.provenance.seed = spec.seed;
  table.provenance.started_at = started;
  table.provenance.finished_at = utc_now();
  notes.insert(notes.end(), table.provenance.notes.begin(), table.provenance.notes.end());
  table.provenance.notes = std::move(notes);
  if (!config.out_dir.empty()) stage("write", [&] { write_table_artifacts(table, config.out_dir); return 0; });
  return table;
}

ResultTable run_plain(const ExperimentConfig& config, std::uint64_t seed) {
  const std::string started = utc_now();
  config.check_files(false);
  const auto data = prepare_data(config, 0.5, seed);
  std::vector<int> truth;
  const auto cluster_docs = clustering_documents(data, &truth);
  // Paragraph vectors are fit without labels on the whole filtered corpus;
  // only the clustering split's rows are clustered.
  const auto vectors = stage("encode", [&] {
    if (cluster_docs.empty()) throw std::runtime_error("clustering split is empty");
    ParagraphVectorConfig pv = config.doc2vec;
    pv.seed = seed;
    if (pv.dim == 0) pv.dim = 2 * config.han.sent_hidden;
    std::vector<TokenizedDocument> unlabeled = data.docs;
    for (auto& d : unlabeled) d.label.reset();
    const auto trained = train_doc_vectors(unlabeled, data.vocab.size(), pv);
    std::vector<DocumentVector> picked;
    for (auto i : data.split.clustering) picked.push_back(trained.vectors[i]);
    return picked;
  });
  ClusteringParams cp = config.clustering;
  cp.seed = seed;
  if (!config.out_dir.empty())
    stage("write", [&] {
      std::filesystem::create_directories(config.out_dir);
      write_file_atomic(config.out_dir / "PLAIN_vectors.csv", format_vectors_csv(vectors));
      return 0;
    });
  auto table = cluster_and_score("PLAIN", vectors, truth, cp, config.out_dir);
  table.provenance.config_hash = config.hash();
  table.provenance.seed = seed;
  table.provenance.started_at = started;
  table.provenance.finished_at = utc_now();
  std::vector<std::string> notes = data.split.warnings;
  notes.insert(notes.end(), table.provenance.notes.begin(), table.provenance.notes.end());
  table.provenance.notes = std::move(notes);
  if (!config.out_dir.empty()) stage("write", [&] { write_table_artifacts(table, config.out_dir); return 0; });
  return table;
}

void write_table_artifacts(const ResultTable& table, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  emit_result_table(table, TableFormat::kCsv, out_dir / (table.code + "_table.csv"));
  emit_result_table(table, TableFormat::kMarkdown, out_dir / (table.code + "_table.md"));
  write_file_atomic(out_dir / (table.code + "_provenance.json"), format_provenance_json(table));
  emit_chart(std::span<const ResultTable>(&table, 1), ChartKind::kAvgEvBars, "avg_ev", "",
             out_dir / (table.code + "_avg_ev.svg"));
}

}  // namespace attnclust
