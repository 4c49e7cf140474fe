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

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attnclust/baseline.hpp"
#include "attnclust/clustering.hpp"
#include "attnclust/common.hpp"
#include "attnclust/corpus.hpp"
#include "attnclust/embeddings.hpp"
#include "attnclust/han.hpp"
#include "attnclust/harness.hpp"
#include "attnclust/metrics.hpp"
#include "attnclust/report.hpp"
#include "attnclust/synth.hpp"
#include "attnclust/vectors.hpp"

namespace fs = std::filesystem;
using namespace attnclust;

namespace {

std::vector<TokenizedDocument> read_corpus(const std::vector<std::string>& paths) {
  std::vector<TokenizedDocument> docs;
  for (const auto& p : paths) {
    auto part = parse_corpus_jsonl(read_file(p));
    docs.insert(docs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return docs;
}

// "1..9" or "2,5,9".
std::vector<int> parse_fractions(const std::string& text) {
  std::vector<int> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots)), hi = std::stoi(text.substr(dots + 2));
    for (int n = lo; n <= hi; ++n) out.push_back(n);
  } else {
    for (const auto& part : split(text, ',')) out.push_back(std::stoi(trim(part)));
  }
  for (int n : out)
    if (n < 1 || n > 9) throw std::invalid_argument("fractions must lie in 1..9");
  return out;
}

std::map<std::string, int> read_label_csv(const std::string& path) {
  std::map<std::string, int> out;
  std::size_t line_no = 0;
  for (const auto& raw : split(read_file(path), '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line_no == 1) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw ParseError("expected 'doc_id,label'", line_no);
    out[line.substr(0, comma)] = std::stoi(line.substr(comma + 1));
  }
  return out;
}

void print_row(const std::string& name, const MetricReport& m) {
  std::cout << name << ',' << format_metric(m.homo) << ',' << format_metric(m.comp) << ','
            << format_metric(m.v_measure) << ',' << format_metric(m.ari) << ',' << format_metric(m.ami)
            << ',' << format_metric(m.silhouette) << ',' << format_metric(m.avg_ev) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-based document clustering"};
  app.require_subcommand(1);

  // synth -------------------------------------------------------------------
  SynthConfig synth_cfg;
  std::string synth_out = ".";
  std::size_t synth_dim = 50;
  auto* synth = app.add_subcommand("synth", "write a synthetic labelled corpus and word vectors");
  synth->add_option("--out-dir", synth_out, "output directory")->required();
  synth->add_option("--classes", synth_cfg.classes);
  synth->add_option("--docs-per-class", synth_cfg.docs_per_class);
  synth->add_option("--keywords", synth_cfg.keywords_per_class);
  synth->add_option("--fillers", synth_cfg.filler_words);
  synth->add_option("--keyword-rate", synth_cfg.keyword_rate);
  synth->add_option("--noise", synth_cfg.noise);
  synth->add_option("--seed", synth_cfg.seed);
  synth->add_option("--dim", synth_dim, "dimension of the word vectors file");

  // ingest ------------------------------------------------------------------
  ExperimentConfig ingest_cfg;
  std::string ingest_data, ingest_out = ".";
  int ingest_tenths = 5;
  std::uint64_t ingest_seed = 1;
  auto* ingest = app.add_subcommand("ingest", "filter, split and tokenize a labelled table");
  ingest->add_option("--data", ingest_data, "TSV/CSV file")->required();
  ingest->add_option("--text-col", ingest_cfg.schema.text_col);
  ingest->add_option("--label-col", ingest_cfg.schema.label_col);
  ingest->add_option("--id-col", ingest_cfg.schema.id_col);
  ingest->add_option("--min-per-class", ingest_cfg.min_per_class);
  ingest->add_option("--max-per-class", ingest_cfg.max_per_class);
  ingest->add_option("--min-freq", ingest_cfg.min_freq);
  ingest->add_option("--fraction", ingest_tenths, "training fraction in tenths")->check(CLI::Range(1, 9));
  ingest->add_option("--seed", ingest_seed);
  ingest->add_option("--out-dir", ingest_out);

  // train-embeddings --------------------------------------------------------
  std::vector<std::string> emb_corpus;
  std::string emb_vocab, emb_mode = "self-trained", emb_pretrained, emb_out = "embeddings.json";
  SkipgramConfig emb_sg;
  auto* train_emb = app.add_subcommand("train-embeddings", "word vectors for a vocabulary");
  train_emb->add_option("--corpus", emb_corpus, "tokenized corpus JSONL (repeatable)");
  train_emb->add_option("--vocab", emb_vocab)->required();
  train_emb->add_option("--mode", emb_mode)->check(CLI::IsMember({"random", "self-trained", "pretrained"}));
  train_emb->add_option("--pretrained", emb_pretrained, "word vectors file for --mode pretrained");
  train_emb->add_option("--dim", emb_sg.dim);
  train_emb->add_option("--window", emb_sg.window);
  train_emb->add_option("--negatives", emb_sg.negatives);
  train_emb->add_option("--epochs", emb_sg.epochs);
  train_emb->add_option("--seed", emb_sg.seed);
  train_emb->add_option("--out", emb_out);

  // train-han ---------------------------------------------------------------
  std::vector<std::string> han_corpus;
  std::string han_emb, han_out = "model.han";
  HanConfig han_cfg;
  std::size_t han_classes = 0;
  auto* train_han_cmd = app.add_subcommand("train-han", "train the attention classifier");
  train_han_cmd->add_option("--corpus", han_corpus, "labelled corpus JSONL")->required();
  train_han_cmd->add_option("--embeddings", han_emb)->required();
  train_han_cmd->add_option("--classes", han_classes, "default: largest label id + 1");
  train_han_cmd->add_option("--word-hidden", han_cfg.word_hidden);
  train_han_cmd->add_option("--sent-hidden", han_cfg.sent_hidden);
  train_han_cmd->add_option("--attention-dim", han_cfg.attention_dim);
  train_han_cmd->add_option("--epochs", han_cfg.epochs);
  train_han_cmd->add_option("--batch-size", han_cfg.batch_size);
  train_han_cmd->add_option("--lr", han_cfg.learning_rate);
  train_han_cmd->add_option("--seed", han_cfg.seed);
  train_han_cmd->add_option("--out", han_out);

  // encode ------------------------------------------------------------------
  std::vector<std::string> enc_corpus;
  std::string enc_model, enc_out = "vectors.csv";
  auto* encode = app.add_subcommand("encode", "document vectors from a trained model");
  encode->add_option("--model", enc_model)->required();
  encode->add_option("--corpus", enc_corpus)->required();
  encode->add_option("--out", enc_out);

  // cluster -----------------------------------------------------------------
  std::string cl_vectors, cl_algorithm = "all", cl_out = ".", cl_name = "run";
  std::size_t cl_k = 0;
  ClusteringParams cl_params;
  auto* cluster = app.add_subcommand("cluster", "cluster document vectors");
  cluster->add_option("--vectors", cl_vectors)->required();
  cluster->add_option("--algorithm", cl_algorithm, "algorithm name or 'all'");
  cluster->add_option("--k", cl_k, "clusters for k-taking algorithms (default round(sqrt(n)))");
  cluster->add_option("--eps", cl_params.dbscan_eps);
  cluster->add_option("--min-samples", cl_params.dbscan_min_samples);
  cluster->add_option("--bandwidth", cl_params.bandwidth);
  cluster->add_option("--threshold", cl_params.birch_threshold);
  cluster->add_option("--damping", cl_params.ap_damping);
  cluster->add_option("--seed", cl_params.seed);
  cluster->add_option("--name", cl_name, "file name prefix");
  cluster->add_option("--out-dir", cl_out);

  // evaluate ----------------------------------------------------------------
  std::string ev_vectors, ev_labels;
  std::vector<std::string> ev_assign;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score assignments against true labels");
  evaluate_cmd->add_option("--vectors", ev_vectors)->required();
  evaluate_cmd->add_option("--labels", ev_labels, "doc_id,label CSV of true classes")->required();
  evaluate_cmd->add_option("--assignment", ev_assign, "doc_id,label CSV (repeatable)")->required();

  // experiment --------------------------------------------------------------
  std::string ex_config, ex_fractions, ex_family = "AS", ex_out, ex_data, ex_text, ex_label;
  std::vector<std::string> ex_variations, ex_set;
  std::uint64_t ex_seed = 1;
  auto* experiment = app.add_subcommand("experiment", "run variations end to end");
  experiment->add_option("--config", ex_config, "key = value config file");
  experiment->add_option("--variation", ex_variations, "AS1..AS9, AP1..AP9 or PLAIN (repeatable)");
  experiment->add_option("--fractions", ex_fractions, "e.g. 1..9 or 2,5,9; used with --family");
  experiment->add_option("--family", ex_family)->check(CLI::IsMember({"AS", "AP"}));
  experiment->add_option("--seed", ex_seed);
  experiment->add_option("--out-dir", ex_out);
  experiment->add_option("--data", ex_data);
  experiment->add_option("--text-col", ex_text);
  experiment->add_option("--label-col", ex_label);
  experiment->add_option("--set", ex_set, "override a config key: key=value");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      fs::create_directories(synth_out);
      const auto records = generate_corpus(synth_cfg);
      TableSchema schema;
      schema.delimiter = '\t';
      write_file_atomic(fs::path(synth_out) / "synth.tsv", format_records(records, schema));
      write_file_atomic(fs::path(synth_out) / "synth_vectors.vec",
                        generate_pretrained_vectors(synth_cfg, synth_dim, synth_cfg.seed + 1000));
      std::cout << "wrote " << records.size() << " records to " << (fs::path(synth_out) / "synth.tsv").string()
                << '\n';
    } else if (*ingest) {
      ingest_cfg.dataset = ingest_data;
      ingest_cfg.check_files(false);
      const auto data = prepare_data(ingest_cfg, ingest_tenths / 10.0, ingest_seed);
      fs::create_directories(ingest_out);
      std::vector<int> truth;
      const auto cdocs = clustering_documents(data, &truth);
      std::string labels = "doc_id,label\n";
      for (std::size_t i = 0; i < cdocs.size(); ++i) labels += cdocs[i].id + "," + std::to_string(truth[i]) + "\n";
      write_file_atomic(fs::path(ingest_out) / "vocab.json", data.vocab.to_json());
      write_file_atomic(fs::path(ingest_out) / "train.jsonl", format_corpus_jsonl(training_documents(data)));
      write_file_atomic(fs::path(ingest_out) / "cluster.jsonl", format_corpus_jsonl(cdocs));
      write_file_atomic(fs::path(ingest_out) / "cluster_labels.csv", labels);
      std::cout << data.corpus.records.size() << " records, " << data.corpus.class_counts.size()
                << " classes, vocabulary " << data.vocab.size() << ", training " << data.split.training.size()
                << ", clustering " << data.split.clustering.size() << '\n';
      for (const auto& w : data.split.warnings) std::cerr << "warning: " << w << '\n';
    } else if (*train_emb) {
      const auto vocab = Vocabulary::from_json(read_file(emb_vocab));
      EmbeddingMatrix emb;
      if (emb_mode == "random") {
        emb = init_random(vocab.size(), emb_sg.dim, emb_sg.seed, vocab.hash());
      } else if (emb_mode == "pretrained") {
        if (emb_pretrained.empty()) throw StageError("embeddings", "--pretrained is required");
        auto loaded = load_pretrained(emb_pretrained, vocab, emb_sg.dim, emb_sg.seed);
        for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
        std::cout << "coverage " << loaded.coverage << '\n';
        emb = std::move(loaded.embeddings);
      } else {
        if (emb_corpus.empty()) throw StageError("embeddings", "--corpus is required for self-trained mode");
        auto result = train_skipgram(read_corpus(emb_corpus), vocab, emb_sg);
        std::cout << "final loss " << result.epoch_loss.back() << '\n';
        emb = std::move(result.embeddings);
      }
      write_file_atomic(emb_out, embeddings_to_json(emb));
    } else if (*train_han_cmd) {
      const auto docs = read_corpus(han_corpus);
      auto emb = embeddings_from_json(read_file(han_emb));
      if (han_classes == 0) {
        int top = -1;
        for (const auto& d : docs) {
          if (!d.label) throw StageError("train", "document " + d.id + " has no label");
          top = std::max(top, *d.label);
        }
        han_classes = static_cast<std::size_t>(top + 1);
      }
      han_cfg.classes = han_classes;
      han_cfg.embed_dim = emb.dim();
      const auto trained = train_han(han_cfg, docs, std::move(emb));
      for (std::size_t e = 0; e < trained.history.loss.size(); ++e)
        std::cout << "epoch " << e + 1 << " loss " << trained.history.loss[e] << " accuracy "
                  << trained.history.accuracy[e] << '\n';
      save_checkpoint(han_out, han_cfg, trained.params);
    } else if (*encode) {
      const auto ckpt = load_checkpoint(enc_model);
      const auto docs = read_corpus(enc_corpus);
      write_file_atomic(enc_out, format_vectors_csv(encode_corpus(ckpt.params, docs)));
    } else if (*cluster) {
      const auto vectors = parse_vectors_csv(read_file(cl_vectors));
      const auto points = PointSet::from_vectors(vectors);
      const std::size_t k = cl_k ? cl_k : estimate_k_sqrt(points.size());
      std::vector<Algorithm> algorithms;
      if (cl_algorithm == "all") algorithms.assign(kAllAlgorithms.begin(), kAllAlgorithms.end());
      else algorithms.push_back(algorithm_from_name(cl_algorithm));
      fs::create_directories(cl_out);
      for (auto a : algorithms) {
        const auto result = run_algorithm(a, points, k, cl_params);
        const std::string base = cl_name + "_" + std::string(algorithm_name(a));
        write_file_atomic(fs::path(cl_out) / (base + ".csv"), format_assignment_csv(points, result));
        write_file_atomic(fs::path(cl_out) / (base + ".json"), format_diagnostics_json(result));
        std::cout << algorithm_name(a) << ": " << result.k_found << " clusters\n";
      }
    } else if (*evaluate_cmd) {
      const auto vectors = parse_vectors_csv(read_file(ev_vectors));
      const auto points = PointSet::from_vectors(vectors);
      const auto truth_by_id = read_label_csv(ev_labels);
      std::vector<int> truth;
      for (const auto& id : points.doc_ids) {
        auto it = truth_by_id.find(id);
        if (it == truth_by_id.end()) throw StageError("evaluate", "no true label for " + id);
        truth.push_back(it->second);
      }
      std::cout << "algorithm,homo,comp,v_me,ari,ami,silh,avg_ev\n";
      for (const auto& path : ev_assign) {
        const auto assigned = read_label_csv(path);
        std::vector<int> pred;
        int noise_label = 0;
        for (const auto& [id, l] : assigned) noise_label = std::max(noise_label, l + 1);
        for (const auto& id : points.doc_ids) {
          auto it = assigned.find(id);
          if (it == assigned.end()) throw StageError("evaluate", "no assignment for " + id + " in " + path);
          pred.push_back(it->second == kNoise ? noise_label : it->second);
        }
        print_row(fs::path(path).stem().string(), evaluate(truth, pred, points.coords));
      }
    } else if (*experiment) {
      ExperimentConfig cfg = ex_config.empty() ? ExperimentConfig{} : load_experiment_config(ex_config);
      if (!ex_data.empty()) cfg.dataset = ex_data;
      if (!ex_text.empty()) cfg.schema.text_col = ex_text;
      if (!ex_label.empty()) cfg.schema.label_col = ex_label;
      if (!ex_out.empty()) cfg.out_dir = ex_out;
      for (const auto& kv : ex_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw StageError("config", "--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
      }
      if (cfg.out_dir.empty()) cfg.out_dir = "results";
      std::vector<VariationSpec> specs;
      for (const auto& code : ex_variations) specs.push_back(VariationSpec::parse(code, ex_seed));
      if (!ex_fractions.empty())
        for (int n : parse_fractions(ex_fractions))
          specs.push_back(VariationSpec::parse(ex_family + std::to_string(n), ex_seed));
      if (specs.empty()) throw StageError("config", "give --variation or --fractions");
      std::vector<ResultTable> line_tables;
      for (const auto& spec : specs) {
        std::cerr << "running " << spec.code() << " (seed " << spec.seed << ")\n";
        auto table = run_variation(spec, cfg);
        std::cout << "## " << table.code << "\n" << format_table_markdown(table);
        if (!ex_fractions.empty() && spec.family != Family::kPlain) line_tables.push_back(std::move(table));
      }
      if (line_tables.size() > 1)
        for (const char* metric : {"homo", "avg_ev"})
          emit_chart(line_tables, ChartKind::kMetricLine, metric, "k-means",
                     cfg.out_dir / (ex_family + "_k-means_" + metric + "_line.svg"));
    }
  } catch (const StageError& e) {
    std::cerr << "error in stage " << e.stage() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
