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

// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Usage: acceptance <work-dir> <cli-binary>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "attnclust/clustering.hpp"
#include "attnclust/harness.hpp"
#include "attnclust/metrics.hpp"
#include "attnclust/neural.hpp"
#include "attnclust/report.hpp"
#include "cluster_oracle.hpp"
#include "experiment_fixtures.hpp"
#include "fixtures.hpp"
#include "han_fixtures.hpp"
#include "metric_oracle.hpp"

using namespace attnclust;
namespace fs = std::filesystem;

namespace {

// Collects failed conditions for one criterion.
struct Verdict {
  std::vector<std::string> failures;
  std::vector<std::string> facts;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& fact) { facts.push_back(fact); }
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream o;
  o.precision(digits);
  o << x;
  return o.str();
}

// ---------------------------------------------------------------------------

void criterion_v_measure(Verdict& v) {
  const double value = v_measure_from(0.498, 0.514);
  v.note("V = " + fmt(value, 6));
  v.require(std::abs(value - 0.506) <= 0.0005, "V-measure of (.498, .514) is " + fmt(value, 6));
  v.require(format_metric(value) == ".506", "rendered as " + format_metric(value));
}

void criterion_degenerate_row(Verdict& v) {
  std::vector<int> truth = {0, 0, 1, 1, 2, 2, 2, 0};
  std::vector<int> single(truth.size(), 0);
  Eigen::MatrixXd points(8, 2);
  for (int i = 0; i < 8; ++i) points.row(i) << i, i % 3;
  const auto r = evaluate(truth, single, points);
  ResultTable t;
  t.code = "CHECK";
  t.rows.push_back({"dbscan", r, 1});
  const auto csv = format_table_csv(t);
  const bool shape = csv.find("dbscan,.000,1.000,.000,.000,.000,----,") != std::string::npos;
  v.note("row " + csv.substr(csv.find("dbscan"), 40));
  v.require(shape, "rendered row differs: " + csv);
  v.require(r.homo == 0.0 && r.comp == 1.0 && r.v_measure == 0.0, "homo/comp/v values");
  v.require(std::abs(r.ari) < 1e-12 && std::abs(r.ami) < 1e-12, "ARI/AMI not zero");
  v.require(!r.silhouette.has_value(), "silhouette present");
  const auto md = format_table_markdown(t);
  v.require(md.find("| dbscan | .000 | 1.000 | .000 | .000 | .000 | ---- |") != std::string::npos,
            "markdown row differs");
}

void criterion_metric_oracle(Verdict& v) {
  const int n = 6;
  std::vector<oracle::Labels> all;
  for (int code = 0; code < 729; ++code) {
    oracle::Labels l(n);
    int c = code;
    for (auto& x : l) {
      x = c % 3;
      c /= 3;
    }
    all.push_back(l);
  }
  std::map<std::pair<std::vector<long>, std::vector<long>>, double> emi_cache;
  double worst = 0.0;
  std::size_t pairs = 0;
  for (const auto& t : all)
    for (const auto& p : all) {
      const auto table = contingency_table(t, p);
      auto ta = table.class_totals, pb = table.cluster_totals;
      std::sort(ta.begin(), ta.end());
      std::sort(pb.begin(), pb.end());
      auto [it, fresh] = emi_cache.try_emplace({ta, pb}, 0.0);
      if (fresh) it->second = oracle::expected_mi_exhaustive(t, p);
      const auto hcv = homogeneity_completeness_v(table);
      const auto o = oracle::homogeneity_completeness(t, p);
      worst = std::max({worst, std::abs(o.homo - hcv.homogeneity), std::abs(o.comp - hcv.completeness),
                        std::abs(o.v - hcv.v_measure),
                        std::abs(oracle::adjusted_rand(t, p) - adjusted_rand_index(table)),
                        std::abs(oracle::adjusted_mi(t, p, it->second) - adjusted_mutual_info(table))});
      ++pairs;
    }
  v.note(std::to_string(pairs) + " pairs, worst deviation " + fmt(worst, 3));
  v.require(pairs == 729u * 729u, "pair count");
  v.require(worst < 1e-9, "exhaustive deviation " + fmt(worst, 3));

  std::mt19937_64 rng(2024);
  double worst_mc = 0.0;
  for (int c = 0; c < 20; ++c) {
    const int m = 12 + static_cast<int>(rng() % 19);
    const int kt = 2 + static_cast<int>(rng() % 3), kp = 2 + static_cast<int>(rng() % 4);
    oracle::Labels t(static_cast<std::size_t>(m)), p(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      t[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<unsigned>(kt));
      p[static_cast<std::size_t>(i)] = rng() % 3 == 0 ? static_cast<int>(rng() % static_cast<unsigned>(kp))
                                                       : t[static_cast<std::size_t>(i)] % kp;
    }
    double total = 0.0;
    const int samples = 100000;
    oracle::Labels shuffled = p;
    for (int s = 0; s < samples; ++s) {
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      total += oracle::mutual_information(t, shuffled);
    }
    const double ami_mc = oracle::adjusted_mi(t, p, total / samples);
    const double ami = adjusted_mutual_info(contingency_table(t, p));
    worst_mc = std::max(worst_mc, std::abs(ami - ami_mc));
  }
  v.note("Monte Carlo AMI worst gap " + fmt(worst_mc, 3));
  v.require(worst_mc <= 0.02, "Monte Carlo AMI gap " + fmt(worst_mc, 3));
}

// Layer-level gradient checks on random shapes and seeds.
double layer_gradient_error(std::uint64_t seed) {
  Rng rng(seed);
  auto rand_mat = [&](Eigen::Index r, Eigen::Index c) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  };
  const Eigen::Index d = 2 + static_cast<Eigen::Index>(seed % 3), h = 2 + static_cast<Eigen::Index>(seed % 3),
                     T = 1 + static_cast<Eigen::Index>(seed % 4), a = 3;
  double worst = 0.0;
  const FdOptions opts{1e-5, 1000, 1e-8, seed};

  {  // bidirectional LSTM, which exercises the cell in both directions
    ParamStore s;
    auto f = LstmParams::xavier(static_cast<std::size_t>(d), static_cast<std::size_t>(h), rng);
    auto b = LstmParams::xavier(static_cast<std::size_t>(d), static_cast<std::size_t>(h), rng);
    s.add("fW", f.W), s.add("fU", f.U), s.add("fb", f.b);
    s.add("bW", b.W), s.add("bU", b.U), s.add("bb", b.b);
    s.add("seq", rand_mat(d, T));
    const Mat r = rand_mat(2 * h, T);
    LossFunction loss = [&](ParamStore& st, bool g) {
      LstmParams pf{st.value("fW"), st.value("fU"), st.value("fb").col(0)};
      LstmParams pb{st.value("bW"), st.value("bU"), st.value("bb").col(0)};
      BiLstmCache cache;
      Mat out = bilstm_encode(st.value("seq"), pf, pb, &cache);
      if (g) {
        auto gf = LstmParams::zeros(pf.input_dim(), pf.hidden()), gb = gf;
        st.grad("seq") = bilstm_backward(cache, pf, pb, r, gf, gb);
        st.grad("fW") = gf.W, st.grad("fU") = gf.U, st.grad("fb") = gf.b;
        st.grad("bW") = gb.W, st.grad("bU") = gb.U, st.grad("bb") = gb.b;
      }
      return r.cwiseProduct(out).sum();
    };
    worst = std::max(worst, finite_difference_check(loss, s, opts).max_rel_error);
  }
  {  // attention pooling
    ParamStore s;
    auto p = AttentionParams::xavier(static_cast<std::size_t>(2 * h), a, rng);
    s.add("W", p.W), s.add("b", p.b), s.add("ctx", p.context);
    s.add("states", rand_mat(2 * h, T));
    const Vec r = rand_mat(2 * h, 1).col(0);
    LossFunction loss = [&](ParamStore& st, bool g) {
      AttentionParams q{st.value("W"), st.value("b").col(0), st.value("ctx").col(0)};
      AttentionCache cache;
      auto out = attention_pool(st.value("states"), q, {}, &cache);
      if (g) {
        auto gq = AttentionParams::zeros(static_cast<std::size_t>(2 * h), a);
        st.grad("states") = attention_backward(cache, q, r, gq);
        st.grad("W") = gq.W, st.grad("b") = gq.b, st.grad("ctx") = gq.context;
      }
      return r.dot(out.pooled);
    };
    worst = std::max(worst, finite_difference_check(loss, s, opts).max_rel_error);
  }
  {  // softmax classifier
    ParamStore s;
    s.add("v", rand_mat(2 * h, 1)), s.add("W", rand_mat(3, 2 * h)), s.add("b", rand_mat(3, 1));
    const int label = static_cast<int>(seed % 3);
    LossFunction loss = [&](ParamStore& st, bool g) {
      auto out = dense_softmax_xent(st.value("v").col(0), label, st.value("W"), st.value("b").col(0));
      if (g) st.grad("v") = out.d_input, st.grad("W") = out.d_W, st.grad("b") = out.d_b;
      return out.loss;
    };
    worst = std::max(worst, finite_difference_check(loss, s, opts).max_rel_error);
  }
  return worst;
}

void criterion_gradients(Verdict& v) {
  // Some HAN coordinates have gradients near 1e-8. Central differences at
  // 1e-5 carry about 1e-11 of rounding noise, which is 1e-3 relative there,
  // so the full-model check steps by 1e-4.
  for (std::uint64_t seed : {11, 12, 13}) {
    auto corpus = fixtures::disjoint_corpus(2, seed);
    HanConfig cfg = fixtures::toy_config();
    cfg.embed_dim = 6;
    cfg.word_hidden = 4;
    cfg.sent_hidden = 4;
    cfg.attention_dim = 5;
    cfg.seed = seed;
    auto params = HanParams::initialize(cfg, init_random(corpus.vocab_size, cfg.embed_dim, seed, 1));
    const auto report = finite_difference_check(fixtures::han_loss_function(corpus.docs, 1), params.to_store(),
                                                {1e-4, 100000, 1e-8, seed});
    v.note("full HAN seed " + std::to_string(seed) + ": " + std::to_string(report.coords_checked) +
           " coords, worst " + fmt(report.max_rel_error, 3) + " (" + report.worst_param + ")");
    v.require(report.max_rel_error < 1e-4, "full HAN relative error " + fmt(report.max_rel_error, 3));
  }

  double layers = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) layers = std::max(layers, layer_gradient_error(seed));
  v.note("per-layer worst " + fmt(layers, 3));
  v.require(layers < 1e-5, "per-layer relative error " + fmt(layers, 3));
}

void criterion_trainability(Verdict& v) {
  auto corpus = fixtures::keyword_corpus(20, 21);
  HanConfig cfg = fixtures::toy_config();
  auto trained = train_han(cfg, corpus.docs, init_random(corpus.vocab_size, cfg.embed_dim, 6, 1));
  std::size_t first_perfect = 0;
  for (std::size_t e = 0; e < trained.history.accuracy.size(); ++e)
    if (trained.history.accuracy[e] == 1.0) {
      first_perfect = e + 1;
      break;
    }
  std::size_t correct = 0;
  double keyword_sum = 0.0, filler_sum = 0.0;
  std::size_t keyword_n = 0, filler_n = 0;
  for (const auto& d : corpus.docs) {
    const auto f = forward_classify(trained.params, d);
    Eigen::Index best = 0;
    f.probabilities.maxCoeff(&best);
    correct += best == *d.label;
    for (std::size_t s = 0; s < d.sentences.size(); ++s)
      for (std::size_t w = 0; w < d.sentences[s].size(); ++w) {
        const double a = f.word_attention[s](static_cast<Eigen::Index>(w));
        if (d.sentences[s][w] < fixtures::kFirstFiller) {
          keyword_sum += a;
          ++keyword_n;
        } else {
          filler_sum += a;
          ++filler_n;
        }
      }
  }
  const double kw = keyword_sum / static_cast<double>(keyword_n);
  const double fl = filler_sum / static_cast<double>(filler_n);
  v.note("100% training accuracy first at epoch " + std::to_string(first_perfect) + "; final " +
         std::to_string(correct) + "/20; keyword attention " + fmt(kw) + " vs filler " + fmt(fl));
  v.require(correct == corpus.docs.size(), "final accuracy " + std::to_string(correct) + "/20");
  v.require(kw > fl, "keyword attention does not exceed filler attention");
}

void criterion_clustering(Verdict& v) {
  std::vector<int> truth;
  const auto blobs = fixtures::blobs3(&truth);
  ClusteringParams params;
  auto score = [&](Algorithm a) {
    auto assignment = run_algorithm(a, blobs, 3, params);
    return contingency_table(truth, labels_with_noise_cluster(assignment));
  };
  std::ostringstream line;
  for (auto a : {Algorithm::kKMeans, Algorithm::kMiniBatchKMeans, Algorithm::kAgglomerative, Algorithm::kBirch,
                 Algorithm::kDbscan, Algorithm::kMeanShift}) {
    const double ari = adjusted_rand_index(score(a));
    line << algorithm_name(a) << " " << fmt(ari) << "; ";
    v.require(ari >= 0.99, std::string(algorithm_name(a)) + " ARI " + fmt(ari));
  }
  const double ap_homo = homogeneity_completeness_v(score(Algorithm::kAffinity)).homogeneity;
  line << "affinity homo " << fmt(ap_homo);
  v.require(ap_homo >= 0.99, "affinity homogeneity " + fmt(ap_homo));
  v.note(line.str());

  bool monotone = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto a = kmeans(blobs, 2 + seed % 4, 1, 300, seed);
    for (std::size_t i = 1; i < a.inertia_history.size(); ++i)
      monotone = monotone && a.inertia_history[i] <= a.inertia_history[i - 1] * (1 + 1e-12);
  }
  v.require(monotone, "k-means inertia increased between iterations");

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-5, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 6;
    PointSet p;
    p.coords.resize(n, 1 + trial % 3);
    for (Eigen::Index i = 0; i < p.coords.size(); ++i) p.coords.data()[i] = u(rng);
    const double best = oracle::exhaustive_two_partition(p.coords);
    const double got = kmeans(p, 2, 32, 300, static_cast<std::uint64_t>(trial)).inertia;
    worst = std::max(worst, std::abs(got - best) / std::max(best, 1e-12));
  }
  v.note("best-of-32 vs exhaustive optimum, worst relative gap " + fmt(worst, 3));
  v.require(worst < 1e-9, "k-means missed the 2-partition optimum");
}

struct TrendRun {
  double plain_avg = 0, as5_avg = 0;
  std::map<std::string, double> homo;  // code -> mean k-means homogeneity
};

void criterion_trend(Verdict& v, const fs::path& work) {
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const std::vector<std::string> codes = {"AS2", "AS5", "AS9", "AP2", "AP5", "AP9"};
  TrendRun mean;
  for (auto seed : seeds) {
    SynthConfig synth;
    synth.classes = 6;
    synth.docs_per_class = 40;
    synth.seed = seed;
    auto cfg = fixtures::synth_experiment(work / ("trend_" + std::to_string(seed)), synth, 50);
    cfg.max_per_class = 40;
    cfg.han.word_hidden = 25;
    cfg.han.sent_hidden = 25;
    cfg.han.attention_dim = 50;
    cfg.han.batch_size = 2;
    cfg.han.epochs = 50;
    const auto plain = run_plain(cfg, seed);
    mean.plain_avg += plain.row("k-means").report.avg_ev / seeds.size();
    for (const auto& code : codes) {
      const auto t = run_variation(VariationSpec::parse(code, seed), cfg);
      const auto& km = t.row("k-means").report;
      mean.homo[code] += km.homo / seeds.size();
      if (code == "AS5") mean.as5_avg += km.avg_ev / seeds.size();
    }
  }
  v.note("k-means Avg.Ev. PLAIN " + fmt(mean.plain_avg, 3) + " vs AS5 " + fmt(mean.as5_avg, 3));
  v.require(mean.as5_avg > mean.plain_avg, "AS5 Avg.Ev. does not exceed PLAIN");
  for (const std::string fam : {"AS", "AP"}) {
    const double h2 = mean.homo[fam + "2"], h5 = mean.homo[fam + "5"], h9 = mean.homo[fam + "9"];
    v.note(fam + " homogeneity " + fmt(h2, 3) + " -> " + fmt(h5, 3) + " -> " + fmt(h9, 3));
    v.require(h5 >= h2 - 0.02 && h9 >= h5 - 0.02, fam + " homogeneity falls across fractions");
  }
}

int run_command(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return rc;
}

void criterion_determinism(Verdict& v, const fs::path& work, const std::string& cli) {
  const auto dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string q = "\"";
  v.require(run_command(q + cli + q + " synth --out-dir " + q + dir.string() + q + " --seed 7") == 0,
            "synth command failed");
  write_file_atomic(dir / "experiment.conf",
                    "data.path = synth.tsv\n"
                    "data.pretrained = synth_vectors.vec\n"
                    "data.max_per_class = 40\n"
                    "han.embed_dim = 50\n"
                    "han.word_hidden = 25\n"
                    "han.sent_hidden = 25\n"
                    "han.attention_dim = 50\n"
                    "han.batch_size = 2\n"
                    "han.epochs = 50\n");
  for (const char* run : {"run1", "run2"}) {
    const int rc = run_command(q + cli + q + " experiment --config " + q + (dir / "experiment.conf").string() + q +
                               " --variation AS2 --seed 7 --out-dir " + q + (dir / run).string() + q);
    v.require(rc == 0, std::string("experiment ") + run + " failed");
  }
  if (!v.failures.empty()) return;
  const auto a = read_file(dir / "run1" / "AS2_table.csv");
  const auto b = read_file(dir / "run2" / "AS2_table.csv");
  v.require(a == b, "AS2 tables differ between runs");
  v.require(read_file(dir / "run1" / "AS2_table.md") == read_file(dir / "run2" / "AS2_table.md"),
            "markdown tables differ between runs");

  std::istringstream in(a);
  std::string line;
  std::getline(in, line);
  v.require(line == "algorithm,homo,comp,v_me,ari,ami,silh,avg_ev", "header is " + line);
  const std::regex cell(R"(^(-?\.\d{3}|-?1\.000|----)$)");
  std::size_t rows = 0;
  bool cells_ok = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    cells_ok = cells_ok && fields.size() == 8 && rows < 7 &&
               fields[0] == algorithm_name(kAllAlgorithms[rows]);
    for (std::size_t i = 1; i < fields.size(); ++i) cells_ok = cells_ok && std::regex_match(fields[i], cell);
    ++rows;
  }
  v.require(rows == 7, "table has " + std::to_string(rows) + " rows");
  v.require(cells_ok, "a cell or algorithm name breaks the table schema");
  v.note("two runs byte-identical, " + std::to_string(rows) + " rows, 3-decimal cells");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <work-dir> <cli-binary>\n";
    return 2;
  }
  const fs::path work = argv[1];
  const std::string cli = argv[2];
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"1 V-measure from published homogeneity/completeness", criterion_v_measure},
      {"2 degenerate single-cluster row", criterion_degenerate_row},
      {"3 metric oracle equivalence", criterion_metric_oracle},
      {"4 gradient correctness", criterion_gradients},
      {"5 trainability and keyword attention", criterion_trainability},
      {"6 clustering recovery", criterion_clustering},
      {"7 trend reproduction", [&](Verdict& v) { criterion_trend(v, work); }},
      {"8 end-to-end determinism and table fidelity", [&](Verdict& v) { criterion_determinism(v, work, cli); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      check(v);
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = v.failures.empty();
    failed += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << name << " (" << fmt(secs, 3) << " s)\n";
    for (const auto& f : v.facts) std::cout << "    " << f << "\n";
    for (const auto& f : v.failures) std::cout << "    failed: " << f << "\n";
    std::cout.flush();
  }
  std::cout << (failed ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED") << "\n";
  return failed ? 1 : 0;
}
