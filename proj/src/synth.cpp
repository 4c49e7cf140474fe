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

#include "attnclust/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "attnclust/common.hpp"
#include "attnclust/embeddings.hpp"

namespace attnclust {

namespace {

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + uniform_index(rng, hi - lo + 1); }

}  // namespace

void SynthConfig::validate() const {
  if (classes < 1 || docs_per_class < 1 || keywords_per_class < 1 || filler_words < 1)
    throw std::invalid_argument("SynthConfig: counts must be >= 1");
  if (min_sentences < 1 || min_sentences > max_sentences || min_words < 1 || min_words > max_words)
    throw std::invalid_argument("SynthConfig: bad sentence or word length range");
  if (keyword_rate < 0.0 || keyword_rate > 1.0 || noise < 0.0 || noise > 1.0)
    throw std::invalid_argument("SynthConfig: rates must lie in [0, 1]");
}

std::string synth_class_label(std::size_t c) { return "class" + std::to_string(c); }
std::string synth_keyword(std::size_t c, std::size_t j) {
  return "c" + std::to_string(c) + "k" + std::to_string(j);
}
std::string synth_filler(std::size_t j) { return "f" + std::to_string(j); }

std::vector<RawRecord> generate_corpus(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::vector<RawRecord> out;
  for (std::size_t c = 0; c < config.classes; ++c) {
    for (std::size_t d = 0; d < config.docs_per_class; ++d) {
      std::string text;
      const std::size_t sentences = between(rng, config.min_sentences, config.max_sentences);
      for (std::size_t s = 0; s < sentences; ++s) {
        const std::size_t words = between(rng, config.min_words, config.max_words);
        for (std::size_t w = 0; w < words; ++w) {
          std::string word;
          if (uniform_real(rng, 0.0, 1.0) < config.keyword_rate) {
            std::size_t owner = c;
            if (config.classes > 1 && uniform_real(rng, 0.0, 1.0) < config.noise)
              owner = (c + 1 + uniform_index(rng, config.classes - 1)) % config.classes;
            word = synth_keyword(owner, uniform_index(rng, config.keywords_per_class));
          } else {
            word = synth_filler(uniform_index(rng, config.filler_words));
          }
          if (w > 0 || s > 0) text += ' ';
          text += word;
        }
        text += '.';
      }
      RawRecord r;
      r.text = std::move(text);
      r.class_label = synth_class_label(c);
      out.push_back(std::move(r));
    }
  }
  seeded_shuffle(out, rng);
  char buf[32];
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::snprintf(buf, sizeof buf, "doc%04zu", i);
    out[i].id = buf;
  }
  return out;
}

std::string generate_pretrained_vectors(const SynthConfig& config, std::size_t dim,
                                        std::uint64_t seed) {
  SynthConfig big = config;
  big.seed = seed;
  big.docs_per_class = std::max<std::size_t>(config.docs_per_class * 2, 50);
  const auto records = generate_corpus(big);
  std::vector<std::vector<std::string>> streams;
  for (const auto& r : records) streams.push_back(word_stream(r.text));
  const auto vocab = build_vocabulary(streams, 1);
  std::vector<TokenizedDocument> docs;
  for (const auto& r : records) docs.push_back(tokenize_document(r.text, vocab));
  SkipgramConfig sg;
  sg.dim = dim;
  sg.seed = seed;
  sg.epochs = 5;
  const auto trained = train_skipgram(docs, vocab, sg);
  return format_word_vectors(trained.embeddings, vocab);
}

}  // namespace attnclust
