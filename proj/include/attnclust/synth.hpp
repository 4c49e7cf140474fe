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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "attnclust/corpus.hpp"

namespace attnclust {

/// Generator for labelled toy corpora. Class c owns the keywords
/// "c<c>k<j>"; every class shares the filler words "f<j>".
struct SynthConfig {
  std::size_t classes = 6;
  std::size_t docs_per_class = 40;
  std::size_t keywords_per_class = 8;
  std::size_t filler_words = 80;
  std::size_t min_sentences = 3;
  std::size_t max_sentences = 6;
  std::size_t min_words = 5;
  std::size_t max_words = 10;
  double keyword_rate = 0.2;   // chance a word slot holds a class keyword
  double noise = 0.2;          // chance such a keyword comes from another class
  std::uint64_t seed = 1;

  void validate() const;
};

std::string synth_class_label(std::size_t c);
std::string synth_keyword(std::size_t c, std::size_t j);
std::string synth_filler(std::size_t j);

/// Records with ids "doc0000", ..., ordered class by class and then
/// shuffled under the seed.
std::vector<RawRecord> generate_corpus(const SynthConfig& config);

/// Word vectors in text format trained by skip-gram on an independent corpus
/// drawn from the same generator under a different seed.
std::string generate_pretrained_vectors(const SynthConfig& config, std::size_t dim,
                                        std::uint64_t seed);

}  // namespace attnclust
