// Copyright 2026 The WLAC Authors
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

// Synthetic parallel corpus with a deterministic lexicon.
//
// Every target word is a root followed by a suffix. A source sentence spells
// each target word as two tokens, an uppercase root token and a suffix token,
// in the same order as the target. Within a sentence no two target words
// share a first letter. A configurable share of (root, suffix) combinations
// is rare: they are drawn with a small weight, so they occur only a handful
// of times in training.

#ifndef WLAC_TOY_CORPUS_H_
#define WLAC_TOY_CORPUS_H_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "wlac/common.h"
#include "wlac/datagen.h"

WLAC_NAMESPACE_BEGIN

struct ToyCorpusConfig {
  std::size_t train_pairs = 2000;
  std::size_t test_pairs = 600;
  std::size_t rare_test_pairs = 300;
  std::size_t letters = 20;
  std::size_t roots_per_letter = 2;
  std::size_t suffixes = 5;
  double rare_fraction = 0.3;
  double rare_weight = 0.02;
  std::size_t min_words = 5;
  std::size_t max_words = 8;
  std::uint64_t seed = 7;
};

struct ToyCorpus {
  std::vector<ParallelPair> train;
  std::vector<ParallelPair> test;
  // Each of these holds a rare word at rare_positions[i], never at an edge.
  std::vector<ParallelPair> rare_test;
  std::vector<std::size_t> rare_positions;
  std::vector<std::string> words;
  std::set<std::string> rare_words;
  // source "ROOT SUF" -> target word.
  std::map<std::string, std::string> lexicon;
  // Target word -> romanized spelling, for code-switching data.
  std::map<std::string, std::string> romanization;
};

ToyCorpus GenerateToyCorpus(const ToyCorpusConfig& cfg);

WLAC_NAMESPACE_END

#endif  // WLAC_TOY_CORPUS_H_
