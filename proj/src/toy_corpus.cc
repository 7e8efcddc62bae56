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

#include "wlac/toy_corpus.h"

#include <algorithm>
#include <numeric>
#include <random>

WLAC_NAMESPACE_BEGIN

namespace {

constexpr char kLetters[] = "abcdefghiklmnoprstuvwyz";
constexpr char kVowels[] = "aeiou";
constexpr char kConsonants[] = "bdfgklmnprstvz";
constexpr const char* kSuffixes[] = {"en", "or", "ist", "um", "ak", "el", "ine", "os"};
constexpr const char* kSourceSuffixes[] = {"ZO", "MI", "TA", "RU", "PE", "LO", "BA", "KI"};

template <std::size_t N>
char Pick(const char (&set)[N], std::mt19937_64& rng) {
  return set[std::uniform_int_distribution<std::size_t>(0, N - 2)(rng)];
}

struct Entry {
  std::size_t root;
  std::size_t suffix;
};

class Generator {
 public:
  explicit Generator(const ToyCorpusConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    if (cfg.letters == 0 || cfg.letters > sizeof(kLetters) - 1) {
      throw ConfigError("toy corpus letters must be in [1, 23]");
    }
    if (cfg.suffixes < 3 || cfg.suffixes > std::size(kSuffixes)) {
      throw ConfigError("toy corpus suffixes must be in [3, 8]");
    }
    if (cfg.min_words < 3 || cfg.min_words > cfg.max_words || cfg.max_words > cfg.letters) {
      throw ConfigError("toy sentence lengths must satisfy 3 <= min <= max <= letters");
    }
    MakeLexicon();
  }

  ToyCorpus Run() {
    ToyCorpus out;
    for (std::size_t i = 0; i < cfg_.train_pairs; ++i) out.train.push_back(Sentence(nullptr));
    for (std::size_t i = 0; i < cfg_.test_pairs; ++i) out.test.push_back(Sentence(nullptr));
    for (std::size_t i = 0; i < cfg_.rare_test_pairs; ++i) {
      std::size_t pos = 0;
      out.rare_test.push_back(Sentence(&pos));
      out.rare_positions.push_back(pos);
    }
    for (std::size_t r = 0; r < roots_.size(); ++r) {
      for (std::size_t s = 0; s < cfg_.suffixes; ++s) {
        const std::string w = Word(r, s);
        out.words.push_back(w);
        if (rare_[r][s]) out.rare_words.insert(w);
        out.lexicon[src_roots_[r] + " " + kSourceSuffixes[s]] = w;
      }
    }
    std::sort(out.words.begin(), out.words.end());
    // A letter-substitution spelling stands in for a romanization.
    for (std::size_t i = 0; i < out.words.size() && i < 100; ++i) {
      std::string rom;
      for (char c : out.words[i]) rom += static_cast<char>('a' + (c - 'a' + 7) % 26);
      out.romanization[out.words[i]] = rom;
    }
    return out;
  }

 private:
  void MakeLexicon() {
    std::set<std::string> used;
    for (std::size_t l = 0; l < cfg_.letters; ++l) {
      for (std::size_t k = 0; k < cfg_.roots_per_letter; ++k) {
        std::string root;
        do {
          root.assign(1, kLetters[l]);
          const bool vowel_start = std::string(kVowels).find(kLetters[l]) != std::string::npos;
          if (vowel_start) {
            root += Pick(kConsonants, rng_);
            root += Pick(kVowels, rng_);
          } else {
            root += Pick(kVowels, rng_);
            root += Pick(kConsonants, rng_);
          }
          // Roots are three or four letters, so a word has at most seven.
          if (std::uniform_int_distribution<int>(0, 1)(rng_) == 1) {
            root += vowel_start ? Pick(kConsonants, rng_) : Pick(kVowels, rng_);
          }
        } while (!used.insert(root).second);
        roots_.push_back(root);
        letter_of_.push_back(l);
      }
    }
    std::set<std::string> used_src;
    for (std::size_t r = 0; r < roots_.size(); ++r) {
      std::string tok;
      do {
        tok.clear();
        tok += static_cast<char>(Pick(kConsonants, rng_) - 'a' + 'A');
        tok += static_cast<char>(Pick(kVowels, rng_) - 'a' + 'A');
        tok += static_cast<char>(Pick(kConsonants, rng_) - 'a' + 'A');
      } while (!used_src.insert(tok).second);
      src_roots_.push_back(tok);
    }
    // Rare combinations: each root keeps at least two common suffixes.
    const std::size_t total = roots_.size() * cfg_.suffixes;
    const std::size_t target = static_cast<std::size_t>(cfg_.rare_fraction * total + 0.5);
    rare_.assign(roots_.size(), std::vector<bool>(cfg_.suffixes, false));
    std::vector<Entry> all;
    for (std::size_t r = 0; r < roots_.size(); ++r) {
      for (std::size_t s = 0; s < cfg_.suffixes; ++s) all.push_back({r, s});
    }
    std::shuffle(all.begin(), all.end(), rng_);
    std::vector<std::size_t> rare_count(roots_.size(), 0);
    std::size_t made = 0;
    for (const Entry& e : all) {
      if (made == target) break;
      if (rare_count[e.root] + 2 >= cfg_.suffixes) continue;
      rare_[e.root][e.suffix] = true;
      ++rare_count[e.root];
      ++made;
    }
  }

  std::string Word(std::size_t r, std::size_t s) const { return roots_[r] + kSuffixes[s]; }

  std::size_t DrawSuffix(std::size_t r, bool want_rare) {
    std::vector<double> w(cfg_.suffixes);
    for (std::size_t s = 0; s < cfg_.suffixes; ++s) {
      if (want_rare) {
        w[s] = rare_[r][s] ? 1.0 : 0.0;
      } else {
        w[s] = rare_[r][s] ? cfg_.rare_weight : 1.0;
      }
    }
    return std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng_);
  }

  // With `rare_pos`, one interior word is forced to be a rare combination.
  ParallelPair Sentence(std::size_t* rare_pos) {
    const std::size_t n =
        std::uniform_int_distribution<std::size_t>(cfg_.min_words, cfg_.max_words)(rng_);
    std::vector<std::size_t> letters(cfg_.letters);
    std::iota(letters.begin(), letters.end(), 0);
    std::shuffle(letters.begin(), letters.end(), rng_);
    std::size_t forced = n;
    if (rare_pos != nullptr) {
      forced = std::uniform_int_distribution<std::size_t>(1, n - 2)(rng_);
      *rare_pos = forced;
    }
    ParallelPair p;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t letter = letters[i];
      std::size_t r;
      do {
        r = letter * cfg_.roots_per_letter +
            std::uniform_int_distribution<std::size_t>(0, cfg_.roots_per_letter - 1)(rng_);
      } while (i == forced && std::none_of(rare_[r].begin(), rare_[r].end(),
                                            [](bool b) { return b; }));
      const std::size_t s = DrawSuffix(r, i == forced);
      p.src_tokens.push_back(src_roots_[r]);
      p.src_tokens.push_back(kSourceSuffixes[s]);
      p.tgt_tokens.push_back(Word(r, s));
    }
    return p;
  }

  const ToyCorpusConfig& cfg_;
  std::mt19937_64 rng_;
  std::vector<std::string> roots_;
  std::vector<std::size_t> letter_of_;
  std::vector<std::string> src_roots_;
  std::vector<std::vector<bool>> rare_;
};

}  // namespace

ToyCorpus GenerateToyCorpus(const ToyCorpusConfig& cfg) { return Generator(cfg).Run(); }

WLAC_NAMESPACE_END
