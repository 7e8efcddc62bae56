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

// Unigram-LM subword segmentation and the joint symbol table.
//
// The tokenizer works on single words. Pieces are plain substrings with no
// boundary markers, so a word's segmentation concatenates back to the word;
// word ends are marked in the model input by the [EOW] symbol instead.

#ifndef WLAC_SUBWORD_H_
#define WLAC_SUBWORD_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "wlac/common.h"

WLAC_NAMESPACE_BEGIN

struct SubwordTrainerConfig {
  std::size_t vocab_size = 1000;
  // Longest candidate piece, in code points.
  std::size_t max_piece_length = 16;
  // Seed candidates kept before EM, as a multiple of vocab_size.
  std::size_t seed_multiplier = 8;
  // Fraction of prunable pieces kept per pruning round.
  double shrink_factor = 0.75;
  int em_iterations = 2;
  // Accepted for interface stability; training is fully deterministic.
  std::uint64_t seed = 0;
};

class SubwordModel {
 public:
  struct Piece {
    std::string text;
    double logprob = 0;
  };

  SubwordModel() = default;
  explicit SubwordModel(std::vector<Piece> pieces);

  const std::vector<Piece>& pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }
  bool Contains(const std::string& piece) const {
    return index_.count(piece) > 0;
  }
  std::optional<double> LogProb(const std::string& piece) const;
  // Code points present as single-character pieces.
  std::set<std::string> Alphabet() const;
  std::size_t max_piece_codepoints() const { return max_piece_codepoints_; }

  friend bool operator==(const SubwordModel& a, const SubwordModel& b);

 private:
  std::vector<Piece> pieces_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t max_piece_codepoints_ = 0;
};

// Words of the corpus are whitespace-separated tokens. Throws InputError for
// an empty corpus and ConfigError when vocab_size cannot hold the alphabet
// or exceeds the number of distinct candidate substrings.
SubwordModel TrainSubwordModel(const std::vector<std::string>& corpus_lines,
                               const SubwordTrainerConfig& cfg);

inline constexpr const char* kUnknownPiece = "[UNK]";

struct EncodedWord {
  std::vector<std::string> pieces;
  // Set when some code point is not in the model alphabet; such code points
  // appear as kUnknownPiece.
  bool has_unknown = false;
};

// Viterbi segmentation maximizing total log-probability. Ties go to fewer
// pieces, then to the lexicographically smallest piece sequence.
EncodedWord EncodeWord(const SubwordModel& model, const std::string& word);
// Concatenation of pieces; throws InputError on a piece not in the model.
std::string DecodeSubwords(const SubwordModel& model,
                           const std::vector<std::string>& pieces);

// Header `subword-model v1 <n>`, then `piece<TAB>logprob` per line.
void SaveSubwordModel(const std::string& path, const SubwordModel& model);
SubwordModel LoadSubwordModel(const std::string& path);
std::string SubwordModelToString(const SubwordModel& model);
SubwordModel SubwordModelFromString(const std::string& text);

// ---------------------------------------------------------------------------

enum class SymbolKind { kSpecial, kSubword, kChar };

struct Symbol {
  SymbolKind kind = SymbolKind::kSpecial;
  std::string text;
  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

enum SpecialId : int {
  kPadId = 0,
  kUnkId = 1,
  kBosId = 2,
  kEosId = 3,
  kMaskId = 4,
  kTipId = 5,
  kSepId = 6,
  kEowId = 7,
  kNumSpecials = 8,
};

// Joint id space: specials [0, 8), subwords, then characters.
class SymbolTable {
 public:
  SymbolTable() = default;
  SymbolTable(const std::vector<std::string>& subwords,
              const std::vector<std::string>& chars);

  std::size_t size() const { return symbols_.size(); }
  std::size_t num_subwords() const { return num_subwords_; }
  std::size_t num_chars() const { return symbols_.size() - char_begin(); }
  int subword_begin() const { return kNumSpecials; }
  int char_begin() const {
    return kNumSpecials + static_cast<int>(num_subwords_);
  }
  bool IsSubword(int id) const { return id >= subword_begin() && id < char_begin(); }
  bool IsChar(int id) const {
    return id >= char_begin() && id < static_cast<int>(size());
  }

  const Symbol& SymbolOf(int id) const;
  std::optional<int> IdOf(const Symbol& s) const;
  // Subword id; kUnkId for "[UNK]" or unknown pieces.
  int SubwordId(const std::string& piece) const;
  // Character id; kUnkId when the character is outside the alphabet.
  int CharId(const std::string& ch) const;
  // Display form: specials as written, chars as "<c:x>".
  std::string Display(int id) const;

  friend bool operator==(const SymbolTable& a, const SymbolTable& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<Symbol> symbols_;
  std::map<Symbol, int> ids_;
  std::size_t num_subwords_ = 0;
};

const char* SpecialName(int id);

SymbolTable BuildSymbolTable(const SubwordModel& model,
                             const std::set<std::string>& char_alphabet);

// Header `symbol-table v1 <n>`, then `id<TAB>kind<TAB>text` per line.
void SaveSymbolTable(const std::string& path, const SymbolTable& table);
SymbolTable LoadSymbolTable(const std::string& path);

// Subword ids for a word list, each word segmented with EncodeWord.
std::vector<int> EncodeWordsToIds(const SubwordModel& model,
                                  const SymbolTable& table,
                                  const std::vector<std::string>& words,
                                  bool* has_unknown = nullptr);

WLAC_NAMESPACE_END

#endif  // WLAC_SUBWORD_H_
