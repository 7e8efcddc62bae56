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

// Construction of completion samples, iterative decoding rows, masked-LM
// samples and code-switched sentences from a parallel corpus, plus the batch
// mixer that interleaves the two training sets.

#ifndef WLAC_DATAGEN_H_
#define WLAC_DATAGEN_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wlac/common.h"
#include "wlac/subword.h"

WLAC_NAMESPACE_BEGIN

enum class ContextType { kZero, kPrefix, kSuffix, kBi };

inline constexpr ContextType kAllContextTypes[] = {
    ContextType::kZero, ContextType::kPrefix, ContextType::kSuffix,
    ContextType::kBi};

const char* ContextTypeName(ContextType t);
// Accepts "zero", "prefix", "suffix", "bi".
std::optional<ContextType> ParseContextType(const std::string& name);
// Comma-separated list; throws ConfigError on an unknown name.
std::vector<ContextType> ParseContextTypes(const std::string& list);
ContextType ContextTypeOf(bool has_left, bool has_right);

struct ParallelPair {
  std::vector<std::string> src_tokens;
  std::vector<std::string> tgt_tokens;

  friend bool operator==(const ParallelPair&, const ParallelPair&) = default;
};

struct WlacSample {
  std::vector<std::string> x;
  std::vector<std::string> c_l;
  std::vector<std::string> c_r;
  std::string s;
  std::string w;
  ContextType context_type = ContextType::kZero;
  // Optional romanized form of w; when set, s is a prefix of it instead.
  std::string w_romanized;

  friend bool operator==(const WlacSample&, const WlacSample&) = default;
};

// Empty string when the sample satisfies its invariants, else the reason.
std::string ValidateSample(const WlacSample& sample);

inline constexpr const char* kEowSymbol = "[EOW]";

struct IterativeRow {
  std::shared_ptr<const WlacSample> base;
  std::vector<std::string> decoded;
  // Next piece, or kEowSymbol.
  std::string target;
};

struct CmlmSample {
  std::vector<std::string> x;
  std::vector<int> corrupted;
  std::vector<std::pair<std::size_t, int>> gold_at_masks;

  friend bool operator==(const CmlmSample&, const CmlmSample&) = default;
};

// Puts the gold ids back at the masked positions.
std::vector<int> RestoreCmlm(const CmlmSample& sample);

enum class DatasetKind { kWlac, kCmlm };

struct Dataset {
  DatasetKind kind = DatasetKind::kWlac;
  std::variant<std::vector<IterativeRow>, std::vector<CmlmSample>> rows;

  std::size_t size() const;
  bool empty() const { return size() == 0; }
};

// ---------------------------------------------------------------------------
// Completion samples

struct GenConfig {
  // Resample the context type when the requested one is impossible for the
  // chosen word; otherwise the pair is skipped.
  bool resample_context = false;
  // Optional romanization of target words; when a word is in this map the
  // typed prefix is drawn from its romanization.
  const std::map<std::string, std::string>* romanization = nullptr;
};

bool IsEligibleTarget(const std::string& word);

// Returns nullopt when the pair has no eligible word or the context type is
// infeasible (and resampling is off).
std::optional<WlacSample> GenerateWlacSample(const ParallelPair& pair,
                                             ContextType type,
                                             std::mt19937_64& rng,
                                             const GenConfig& cfg = {});

// Same, with the target position fixed (must hold an eligible word).
std::optional<WlacSample> GenerateWlacSampleAt(const ParallelPair& pair,
                                               std::size_t position,
                                               ContextType type,
                                               std::mt19937_64& rng,
                                               const GenConfig& cfg = {});

// w[0..k) in code points, k uniform in [1, |w|].
std::string SampleTypedPrefix(const std::string& w, std::mt19937_64& rng);

std::vector<IterativeRow> ExpandIterativeRows(
    std::shared_ptr<const WlacSample> sample, const SubwordModel& model);

// ---------------------------------------------------------------------------
// Masked-LM samples

// Subword ids (and character ids for romanized material) of a target
// sentence.
std::vector<int> EncodeTargetSentence(const SubwordModel& model,
                                      const SymbolTable& table,
                                      const std::vector<std::string>& tokens);

// At least one position is masked, and each position is masked with
// marginal probability mask_prob (exceeded only when mask_prob * n < 1).
CmlmSample GenerateCmlmSample(const std::vector<std::string>& x,
                              const std::vector<int>& target_ids,
                              double mask_prob, std::mt19937_64& rng);

// Masks an exact count: p ~ U(lo, hi), count = round(p n) clamped so that
// count/n stays inside [lo, hi]. Returns nullopt when no integer count fits.
std::optional<CmlmSample> GenerateCmlmSampleInRange(
    const std::vector<std::string>& x, const std::vector<int>& target_ids,
    double lo, double hi, std::mt19937_64& rng);

// Convenience over a pair, encoding the target with the tokenizer.
CmlmSample GenerateCmlmSample(const ParallelPair& pair, double mask_prob,
                              std::mt19937_64& rng, const SubwordModel& model,
                              const SymbolTable& table);

// ---------------------------------------------------------------------------
// Code switching

// One output element: a word, a romanized character, or a masked character.
struct SwitchedToken {
  enum class Kind { kWord, kChar, kMaskedChar };
  Kind kind = Kind::kWord;
  std::string text;  // the word, or the (original) character
  friend bool operator==(const SwitchedToken&, const SwitchedToken&) = default;
};

struct CodeSwitchStats {
  std::size_t mappable = 0;
  std::size_t converted = 0;
};

std::vector<SwitchedToken> CodeSwitchSentence(
    const std::vector<std::string>& tgt_tokens,
    const std::map<std::string, std::string>& table, std::mt19937_64& rng,
    double p_token, double p_char_mask, CodeSwitchStats* stats = nullptr);

// Ids for a switched sentence plus the gold ids of masked characters.
struct SwitchedIds {
  std::vector<int> ids;
  std::vector<std::pair<std::size_t, int>> masked_chars;
};
SwitchedIds EncodeSwitched(const SubwordModel& model, const SymbolTable& table,
                           const std::vector<SwitchedToken>& tokens);

// CMLM sample over a switched sentence; character masks are kept as masked
// positions with their gold ids.
CmlmSample GenerateSwitchedCmlmSample(const std::vector<std::string>& x,
                                      const SwitchedIds& switched,
                                      double mask_prob, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Batch mixing

enum class BatchKind { kWlac, kCmlm };
const char* BatchKindName(BatchKind k);

struct Batch {
  BatchKind kind = BatchKind::kWlac;
  std::vector<std::size_t> indices;
};

// Emits batches alternating between the two sets in proportion to `ratio`
// (smooth weighted round-robin). Within a set, rows are drawn without
// replacement from a per-epoch shuffle; a batch closes when the next row
// would exceed `batch_tokens` or the epoch ends.
class BatchMixer {
 public:
  // row_tokens[k][i] is the token cost of row i of set k (0 = wlac, 1 = cmlm).
  BatchMixer(std::vector<std::size_t> wlac_tokens,
             std::vector<std::size_t> cmlm_tokens,
             std::pair<double, double> ratio, std::size_t batch_tokens,
             std::uint64_t seed);

  Batch Next();
  std::size_t epoch(BatchKind k) const;

 private:
  struct Stream {
    std::vector<std::size_t> tokens;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    std::size_t epoch = 0;
    std::mt19937_64 rng;
  };
  Batch Draw(BatchKind kind);

  Stream streams_[2];
  double weights_[2];
  double credit_[2] = {0, 0};
  std::size_t batch_tokens_;
};

// ---------------------------------------------------------------------------
// Files

// `source<TAB>target` per line; blank lines skipped. Throws InputError on a
// malformed line.
std::vector<ParallelPair> ReadParallelCorpus(const std::string& path);
void WriteParallelCorpus(const std::string& path,
                         const std::vector<ParallelPair>& pairs);
// `word<TAB>romanization` per line.
std::map<std::string, std::string> ReadRomanizationTable(const std::string& path);

// JSON-lines records.
std::string WlacSampleToJson(const WlacSample& s);
WlacSample WlacSampleFromJson(const std::string& line);
std::string CmlmSampleToJson(const CmlmSample& s);
CmlmSample CmlmSampleFromJson(const std::string& line);
void WriteWlacSamples(const std::string& path,
                      const std::vector<WlacSample>& samples);
std::vector<WlacSample> ReadWlacSamples(const std::string& path);
void WriteCmlmSamples(const std::string& path,
                      const std::vector<CmlmSample>& samples);
std::vector<CmlmSample> ReadCmlmSamples(const std::string& path);

WLAC_NAMESPACE_END

#endif  // WLAC_DATAGEN_H_
