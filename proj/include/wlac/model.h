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

// Decoder-input assembly around the [MASK] anchor and the completion and
// masked-LM objectives.
//
// Decoder input layout:
//
//   subwords(c_l)  [TIP] typed chars ([SEP] decoded)  [MASK]  subwords(c_r)
//
// The [SEP] part is present only once some subword has been decoded.

#ifndef WLAC_MODEL_H_
#define WLAC_MODEL_H_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "wlac/autodiff.h"
#include "wlac/common.h"
#include "wlac/datagen.h"
#include "wlac/subword.h"
#include "wlac/tensor.h"
#include "wlac/transformer.h"

WLAC_NAMESPACE_BEGIN

// Subword model plus symbol table, with a memo of word segmentations.
// Thread-safe for concurrent use.
class Tokenizer {
 public:
  Tokenizer(SubwordModel model, SymbolTable table);

  // Loads `path` and the symbol table at `path + ".symbols"`.
  static std::shared_ptr<const Tokenizer> Load(const std::string& path);
  void Save(const std::string& path) const;

  const SubwordModel& model() const { return model_; }
  const SymbolTable& table() const { return table_; }

  const std::vector<std::string>& Pieces(const std::string& word) const;
  std::vector<int> WordIds(const std::string& word) const;
  std::vector<int> WordsToIds(const std::vector<std::string>& words) const;
  // [BOS] subwords(x) [EOS].
  std::vector<int> SourceIds(const std::vector<std::string>& x) const;

 private:
  SubwordModel model_;
  SymbolTable table_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::vector<std::string>> cache_;
};

struct InstructionUnit {
  std::vector<std::string> typed_chars;
  std::vector<std::string> decoded;

  // [TIP] chars ([SEP] decoded). Unknown characters map to [UNK] and set
  // *unknown.
  std::vector<int> Render(const SymbolTable& table, bool* unknown = nullptr) const;
};

enum class Segment : std::uint8_t { kLeftContext, kInstruction, kAnchor, kRightContext };

struct DecoderInput {
  std::vector<int> ids;
  std::size_t mask_position = 0;
  std::vector<Segment> segment_tags;
  bool unknown_char = false;
};

struct AssembleOptions {
  // When false the typed characters and [TIP] are left out; the decoded part
  // ([SEP] decoded) stays so iteration still works.
  bool use_instruction_unit = true;
};

DecoderInput AssembleDecoderInput(const std::vector<std::string>& c_l,
                                  const std::vector<std::string>& c_r,
                                  const InstructionUnit& iu,
                                  const Tokenizer& tok,
                                  const AssembleOptions& opts = {});

// One training row at the anchor; `target` is an output class.
struct WlacExample {
  std::vector<int> src;
  DecoderInput dec;
  int target = 0;
};

struct CmlmExample {
  std::vector<int> src;
  std::vector<int> dec;
  std::vector<std::size_t> positions;
  std::vector<int> targets;
};

// Target class of a row: the piece's subword id, or [EOW].
WlacExample MakeWlacExample(const IterativeRow& row, const Tokenizer& tok,
                            const AssembleOptions& opts = {});
CmlmExample MakeCmlmExample(const CmlmSample& sample, const Tokenizer& tok);

// ---------------------------------------------------------------------------
// Forward passes

// Encoder memory for one source sequence [src_len x d_model].
Tensor EncodeSource(const ModelParams& params, const std::vector<int>& src_ids);

// Logits at the anchor of each decoder input against one shared source
// memory, as a [n x output_size] tensor. With `trace`, cross-attention is
// captured.
Tensor AnchorLogits(const ModelParams& params, const Tensor& memory,
                    std::span<const DecoderInput* const> inputs,
                    AttentionTrace* trace = nullptr);

// Encode + decode for one input; returns the [output_size] logits row at
// mask_position.
Tensor PredictMaskLogits(const ModelParams& params, const std::vector<int>& x_ids,
                         const DecoderInput& dec_in);

// ---------------------------------------------------------------------------
// Objectives

struct LossTerms {
  Var total;
  double wlac = 0;
  double cmlm = 0;
  std::size_t wlac_rows = 0;
  std::size_t cmlm_positions = 0;
};

// wlac term: mean cross-entropy of the anchor targets; cmlm term: mean
// cross-entropy over all masked positions. Empty batches contribute 0; both
// empty is a contract error. Identical source sequences are encoded once.
LossTerms JointLossGraph(Tape& t, const ModelParams& params,
                         std::span<const WlacExample> wlac,
                         std::span<const CmlmExample> cmlm,
                         const ForwardOptions& opts);

// Eval-mode values.
double WlacLoss(const ModelParams& params, std::span<const WlacExample> rows);
double JointLoss(const ModelParams& params, std::span<const WlacExample> wlac,
                 std::span<const CmlmExample> cmlm);

// Row-based conveniences.
double WlacLoss(const ModelParams& params, const std::vector<IterativeRow>& rows,
                const Tokenizer& tok);
double JointLoss(const ModelParams& params, const std::vector<IterativeRow>& wlac,
                 const std::vector<CmlmSample>& cmlm, const Tokenizer& tok);

// ---------------------------------------------------------------------------
// Word-level classification head

// Output classes for a word-level head: words in lexicographic order plus a
// trailing out-of-list class.
class WordList {
 public:
  WordList() = default;
  explicit WordList(std::vector<std::string> words);

  std::size_t num_classes() const { return words_.size() + 1; }
  int oov_class() const { return static_cast<int>(words_.size()); }
  int ClassOf(const std::string& word) const;
  const std::string& WordOf(int cls) const { return words_.at(cls); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
};

// A single anchor row with the typed characters and no decoded part; the
// target is the word's class.
WlacExample MakeWordClassExample(const WlacSample& sample, const Tokenizer& tok,
                                 const WordList& words);

WLAC_NAMESPACE_END

#endif  // WLAC_MODEL_H_
