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

// Iterative subword decoding at the [MASK] anchor with beam search.
//
// Each iteration scores the anchor of every unfinished hypothesis, with the
// softmax restricted to subword ids and [EOW], and folds the chosen subword
// back into the Instruction Unit. A decode runs at most max_subwords
// iterations, so a finished word has at most max_subwords - 1 pieces.

#ifndef WLAC_DECODER_H_
#define WLAC_DECODER_H_

#include <map>
#include <string>
#include <vector>

#include "wlac/common.h"
#include "wlac/model.h"
#include "wlac/tensor.h"
#include "wlac/transformer.h"

WLAC_NAMESPACE_BEGIN

enum class PrefixMode {
  kNone,
  // Drop finished words that do not start with the typed prefix.
  kFilter,
  // kFilter, plus never extend a hypothesis whose surface has left the
  // prefix.
  kConstrain,
};

struct DecodeConfig {
  std::size_t beam = 4;
  std::size_t max_subwords = 8;
  bool hard_prefix = false;
  std::size_t top_k = 5;
  bool use_instruction_unit = true;
  // Overrides the mode implied by hard_prefix when set to kFilter.
  PrefixMode prefix_mode = PrefixMode::kNone;
  // Romanization used for prefix matching when a word has one.
  const std::map<std::string, std::string>* romanization = nullptr;

  PrefixMode EffectivePrefixMode() const;
  void Validate() const;
};

struct Hypothesis {
  std::vector<int> ids;
  std::vector<std::string> decoded;
  double logprob = 0;
  bool finished = false;
};

struct DecodeState {
  InstructionUnit unit;
  std::vector<Hypothesis> beam;
  // Greedy path, decoded alongside the beam.
  Hypothesis greedy;
  std::size_t steps = 0;
};

DecodeState InitState(const std::string& s, const DecodeConfig& cfg);

// Log-softmax restricted to subword ids and [EOW]; other entries are -inf.
std::vector<double> RestrictedLogSoftmax(std::span<const Real> logits,
                                         const SymbolTable& table);

// One iteration. `memory` is the encoded source.
void BeamStep(const ModelParams& params, const Tensor& memory,
              const std::vector<std::string>& c_l,
              const std::vector<std::string>& c_r, DecodeState& state,
              const DecodeConfig& cfg, const Tokenizer& tok);

bool Done(const DecodeState& state, const DecodeConfig& cfg);

struct Candidate {
  std::string word;
  std::vector<std::string> pieces;
  double logprob = 0;
};

struct DecodeResult {
  std::vector<Candidate> candidates;
  bool truncated = false;
  // Set when no candidate is returned.
  std::string empty_reason;
  std::size_t steps = 0;
};

DecodeResult DecodeWord(const ModelParams& params, const std::vector<std::string>& x,
                        const std::vector<std::string>& c_l,
                        const std::vector<std::string>& c_r, const std::string& s,
                        const DecodeConfig& cfg, const Tokenizer& tok);

// Word-level head: rank the words of `words` that start with s.
DecodeResult ClassifyWord(const ModelParams& params,
                          const std::vector<std::string>& x,
                          const std::vector<std::string>& c_l,
                          const std::vector<std::string>& c_r, const std::string& s,
                          std::size_t top_k, const Tokenizer& tok,
                          const WordList& words);

WLAC_NAMESPACE_END

#endif  // WLAC_DECODER_H_
