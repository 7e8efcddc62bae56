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

// Pre-norm encoder/decoder transformer with sinusoidal positions, built on
// the autodiff tape. Sequences are packed row-wise without padding; each
// sequence is one attention segment.

#ifndef WLAC_TRANSFORMER_H_
#define WLAC_TRANSFORMER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wlac/autodiff.h"
#include "wlac/common.h"
#include "wlac/kernels.h"
#include "wlac/tensor.h"

WLAC_NAMESPACE_BEGIN

struct TransformerConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 256;
  Real dropout = Real(0.1);
  std::size_t max_len = 256;
  // Input embedding rows (the symbol table size).
  std::size_t vocab_size = 0;
  // Output classes; equals vocab_size for the subword model, the word list
  // size for a word-classification head.
  std::size_t output_size = 0;

  void Validate() const;
  friend bool operator==(const TransformerConfig&,
                         const TransformerConfig&) = default;
};

// 2 layers, 4 heads, width 64, feed-forward 256.
TransformerConfig DeskPreset(std::size_t vocab_size);

struct ModelParams {
  TransformerConfig config;
  std::map<std::string, Tensor> tensors;

  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  std::size_t NumValues() const;
};

// Parameter names and shapes implied by a config, sorted by name.
std::vector<std::pair<std::string, std::vector<std::size_t>>> ParamShapes(
    const TransformerConfig& config);
// Xavier-uniform projections, N(0, d^-1/2) embeddings, zero biases, unit
// layer-norm gains. Deterministic in `seed`.
ModelParams InitParams(const TransformerConfig& config, std::uint64_t seed);
// Throws ContractError when names or shapes disagree with the config.
void CheckParams(const ModelParams& params);

// Row-packed sequences: ids concatenated, spans are (offset, length).
struct PackedSequences {
  std::vector<int> ids;
  std::vector<std::pair<std::size_t, std::size_t>> spans;

  // Appends a sequence and returns its first row.
  std::size_t Add(const std::vector<int>& seq);
  std::size_t size() const { return spans.size(); }
};

// Captured cross-attention from a decoder pass: per layer, the probabilities
// (layout per cross_layout.ProbOffsets), the normalized decoder states that
// formed the queries, and the encoder memory.
struct AttentionTrace {
  kernels::AttentionLayout cross_layout;
  std::vector<std::vector<Real>> cross_probs;
  std::vector<Tensor> cross_query_inputs;
  Tensor memory;
};

struct ForwardOptions {
  bool train = false;
  std::mt19937_64* rng = nullptr;  // required when train && dropout > 0
  AttentionTrace* trace = nullptr;
};

// Sinusoidal position table [max_len x d_model].
Tensor SinusoidalPositions(std::size_t max_len, std::size_t d_model);

// Query/key/value/output projections of one attention block.
struct AttentionVars {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};
AttentionVars BindAttention(Tape& t, const ModelParams& p,
                            const std::string& prefix);
// Projects inputs, attends per layout, concatenates heads and projects out.
Var MultiHeadAttention(Tape& t, const AttentionVars& w, Var q_in, Var kv_in,
                       std::size_t heads, const kernels::AttentionLayout& layout,
                       std::vector<Real>* probs_out = nullptr);

// Encoder over packed sources. `key_valid` (optional, one flag per packed
// row) hides padding positions from attention. Returns [rows x d_model].
Var EncodeGraph(Tape& t, const ModelParams& p, const PackedSequences& src,
                const std::vector<std::uint8_t>& key_valid,
                const ForwardOptions& opts);

// Decoder over packed inputs; dec sequence i attends bidirectionally to
// itself and cross-attends to source span dec_to_src[i] of `memory`.
// Returns final-normalized hidden states [rows x d_model].
struct DecodeLayout {
  std::vector<std::size_t> dec_to_src;
  std::vector<std::uint8_t> self_key_valid;   // optional
  std::vector<std::uint8_t> cross_key_valid;  // optional, per memory row
  std::vector<std::uint8_t> self_dense_mask;  // optional, see AttentionLayout
};
Var DecodeGraph(Tape& t, const ModelParams& p, const PackedSequences& dec,
                const PackedSequences& src, Var memory,
                const DecodeLayout& layout, const ForwardOptions& opts);

// Projects hidden rows to output logits [rows x output_size].
Var OutputLogits(Tape& t, const ModelParams& p, Var hidden);

// Single-sequence, eval-mode conveniences.
//   pad_mask[i] == true marks position i as padding.
Tensor Encode(const ModelParams& p, const std::vector<int>& src_ids,
              const std::vector<bool>& pad_mask = {});
// self_mask: optional dec_len x dec_len dense mask (true = may attend);
// empty means full bidirectional. cross_mask: optional per source position
// (true = visible). Returns logits [dec_len x output_size].
Tensor Decode(const ModelParams& p, const std::vector<int>& dec_ids,
              const Tensor& enc_out, const std::vector<bool>& self_mask = {},
              const std::vector<bool>& cross_mask = {},
              AttentionTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Optimization

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

struct AdamState {
  std::int64_t step = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

// One bias-corrected Adam step. Parameters without a gradient entry are
// treated as having zero gradient.
void AdamUpdate(ModelParams& params, const Gradients& grads, AdamState& state,
                double lr, const AdamConfig& cfg = {});

// ---------------------------------------------------------------------------
// Checkpoint container
//
//   "WLACCKPT" | u32 format_version | u32 header_len | header JSON
//   | u8 value_bytes (4 or 8) | u64 array_count
//   | per array (sorted by name): u32 name_len, name, u32 rank, u64 dims...,
//     raw little-endian values
//
// The header holds {format_version, config, step}. Optimizer moments, when
// saved, are stored as arrays named "adam.m.<param>" / "adam.v.<param>".

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::int64_t step = 0;
  std::optional<AdamState> optimizer;
};

std::string SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint DeserializeCheckpoint(const std::string& bytes);
void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::string& path);

std::string ConfigToJson(const TransformerConfig& config);
TransformerConfig ConfigFromJson(const std::string& json);

WLAC_NAMESPACE_END

#endif  // WLAC_TRANSFORMER_H_
