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

#include "wlac/model.h"

#include <algorithm>

#include "wlac/text.h"

WLAC_NAMESPACE_BEGIN

// ---------------------------------------------------------------------------
// Tokenizer

Tokenizer::Tokenizer(SubwordModel model, SymbolTable table)
    : model_(std::move(model)), table_(std::move(table)) {
  for (const auto& p : model_.pieces()) {
    if (table_.SubwordId(p.text) == kUnkId) {
      throw InputError("symbol table is missing subword '" + p.text + "'");
    }
  }
}

std::shared_ptr<const Tokenizer> Tokenizer::Load(const std::string& path) {
  return std::make_shared<const Tokenizer>(LoadSubwordModel(path),
                                           LoadSymbolTable(path + ".symbols"));
}

void Tokenizer::Save(const std::string& path) const {
  SaveSubwordModel(path, model_);
  SaveSymbolTable(path + ".symbols", table_);
}

const std::vector<std::string>& Tokenizer::Pieces(const std::string& word) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(word);
    if (it != cache_.end()) return it->second;
  }
  std::vector<std::string> pieces = EncodeWord(model_, word).pieces;
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.emplace(word, std::move(pieces)).first->second;
}

std::vector<int> Tokenizer::WordIds(const std::string& word) const {
  std::vector<int> ids;
  for (const std::string& p : Pieces(word)) ids.push_back(table_.SubwordId(p));
  return ids;
}

std::vector<int> Tokenizer::WordsToIds(const std::vector<std::string>& words) const {
  std::vector<int> ids;
  for (const std::string& w : words) {
    for (const std::string& p : Pieces(w)) ids.push_back(table_.SubwordId(p));
  }
  return ids;
}

std::vector<int> Tokenizer::SourceIds(const std::vector<std::string>& x) const {
  std::vector<int> ids{kBosId};
  for (int id : WordsToIds(x)) ids.push_back(id);
  ids.push_back(kEosId);
  return ids;
}

// ---------------------------------------------------------------------------
// Input assembly

std::vector<int> InstructionUnit::Render(const SymbolTable& table,
                                         bool* unknown) const {
  std::vector<int> ids{kTipId};
  bool unk = false;
  for (const std::string& ch : typed_chars) {
    const int id = table.CharId(ch);
    unk = unk || id == kUnkId;
    ids.push_back(id);
  }
  if (!decoded.empty()) {
    ids.push_back(kSepId);
    for (const std::string& p : decoded) ids.push_back(table.SubwordId(p));
  }
  if (unknown != nullptr) *unknown = unk;
  return ids;
}

DecoderInput AssembleDecoderInput(const std::vector<std::string>& c_l,
                                  const std::vector<std::string>& c_r,
                                  const InstructionUnit& iu, const Tokenizer& tok,
                                  const AssembleOptions& opts) {
  DecoderInput in;
  const auto append = [&in](const std::vector<int>& ids, Segment seg) {
    in.ids.insert(in.ids.end(), ids.begin(), ids.end());
    in.segment_tags.insert(in.segment_tags.end(), ids.size(), seg);
  };
  append(tok.WordsToIds(c_l), Segment::kLeftContext);
  if (opts.use_instruction_unit) {
    append(iu.Render(tok.table(), &in.unknown_char), Segment::kInstruction);
  } else if (!iu.decoded.empty()) {
    std::vector<int> ids{kSepId};
    for (const std::string& p : iu.decoded) ids.push_back(tok.table().SubwordId(p));
    append(ids, Segment::kInstruction);
  }
  in.mask_position = in.ids.size();
  append({kMaskId}, Segment::kAnchor);
  append(tok.WordsToIds(c_r), Segment::kRightContext);
  return in;
}

WlacExample MakeWlacExample(const IterativeRow& row, const Tokenizer& tok,
                            const AssembleOptions& opts) {
  WLAC_CHECK(row.base != nullptr, "row without a sample");
  const WlacSample& s = *row.base;
  InstructionUnit iu{SplitCodepoints(s.s), row.decoded};
  WlacExample ex;
  ex.src = tok.SourceIds(s.x);
  ex.dec = AssembleDecoderInput(s.c_l, s.c_r, iu, tok, opts);
  ex.target = row.target == kEowSymbol ? kEowId : tok.table().SubwordId(row.target);
  return ex;
}

CmlmExample MakeCmlmExample(const CmlmSample& sample, const Tokenizer& tok) {
  CmlmExample ex;
  ex.src = tok.SourceIds(sample.x);
  ex.dec = sample.corrupted;
  for (const auto& [pos, id] : sample.gold_at_masks) {
    ex.positions.push_back(pos);
    ex.targets.push_back(id);
  }
  return ex;
}

// ---------------------------------------------------------------------------
// Forward passes

Tensor EncodeSource(const ModelParams& params, const std::vector<int>& src_ids) {
  return Encode(params, src_ids);
}

namespace {

void CheckIds(const ModelParams& p, const std::vector<int>& ids) {
  for (int id : ids) {
    WLAC_CHECK(id >= 0 && static_cast<std::size_t>(id) < p.config.vocab_size,
               "symbol id " + std::to_string(id) + " out of range");
  }
}

}  // namespace

Tensor AnchorLogits(const ModelParams& params, const Tensor& memory,
                    std::span<const DecoderInput* const> inputs,
                    AttentionTrace* trace) {
  WLAC_CHECK(!inputs.empty(), "no decoder inputs");
  Tape t(false);
  PackedSequences src;
  src.spans.emplace_back(0, memory.rows());
  PackedSequences dec;
  DecodeLayout layout;
  std::vector<std::size_t> anchors;
  for (const DecoderInput* in : inputs) {
    CheckIds(params, in->ids);
    WLAC_CHECK(in->mask_position < in->ids.size() &&
                   in->ids[in->mask_position] == kMaskId,
               "decoder input has no anchor at mask_position");
    const std::size_t off = dec.Add(in->ids);
    anchors.push_back(off + in->mask_position);
    layout.dec_to_src.push_back(0);
  }
  ForwardOptions opts;
  opts.trace = trace;
  Var mem = t.Constant(memory);
  Var h = DecodeGraph(t, params, dec, src, mem, layout, opts);
  h = ops::GatherRows(t, h, anchors);
  return t.value(OutputLogits(t, params, h));
}

Tensor PredictMaskLogits(const ModelParams& params, const std::vector<int>& x_ids,
                         const DecoderInput& dec_in) {
  CheckIds(params, x_ids);
  const Tensor memory = EncodeSource(params, x_ids);
  const DecoderInput* one[] = {&dec_in};
  Tensor logits = AnchorLogits(params, memory, one);
  return Tensor({logits.cols()}, std::move(logits.storage()));
}

// ---------------------------------------------------------------------------
// Objectives

LossTerms JointLossGraph(Tape& t, const ModelParams& params,
                         std::span<const WlacExample> wlac,
                         std::span<const CmlmExample> cmlm,
                         const ForwardOptions& opts) {
  WLAC_CHECK(!wlac.empty() || !cmlm.empty(), "both batches are empty");
  PackedSequences src;
  std::map<std::vector<int>, std::size_t> src_index;
  const auto source_of = [&](const std::vector<int>& ids) {
    auto [it, inserted] = src_index.try_emplace(ids, src.size());
    if (inserted) {
      CheckIds(params, ids);
      src.Add(ids);
    }
    return it->second;
  };
  PackedSequences dec;
  DecodeLayout layout;
  std::vector<std::size_t> wlac_rows;
  std::vector<int> wlac_targets;
  for (const WlacExample& ex : wlac) {
    CheckIds(params, ex.dec.ids);
    layout.dec_to_src.push_back(source_of(ex.src));
    wlac_rows.push_back(dec.Add(ex.dec.ids) + ex.dec.mask_position);
    wlac_targets.push_back(ex.target);
  }
  std::vector<std::size_t> cmlm_rows;
  std::vector<int> cmlm_targets;
  for (const CmlmExample& ex : cmlm) {
    CheckIds(params, ex.dec);
    WLAC_CHECK(ex.positions.size() == ex.targets.size() && !ex.positions.empty(),
               "cmlm example needs at least one masked position");
    layout.dec_to_src.push_back(source_of(ex.src));
    const std::size_t off = dec.Add(ex.dec);
    for (std::size_t i = 0; i < ex.positions.size(); ++i) {
      WLAC_CHECK(ex.positions[i] < ex.dec.size(), "mask position out of range");
      cmlm_rows.push_back(off + ex.positions[i]);
      cmlm_targets.push_back(ex.targets[i]);
    }
  }
  Var memory = EncodeGraph(t, params, src, {}, opts);
  Var hidden = DecodeGraph(t, params, dec, src, memory, layout, opts);

  LossTerms out;
  out.wlac_rows = wlac_rows.size();
  out.cmlm_positions = cmlm_rows.size();
  Var wlac_ce;
  Var cmlm_ce;
  if (!wlac_rows.empty()) {
    Var logits = OutputLogits(t, params, ops::GatherRows(t, hidden, wlac_rows));
    wlac_ce = ops::CrossEntropy(t, logits, wlac_targets);
    out.wlac = t.value(wlac_ce)[0];
  }
  if (!cmlm_rows.empty()) {
    Var logits = OutputLogits(t, params, ops::GatherRows(t, hidden, cmlm_rows));
    cmlm_ce = ops::CrossEntropy(t, logits, cmlm_targets);
    out.cmlm = t.value(cmlm_ce)[0];
  }
  if (wlac_ce.valid() && cmlm_ce.valid()) {
    out.total = ops::Add(t, wlac_ce, cmlm_ce);
  } else {
    out.total = wlac_ce.valid() ? wlac_ce : cmlm_ce;
  }
  return out;
}

double WlacLoss(const ModelParams& params, std::span<const WlacExample> rows) {
  WLAC_CHECK(!rows.empty(), "empty batch");
  Tape t(false);
  return JointLossGraph(t, params, rows, {}, {}).wlac;
}

double JointLoss(const ModelParams& params, std::span<const WlacExample> wlac,
                 std::span<const CmlmExample> cmlm) {
  Tape t(false);
  const LossTerms terms = JointLossGraph(t, params, wlac, cmlm, {});
  return t.value(terms.total)[0];
}

double WlacLoss(const ModelParams& params, const std::vector<IterativeRow>& rows,
                const Tokenizer& tok) {
  std::vector<WlacExample> ex;
  for (const auto& r : rows) ex.push_back(MakeWlacExample(r, tok));
  return WlacLoss(params, ex);
}

double JointLoss(const ModelParams& params, const std::vector<IterativeRow>& wlac,
                 const std::vector<CmlmSample>& cmlm, const Tokenizer& tok) {
  std::vector<WlacExample> w;
  for (const auto& r : wlac) w.push_back(MakeWlacExample(r, tok));
  std::vector<CmlmExample> c;
  for (const auto& s : cmlm) c.push_back(MakeCmlmExample(s, tok));
  return JointLoss(params, w, c);
}

// ---------------------------------------------------------------------------
// Word-level head

WordList::WordList(std::vector<std::string> words) : words_(std::move(words)) {
  std::sort(words_.begin(), words_.end());
  words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    index_[words_[i]] = static_cast<int>(i);
  }
}

int WordList::ClassOf(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? oov_class() : it->second;
}

WlacExample MakeWordClassExample(const WlacSample& sample, const Tokenizer& tok,
                                 const WordList& words) {
  InstructionUnit iu{SplitCodepoints(sample.s), {}};
  WlacExample ex;
  ex.src = tok.SourceIds(sample.x);
  ex.dec = AssembleDecoderInput(sample.c_l, sample.c_r, iu, tok);
  ex.target = words.ClassOf(sample.w);
  return ex;
}

WLAC_NAMESPACE_END
