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

#include "wlac/decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "wlac/text.h"

WLAC_NAMESPACE_BEGIN

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string Surface(const std::vector<std::string>& pieces) {
  std::string out;
  for (const auto& p : pieces) out += p;
  return out;
}

// Higher score first; equal scores go to the lexicographically smaller id
// sequence, which for siblings means the lower symbol id.
bool RankBefore(const Hypothesis& a, const Hypothesis& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.ids < b.ids;
}

const std::string& PrefixTarget(const std::string& word, const DecodeConfig& cfg) {
  if (cfg.romanization != nullptr) {
    auto it = cfg.romanization->find(word);
    if (it != cfg.romanization->end()) return it->second;
  }
  return word;
}

struct Choice {
  int id;
  double lp;
};

// Top `limit` admissible continuations of `h`.
std::vector<Choice> Expand(const Hypothesis& h, std::span<const Real> logits,
                           const DecodeState& state, const DecodeConfig& cfg,
                           const Tokenizer& tok, std::size_t limit) {
  const SymbolTable& table = tok.table();
  std::vector<double> lsm = RestrictedLogSoftmax(logits, table);
  if (h.decoded.empty()) lsm[kEowId] = kNegInf;
  if (cfg.EffectivePrefixMode() == PrefixMode::kConstrain && cfg.romanization == nullptr) {
    const std::string typed = JoinStrings(state.unit.typed_chars, "");
    const std::string surface = Surface(h.decoded);
    if (!StartsWith(surface, typed)) lsm[kEowId] = kNegInf;
    for (int id = table.subword_begin(); id < table.char_begin(); ++id) {
      if (lsm[id] == kNegInf) continue;
      const std::string next = surface + table.SymbolOf(id).text;
      if (!StartsWith(next, typed) && !StartsWith(typed, next)) lsm[id] = kNegInf;
    }
  }
  std::vector<Choice> choices;
  for (int id = 0; id < static_cast<int>(lsm.size()); ++id) {
    if (lsm[id] != kNegInf) choices.push_back({id, lsm[id]});
  }
  const std::size_t k = std::min(limit, choices.size());
  std::partial_sort(choices.begin(), choices.begin() + static_cast<std::ptrdiff_t>(k),
                    choices.end(), [](const Choice& a, const Choice& b) {
                      if (a.lp != b.lp) return a.lp > b.lp;
                      return a.id < b.id;
                    });
  choices.resize(k);
  return choices;
}

Hypothesis Child(const Hypothesis& parent, const Choice& c, const SymbolTable& table) {
  Hypothesis h = parent;
  h.ids.push_back(c.id);
  h.logprob += c.lp;
  if (c.id == kEowId) {
    h.finished = true;
  } else {
    h.decoded.push_back(table.SymbolOf(c.id).text);
  }
  return h;
}

bool Admissible(const std::string& word, const std::string& typed,
                const DecodeConfig& cfg) {
  if (cfg.EffectivePrefixMode() == PrefixMode::kNone) return true;
  return StartsWith(PrefixTarget(word, cfg), typed);
}

}  // namespace

PrefixMode DecodeConfig::EffectivePrefixMode() const {
  if (hard_prefix) return PrefixMode::kConstrain;
  return prefix_mode;
}

void DecodeConfig::Validate() const {
  if (beam < 1) throw ConfigError("beam must be >= 1");
  if (max_subwords < 1) throw ConfigError("max_subwords must be >= 1");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
}

DecodeState InitState(const std::string& s, const DecodeConfig& cfg) {
  WLAC_CHECK(!s.empty(), "typed sequence must be non-empty");
  cfg.Validate();
  DecodeState state;
  state.unit.typed_chars = SplitCodepoints(s);
  state.beam.push_back(Hypothesis{});
  state.greedy = Hypothesis{};
  return state;
}

std::vector<double> RestrictedLogSoftmax(std::span<const Real> logits,
                                         const SymbolTable& table) {
  WLAC_CHECK(logits.size() == table.size(), "logits do not cover the symbol table");
  std::vector<double> out(logits.size(), kNegInf);
  double mx = logits[kEowId];
  for (int id = table.subword_begin(); id < table.char_begin(); ++id) {
    mx = std::max(mx, static_cast<double>(logits[id]));
  }
  double sum = std::exp(static_cast<double>(logits[kEowId]) - mx);
  for (int id = table.subword_begin(); id < table.char_begin(); ++id) {
    sum += std::exp(static_cast<double>(logits[id]) - mx);
  }
  const double lse = mx + std::log(sum);
  out[kEowId] = std::min(0.0, logits[kEowId] - lse);
  for (int id = table.subword_begin(); id < table.char_begin(); ++id) {
    out[id] = std::min(0.0, logits[id] - lse);
  }
  return out;
}

bool Done(const DecodeState& state, const DecodeConfig& cfg) {
  if (state.steps >= cfg.max_subwords) return true;
  const bool beam_done = std::all_of(state.beam.begin(), state.beam.end(),
                                     [](const Hypothesis& h) { return h.finished; });
  return beam_done && (state.greedy.finished || state.greedy.ids.size() < state.steps);
}

void BeamStep(const ModelParams& params, const Tensor& memory,
              const std::vector<std::string>& c_l,
              const std::vector<std::string>& c_r, DecodeState& state,
              const DecodeConfig& cfg, const Tokenizer& tok) {
  const AssembleOptions opts{cfg.use_instruction_unit};
  std::vector<DecoderInput> inputs;
  std::vector<const Hypothesis*> sources;
  for (const Hypothesis& h : state.beam) {
    if (h.finished) continue;
    inputs.push_back(AssembleDecoderInput(
        c_l, c_r, InstructionUnit{state.unit.typed_chars, h.decoded}, tok, opts));
    sources.push_back(&h);
  }
  // A greedy path that was cut off (no admissible continuation) stops here.
  const bool greedy_live =
      !state.greedy.finished && state.greedy.ids.size() == state.steps;
  if (greedy_live) {
    inputs.push_back(AssembleDecoderInput(
        c_l, c_r, InstructionUnit{state.unit.typed_chars, state.greedy.decoded},
        tok, opts));
  }
  ++state.steps;
  if (inputs.empty()) return;

  std::vector<const DecoderInput*> ptrs;
  for (const auto& in : inputs) ptrs.push_back(&in);
  const Tensor logits = AnchorLogits(params, memory, ptrs);

  std::vector<Hypothesis> pool;
  for (const Hypothesis& h : state.beam) {
    if (h.finished) pool.push_back(h);
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (const Choice& c : Expand(*sources[i], logits.row(i), state, cfg, tok, cfg.beam)) {
      pool.push_back(Child(*sources[i], c, tok.table()));
    }
  }
  if (state.steps == cfg.max_subwords) {
    // Unfinished hypotheses can no longer finish; they only serve as the
    // truncated fallback.
    std::sort(pool.begin(), pool.end(), [](const Hypothesis& a, const Hypothesis& b) {
      if (a.finished != b.finished) return a.finished;
      return RankBefore(a, b);
    });
  } else {
    std::sort(pool.begin(), pool.end(), RankBefore);
  }
  if (pool.size() > cfg.beam) pool.resize(cfg.beam);
  state.beam = std::move(pool);

  if (greedy_live) {
    auto best = Expand(state.greedy, logits.row(sources.size()), state, cfg, tok, 1);
    if (!best.empty()) state.greedy = Child(state.greedy, best[0], tok.table());
  }
}

DecodeResult DecodeWord(const ModelParams& params, const std::vector<std::string>& x,
                        const std::vector<std::string>& c_l,
                        const std::vector<std::string>& c_r, const std::string& s,
                        const DecodeConfig& cfg, const Tokenizer& tok) {
  DecodeState state = InitState(s, cfg);
  const Tensor memory = EncodeSource(params, tok.SourceIds(x));
  while (!Done(state, cfg)) BeamStep(params, memory, c_l, c_r, state, cfg, tok);

  std::vector<Hypothesis> finished;
  std::vector<Hypothesis> unfinished;
  std::set<std::vector<int>> seen;
  const auto add = [&](const Hypothesis& h) {
    if (!seen.insert(h.ids).second) return;
    (h.finished ? finished : unfinished).push_back(h);
  };
  for (const Hypothesis& h : state.beam) add(h);
  if (!state.greedy.ids.empty()) add(state.greedy);

  DecodeResult result;
  result.steps = state.steps;
  std::map<std::string, Candidate> best;
  for (const Hypothesis& h : finished) {
    const std::string word = Surface(h.decoded);
    if (!Admissible(word, s, cfg)) continue;
    auto it = best.find(word);
    if (it == best.end() || h.logprob > it->second.logprob) {
      best[word] = Candidate{word, h.decoded, h.logprob};
    }
  }
  for (auto& [word, cand] : best) result.candidates.push_back(std::move(cand));
  const auto by_score = [](const Candidate& a, const Candidate& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.word < b.word;
  };
  std::sort(result.candidates.begin(), result.candidates.end(), by_score);
  if (result.candidates.size() > cfg.top_k) result.candidates.resize(cfg.top_k);
  if (!result.candidates.empty()) return result;

  std::sort(unfinished.begin(), unfinished.end(), RankBefore);
  for (const Hypothesis& h : unfinished) {
    const std::string word = Surface(h.decoded);
    if (word.empty() || !Admissible(word, s, cfg)) continue;
    result.candidates.push_back(Candidate{word, h.decoded, h.logprob});
    result.truncated = true;
    return result;
  }
  result.empty_reason = cfg.EffectivePrefixMode() == PrefixMode::kNone
                            ? "no_finished_hypothesis"
                            : "no_candidate_matches_prefix";
  return result;
}

DecodeResult ClassifyWord(const ModelParams& params,
                          const std::vector<std::string>& x,
                          const std::vector<std::string>& c_l,
                          const std::vector<std::string>& c_r, const std::string& s,
                          std::size_t top_k, const Tokenizer& tok,
                          const WordList& words) {
  WLAC_CHECK(!s.empty(), "typed sequence must be non-empty");
  WLAC_CHECK(params.config.output_size == words.num_classes(),
             "model head does not match the word list");
  const DecoderInput in = AssembleDecoderInput(
      c_l, c_r, InstructionUnit{SplitCodepoints(s), {}}, tok);
  const Tensor logits = PredictMaskLogits(params, tok.SourceIds(x), in);
  double mx = kNegInf;
  for (Real v : logits.values()) mx = std::max(mx, static_cast<double>(v));
  double sum = 0;
  for (Real v : logits.values()) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  DecodeResult result;
  for (std::size_t c = 0; c < words.words().size(); ++c) {
    const std::string& w = words.words()[c];
    if (!StartsWith(w, s)) continue;
    result.candidates.push_back(Candidate{w, {}, logits[c] - lse});
  }
  std::stable_sort(result.candidates.begin(), result.candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.logprob > b.logprob;
                   });
  if (result.candidates.size() > top_k) result.candidates.resize(top_k);
  if (result.candidates.empty()) result.empty_reason = "no_candidate_matches_prefix";
  return result;
}

WLAC_NAMESPACE_END
