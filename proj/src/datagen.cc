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

#include "wlac/datagen.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "wlac/text.h"

WLAC_NAMESPACE_BEGIN

using nlohmann::json;

namespace {

std::size_t UniformIndex(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool Bernoulli(std::mt19937_64& rng, double p) {
  if (p <= 0) return false;
  if (p >= 1) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// One guaranteed mask plus Binomial(n - 1, q) more, at uniform positions,
// with q chosen so each position is masked with marginal probability p.
// When p * n < 1 the single mask exceeds p.
std::vector<std::size_t> AtLeastOneMask(std::size_t n, double p, std::mt19937_64& rng) {
  std::size_t count = 1;
  if (n > 1 && p * static_cast<double>(n) > 1) {
    const double q = std::min(1.0, (p * static_cast<double>(n) - 1) / static_cast<double>(n - 1));
    count += std::binomial_distribution<std::size_t>(n - 1, q)(rng);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(order[i], order[std::uniform_int_distribution<std::size_t>(i, n - 1)(rng)]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

bool NeedsLeft(ContextType t) {
  return t == ContextType::kPrefix || t == ContextType::kBi;
}
bool NeedsRight(ContextType t) {
  return t == ContextType::kSuffix || t == ContextType::kBi;
}

bool Feasible(ContextType t, std::size_t pos, std::size_t n) {
  return (!NeedsLeft(t) || pos > 0) && (!NeedsRight(t) || pos + 1 < n);
}

// A span of length L ~ U{1..avail}, placed uniformly inside [begin, begin +
// avail).
std::vector<std::string> SampleSpan(const std::vector<std::string>& tokens,
                                    std::size_t begin, std::size_t avail,
                                    std::mt19937_64& rng) {
  const std::size_t len = UniformIndex(rng, 1, avail);
  const std::size_t start = begin + UniformIndex(rng, 0, avail - len);
  return {tokens.begin() + static_cast<std::ptrdiff_t>(start),
          tokens.begin() + static_cast<std::ptrdiff_t>(start + len)};
}

json ContextsJson(const std::vector<std::string>& v) { return json(v); }

}  // namespace

const char* ContextTypeName(ContextType t) {
  switch (t) {
    case ContextType::kZero: return "zero";
    case ContextType::kPrefix: return "prefix";
    case ContextType::kSuffix: return "suffix";
    case ContextType::kBi: return "bi";
  }
  return "?";
}

std::optional<ContextType> ParseContextType(const std::string& name) {
  for (ContextType t : kAllContextTypes) {
    if (name == ContextTypeName(t)) return t;
  }
  return std::nullopt;
}

std::vector<ContextType> ParseContextTypes(const std::string& list) {
  std::vector<ContextType> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string::npos) end = list.size();
    const std::string name = list.substr(start, end - start);
    if (!name.empty()) {
      auto t = ParseContextType(name);
      if (!t) throw ConfigError("unknown context type '" + name + "'");
      out.push_back(*t);
    }
    start = end + 1;
  }
  if (out.empty()) throw ConfigError("no context types given");
  return out;
}

ContextType ContextTypeOf(bool has_left, bool has_right) {
  if (has_left && has_right) return ContextType::kBi;
  if (has_left) return ContextType::kPrefix;
  if (has_right) return ContextType::kSuffix;
  return ContextType::kZero;
}

std::string ValidateSample(const WlacSample& s) {
  if (s.w.empty()) return "empty target word";
  if (s.s.empty()) return "empty typed prefix";
  const std::string& typed_over = s.w_romanized.empty() ? s.w : s.w_romanized;
  if (!StartsWith(typed_over, s.s)) return "typed prefix does not match word";
  if (ContextTypeOf(!s.c_l.empty(), !s.c_r.empty()) != s.context_type) {
    return "context emptiness does not match context type";
  }
  return "";
}

std::vector<int> RestoreCmlm(const CmlmSample& sample) {
  std::vector<int> out = sample.corrupted;
  for (const auto& [pos, id] : sample.gold_at_masks) {
    WLAC_CHECK(pos < out.size(), "mask position out of range");
    out[pos] = id;
  }
  return out;
}

std::size_t Dataset::size() const {
  return std::visit([](const auto& v) { return v.size(); }, rows);
}

// ---------------------------------------------------------------------------
// Completion samples

bool IsEligibleTarget(const std::string& word) { return IsEligibleWord(word); }

std::optional<WlacSample> GenerateWlacSampleAt(const ParallelPair& pair,
                                               std::size_t pos,
                                               ContextType type,
                                               std::mt19937_64& rng,
                                               const GenConfig& cfg) {
  const auto& tgt = pair.tgt_tokens;
  WLAC_CHECK(pos < tgt.size() && IsEligibleTarget(tgt[pos]),
             "target position must hold an eligible word");
  const std::size_t n = tgt.size();
  if (!Feasible(type, pos, n)) {
    if (!cfg.resample_context) return std::nullopt;
    std::vector<ContextType> ok;
    for (ContextType t : kAllContextTypes) {
      if (Feasible(t, pos, n)) ok.push_back(t);
    }
    type = ok[UniformIndex(rng, 0, ok.size() - 1)];
  }
  WlacSample s;
  s.x = pair.src_tokens;
  s.w = tgt[pos];
  s.context_type = type;
  if (NeedsLeft(type)) s.c_l = SampleSpan(tgt, 0, pos, rng);
  if (NeedsRight(type)) s.c_r = SampleSpan(tgt, pos + 1, n - pos - 1, rng);
  if (cfg.romanization != nullptr) {
    auto it = cfg.romanization->find(s.w);
    if (it != cfg.romanization->end()) s.w_romanized = it->second;
  }
  s.s = SampleTypedPrefix(s.w_romanized.empty() ? s.w : s.w_romanized, rng);
  return s;
}

std::optional<WlacSample> GenerateWlacSample(const ParallelPair& pair,
                                             ContextType type,
                                             std::mt19937_64& rng,
                                             const GenConfig& cfg) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pair.tgt_tokens.size(); ++i) {
    if (IsEligibleTarget(pair.tgt_tokens[i])) eligible.push_back(i);
  }
  if (eligible.empty()) return std::nullopt;
  const std::size_t pos = eligible[UniformIndex(rng, 0, eligible.size() - 1)];
  return GenerateWlacSampleAt(pair, pos, type, rng, cfg);
}

std::string SampleTypedPrefix(const std::string& w, std::mt19937_64& rng) {
  const auto cps = SplitCodepoints(w);
  WLAC_CHECK(!cps.empty(), "cannot type a prefix of an empty word");
  const std::size_t k = UniformIndex(rng, 1, cps.size());
  std::string out;
  for (std::size_t i = 0; i < k; ++i) out += cps[i];
  return out;
}

std::vector<IterativeRow> ExpandIterativeRows(
    std::shared_ptr<const WlacSample> sample, const SubwordModel& model) {
  WLAC_CHECK(sample != nullptr, "null sample");
  const std::vector<std::string> pieces = EncodeWord(model, sample->w).pieces;
  std::vector<IterativeRow> rows;
  rows.reserve(pieces.size() + 1);
  for (std::size_t i = 0; i <= pieces.size(); ++i) {
    IterativeRow r;
    r.base = sample;
    r.decoded.assign(pieces.begin(), pieces.begin() + static_cast<std::ptrdiff_t>(i));
    r.target = i < pieces.size() ? pieces[i] : kEowSymbol;
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Masked-LM samples

std::vector<int> EncodeTargetSentence(const SubwordModel& model,
                                      const SymbolTable& table,
                                      const std::vector<std::string>& tokens) {
  return EncodeWordsToIds(model, table, tokens);
}

CmlmSample GenerateCmlmSample(const std::vector<std::string>& x,
                              const std::vector<int>& target_ids,
                              double mask_prob, std::mt19937_64& rng) {
  WLAC_CHECK(mask_prob > 0 && mask_prob <= 1, "mask_prob must be in (0, 1]");
  WLAC_CHECK(!target_ids.empty(), "empty target sequence");
  CmlmSample out;
  out.x = x;
  out.corrupted = target_ids;
  for (std::size_t i : AtLeastOneMask(target_ids.size(), mask_prob, rng)) {
    out.gold_at_masks.emplace_back(i, target_ids[i]);
    out.corrupted[i] = kMaskId;
  }
  return out;
}

std::optional<CmlmSample> GenerateCmlmSampleInRange(
    const std::vector<std::string>& x, const std::vector<int>& target_ids,
    double lo, double hi, std::mt19937_64& rng) {
  WLAC_CHECK(lo > 0 && lo <= hi && hi <= 1, "mask range must be 0 < lo <= hi <= 1");
  WLAC_CHECK(!target_ids.empty(), "empty target sequence");
  const double n = static_cast<double>(target_ids.size());
  const auto min_count = static_cast<std::size_t>(std::ceil(lo * n - 1e-9));
  const auto max_count = static_cast<std::size_t>(std::floor(hi * n + 1e-9));
  if (std::max<std::size_t>(min_count, 1) > max_count) return std::nullopt;
  const double p = std::uniform_real_distribution<double>(lo, hi)(rng);
  const std::size_t count = std::clamp(static_cast<std::size_t>(std::llround(p * n)),
                                       std::max<std::size_t>(min_count, 1), max_count);
  std::vector<std::size_t> positions(target_ids.size());
  std::iota(positions.begin(), positions.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(positions[i], positions[UniformIndex(rng, i, positions.size() - 1)]);
  }
  positions.resize(count);
  std::sort(positions.begin(), positions.end());
  CmlmSample out;
  out.x = x;
  out.corrupted = target_ids;
  for (std::size_t pos : positions) {
    out.gold_at_masks.emplace_back(pos, target_ids[pos]);
    out.corrupted[pos] = kMaskId;
  }
  return out;
}

CmlmSample GenerateCmlmSample(const ParallelPair& pair, double mask_prob,
                              std::mt19937_64& rng, const SubwordModel& model,
                              const SymbolTable& table) {
  return GenerateCmlmSample(pair.src_tokens,
                            EncodeTargetSentence(model, table, pair.tgt_tokens),
                            mask_prob, rng);
}

// ---------------------------------------------------------------------------
// Code switching

std::vector<SwitchedToken> CodeSwitchSentence(
    const std::vector<std::string>& tgt_tokens,
    const std::map<std::string, std::string>& table, std::mt19937_64& rng,
    double p_token, double p_char_mask, CodeSwitchStats* stats) {
  WLAC_CHECK(p_token >= 0 && p_token <= 1 && p_char_mask >= 0 && p_char_mask <= 1,
             "code-switch probabilities must be in [0, 1]");
  std::vector<SwitchedToken> out;
  for (const std::string& tok : tgt_tokens) {
    auto it = table.find(tok);
    if (it == table.end()) {
      out.push_back({SwitchedToken::Kind::kWord, tok});
      continue;
    }
    if (stats != nullptr) ++stats->mappable;
    if (!Bernoulli(rng, p_token)) {
      out.push_back({SwitchedToken::Kind::kWord, tok});
      continue;
    }
    if (stats != nullptr) ++stats->converted;
    for (std::string& ch : SplitCodepoints(it->second)) {
      const bool masked = Bernoulli(rng, p_char_mask);
      out.push_back({masked ? SwitchedToken::Kind::kMaskedChar
                            : SwitchedToken::Kind::kChar,
                     std::move(ch)});
    }
  }
  return out;
}

SwitchedIds EncodeSwitched(const SubwordModel& model, const SymbolTable& table,
                           const std::vector<SwitchedToken>& tokens) {
  SwitchedIds out;
  for (const SwitchedToken& t : tokens) {
    switch (t.kind) {
      case SwitchedToken::Kind::kWord:
        for (const std::string& p : EncodeWord(model, t.text).pieces) {
          out.ids.push_back(table.SubwordId(p));
        }
        break;
      case SwitchedToken::Kind::kChar:
        out.ids.push_back(table.CharId(t.text));
        break;
      case SwitchedToken::Kind::kMaskedChar:
        out.masked_chars.emplace_back(out.ids.size(), table.CharId(t.text));
        out.ids.push_back(kMaskId);
        break;
    }
  }
  return out;
}

CmlmSample GenerateSwitchedCmlmSample(const std::vector<std::string>& x,
                                      const SwitchedIds& switched,
                                      double mask_prob, std::mt19937_64& rng) {
  WLAC_CHECK(mask_prob > 0 && mask_prob <= 1, "mask_prob must be in (0, 1]");
  WLAC_CHECK(!switched.ids.empty(), "empty target sequence");
  std::vector<std::uint8_t> preset(switched.ids.size(), 0);
  std::vector<int> gold = switched.ids;
  for (const auto& [pos, id] : switched.masked_chars) {
    preset[pos] = 1;
    gold[pos] = id;
  }
  CmlmSample out;
  out.x = x;
  out.corrupted = switched.ids;
  if (switched.masked_chars.empty()) {
    for (std::size_t i : AtLeastOneMask(gold.size(), mask_prob, rng)) {
      out.gold_at_masks.emplace_back(i, gold[i]);
      out.corrupted[i] = kMaskId;
    }
    return out;
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (preset[i] != 0) {
      out.gold_at_masks.emplace_back(i, gold[i]);
    } else if (Bernoulli(rng, mask_prob)) {
      out.gold_at_masks.emplace_back(i, gold[i]);
      out.corrupted[i] = kMaskId;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch mixing

const char* BatchKindName(BatchKind k) {
  return k == BatchKind::kWlac ? "wlac" : "cmlm";
}

BatchMixer::BatchMixer(std::vector<std::size_t> wlac_tokens,
                       std::vector<std::size_t> cmlm_tokens,
                       std::pair<double, double> ratio, std::size_t batch_tokens,
                       std::uint64_t seed)
    : weights_{ratio.first, ratio.second}, batch_tokens_(batch_tokens) {
  if (ratio.first < 0 || ratio.second < 0 || ratio.first + ratio.second <= 0) {
    throw ConfigError("mix ratio needs non-negative weights with a positive sum");
  }
  if (batch_tokens == 0) throw ConfigError("batch token budget must be positive");
  std::vector<std::size_t>* tokens[2] = {&wlac_tokens, &cmlm_tokens};
  for (int k = 0; k < 2; ++k) {
    if (weights_[k] > 0 && tokens[k]->empty()) {
      throw ConfigError(std::string("mix ratio requires the ") +
                        BatchKindName(static_cast<BatchKind>(k)) +
                        " dataset, which is empty");
    }
    Stream& s = streams_[k];
    s.tokens = std::move(*tokens[k]);
    s.order.resize(s.tokens.size());
    std::iota(s.order.begin(), s.order.end(), 0);
    s.rng.seed(seed * 2 + static_cast<std::uint64_t>(k) + 1);
    std::shuffle(s.order.begin(), s.order.end(), s.rng);
  }
}

Batch BatchMixer::Next() {
  const double total = weights_[0] + weights_[1];
  credit_[0] += weights_[0];
  credit_[1] += weights_[1];
  const int k = credit_[1] > credit_[0] ? 1 : 0;
  credit_[k] -= total;
  return Draw(static_cast<BatchKind>(k));
}

std::size_t BatchMixer::epoch(BatchKind k) const {
  return streams_[static_cast<int>(k)].epoch;
}

Batch BatchMixer::Draw(BatchKind kind) {
  Stream& s = streams_[static_cast<int>(kind)];
  Batch b;
  b.kind = kind;
  std::size_t used = 0;
  while (s.cursor < s.order.size()) {
    const std::size_t idx = s.order[s.cursor];
    const std::size_t cost = std::max<std::size_t>(s.tokens[idx], 1);
    if (!b.indices.empty() && used + cost > batch_tokens_) break;
    b.indices.push_back(idx);
    used += cost;
    ++s.cursor;
  }
  if (s.cursor == s.order.size()) {
    s.cursor = 0;
    ++s.epoch;
    std::shuffle(s.order.begin(), s.order.end(), s.rng);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Files

std::vector<ParallelPair> ReadParallelCorpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open parallel corpus " + path);
  std::vector<ParallelPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InputError(path + ":" + std::to_string(lineno) + ": missing tab");
    }
    ParallelPair p{SplitWhitespace(line.substr(0, tab)),
                   SplitWhitespace(line.substr(tab + 1))};
    if (p.src_tokens.empty() || p.tgt_tokens.empty()) {
      throw InputError(path + ":" + std::to_string(lineno) + ": empty side");
    }
    out.push_back(std::move(p));
  }
  return out;
}

void WriteParallelCorpus(const std::string& path,
                         const std::vector<ParallelPair>& pairs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  for (const auto& p : pairs) {
    out << JoinStrings(p.src_tokens, " ") << "\t" << JoinStrings(p.tgt_tokens, " ")
        << "\n";
  }
}

std::map<std::string, std::string> ReadRomanizationTable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open romanization table " + path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw InputError("bad romanization line: " + line);
    }
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

std::string WlacSampleToJson(const WlacSample& s) {
  json j;
  j["x"] = ContextsJson(s.x);
  j["c_l"] = ContextsJson(s.c_l);
  j["c_r"] = ContextsJson(s.c_r);
  j["s"] = s.s;
  j["w"] = s.w;
  j["context_type"] = ContextTypeName(s.context_type);
  if (!s.w_romanized.empty()) j["w_romanized"] = s.w_romanized;
  return j.dump();
}

WlacSample WlacSampleFromJson(const std::string& line) {
  try {
    const json j = json::parse(line);
    WlacSample s;
    s.x = j.at("x").get<std::vector<std::string>>();
    s.c_l = j.at("c_l").get<std::vector<std::string>>();
    s.c_r = j.at("c_r").get<std::vector<std::string>>();
    s.s = j.at("s").get<std::string>();
    s.w = j.at("w").get<std::string>();
    auto t = ParseContextType(j.at("context_type").get<std::string>());
    if (!t) throw InputError("unknown context_type");
    s.context_type = *t;
    if (j.contains("w_romanized")) s.w_romanized = j["w_romanized"].get<std::string>();
    const std::string why = ValidateSample(s);
    if (!why.empty()) throw InputError("invalid sample: " + why);
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("bad sample record: ") + e.what());
  }
}

std::string CmlmSampleToJson(const CmlmSample& s) {
  json j;
  j["x"] = s.x;
  j["corrupted"] = s.corrupted;
  json gold = json::array();
  for (const auto& [pos, id] : s.gold_at_masks) gold.push_back({pos, id});
  j["gold_at_masks"] = gold;
  return j.dump();
}

CmlmSample CmlmSampleFromJson(const std::string& line) {
  try {
    const json j = json::parse(line);
    CmlmSample s;
    s.x = j.at("x").get<std::vector<std::string>>();
    s.corrupted = j.at("corrupted").get<std::vector<int>>();
    for (const auto& g : j.at("gold_at_masks")) {
      const auto pos = g.at(0).get<std::size_t>();
      if (pos >= s.corrupted.size() || s.corrupted[pos] != kMaskId) {
        throw InputError("gold entry does not point at a [MASK]");
      }
      s.gold_at_masks.emplace_back(pos, g.at(1).get<int>());
    }
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("bad cmlm record: ") + e.what());
  }
}

namespace {

template <typename T, typename F>
void WriteLines(const std::string& path, const std::vector<T>& items, F to_json) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  for (const T& item : items) out << to_json(item) << "\n";
}

template <typename T, typename F>
std::vector<T> ReadLines(const std::string& path, F from_json) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::vector<T> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(from_json(line));
  }
  return out;
}

}  // namespace

void WriteWlacSamples(const std::string& path,
                      const std::vector<WlacSample>& samples) {
  WriteLines(path, samples, WlacSampleToJson);
}

std::vector<WlacSample> ReadWlacSamples(const std::string& path) {
  return ReadLines<WlacSample>(path, WlacSampleFromJson);
}

void WriteCmlmSamples(const std::string& path,
                      const std::vector<CmlmSample>& samples) {
  WriteLines(path, samples, CmlmSampleToJson);
}

std::vector<CmlmSample> ReadCmlmSamples(const std::string& path) {
  return ReadLines<CmlmSample>(path, CmlmSampleFromJson);
}

WLAC_NAMESPACE_END
