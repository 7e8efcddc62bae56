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

#include "wlac/subword.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "wlac/text.h"

WLAC_NAMESPACE_BEGIN

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Penalty below the least likely piece for a code point outside the alphabet.
constexpr double kUnknownPenalty = 10.0;

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double mx = std::max(a, b);
  return mx + std::log1p(std::exp(-std::abs(a - b)));
}

struct WordEntry {
  std::vector<std::string> cps;
  double count = 0;
};

std::string Concat(const std::vector<std::string>& cps, std::size_t begin,
                   std::size_t end) {
  std::string s;
  for (std::size_t i = begin; i < end; ++i) s += cps[i];
  return s;
}

using PieceScores = std::unordered_map<std::string, double>;

// Expected piece counts under the current unigram distribution, via
// forward-backward over each word's segmentation lattice.
PieceScores ExpectedCounts(const std::vector<WordEntry>& words,
                           const PieceScores& logp, std::size_t max_len) {
  PieceScores counts;
  for (const auto& [piece, lp] : logp) counts[piece] = 0;
  std::vector<double> alpha;
  std::vector<double> beta;
  for (const WordEntry& w : words) {
    const std::size_t n = w.cps.size();
    alpha.assign(n + 1, kNegInf);
    beta.assign(n + 1, kNegInf);
    alpha[0] = 0;
    for (std::size_t j = 1; j <= n; ++j) {
      for (std::size_t len = 1; len <= std::min(max_len, j); ++len) {
        auto it = logp.find(Concat(w.cps, j - len, j));
        if (it == logp.end()) continue;
        alpha[j] = LogAdd(alpha[j], alpha[j - len] + it->second);
      }
    }
    beta[n] = 0;
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t len = 1; len <= std::min(max_len, n - i); ++len) {
        auto it = logp.find(Concat(w.cps, i, i + len));
        if (it == logp.end()) continue;
        beta[i] = LogAdd(beta[i], beta[i + len] + it->second);
      }
    }
    const double z = alpha[n];
    if (z == kNegInf) continue;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t len = 1; len <= std::min(max_len, n - i); ++len) {
        const std::string piece = Concat(w.cps, i, i + len);
        auto it = logp.find(piece);
        if (it == logp.end()) continue;
        const double post = std::exp(alpha[i] + it->second + beta[i + len] - z);
        counts[piece] += w.count * post;
      }
    }
  }
  return counts;
}

PieceScores Normalize(const PieceScores& counts) {
  double total = 0;
  for (const auto& [piece, c] : counts) total += c;
  // Floor keeps never-used pieces (typically rare characters) finite.
  const double floor = std::max(total * 1e-9, 1e-12);
  total = 0;
  for (const auto& [piece, c] : counts) total += std::max(c, floor);
  PieceScores logp;
  for (const auto& [piece, c] : counts) {
    logp[piece] = std::min(0.0, std::log(std::max(c, floor) / total));
  }
  return logp;
}

struct Best {
  double score = kNegInf;
  std::vector<std::string> pieces;
};

bool Better(double score, const std::vector<std::string>& pieces,
            const Best& best) {
  if (best.score == kNegInf) return score != kNegInf;
  const double eps = 1e-9 * std::max(1.0, std::abs(best.score));
  if (score > best.score + eps) return true;
  if (score < best.score - eps) return false;
  if (pieces.size() != best.pieces.size()) return pieces.size() < best.pieces.size();
  return pieces < best.pieces;
}

// Viterbi over a code-point sequence with the tie-breaking rule documented in
// the header. `skip` excludes one piece (used when pricing its removal).
Best Viterbi(const std::vector<std::string>& cps, const PieceScores& logp,
             std::size_t max_len, double unknown_logp,
             const std::string* skip = nullptr) {
  const std::size_t n = cps.size();
  std::vector<Best> best(n + 1);
  best[0].score = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    for (std::size_t len = 1; len <= std::min(max_len, j); ++len) {
      const Best& from = best[j - len];
      if (from.score == kNegInf) continue;
      const std::string piece = Concat(cps, j - len, j);
      if (skip != nullptr && piece == *skip) continue;
      auto it = logp.find(piece);
      double lp;
      std::string label = piece;
      if (it != logp.end()) {
        lp = it->second;
      } else if (len == 1) {
        lp = unknown_logp;
        label = kUnknownPiece;
      } else {
        continue;
      }
      std::vector<std::string> cand = from.pieces;
      cand.push_back(label);
      const double score = from.score + lp;
      if (Better(score, cand, best[j])) {
        best[j].score = score;
        best[j].pieces = std::move(cand);
      }
    }
  }
  return best[n];
}

std::vector<SubwordModel::Piece> SortedPieces(const PieceScores& logp) {
  std::vector<SubwordModel::Piece> out;
  out.reserve(logp.size());
  for (const auto& [piece, lp] : logp) out.push_back({piece, lp});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.text < b.text;
  });
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// SubwordModel

SubwordModel::SubwordModel(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const Piece& p = pieces_[i];
    if (p.text.empty()) throw InputError("empty subword piece");
    if (!std::isfinite(p.logprob) || p.logprob > 0) {
      throw InputError("piece '" + p.text + "' has invalid log-probability");
    }
    if (!index_.emplace(p.text, i).second) {
      throw InputError("duplicate subword piece '" + p.text + "'");
    }
    max_piece_codepoints_ =
        std::max(max_piece_codepoints_, SplitCodepoints(p.text).size());
  }
}

std::optional<double> SubwordModel::LogProb(const std::string& piece) const {
  auto it = index_.find(piece);
  if (it == index_.end()) return std::nullopt;
  return pieces_[it->second].logprob;
}

std::set<std::string> SubwordModel::Alphabet() const {
  std::set<std::string> out;
  for (const Piece& p : pieces_) {
    const auto cps = SplitCodepoints(p.text);
    if (cps.size() == 1) out.insert(cps[0]);
  }
  return out;
}

bool operator==(const SubwordModel& a, const SubwordModel& b) {
  if (a.pieces_.size() != b.pieces_.size()) return false;
  for (std::size_t i = 0; i < a.pieces_.size(); ++i) {
    if (a.pieces_[i].text != b.pieces_[i].text ||
        a.pieces_[i].logprob != b.pieces_[i].logprob) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Training

SubwordModel TrainSubwordModel(const std::vector<std::string>& corpus_lines,
                               const SubwordTrainerConfig& cfg) {
  std::map<std::string, double> word_counts;
  for (const std::string& line : corpus_lines) {
    for (std::string& w : SplitWhitespace(line)) word_counts[w] += 1;
  }
  if (word_counts.empty()) throw InputError("subword training corpus is empty");

  std::vector<WordEntry> words;
  std::set<std::string> alphabet;
  for (const auto& [w, c] : word_counts) {
    WordEntry e{SplitCodepoints(w), c};
    alphabet.insert(e.cps.begin(), e.cps.end());
    words.push_back(std::move(e));
  }
  if (cfg.vocab_size < alphabet.size()) {
    throw ConfigError("vocab_size " + std::to_string(cfg.vocab_size) +
                      " is smaller than the corpus alphabet (" +
                      std::to_string(alphabet.size()) + " characters)");
  }
  const std::size_t max_len = std::max<std::size_t>(cfg.max_piece_length, 1);

  // Seed candidates: every multi-character substring, scored by frequency
  // times length.
  std::map<std::string, double> substring_score;
  for (const WordEntry& w : words) {
    const std::size_t n = w.cps.size();
    for (std::size_t i = 0; i < n; ++i) {
      std::string s = w.cps[i];
      for (std::size_t len = 2; len <= std::min(max_len, n - i); ++len) {
        s += w.cps[i + len - 1];
        substring_score[s] += w.count * static_cast<double>(len);
      }
    }
  }
  if (alphabet.size() + substring_score.size() < cfg.vocab_size) {
    throw ConfigError("vocab_size " + std::to_string(cfg.vocab_size) +
                      " exceeds the " +
                      std::to_string(alphabet.size() + substring_score.size()) +
                      " distinct candidate pieces in the corpus");
  }
  std::vector<std::pair<std::string, double>> seeds(substring_score.begin(),
                                                    substring_score.end());
  std::sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t seed_cap =
      std::max(cfg.vocab_size * std::max<std::size_t>(cfg.seed_multiplier, 1),
               cfg.vocab_size);
  if (seeds.size() > seed_cap) seeds.resize(seed_cap);

  PieceScores counts;
  for (const std::string& ch : alphabet) counts[ch] = 0;
  for (const WordEntry& w : words) {
    for (const std::string& ch : w.cps) counts[ch] += w.count;
  }
  for (const auto& [piece, score] : seeds) counts[piece] = score;
  PieceScores logp = Normalize(counts);

  while (true) {
    for (int it = 0; it < std::max(cfg.em_iterations, 1); ++it) {
      logp = Normalize(ExpectedCounts(words, logp, max_len));
    }
    if (logp.size() <= cfg.vocab_size) break;

    // Price each multi-character piece by the likelihood lost when its Viterbi
    // uses are re-segmented without it.
    PieceScores viterbi_freq;
    for (const WordEntry& w : words) {
      for (const std::string& p : Viterbi(w.cps, logp, max_len, kNegInf).pieces) {
        viterbi_freq[p] += w.count;
      }
    }
    std::vector<std::pair<std::string, double>> loss;
    for (const auto& [piece, lp] : logp) {
      if (alphabet.count(piece) > 0) continue;
      double l = 0;
      auto f = viterbi_freq.find(piece);
      if (f != viterbi_freq.end() && f->second > 0) {
        const Best alt =
            Viterbi(SplitCodepoints(piece), logp, max_len, kNegInf, &piece);
        l = f->second * (lp - alt.score);
      }
      loss.emplace_back(piece, l);
    }
    std::sort(loss.begin(), loss.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    const std::size_t target = std::max<std::size_t>(
        cfg.vocab_size,
        static_cast<std::size_t>(static_cast<double>(logp.size()) * cfg.shrink_factor));
    const std::size_t keep_multi = target - alphabet.size();
    PieceScores kept;
    for (const std::string& ch : alphabet) kept[ch] = std::exp(logp.at(ch));
    for (std::size_t i = 0; i < keep_multi && i < loss.size(); ++i) {
      kept[loss[i].first] = std::exp(logp.at(loss[i].first));
    }
    logp = Normalize(kept);
  }
  return SubwordModel(SortedPieces(logp));
}

// ---------------------------------------------------------------------------
// Encoding

EncodedWord EncodeWord(const SubwordModel& model, const std::string& word) {
  WLAC_CHECK(!word.empty(), "cannot encode an empty word");
  PieceScores logp;
  double min_lp = 0;
  const auto cps = SplitCodepoints(word);
  const std::size_t max_len = std::max<std::size_t>(model.max_piece_codepoints(), 1);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    std::string s;
    for (std::size_t len = 1; len <= std::min(max_len, cps.size() - i); ++len) {
      s += cps[i + len - 1];
      if (auto lp = model.LogProb(s)) logp.emplace(s, *lp);
    }
  }
  for (const auto& p : model.pieces()) min_lp = std::min(min_lp, p.logprob);
  Best best = Viterbi(cps, logp, max_len, min_lp - kUnknownPenalty);
  EncodedWord out;
  out.pieces = std::move(best.pieces);
  out.has_unknown = std::find(out.pieces.begin(), out.pieces.end(),
                              std::string(kUnknownPiece)) != out.pieces.end();
  return out;
}

std::string DecodeSubwords(const SubwordModel& model,
                           const std::vector<std::string>& pieces) {
  WLAC_CHECK(!pieces.empty(), "cannot decode an empty piece list");
  std::string out;
  for (const std::string& p : pieces) {
    if (!model.Contains(p)) throw InputError("unknown subword piece '" + p + "'");
    out += p;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model files

std::string SubwordModelToString(const SubwordModel& model) {
  std::ostringstream out;
  out << "subword-model v1 " << model.size() << "\n";
  out << std::setprecision(17);
  for (const auto& p : model.pieces()) out << p.text << "\t" << p.logprob << "\n";
  return out.str();
}

SubwordModel SubwordModelFromString(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty subword model file");
  const auto header = SplitWhitespace(line);
  if (header.size() != 3 || header[0] != "subword-model" || header[1] != "v1") {
    throw InputError("bad subword model header: " + line);
  }
  const std::size_t n = std::stoul(header[2]);
  std::vector<SubwordModel::Piece> pieces;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw InputError("bad subword model line: " + line);
    try {
      pieces.push_back({line.substr(0, tab), std::stod(line.substr(tab + 1))});
    } catch (const std::logic_error&) {
      throw InputError("bad log-probability in line: " + line);
    }
  }
  if (pieces.size() != n) {
    throw InputError("subword model declares " + std::to_string(n) +
                     " pieces but has " + std::to_string(pieces.size()));
  }
  return SubwordModel(std::move(pieces));
}

void SaveSubwordModel(const std::string& path, const SubwordModel& model) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  out << SubwordModelToString(model);
}

SubwordModel LoadSubwordModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open subword model " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return SubwordModelFromString(ss.str());
}

// ---------------------------------------------------------------------------
// Symbol table

namespace {

constexpr const char* kSpecialNames[kNumSpecials] = {
    "[PAD]", "[UNK]", "[BOS]", "[EOS]", "[MASK]", "[TIP]", "[SEP]", "[EOW]"};

const char* KindName(SymbolKind k) {
  switch (k) {
    case SymbolKind::kSpecial: return "special";
    case SymbolKind::kSubword: return "subword";
    case SymbolKind::kChar: return "char";
  }
  return "?";
}

}  // namespace

const char* SpecialName(int id) {
  WLAC_CHECK(id >= 0 && id < kNumSpecials, "not a special id");
  return kSpecialNames[id];
}

SymbolTable::SymbolTable(const std::vector<std::string>& subwords,
                         const std::vector<std::string>& chars)
    : num_subwords_(subwords.size()) {
  for (int i = 0; i < kNumSpecials; ++i) {
    symbols_.push_back({SymbolKind::kSpecial, kSpecialNames[i]});
  }
  for (const auto& s : subwords) symbols_.push_back({SymbolKind::kSubword, s});
  for (const auto& c : chars) symbols_.push_back({SymbolKind::kChar, c});
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!ids_.emplace(symbols_[i], static_cast<int>(i)).second) {
      throw InputError("duplicate symbol '" + symbols_[i].text + "'");
    }
  }
}

const Symbol& SymbolTable::SymbolOf(int id) const {
  WLAC_CHECK(id >= 0 && static_cast<std::size_t>(id) < symbols_.size(),
             "symbol id " + std::to_string(id) + " out of range");
  return symbols_[id];
}

std::optional<int> SymbolTable::IdOf(const Symbol& s) const {
  auto it = ids_.find(s);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int SymbolTable::SubwordId(const std::string& piece) const {
  return IdOf({SymbolKind::kSubword, piece}).value_or(kUnkId);
}

int SymbolTable::CharId(const std::string& ch) const {
  return IdOf({SymbolKind::kChar, ch}).value_or(kUnkId);
}

std::string SymbolTable::Display(int id) const {
  const Symbol& s = SymbolOf(id);
  return s.kind == SymbolKind::kChar ? "<c:" + s.text + ">" : s.text;
}

SymbolTable BuildSymbolTable(const SubwordModel& model,
                             const std::set<std::string>& char_alphabet) {
  std::vector<std::string> subwords;
  for (const auto& p : model.pieces()) subwords.push_back(p.text);
  return SymbolTable(subwords, std::vector<std::string>(char_alphabet.begin(),
                                                        char_alphabet.end()));
}

void SaveSymbolTable(const std::string& path, const SymbolTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  out << "symbol-table v1 " << table.size() << "\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    const Symbol& s = table.SymbolOf(static_cast<int>(i));
    out << i << "\t" << KindName(s.kind) << "\t" << s.text << "\n";
  }
}

SymbolTable LoadSymbolTable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open symbol table " + path);
  std::string line;
  std::getline(in, line);
  const auto header = SplitWhitespace(line);
  if (header.size() != 3 || header[0] != "symbol-table" || header[1] != "v1") {
    throw InputError("bad symbol table header: " + line);
  }
  std::vector<std::string> subwords;
  std::vector<std::string> chars;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw InputError("bad symbol table line: " + line);
    }
    if (std::stoul(line.substr(0, t1)) != expected) {
      throw InputError("symbol ids must be contiguous: " + line);
    }
    const std::string kind = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string text = line.substr(t2 + 1);
    if (expected < static_cast<std::size_t>(kNumSpecials)) {
      if (kind != "special" || text != kSpecialNames[expected]) {
        throw InputError("special symbols must occupy ids 0-7: " + line);
      }
    } else if (kind == "subword") {
      if (!chars.empty()) throw InputError("subword after char ids: " + line);
      subwords.push_back(text);
    } else if (kind == "char") {
      chars.push_back(text);
    } else {
      throw InputError("bad symbol kind: " + line);
    }
    ++expected;
  }
  SymbolTable table(subwords, chars);
  if (table.size() != std::stoul(header[2])) {
    throw InputError("symbol table size does not match header");
  }
  return table;
}

std::vector<int> EncodeWordsToIds(const SubwordModel& model,
                                  const SymbolTable& table,
                                  const std::vector<std::string>& words,
                                  bool* has_unknown) {
  std::vector<int> ids;
  bool unknown = false;
  for (const std::string& w : words) {
    const EncodedWord enc = EncodeWord(model, w);
    unknown = unknown || enc.has_unknown;
    for (const std::string& p : enc.pieces) ids.push_back(table.SubwordId(p));
  }
  if (has_unknown != nullptr) *has_unknown = unknown;
  return ids;
}

WLAC_NAMESPACE_END
