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

#include "wlac/pipeline.h"

#include <random>
#include <set>

#include "wlac/text.h"

WLAC_NAMESPACE_BEGIN

Tokenizer TrainTokenizer(const std::vector<ParallelPair>& pairs,
                         const std::map<std::string, std::string>* romanization,
                         const SubwordTrainerConfig& cfg) {
  std::vector<std::string> lines;
  std::set<std::string> chars;
  for (const auto& p : pairs) {
    lines.push_back(JoinStrings(p.src_tokens, " "));
    lines.push_back(JoinStrings(p.tgt_tokens, " "));
    for (const auto& w : p.tgt_tokens) {
      for (auto& c : SplitCodepoints(w)) chars.insert(std::move(c));
    }
  }
  if (romanization != nullptr) {
    for (const auto& [word, rom] : *romanization) {
      for (auto& c : SplitCodepoints(rom)) chars.insert(std::move(c));
    }
  }
  SubwordModel model = TrainSubwordModel(lines, cfg);
  SymbolTable table = BuildSymbolTable(model, chars);
  return Tokenizer(std::move(model), std::move(table));
}

std::vector<WlacSample> GenerateWlacSet(const std::vector<ParallelPair>& pairs,
                                        const SampleSetConfig& cfg) {
  if (cfg.types.empty()) throw ConfigError("no context types requested");
  std::mt19937_64 rng(cfg.seed);
  std::vector<WlacSample> out;
  for (const auto& p : pairs) {
    for (std::size_t k = 0; k < cfg.samples_per_pair; ++k) {
      const ContextType t = cfg.types[std::uniform_int_distribution<std::size_t>(
          0, cfg.types.size() - 1)(rng)];
      if (auto s = GenerateWlacSample(p, t, rng, cfg.gen)) out.push_back(std::move(*s));
    }
  }
  return out;
}

std::vector<WlacExample> ExpandToExamples(const std::vector<WlacSample>& samples,
                                          const Tokenizer& tok,
                                          const AssembleOptions& opts) {
  std::vector<WlacExample> out;
  for (const auto& s : samples) {
    auto shared = std::make_shared<const WlacSample>(s);
    for (const auto& row : ExpandIterativeRows(shared, tok.model())) {
      out.push_back(MakeWlacExample(row, tok, opts));
    }
  }
  return out;
}

WLAC_NAMESPACE_END
