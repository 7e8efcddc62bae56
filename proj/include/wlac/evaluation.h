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

// Exact-match accuracy, its context-type and word-frequency breakdowns, and
// cross-attention export.

#ifndef WLAC_EVALUATION_H_
#define WLAC_EVALUATION_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wlac/common.h"
#include "wlac/datagen.h"
#include "wlac/decoder.h"
#include "wlac/model.h"

WLAC_NAMESPACE_BEGIN

struct MatchCounts {
  std::size_t n_match = 0;
  std::size_t n_all = 0;
  double acc = 0;
};

struct AccuracyReport {
  std::size_t n_match = 0;
  std::size_t n_all = 0;
  double acc = 0;
  std::map<ContextType, MatchCounts> by_context;
  std::size_t truncated_count = 0;
};

bool WordsMatch(const std::string& prediction, const std::string& gold, bool casefold);

// Throws ContractError on empty or mismatched inputs.
AccuracyReport ComputeAccuracy(const std::vector<std::string>& predictions,
                               const std::vector<std::string>& golds,
                               const std::vector<ContextType>& types,
                               bool casefold = false);

struct FrequencyBin {
  // Training-corpus counts of the most and least frequent word in the bin.
  std::size_t freq_max = 0;
  std::size_t freq_min = 0;
  std::size_t n = 0;
  std::size_t n_match = 0;
  double acc = 0;
};

struct FrequencyBinReport {
  // bins[0] holds the most frequent words.
  std::vector<FrequencyBin> bins;
  // Bin of each input sample.
  std::vector<std::size_t> bin_of;
};

// Stable sort by descending training frequency, then `num_bins` contiguous
// bins whose sizes differ by at most one (earlier bins take the extra).
FrequencyBinReport AccuracyByFrequencyBin(
    const std::vector<WlacSample>& samples, const std::vector<std::string>& predictions,
    const std::map<std::string, std::size_t>& train_freqs, std::size_t num_bins = 10,
    bool casefold = false);

// Target-side word counts of a corpus.
std::map<std::string, std::size_t> CountTargetWords(const std::vector<ParallelPair>& pairs);
// `word<TAB>count` per line.
void WriteWordCounts(const std::string& path, const std::map<std::string, std::size_t>& c);
std::map<std::string, std::size_t> ReadWordCounts(const std::string& path);

struct SampleResult {
  std::size_t id = 0;
  ContextType context_type = ContextType::kZero;
  std::string gold;
  std::string prediction;
  bool correct = false;
  double logprob = 0;
  bool truncated = false;
};

struct EvalOutput {
  AccuracyReport accuracy;
  FrequencyBinReport bins;
  std::vector<SampleResult> per_sample;
};

using Predictor = std::function<DecodeResult(const WlacSample&)>;

// Top-1 of `predict` per sample. A sample with no candidate predicts "".
EvalOutput RunEval(const std::vector<WlacSample>& samples, const Predictor& predict,
                   const std::map<std::string, std::size_t>& train_freqs,
                   bool casefold = false);
EvalOutput RunEval(const ModelParams& params, const Tokenizer& tok,
                   const std::vector<WlacSample>& samples, const DecodeConfig& cfg,
                   const std::map<std::string, std::size_t>& train_freqs,
                   bool casefold = false);

void WriteSampleResults(const std::string& path, const std::vector<SampleResult>& r);
std::string ReportToJson(const AccuracyReport& acc, const FrequencyBinReport& bins);

struct AttentionExport {
  std::vector<std::string> labels;
  // Head-averaged weights of the anchor over source positions.
  std::vector<double> weights;
  std::vector<std::vector<double>> per_head;
};

// Last decoder layer's cross-attention at the anchor, for the first
// iteration (or after `decoded`).
AttentionExport ExportAttention(const ModelParams& params, const Tokenizer& tok,
                                const WlacSample& sample,
                                const std::vector<std::string>& decoded = {});
std::string AttentionToJson(const AttentionExport& a);

WLAC_NAMESPACE_END

#endif  // WLAC_EVALUATION_H_
