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

#include "wlac/evaluation.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "gtest/gtest.h"
#include "json.hpp"
#include "test_util.h"

namespace wlac {
namespace {

using testing_util::PeakyParams;
using testing_util::TinyConfig;
using testing_util::TinyTokenizer;

TEST(EvaluationTest, ThreeOfFourIsSeventyFivePercent) {
  const AccuracyReport r =
      ComputeAccuracy({"the", "cat", "sat", "mat"}, {"the", "cat", "sat", "hat"},
                      {ContextType::kBi, ContextType::kBi, ContextType::kPrefix,
                       ContextType::kPrefix});
  EXPECT_EQ(r.n_match, 3u);
  EXPECT_EQ(r.n_all, 4u);
  EXPECT_DOUBLE_EQ(r.acc, 0.75);
  EXPECT_DOUBLE_EQ(r.by_context.at(ContextType::kBi).acc, 1.0);
  EXPECT_DOUBLE_EQ(r.by_context.at(ContextType::kPrefix).acc, 0.5);
}

TEST(EvaluationTest, CasefoldIsOptIn) {
  const std::vector<ContextType> t(2, ContextType::kZero);
  EXPECT_DOUBLE_EQ(ComputeAccuracy({"The", "cat"}, {"the", "cat"}, t).acc, 0.5);
  EXPECT_DOUBLE_EQ(ComputeAccuracy({"The", "cat"}, {"the", "cat"}, t, true).acc, 1.0);
}

TEST(EvaluationTest, EmptyOrMismatchedInputsThrow) {
  EXPECT_THROW(ComputeAccuracy({}, {}, {}), ContractError);
  EXPECT_THROW(ComputeAccuracy({"a"}, {"a", "b"}, {ContextType::kBi, ContextType::kBi}),
               ContractError);
}

std::vector<WlacSample> GoldSamples(std::size_t n, std::map<std::string, std::size_t>* freqs,
                                    std::mt19937_64& rng) {
  std::vector<WlacSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    WlacSample s;
    s.w = "w" + std::to_string(i);
    s.s = "w";
    s.x = {"x"};
    out.push_back(s);
    (*freqs)[s.w] = rng() % 50;
  }
  return out;
}

TEST(EvaluationTest, TenBinsOfEqualSizeSortedByFrequency) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {10u, 37u, 100u, 1003u}) {
    std::map<std::string, std::size_t> freqs;
    const auto samples = GoldSamples(n, &freqs, rng);
    std::vector<std::string> preds;
    for (const auto& s : samples) preds.push_back(rng() % 2 ? s.w : "");
    const FrequencyBinReport r = AccuracyByFrequencyBin(samples, preds, freqs);
    ASSERT_EQ(r.bins.size(), 10u);
    std::size_t total = 0, matched = 0;
    for (std::size_t b = 0; b < 10; ++b) {
      EXPECT_GE(r.bins[b].n, n / 10);
      EXPECT_LE(r.bins[b].n, n / 10 + 1);
      EXPECT_GE(r.bins[b].freq_max, r.bins[b].freq_min);
      if (b > 0) {
        EXPECT_GE(r.bins[b - 1].freq_min, r.bins[b].freq_max);
      }
      total += r.bins[b].n;
      matched += r.bins[b].n_match;
    }
    EXPECT_EQ(total, n);
    std::size_t expect_matched = 0;
    for (std::size_t i = 0; i < n; ++i) {
      expect_matched += preds[i] == samples[i].w;
      const FrequencyBin& bin = r.bins[r.bin_of[i]];
      EXPECT_LE(freqs[samples[i].w], bin.freq_max);
      EXPECT_GE(freqs[samples[i].w], bin.freq_min);
    }
    EXPECT_EQ(matched, expect_matched);
  }
}

TEST(EvaluationTest, UnseenWordsLandInTheLastBin) {
  std::mt19937_64 rng(2);
  std::map<std::string, std::size_t> freqs;
  auto samples = GoldSamples(20, &freqs, rng);
  for (auto& [w, f] : freqs) f += 1;
  samples[7].w = "never_seen";
  const auto r = AccuracyByFrequencyBin(samples, std::vector<std::string>(20), freqs);
  EXPECT_EQ(r.bin_of[7], 9u);
  EXPECT_EQ(r.bins[9].freq_min, 0u);
}

TEST(EvaluationTest, TooFewSamplesForBinsThrow) {
  std::mt19937_64 rng(3);
  std::map<std::string, std::size_t> freqs;
  const auto samples = GoldSamples(5, &freqs, rng);
  EXPECT_THROW(AccuracyByFrequencyBin(samples, std::vector<std::string>(5), freqs),
               ContractError);
}

TEST(EvaluationTest, RunEvalUsesTopCandidate) {
  std::mt19937_64 rng(4);
  std::map<std::string, std::size_t> freqs;
  const auto samples = GoldSamples(12, &freqs, rng);
  const EvalOutput out = RunEval(
      samples,
      [](const WlacSample& s) {
        DecodeResult d;
        if (s.w == "w3") return d;
        d.candidates.push_back({s.w == "w5" ? "wrong" : s.w, {}, -1.0});
        d.candidates.push_back({s.w, {}, -2.0});
        return d;
      },
      freqs);
  EXPECT_EQ(out.accuracy.n_match, 10u);
  EXPECT_EQ(out.per_sample[3].prediction, "");
  EXPECT_FALSE(out.per_sample[5].correct);
  EXPECT_EQ(out.bins.bins.size(), 10u);
  const auto j = nlohmann::json::parse(ReportToJson(out.accuracy, out.bins));
  EXPECT_EQ(j["n_match"], 10);
  EXPECT_EQ(j["frequency_bins"].size(), 10u);
}

TEST(EvaluationTest, WordCountsRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "wlac_eval_counts.tsv";
  const std::map<std::string, std::size_t> counts = {{"a", 3}, {"b c", 1}, {"d", 0}};
  WriteWordCounts(path.string(), counts);
  EXPECT_EQ(ReadWordCounts(path.string()), counts);
  EXPECT_EQ(CountTargetWords({ParallelPair{{"X"}, {"a", "b", "a"}}}),
            (std::map<std::string, std::size_t>{{"a", 2}, {"b", 1}}));
}

TEST(EvaluationTest, AttentionRowsAreDistributions) {
  const Tokenizer tok = TinyTokenizer();
  const ModelParams p = PeakyParams(TinyConfig(tok.table().size()), 3);
  WlacSample s;
  s.x = {"abc", "de"};
  s.c_l = {"ea"};
  s.s = "a";
  s.w = "ab";
  const AttentionExport a = ExportAttention(p, tok, s);
  const std::size_t k = tok.SourceIds(s.x).size();
  ASSERT_EQ(a.labels.size(), k);
  ASSERT_EQ(a.weights.size(), k);
  ASSERT_EQ(a.per_head.size(), p.config.heads);
  double total = 0;
  for (double w : a.weights) total += w;
  EXPECT_NEAR(total, 1.0, 1e-5);
  for (const auto& head : a.per_head) {
    double t = 0;
    for (double w : head) t += w;
    EXPECT_NEAR(t, 1.0, 1e-5);
  }
  const auto j = nlohmann::json::parse(AttentionToJson(a));
  EXPECT_EQ(j["labels"].size(), k);
}

}  // namespace
}  // namespace wlac
