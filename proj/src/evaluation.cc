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

#include <algorithm>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "wlac/text.h"

WLAC_NAMESPACE_BEGIN

using nlohmann::json;

namespace {

std::string AsciiLower(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

double Ratio(std::size_t a, std::size_t b) {
  return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
}

}  // namespace

bool WordsMatch(const std::string& prediction, const std::string& gold, bool casefold) {
  return casefold ? AsciiLower(prediction) == AsciiLower(gold) : prediction == gold;
}

AccuracyReport ComputeAccuracy(const std::vector<std::string>& predictions,
                               const std::vector<std::string>& golds,
                               const std::vector<ContextType>& types, bool casefold) {
  WLAC_CHECK(!golds.empty(), "no samples to score");
  WLAC_CHECK(predictions.size() == golds.size() && types.size() == golds.size(),
             "predictions, golds and types must have equal length");
  AccuracyReport r;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const bool ok = WordsMatch(predictions[i], golds[i], casefold);
    MatchCounts& c = r.by_context[types[i]];
    ++c.n_all;
    ++r.n_all;
    if (ok) {
      ++c.n_match;
      ++r.n_match;
    }
  }
  r.acc = Ratio(r.n_match, r.n_all);
  for (auto& [type, c] : r.by_context) c.acc = Ratio(c.n_match, c.n_all);
  return r;
}

FrequencyBinReport AccuracyByFrequencyBin(
    const std::vector<WlacSample>& samples, const std::vector<std::string>& predictions,
    const std::map<std::string, std::size_t>& train_freqs, std::size_t num_bins,
    bool casefold) {
  WLAC_CHECK(num_bins >= 1, "need at least one bin");
  WLAC_CHECK(samples.size() >= num_bins,
             "need at least " + std::to_string(num_bins) + " samples");
  WLAC_CHECK(predictions.size() == samples.size(), "one prediction per sample");
  const auto freq = [&](std::size_t i) {
    auto it = train_freqs.find(samples[i].w);
    return it == train_freqs.end() ? std::size_t{0} : it->second;
  };
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return freq(a) > freq(b); });
  FrequencyBinReport r;
  r.bins.resize(num_bins);
  r.bin_of.resize(samples.size());
  const std::size_t base = samples.size() / num_bins;
  const std::size_t extra = samples.size() % num_bins;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < num_bins; ++b) {
    FrequencyBin& bin = r.bins[b];
    bin.n = base + (b < extra ? 1 : 0);
    for (std::size_t j = 0; j < bin.n; ++j, ++pos) {
      const std::size_t i = order[pos];
      r.bin_of[i] = b;
      if (j == 0) bin.freq_max = freq(i);
      bin.freq_min = freq(i);
      if (WordsMatch(predictions[i], samples[i].w, casefold)) ++bin.n_match;
    }
    bin.acc = Ratio(bin.n_match, bin.n);
  }
  return r;
}

std::map<std::string, std::size_t> CountTargetWords(const std::vector<ParallelPair>& pairs) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : pairs) {
    for (const auto& w : p.tgt_tokens) ++counts[w];
  }
  return counts;
}

void WriteWordCounts(const std::string& path, const std::map<std::string, std::size_t>& c) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  for (const auto& [w, n] : c) out << w << "\t" << n << "\n";
}

std::map<std::string, std::size_t> ReadWordCounts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open word counts " + path);
  std::map<std::string, std::size_t> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw InputError("bad word-count line: " + line);
    try {
      out[line.substr(0, tab)] = std::stoul(line.substr(tab + 1));
    } catch (const std::logic_error&) {
      throw InputError("bad word-count line: " + line);
    }
  }
  return out;
}

EvalOutput RunEval(const std::vector<WlacSample>& samples, const Predictor& predict,
                   const std::map<std::string, std::size_t>& train_freqs, bool casefold) {
  WLAC_CHECK(!samples.empty(), "empty test set");
  EvalOutput out;
  out.per_sample.resize(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const WlacSample& s = samples[i];
    const DecodeResult d = predict(s);
    SampleResult& r = out.per_sample[i];
    r.id = static_cast<std::size_t>(i);
    r.context_type = s.context_type;
    r.gold = s.w;
    r.truncated = d.truncated;
    if (!d.candidates.empty()) {
      r.prediction = d.candidates.front().word;
      r.logprob = d.candidates.front().logprob;
    }
    r.correct = WordsMatch(r.prediction, r.gold, casefold);
  }
  std::vector<std::string> preds, golds;
  std::vector<ContextType> types;
  for (const auto& r : out.per_sample) {
    preds.push_back(r.prediction);
    golds.push_back(r.gold);
    types.push_back(r.context_type);
  }
  out.accuracy = ComputeAccuracy(preds, golds, types, casefold);
  for (const auto& r : out.per_sample) out.accuracy.truncated_count += r.truncated ? 1 : 0;
  if (samples.size() >= 10) {
    out.bins = AccuracyByFrequencyBin(samples, preds, train_freqs, 10, casefold);
  }
  return out;
}

EvalOutput RunEval(const ModelParams& params, const Tokenizer& tok,
                   const std::vector<WlacSample>& samples, const DecodeConfig& cfg,
                   const std::map<std::string, std::size_t>& train_freqs, bool casefold) {
  return RunEval(
      samples,
      [&](const WlacSample& s) {
        return DecodeWord(params, s.x, s.c_l, s.c_r, s.s, cfg, tok);
      },
      train_freqs, casefold);
}

void WriteSampleResults(const std::string& path, const std::vector<SampleResult>& results) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  for (const auto& r : results) {
    json j;
    j["id"] = r.id;
    j["context_type"] = ContextTypeName(r.context_type);
    j["gold"] = r.gold;
    j["prediction"] = r.prediction;
    j["correct"] = r.correct;
    j["logprob"] = r.logprob;
    if (r.truncated) j["truncated"] = true;
    out << j.dump() << "\n";
  }
}

std::string ReportToJson(const AccuracyReport& acc, const FrequencyBinReport& bins) {
  json j;
  j["n_match"] = acc.n_match;
  j["n_all"] = acc.n_all;
  j["acc"] = acc.acc;
  j["truncated_count"] = acc.truncated_count;
  json by = json::object();
  for (const auto& [type, c] : acc.by_context) {
    by[ContextTypeName(type)] = {{"n_match", c.n_match}, {"n_all", c.n_all}, {"acc", c.acc}};
  }
  j["by_context"] = by;
  json b = json::array();
  for (const auto& bin : bins.bins) {
    b.push_back({{"freq_max", bin.freq_max},
                 {"freq_min", bin.freq_min},
                 {"n", bin.n},
                 {"n_match", bin.n_match},
                 {"acc", bin.acc}});
  }
  j["frequency_bins"] = b;
  return j.dump(2);
}

AttentionExport ExportAttention(const ModelParams& params, const Tokenizer& tok,
                                const WlacSample& sample,
                                const std::vector<std::string>& decoded) {
  const std::vector<int> src = tok.SourceIds(sample.x);
  const Tensor memory = EncodeSource(params, src);
  const DecoderInput in = AssembleDecoderInput(
      sample.c_l, sample.c_r, InstructionUnit{SplitCodepoints(sample.s), decoded}, tok);
  AttentionTrace trace;
  const DecoderInput* one[] = {&in};
  AnchorLogits(params, memory, one, &trace);
  const std::size_t heads = params.config.heads;
  const std::size_t q_len = in.ids.size();
  const std::size_t k_len = src.size();
  const std::vector<Real>& probs = trace.cross_probs.back();
  WLAC_CHECK(probs.size() == heads * q_len * k_len, "unexpected attention layout");
  AttentionExport out;
  for (int id : src) out.labels.push_back(tok.table().Display(id));
  out.weights.assign(k_len, 0.0);
  out.per_head.assign(heads, std::vector<double>(k_len, 0.0));
  for (std::size_t h = 0; h < heads; ++h) {
    const Real* row = probs.data() + (h * q_len + in.mask_position) * k_len;
    for (std::size_t j = 0; j < k_len; ++j) {
      out.per_head[h][j] = row[j];
      out.weights[j] += static_cast<double>(row[j]) / static_cast<double>(heads);
    }
  }
  return out;
}

std::string AttentionToJson(const AttentionExport& a) {
  json j;
  j["labels"] = a.labels;
  j["weights"] = {a.weights};
  j["per_head"] = a.per_head;
  return j.dump();
}

WLAC_NAMESPACE_END
