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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gradcheck.h"
#include "httplib.h"
#include "json.hpp"
#include "test_util.h"
#include "wlac/decoder.h"
#include "wlac/evaluation.h"
#include "wlac/pipeline.h"
#include "wlac/service.h"
#include "wlac/text.h"
#include "wlac/toy_corpus.h"
#include "wlac/training.h"

namespace wlac {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

// Pinned thresholds.
constexpr double kToyAccuracy = 0.90;
constexpr double kToySeconds = 15 * 60;
constexpr std::size_t kToyTestSamples = 500;
constexpr double kAblationMargin = 0.02;
constexpr double kGradRelError = 1e-3;
constexpr double kUniformCeError = 1e-9;
constexpr std::size_t kExhaustiveContexts = 100;
constexpr double kScoreTolerance = 1e-5;
constexpr double kMaskRate = 0.20;
constexpr double kMaskRateTolerance = 0.005;
constexpr std::size_t kMaskRatePositions = 100000;
constexpr double kMixTolerance = 0.05;
constexpr std::size_t kMixBatches = 1000;
constexpr double kSwitchRate = 0.15;
constexpr double kSwitchRateTolerance = 0.01;
constexpr std::size_t kFuzzRequests = 1000;

// Toy training recipe, shared by the full model and every baseline.
constexpr std::size_t kTokenizerVocab = 300;
// Vocabulary for the iterative-decoding comparison: every word splits into
// its root and suffix pieces.
constexpr std::size_t kCompositionalVocab = 140;
constexpr std::size_t kCompositionalPieceLength = 4;
constexpr std::size_t kSamplesPerPair = 3;
constexpr std::int64_t kPretrainSteps = 300;
constexpr std::int64_t kFinetuneSteps = 3000;
constexpr double kLrPeak = 3e-3;
constexpr std::int64_t kWarmup = 200;
constexpr std::int64_t kCheckpointEvery = 25;

int failures = 0;

void Report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string Fmt(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  va_end(ap);
  return buf;
}

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void Log(const std::string& msg) {
  std::fprintf(stderr, "  .. %s\n", msg.c_str());
  std::fflush(stderr);
}

// ---------------------------------------------------------------------------
// Toy experiments (criteria 1-4 and 9)

struct Toy {
  ToyCorpus corpus;
  std::unique_ptr<Tokenizer> tok;
  TrainData data;
  TrainData data_no_iu;
  std::vector<WlacSample> train_samples;
  std::vector<WlacSample> test_bi;
  std::vector<WlacSample> dev;
  std::vector<WlacSample> rare;
  std::map<std::string, std::size_t> freqs;
};

TrainPlan ToyPlan(const Toy& toy, Phase phase, std::int64_t steps) {
  TrainPlan plan;
  plan.phase = phase;
  plan.steps = steps;
  plan.lr_peak = kLrPeak;
  plan.warmup_steps = kWarmup;
  plan.checkpoint_every = kCheckpointEvery;
  plan.log_every = 100;
  plan.model = DeskPreset(toy.tok->table().size());
  plan.model.dropout = 0;
  plan.code_switch.p_select = 0.5;
  return plan;
}

Toy PrepareToy(const SubwordTrainerConfig& sc) {
  Toy toy;
  toy.corpus = GenerateToyCorpus({});
  Tokenizer t = TrainTokenizer(toy.corpus.train, &toy.corpus.romanization, sc);
  toy.tok = std::make_unique<Tokenizer>(t.model(), t.table());

  SampleSetConfig ss;
  ss.samples_per_pair = kSamplesPerPair;
  toy.train_samples = GenerateWlacSet(toy.corpus.train, ss);
  toy.data.pairs = toy.corpus.train;
  toy.data.romanization = &toy.corpus.romanization;
  toy.data.wlac = ExpandToExamples(toy.train_samples, *toy.tok);
  toy.data_no_iu = toy.data;
  toy.data_no_iu.wlac = ExpandToExamples(toy.train_samples, *toy.tok, {false});

  SampleSetConfig bi;
  bi.types = {ContextType::kBi};
  bi.samples_per_pair = 2;
  bi.seed = 99;
  toy.test_bi = GenerateWlacSet(toy.corpus.test, bi);
  WLAC_CHECK(toy.test_bi.size() >= kToyTestSamples, "toy test set too small");
  toy.test_bi.resize(kToyTestSamples);

  SampleSetConfig dev;
  dev.seed = 5;
  toy.dev = GenerateWlacSet(toy.corpus.test, dev);
  if (toy.dev.size() > kToyTestSamples) toy.dev.resize(kToyTestSamples);

  std::mt19937_64 rng(11);
  for (std::size_t i = 0; i < toy.corpus.rare_test.size(); ++i) {
    if (auto s = GenerateWlacSampleAt(toy.corpus.rare_test[i], toy.corpus.rare_positions[i],
                                      ContextType::kBi, rng)) {
      toy.rare.push_back(std::move(*s));
    }
  }
  toy.freqs = CountTargetWords(toy.corpus.train);
  return toy;
}

ModelParams TrainAveraged(const TrainPlan& plan, const TrainData& data, const Tokenizer& tok,
                          ModelParams init, const std::string& label) {
  const auto t0 = Clock::now();
  TrainResult r = Train(plan, data, tok, std::move(init));
  Log(Fmt("%s: %lld steps in %.0f s, averaging %zu checkpoints", label.c_str(),
          static_cast<long long>(plan.steps), Since(t0), r.recent.size()));
  return AverageParams(r.recent);
}

double Accuracy(const ModelParams& p, const Tokenizer& tok, const std::vector<WlacSample>& set,
                const DecodeConfig& cfg, const Toy& toy) {
  return RunEval(p, tok, set, cfg, toy.freqs).accuracy.acc;
}

DecodeConfig NoIuConfig() {
  DecodeConfig cfg;
  cfg.use_instruction_unit = false;
  cfg.prefix_mode = PrefixMode::kFilter;
  return cfg;
}

ModelParams WithWordHead(const ModelParams& base, std::size_t classes, std::uint64_t seed) {
  TransformerConfig c = base.config;
  c.output_size = classes;
  const ModelParams fresh = InitParams(c, seed);
  ModelParams out = base;
  out.config = c;
  out.at("out.weight") = fresh.at("out.weight");
  out.at("out.bias") = fresh.at("out.bias");
  return out;
}

void HardPrefixFuzz(const Toy& toy, const ModelParams& params) {
  auto model = std::make_shared<LoadedModel>();
  model->tokenizer = std::make_shared<const Tokenizer>(toy.tok->model(), toy.tok->table());
  model->params = params;
  model->model_id = "toy@final";
  CompletionService service({});
  service.SetModel(model);
  httplib::Server server;
  service.Bind(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  std::mt19937_64 rng(2024);
  const std::string letters = "abcdefghiklmnoprstuvwyz";
  std::size_t ok = 0, answered = 0, with_candidates = 0;
  for (std::size_t i = 0; i < kFuzzRequests; ++i) {
    const WlacSample& s = toy.dev[rng() % toy.dev.size()];
    std::string typed;
    if (rng() % 2 == 0) {
      typed = s.s;
    } else {
      for (std::size_t k = 0, n = 1 + rng() % 3; k < n; ++k) typed += letters[rng() % letters.size()];
    }
    const json req = {{"src", JoinStrings(s.x, " ")},
                      {"context_left", JoinStrings(s.c_l, " ")},
                      {"context_right", JoinStrings(s.c_r, " ")},
                      {"typed", typed},
                      {"top_k", 1 + rng() % 10},
                      {"hard_prefix", true}};
    const auto res = client.Post("/v1/complete", req.dump(), "application/json");
    if (!res || res->status != 200) continue;
    ++answered;
    const json body = json::parse(res->body);
    bool all = true;
    for (const auto& c : body["candidates"]) all = all && StartsWith(c["word"].get<std::string>(), typed);
    with_candidates += !body["candidates"].empty();
    ok += all;
  }
  server.stop();
  loop.join();
  Report(9, "hard prefix fuzz", ok == kFuzzRequests,
         Fmt("%zu/%zu responses fully prefix-consistent (%zu answered, %zu non-empty)", ok,
             kFuzzRequests, answered, with_candidates));
}

double RareAccuracy(const ModelParams& p, const Toy& toy) {
  return Accuracy(p, *toy.tok, toy.rare, {}, toy);
}

void ToyExperiments() {
  const auto t0 = Clock::now();
  SubwordTrainerConfig sc;
  sc.vocab_size = kTokenizerVocab;
  const Toy toy = PrepareToy(sc);
  Log(Fmt("toy data: %zu symbols, %zu rows, %zu rare samples, %.0f s",
          toy.tok->table().size(), toy.data.wlac.size(), toy.rare.size(), Since(t0)));

  TrainPlan pre = ToyPlan(toy, Phase::kPretrainCmlm, kPretrainSteps);
  const ModelParams init = InitParams(pre.model, 1);
  const ModelParams pretrained = Train(pre, toy.data, *toy.tok, init).params;
  Log(Fmt("pretrained in %.0f s", Since(t0)));
  const ModelParams full = TrainAveraged(ToyPlan(toy, Phase::kMultitask, kFinetuneSteps),
                                         toy.data, *toy.tok, pretrained, "multitask");
  const double full_acc = Accuracy(full, *toy.tok, toy.test_bi, {}, toy);
  const double seconds = Since(t0);
  Report(1, "toy end-to-end", full_acc >= kToyAccuracy && seconds <= kToySeconds,
         Fmt("top-1 %.3f on %zu bi-context samples (need >= %.2f), %.0f s (need <= %.0f)",
             full_acc, toy.test_bi.size(), kToyAccuracy, seconds, kToySeconds));

  HardPrefixFuzz(toy, full);

  // Without the Instruction Unit the typed prefix only filters the output.
  TrainPlan no_iu_plan = ToyPlan(toy, Phase::kMultitask, kFinetuneSteps);
  no_iu_plan.use_instruction_unit = false;
  const ModelParams no_iu =
      TrainAveraged(no_iu_plan, toy.data_no_iu, *toy.tok, pretrained, "without IU");
  const double no_iu_acc = Accuracy(no_iu, *toy.tok, toy.test_bi, NoIuConfig(), toy);
  Report(2, "instruction unit ablation", full_acc - no_iu_acc >= kAblationMargin,
         Fmt("full %.3f vs without IU %.3f, margin %.3f (need >= %.2f)", full_acc, no_iu_acc,
             full_acc - no_iu_acc, kAblationMargin));

  // WLAC-only from random initialization, same budget.
  const ModelParams raw = TrainAveraged(ToyPlan(toy, Phase::kWlacOnly, kFinetuneSteps),
                                        toy.data, *toy.tok, init, "raw WLAC-only");
  const double dev_full = Accuracy(full, *toy.tok, toy.dev, {}, toy);
  const double dev_raw = Accuracy(raw, *toy.tok, toy.dev, {}, toy);
  Report(4, "training strategy", dev_full - dev_raw >= kAblationMargin,
         Fmt("dev (%zu samples): pretrain+multitask %.3f vs raw WLAC-only %.3f, margin %.3f "
             "(need >= %.2f)",
             toy.dev.size(), dev_full, dev_raw, dev_full - dev_raw, kAblationMargin));
  Log(Fmt("rare subset with this vocabulary (informational): %.3f", RareAccuracy(full, toy)));
}

// Iterative decoding against a word-level head, both fine-tuned from the same
// pre-trained checkpoint with the same budget.
void CompositionalExperiment() {
  const auto t0 = Clock::now();
  SubwordTrainerConfig sc;
  sc.vocab_size = kCompositionalVocab;
  sc.max_piece_length = kCompositionalPieceLength;
  const Toy toy = PrepareToy(sc);
  double pieces = 0;
  for (const auto& w : toy.corpus.words) pieces += toy.tok->Pieces(w).size();
  Log(Fmt("compositional vocabulary: %zu symbols, %.2f pieces per word",
          toy.tok->table().size(), pieces / toy.corpus.words.size()));

  TrainPlan pre = ToyPlan(toy, Phase::kPretrainCmlm, kPretrainSteps);
  const ModelParams pretrained = Train(pre, toy.data, *toy.tok, InitParams(pre.model, 1)).params;
  const ModelParams full = TrainAveraged(ToyPlan(toy, Phase::kMultitask, kFinetuneSteps),
                                         toy.data, *toy.tok, pretrained, "iterative");
  Log(Fmt("iterative model: top-1 %.3f on the bi-context test set, %.0f s",
          Accuracy(full, *toy.tok, toy.test_bi, {}, toy), Since(t0)));

  // Word-level head over the training vocabulary, same start and budget.
  std::vector<std::string> seen;
  for (const auto& [w, n] : toy.freqs) seen.push_back(w);
  const WordList words(seen);
  TrainData word_data;
  for (const auto& s : toy.train_samples) {
    word_data.wlac.push_back(MakeWordClassExample(s, *toy.tok, words));
  }
  TrainPlan word_plan = ToyPlan(toy, Phase::kWlacOnly, kFinetuneSteps);
  word_plan.model.output_size = words.num_classes();
  const ModelParams word_head = TrainAveraged(
      word_plan, word_data, *toy.tok, WithWordHead(pretrained, words.num_classes(), 2),
      "word classifier");
  const double iter_rare = RareAccuracy(full, toy);
  const double word_rare =
      RunEval(
          toy.rare,
          [&](const WlacSample& s) {
            return ClassifyWord(word_head, s.x, s.c_l, s.c_r, s.s, 1, *toy.tok, words);
          },
          toy.freqs)
          .accuracy.acc;
  std::size_t unseen = 0;
  for (const auto& s : toy.rare) unseen += toy.freqs.count(s.w) == 0;
  Report(3, "iterative decoding vs word classifier",
         iter_rare - word_rare >= kAblationMargin,
         Fmt("rare subset (%zu samples, %zu unseen in training): iterative %.3f vs word head %.3f, "
             "margin %.3f (need >= %.2f)",
             toy.rare.size(), unseen, iter_rare, word_rare, iter_rare - word_rare,
             kAblationMargin));
}

// ---------------------------------------------------------------------------
// Criterion 5

void GradientChecks() {
  double worst = 0;
  std::string worst_name;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (const auto& r : wlac_test::CheckAllOps(seed)) {
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        worst_name = r.name;
      }
    }
  }
  const auto model = wlac_test::CheckOneLayerModel(1);
  if (model.max_rel_error > worst) {
    worst = model.max_rel_error;
    worst_name = model.name;
  }
  double ce = 0;
  for (std::size_t v : {2u, 7u, 100u, 1000u, 32000u}) {
    ce = std::max(ce, wlac_test::UniformCrossEntropyError(v));
  }
  Report(5, "gradient check", worst < kGradRelError && ce < kUniformCeError,
         Fmt("%s: max relative error %.2e (%s; need < %.0e), uniform CE error %.1e (need < %.0e)",
             wlac_test::GradCheckPrecision(), worst, worst_name.c_str(), kGradRelError, ce,
             kUniformCeError));
}

// ---------------------------------------------------------------------------
// Criterion 6

// 5 single letters and all 25 two-letter pieces.
Tokenizer ThirtyPieceTokenizer() {
  const std::string letters = "abcde";
  std::vector<SubwordModel::Piece> pieces;
  for (char a : letters) pieces.push_back({std::string(1, a), -3.0});
  for (char a : letters) {
    for (char b : letters) pieces.push_back({std::string{a, b}, -3.5});
  }
  SubwordModel model(pieces);
  SymbolTable table = BuildSymbolTable(model, {"a", "b", "c", "d", "e"});
  return Tokenizer(std::move(model), std::move(table));
}

void ExhaustiveSearch() {
  const Tokenizer tok = ThirtyPieceTokenizer();
  const SymbolTable& t = tok.table();
  const std::size_t pieces = t.num_subwords();
  constexpr std::size_t kIterations = 3;
  DecodeConfig cfg;
  cfg.max_subwords = kIterations;
  cfg.beam = 1;
  for (std::size_t i = 1; i < kIterations; ++i) cfg.beam *= pieces + 1;
  cfg.top_k = 1;

  std::mt19937_64 rng(77);
  const std::vector<std::string> vocab = {"ab", "cd", "e", "bad", "dec", "ea", "cab"};
  const auto pick = [&] { return vocab[rng() % vocab.size()]; };
  DecodeConfig narrow = cfg;
  narrow.beam = 30;
  std::size_t agree = 0, narrow_agree = 0;
  double worst = 0;
  for (std::size_t trial = 0; trial < kExhaustiveContexts; ++trial) {
    const ModelParams p = testing_util::PeakyParams(testing_util::TinyConfig(t.size()), 1000 + trial);
    std::vector<std::string> x, c_l, c_r;
    for (std::size_t k = 0, n = 1 + rng() % 3; k < n; ++k) x.push_back(pick());
    if (rng() % 2) c_l.push_back(pick());
    if (rng() % 2) c_r.push_back(pick());
    std::string s(1, "abcde"[rng() % 5]);

    const auto step = [&](const std::vector<std::string>& decoded) {
      const DecoderInput in = AssembleDecoderInput(c_l, c_r, {SplitCodepoints(s), decoded}, tok);
      return RestrictedLogSoftmax(PredictMaskLogits(p, tok.SourceIds(x), in).values(), t);
    };
    std::string best_word;
    double best = -INFINITY;
    std::vector<std::string> path;
    std::function<void(double)> rec = [&](double score) {
      const std::vector<double> lsm = step(path);
      if (!path.empty() && score + lsm[kEowId] > best) {
        best = score + lsm[kEowId];
        best_word = JoinStrings(path, "");
      }
      if (path.size() + 1 == kIterations) return;
      for (int id = t.subword_begin(); id < t.char_begin(); ++id) {
        path.push_back(t.SymbolOf(id).text);
        rec(score + lsm[id]);
        path.pop_back();
      }
    };
    rec(0);
    const DecodeResult r = DecodeWord(p, x, c_l, c_r, s, cfg, tok);
    if (r.candidates.empty()) continue;
    const double diff = std::abs(r.candidates[0].logprob - best);
    worst = std::max(worst, diff);
    agree += r.candidates[0].word == best_word && diff <= kScoreTolerance;
    const DecodeResult n = DecodeWord(p, x, c_l, c_r, s, narrow, tok);
    narrow_agree += !n.candidates.empty() && n.candidates[0].word == best_word;
  }
  Log(Fmt("beam 30 (informational): %zu/%zu contexts agree", narrow_agree, kExhaustiveContexts));
  Report(6, "full-width beam equals exhaustive search", agree == kExhaustiveContexts,
         Fmt("%zu/%zu contexts agree (%zu subwords, %zu iterations, beam %zu, max score diff "
             "%.1e)",
             agree, kExhaustiveContexts, pieces, kIterations, cfg.beam, worst));
}

// ---------------------------------------------------------------------------
// Criterion 7

void DataStatistics() {
  const ToyCorpus corpus = GenerateToyCorpus({});
  SubwordTrainerConfig sc;
  sc.vocab_size = kTokenizerVocab;
  const Tokenizer tok = TrainTokenizer(corpus.train, &corpus.romanization, sc);
  TrainData data;
  data.pairs = corpus.train;
  data.romanization = &corpus.romanization;

  TrainPlan pre;
  pre.phase = Phase::kPretrainCmlm;
  const CmlmSource pre_src(pre, data, tok);
  double lo = 1, hi = 0;
  for (std::int64_t step = 1; step <= 5; ++step) {
    for (std::size_t i = 0; i < pre_src.size(); ++i) {
      const CmlmSample s = pre_src.Make(i, step);
      const double f = static_cast<double>(s.gold_at_masks.size()) / s.corrupted.size();
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
  }
  const bool range_ok = lo >= pre.mask_range.first && hi <= pre.mask_range.second;

  TrainPlan multi;
  multi.phase = Phase::kMultitask;
  multi.cmlm_mask = kMaskRate;
  const CmlmSource multi_src(multi, data, tok);
  std::size_t masked = 0, positions = 0;
  for (std::int64_t step = 1; positions < kMaskRatePositions; ++step) {
    for (std::size_t i = 0; i < multi_src.size(); ++i) {
      const CmlmSample s = multi_src.Make(i, step);
      masked += s.gold_at_masks.size();
      positions += s.corrupted.size();
    }
  }
  const double rate = static_cast<double>(masked) / positions;
  const bool rate_ok = std::abs(rate - kMaskRate) <= kMaskRateTolerance;

  std::vector<std::size_t> wlac_cost(5000), cmlm_cost(2000);
  std::mt19937_64 rng(3);
  for (auto& c : wlac_cost) c = 10 + rng() % 30;
  for (auto& c : cmlm_cost) c = 20 + rng() % 40;
  BatchMixer mixer(wlac_cost, cmlm_cost, {1, 1}, 2000, 1);
  std::size_t wlac_batches = 0;
  for (std::size_t b = 0; b < kMixBatches; ++b) wlac_batches += mixer.Next().kind == BatchKind::kWlac;
  const double share = static_cast<double>(wlac_batches) / kMixBatches;
  const bool mix_ok = std::abs(share - 0.5) <= 0.5 * kMixTolerance;

  TrainPlan cs = multi;
  cs.code_switch.p_select = 0.5;
  cs.code_switch.p_token = 0.3;
  const CmlmSource cs_src(cs, data, tok);
  CodeSwitchStats stats;
  for (std::int64_t step = 1; step <= 20; ++step) {
    for (std::size_t i = 0; i < cs_src.size(); ++i) cs_src.Make(i, step, &stats);
  }
  const double switch_rate = static_cast<double>(stats.converted) / stats.mappable;
  const bool switch_ok = std::abs(switch_rate - kSwitchRate) <= kSwitchRateTolerance;

  Report(7, "data statistics", range_ok && rate_ok && mix_ok && switch_ok,
         Fmt("pretrain mask fraction in [%.3f, %.3f] (need [0.15, 0.5]); multitask mask rate "
             "%.4f over %zu positions (need 0.20 +- 0.005); wlac batch share %.3f over %zu "
             "(need 0.5 +- 5%%); code-switch rate %.4f over %zu mappable words (need 0.15 +- 0.01)",
             lo, hi, rate, positions, share, kMixBatches, switch_rate, stats.mappable));
}

// ---------------------------------------------------------------------------
// Criterion 8

void MetricFixtures() {
  const AccuracyReport acc = ComputeAccuracy(
      {"a", "b", "c", "x"}, {"a", "b", "c", "d"}, std::vector<ContextType>(4, ContextType::kBi));
  const bool acc_ok = acc.acc == 0.75;

  std::vector<WlacSample> samples(1003);
  std::map<std::string, std::size_t> freqs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].w = "w" + std::to_string(i);
    freqs[samples[i].w] = (i * 7919) % 97;
  }
  const auto bins = AccuracyByFrequencyBin(samples, std::vector<std::string>(samples.size()), freqs);
  std::size_t lo = samples.size(), hi = 0;
  for (const auto& b : bins.bins) {
    lo = std::min(lo, b.n);
    hi = std::max(hi, b.n);
  }
  const bool bins_ok = bins.bins.size() == 10 && hi - lo <= 1;

  const ModelParams p = InitParams(testing_util::TinyConfig(30), 9);
  const ModelParams avg = AverageParams(std::vector<ModelParams>(10, p));
  bool identity = true;
  for (const auto& [name, t] : p.tensors) {
    for (std::size_t i = 0; i < t.size(); ++i) identity = identity && avg.at(name)[i] == t[i];
  }
  Report(8, "metric fixtures", acc_ok && bins_ok && identity,
         Fmt("3/4 -> %.4f; 10 bins sized %zu..%zu; averaging 10 identical checkpoints is %s",
             acc.acc, lo, hi, identity ? "the identity" : "NOT the identity"));
}

}  // namespace
}  // namespace wlac

// `--skip-training` omits criteria 1-4 and 9.
int main(int argc, char** argv) {
  using namespace wlac;
  const bool skip_training = argc > 1 && std::string(argv[1]) == "--skip-training";
  GradientChecks();
  ExhaustiveSearch();
  DataStatistics();
  MetricFixtures();
  if (!skip_training) {
    ToyExperiments();
    CompositionalExperiment();
  }
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "NOT ACCEPTED", failures);
  return failures == 0 ? 0 : 1;
}
