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

// Command-line front end: data preparation, training, decoding, evaluation
// and the completion server.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "wlac/decoder.h"
#include "wlac/evaluation.h"
#include "wlac/pipeline.h"
#include "wlac/service.h"
#include "wlac/text.h"
#include "wlac/toy_corpus.h"
#include "wlac/training.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wlac;

std::pair<double, double> ParseMaskSpec(const std::string& spec) {
  const auto colon = spec.find(':');
  try {
    if (colon == std::string::npos) {
      const double p = std::stod(spec);
      return {p, p};
    }
    return {std::stod(spec.substr(0, colon)), std::stod(spec.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw ConfigError("bad mask spec '" + spec + "', expected p or lo:hi");
  }
}

void WriteRomanization(const std::string& path, const std::map<std::string, std::string>& t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  for (const auto& [w, r] : t) out << w << "\t" << r << "\n";
}

// ---------------------------------------------------------------------------

struct ToyArgs {
  std::string out;
  std::uint64_t seed = 7;
};

void RunToyCorpus(const ToyArgs& a) {
  ToyCorpusConfig cfg;
  cfg.seed = a.seed;
  const ToyCorpus c = GenerateToyCorpus(cfg);
  fs::create_directories(a.out);
  const fs::path dir(a.out);
  WriteParallelCorpus((dir / "train.tsv").string(), c.train);
  WriteParallelCorpus((dir / "test.tsv").string(), c.test);
  WriteParallelCorpus((dir / "rare_test.tsv").string(), c.rare_test);
  WriteRomanization((dir / "romanization.tsv").string(), c.romanization);
  WriteWordCounts((dir / "train_freqs.tsv").string(), CountTargetWords(c.train));
  std::cout << json{{"train", c.train.size()}, {"test", c.test.size()},
                    {"rare_test", c.rare_test.size()}, {"words", c.words.size()}}
                   .dump()
            << "\n";
}

struct TokenizerArgs {
  std::string corpus;
  std::size_t vocab_size = 300;
  std::string romanization;
  std::string out;
};

void RunTrainTokenizer(const TokenizerArgs& a) {
  const auto pairs = ReadParallelCorpus(a.corpus);
  std::map<std::string, std::string> rom;
  if (!a.romanization.empty()) rom = ReadRomanizationTable(a.romanization);
  SubwordTrainerConfig cfg;
  cfg.vocab_size = a.vocab_size;
  const Tokenizer tok = TrainTokenizer(pairs, a.romanization.empty() ? nullptr : &rom, cfg);
  tok.Save(a.out);
  std::cout << json{{"pieces", tok.model().size()}, {"symbols", tok.table().size()}}.dump()
            << "\n";
}

struct GenArgs {
  std::string pairs;
  std::string tokenizer;
  std::string types = "zero,prefix,suffix,bi";
  std::string cmlm_mask = "0.15:0.5";
  std::string code_switch_table;
  double code_switch_select = 0.5;
  std::uint64_t seed = 1;
  std::size_t samples_per_pair = 1;
  bool resample_context = false;
  std::string out;
};

void RunGenData(const GenArgs& a) {
  const auto pairs = ReadParallelCorpus(a.pairs);
  const auto tok = Tokenizer::Load(a.tokenizer);
  std::map<std::string, std::string> rom;
  if (!a.code_switch_table.empty()) rom = ReadRomanizationTable(a.code_switch_table);
  const auto [lo, hi] = ParseMaskSpec(a.cmlm_mask);
  if (!(0 < lo && lo <= hi && hi <= 1)) throw ConfigError("mask spec must satisfy 0<lo<=hi<=1");

  SampleSetConfig ss;
  ss.types = ParseContextTypes(a.types);
  ss.samples_per_pair = a.samples_per_pair;
  ss.seed = a.seed;
  ss.gen.resample_context = a.resample_context;
  const auto wlac = GenerateWlacSet(pairs, ss);

  std::vector<CmlmSample> cmlm;
  std::size_t switched = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::mt19937_64 rng(a.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
    const ParallelPair& p = pairs[i];
    if (!rom.empty() && std::bernoulli_distribution(a.code_switch_select)(rng)) {
      const auto tokens = CodeSwitchSentence(p.tgt_tokens, rom, rng, 0.3, 0.15);
      cmlm.push_back(GenerateSwitchedCmlmSample(
          p.src_tokens, EncodeSwitched(tok->model(), tok->table(), tokens), lo, rng));
      ++switched;
      continue;
    }
    const auto ids = EncodeTargetSentence(tok->model(), tok->table(), p.tgt_tokens);
    if (lo == hi) {
      cmlm.push_back(GenerateCmlmSample(p.src_tokens, ids, lo, rng));
    } else if (auto s = GenerateCmlmSampleInRange(p.src_tokens, ids, lo, hi, rng)) {
      cmlm.push_back(std::move(*s));
    }
  }
  fs::create_directories(a.out);
  const fs::path dir(a.out);
  WriteWlacSamples((dir / "wlac.jsonl").string(), wlac);
  WriteCmlmSamples((dir / "cmlm.jsonl").string(), cmlm);
  WriteWordCounts((dir / "train_freqs.tsv").string(), CountTargetWords(pairs));
  std::cout << json{{"wlac", wlac.size()}, {"cmlm", cmlm.size()}, {"switched", switched}}.dump()
            << "\n";
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string plan;
  std::string init;
};

void RunTrain(const TrainArgs& a, bool pretrain) {
  TrainPlan plan = LoadPlan(a.plan);
  const bool is_pretrain = plan.phase == Phase::kPretrainCmlm || plan.phase == Phase::kPretrainMt;
  if (pretrain != is_pretrain) {
    throw ConfigError(std::string("phase ") + PhaseName(plan.phase) + " does not belong to " +
                      (pretrain ? "pretrain" : "finetune"));
  }
  if (plan.tokenizer_path.empty()) throw ConfigError("plan needs a tokenizer");
  if (plan.out_dir.empty()) throw ConfigError("plan needs an out_dir");
  const auto tok = Tokenizer::Load(plan.tokenizer_path);
  plan.model.vocab_size = tok->table().size();
  plan.model.output_size = tok->table().size();

  TrainData data;
  std::map<std::string, std::string> rom;
  if (!plan.pairs_path.empty()) data.pairs = ReadParallelCorpus(plan.pairs_path);
  if (!plan.romanization_path.empty()) {
    rom = ReadRomanizationTable(plan.romanization_path);
    data.romanization = &rom;
  }
  if (!plan.wlac_path.empty()) {
    AssembleOptions opts;
    opts.use_instruction_unit = plan.use_instruction_unit;
    data.wlac = ExpandToExamples(ReadWlacSamples(plan.wlac_path), *tok, opts);
  }

  std::optional<Checkpoint> resume;
  if (!plan.resume_path.empty()) resume = LoadCheckpoint(plan.resume_path);
  ModelParams init;
  if (!a.init.empty()) {
    init = LoadCheckpoint(a.init).params;
    if (init.config.vocab_size != plan.model.vocab_size) {
      throw ConfigError("init checkpoint does not match the tokenizer");
    }
  } else {
    init = InitParams(plan.model, plan.seed);
  }
  TrainHooks hooks;
  hooks.on_log = [](const LogEntry& e) { std::cout << LogEntryToJson(e) << std::endl; };
  const TrainResult r = Train(plan, data, *tok, std::move(init), hooks, {}, std::move(resume));
  std::cerr << "trained " << plan.steps << " steps in " << r.seconds << " s; last checkpoint "
            << (r.checkpoint_paths.empty() ? "-" : r.checkpoint_paths.back()) << "\n";
}

struct AverageArgs {
  std::size_t last = 10;
  std::string dir;
  std::string out;
};

void RunAverage(const AverageArgs& a) {
  const auto paths = LastCheckpoints(a.dir, a.last);
  if (paths.empty()) throw InputError("no checkpoints in " + a.dir);
  Checkpoint ck;
  ck.params = AverageCheckpoints(paths);
  ck.step = LoadCheckpoint(paths.back()).step;
  SaveCheckpoint(a.out, ck);
  std::cout << json{{"averaged", paths}, {"out", a.out}}.dump() << "\n";
}

// ---------------------------------------------------------------------------

struct DecodeArgs {
  std::string model;
  std::string tokenizer;
  std::string src, left, right, typed;
  std::size_t beam = 4;
  std::size_t top_k = 5;
  std::size_t max_subwords = 8;
  bool hard_prefix = false;
  bool no_instruction_unit = false;
};

void RunDecode(const DecodeArgs& a) {
  const auto m = LoadModel(a.model, a.tokenizer);
  DecodeConfig cfg;
  cfg.beam = a.beam;
  cfg.top_k = a.top_k;
  cfg.max_subwords = a.max_subwords;
  cfg.hard_prefix = a.hard_prefix;
  cfg.use_instruction_unit = !a.no_instruction_unit;
  if (a.no_instruction_unit && !a.hard_prefix) cfg.prefix_mode = PrefixMode::kFilter;
  const DecodeResult r = DecodeWord(m->params, SplitWhitespace(a.src), SplitWhitespace(a.left),
                                    SplitWhitespace(a.right), a.typed, cfg, *m->tokenizer);
  json cands = json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"word", c.word}, {"pieces", c.pieces}, {"logprob", c.logprob}});
  }
  json out = {{"candidates", cands}, {"truncated", r.truncated}, {"steps", r.steps}};
  if (!r.empty_reason.empty()) out["empty_reason"] = r.empty_reason;
  std::cout << out.dump() << "\n";
}

struct EvalArgs {
  std::string model;
  std::string tokenizer;
  std::string test;
  std::string train_freqs;
  std::string out;
  std::size_t beam = 4;
  bool hard_prefix = false;
  bool casefold = false;
  bool no_instruction_unit = false;
  std::size_t attention = 0;
};

void RunEvaluate(const EvalArgs& a) {
  const auto m = LoadModel(a.model, a.tokenizer);
  const auto samples = ReadWlacSamples(a.test);
  std::map<std::string, std::size_t> freqs;
  if (!a.train_freqs.empty()) freqs = ReadWordCounts(a.train_freqs);
  DecodeConfig cfg;
  cfg.beam = a.beam;
  cfg.top_k = 1;
  cfg.hard_prefix = a.hard_prefix;
  cfg.use_instruction_unit = !a.no_instruction_unit;
  if (a.no_instruction_unit && !a.hard_prefix) cfg.prefix_mode = PrefixMode::kFilter;
  const EvalOutput e = RunEval(m->params, *m->tokenizer, samples, cfg, freqs, a.casefold);
  fs::create_directories(a.out);
  const fs::path dir(a.out);
  const std::string report = ReportToJson(e.accuracy, e.bins);
  std::ofstream((dir / "report.json").string(), std::ios::trunc) << report << "\n";
  WriteSampleResults((dir / "samples.jsonl").string(), e.per_sample);
  if (a.attention > 0) {
    std::ofstream att((dir / "attention.jsonl").string(), std::ios::trunc);
    for (std::size_t i = 0; i < std::min(a.attention, samples.size()); ++i) {
      att << AttentionToJson(ExportAttention(m->params, *m->tokenizer, samples[i])) << "\n";
    }
  }
  std::cout << report << "\n";
}

// ---------------------------------------------------------------------------

struct ServeArgs {
  std::string model;
  std::string tokenizer;
  std::string host = "0.0.0.0";
  int port = 8080;
  std::size_t workers = 2;
  std::size_t beam = 4;
};

httplib::Server* g_server = nullptr;

void RunServe(ServeArgs a) {
  if (const char* dir = std::getenv(kModelDirEnv)) {
    if (a.model.empty()) a.model = DefaultModelPath(dir);
    if (a.tokenizer.empty()) a.tokenizer = DefaultTokenizerPath(dir);
  }
  if (a.model.empty() || a.tokenizer.empty()) {
    throw ConfigError(std::string("need --model and --tokenizer or ") + kModelDirEnv);
  }
  ServiceOptions opts;
  opts.workers = a.workers;
  opts.decode.beam = a.beam;
  CompletionService service(opts);
  service.LoadInBackground(a.model, a.tokenizer);
  httplib::Server server;
  service.Bind(server);
  g_server = &server;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  std::cerr << "listening on " << a.host << ":" << a.port << "\n";
  if (!server.listen(a.host, a.port)) throw InputError("cannot listen on port " + std::to_string(a.port));
  service.WaitUntilLoaded();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Word-level auto-completion toolkit"};
  app.require_subcommand(1);

  ToyArgs toy;
  auto* c_toy = app.add_subcommand("toy-corpus", "Write the synthetic parallel corpus");
  c_toy->add_option("--out", toy.out)->required();
  c_toy->add_option("--seed", toy.seed);

  TokenizerArgs tk;
  auto* c_tok = app.add_subcommand("train-tokenizer", "Train the subword model");
  c_tok->add_option("--corpus", tk.corpus)->required();
  c_tok->add_option("--vocab-size", tk.vocab_size);
  c_tok->add_option("--romanization", tk.romanization);
  c_tok->add_option("--out", tk.out)->required();

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen-data", "Generate completion and masked-LM samples");
  c_gen->add_option("--pairs", gen.pairs)->required();
  c_gen->add_option("--tokenizer", gen.tokenizer)->required();
  c_gen->add_option("--types", gen.types);
  c_gen->add_option("--cmlm-mask", gen.cmlm_mask, "p or lo:hi");
  c_gen->add_option("--code-switch-table", gen.code_switch_table);
  c_gen->add_option("--code-switch-select", gen.code_switch_select);
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--samples-per-pair", gen.samples_per_pair);
  c_gen->add_flag("--resample-context", gen.resample_context);
  c_gen->add_option("--out", gen.out)->required();

  TrainArgs pre;
  auto* c_pre = app.add_subcommand("pretrain", "Run a pre-training plan");
  c_pre->add_option("--plan", pre.plan)->required();
  TrainArgs fine;
  auto* c_fine = app.add_subcommand("finetune", "Run a fine-tuning plan");
  c_fine->add_option("--plan", fine.plan)->required();
  c_fine->add_option("--init", fine.init);

  AverageArgs avg;
  auto* c_avg = app.add_subcommand("average", "Average the last checkpoints");
  c_avg->add_option("--last", avg.last);
  c_avg->add_option("--dir", avg.dir)->required();
  c_avg->add_option("--out", avg.out)->required();

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "Complete one word");
  c_dec->add_option("--model", dec.model)->required();
  c_dec->add_option("--tokenizer", dec.tokenizer)->required();
  c_dec->add_option("--src", dec.src)->required();
  c_dec->add_option("--left", dec.left);
  c_dec->add_option("--right", dec.right);
  c_dec->add_option("--typed", dec.typed)->required();
  c_dec->add_option("--beam", dec.beam);
  c_dec->add_option("--top-k", dec.top_k);
  c_dec->add_option("--max-subwords", dec.max_subwords);
  c_dec->add_flag("--hard-prefix", dec.hard_prefix);
  c_dec->add_flag("--no-instruction-unit", dec.no_instruction_unit);

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score a test set");
  c_ev->add_option("--model", ev.model)->required();
  c_ev->add_option("--tokenizer", ev.tokenizer)->required();
  c_ev->add_option("--test", ev.test)->required();
  c_ev->add_option("--train-freqs", ev.train_freqs);
  c_ev->add_option("--out", ev.out)->required();
  c_ev->add_option("--beam", ev.beam);
  c_ev->add_flag("--hard-prefix", ev.hard_prefix);
  c_ev->add_flag("--casefold", ev.casefold);
  c_ev->add_flag("--no-instruction-unit", ev.no_instruction_unit);
  c_ev->add_option("--attention", ev.attention, "export attention for the first N samples");

  ServeArgs sv;
  auto* c_sv = app.add_subcommand("serve", "Run the completion server");
  c_sv->add_option("--model", sv.model);
  c_sv->add_option("--tokenizer", sv.tokenizer);
  c_sv->add_option("--host", sv.host);
  c_sv->add_option("--port", sv.port);
  c_sv->add_option("--workers", sv.workers);
  c_sv->add_option("--beam", sv.beam);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c_toy) RunToyCorpus(toy);
    if (*c_tok) RunTrainTokenizer(tk);
    if (*c_gen) RunGenData(gen);
    if (*c_pre) RunTrain(pre, true);
    if (*c_fine) RunTrain(fine, false);
    if (*c_avg) RunAverage(avg);
    if (*c_dec) RunDecode(dec);
    if (*c_ev) RunEvaluate(ev);
    if (*c_sv) RunServe(sv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
