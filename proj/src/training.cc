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

#include "wlac/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"

WLAC_NAMESPACE_BEGIN

using nlohmann::json;

namespace {

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t Mix(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                  std::uint64_t salt) {
  return SplitMix(SplitMix(SplitMix(SplitMix(a) ^ b) ^ c) ^ salt);
}

enum Salt : std::uint64_t { kSaltMask = 11, kSaltSelect = 12, kSaltDropout = 13 };

std::mt19937_64 StepRng(std::uint64_t seed, std::int64_t step, std::size_t row,
                        Salt salt) {
  return std::mt19937_64(Mix(seed, static_cast<std::uint64_t>(step), row, salt));
}

std::pair<double, double> RatioFor(const TrainPlan& plan) {
  switch (plan.phase) {
    case Phase::kPretrainMt:
    case Phase::kPretrainCmlm: return {0, 1};
    case Phase::kWlacOnly: return {1, 0};
    case Phase::kMultitask: return plan.mix_ratio;
  }
  return plan.mix_ratio;
}

std::string CheckpointName(std::int64_t step) {
  return "ckpt_" + std::to_string(step) + ".bin";
}

}  // namespace

const char* PhaseName(Phase p) {
  switch (p) {
    case Phase::kPretrainMt: return "pretrain_mt";
    case Phase::kPretrainCmlm: return "pretrain_cmlm";
    case Phase::kMultitask: return "multitask";
    case Phase::kWlacOnly: return "wlac_only";
  }
  return "?";
}

Phase ParsePhase(const std::string& name) {
  for (Phase p : {Phase::kPretrainMt, Phase::kPretrainCmlm, Phase::kMultitask,
                  Phase::kWlacOnly}) {
    if (name == PhaseName(p)) return p;
  }
  throw ConfigError("unknown phase '" + name + "'");
}

void TrainPlan::Validate() const {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (batch_tokens == 0) throw ConfigError("batch_tokens must be positive");
  if (!(lr_peak > 0)) throw ConfigError("lr_peak must be positive");
  if (warmup_steps < 1) throw ConfigError("warmup_steps must be >= 1");
  if (!(mask_range.first > 0 && mask_range.first <= mask_range.second &&
        mask_range.second <= 1)) {
    throw ConfigError("mask_range must satisfy 0 < lo <= hi <= 1");
  }
  if (!(cmlm_mask > 0 && cmlm_mask <= 1)) throw ConfigError("cmlm_mask must be in (0, 1]");
  if (mix_ratio.first < 0 || mix_ratio.second < 0 ||
      mix_ratio.first + mix_ratio.second <= 0) {
    throw ConfigError("mix_ratio needs non-negative weights with a positive sum");
  }
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  const auto unit = [](double p) { return p >= 0 && p <= 1; };
  if (!unit(code_switch.p_select) || !unit(code_switch.p_token) ||
      !unit(code_switch.p_char_mask)) {
    throw ConfigError("code-switch probabilities must be in [0, 1]");
  }
}

std::string PlanToJson(const TrainPlan& p) {
  json j;
  j["phase"] = PhaseName(p.phase);
  j["steps"] = p.steps;
  j["batch_tokens"] = p.batch_tokens;
  j["lr_peak"] = p.lr_peak;
  j["warmup_steps"] = p.warmup_steps;
  j["mask_range"] = {p.mask_range.first, p.mask_range.second};
  j["cmlm_mask"] = p.cmlm_mask;
  j["mix_ratio"] = {p.mix_ratio.first, p.mix_ratio.second};
  j["checkpoint_every"] = p.checkpoint_every;
  j["seed"] = p.seed;
  j["log_every"] = p.log_every;
  j["code_switch"] = {{"p_select", p.code_switch.p_select},
                      {"p_token", p.code_switch.p_token},
                      {"p_char_mask", p.code_switch.p_char_mask}};
  j["use_instruction_unit"] = p.use_instruction_unit;
  j["model"] = {{"layers", p.model.layers},   {"heads", p.model.heads},
                {"d_model", p.model.d_model}, {"d_ff", p.model.d_ff},
                {"dropout", p.model.dropout}, {"max_len", p.model.max_len}};
  j["pairs"] = p.pairs_path;
  j["wlac"] = p.wlac_path;
  j["tokenizer"] = p.tokenizer_path;
  j["romanization"] = p.romanization_path;
  j["out_dir"] = p.out_dir;
  j["resume"] = p.resume_path;
  return j.dump(2);
}

TrainPlan PlanFromJson(const std::string& text) {
  TrainPlan p;
  try {
    const json j = json::parse(text);
    for (const auto& [key, value] : j.items()) {
      static const std::set<std::string> known = {
          "phase", "steps", "batch_tokens", "lr_peak", "warmup_steps",
          "mask_range", "cmlm_mask", "mix_ratio", "checkpoint_every", "seed",
          "log_every", "code_switch", "use_instruction_unit", "model", "pairs",
          "wlac", "tokenizer", "romanization", "out_dir", "resume"};
      if (known.count(key) == 0) throw ConfigError("unknown plan field '" + key + "'");
    }
    p.phase = ParsePhase(j.at("phase").get<std::string>());
    p.steps = j.value("steps", p.steps);
    p.batch_tokens = j.value("batch_tokens", p.batch_tokens);
    p.lr_peak = j.value("lr_peak", p.lr_peak);
    p.warmup_steps = j.value("warmup_steps", p.warmup_steps);
    if (j.contains("mask_range")) {
      p.mask_range = {j["mask_range"].at(0).get<double>(),
                      j["mask_range"].at(1).get<double>()};
    }
    p.cmlm_mask = j.value("cmlm_mask", p.cmlm_mask);
    if (j.contains("mix_ratio")) {
      p.mix_ratio = {j["mix_ratio"].at(0).get<double>(),
                     j["mix_ratio"].at(1).get<double>()};
    }
    p.checkpoint_every = j.value("checkpoint_every", p.checkpoint_every);
    p.seed = j.value("seed", p.seed);
    p.log_every = j.value("log_every", p.log_every);
    if (j.contains("code_switch")) {
      const json& c = j["code_switch"];
      p.code_switch.p_select = c.value("p_select", p.code_switch.p_select);
      p.code_switch.p_token = c.value("p_token", p.code_switch.p_token);
      p.code_switch.p_char_mask = c.value("p_char_mask", p.code_switch.p_char_mask);
    }
    p.use_instruction_unit = j.value("use_instruction_unit", p.use_instruction_unit);
    if (j.contains("model")) {
      const json& m = j["model"];
      p.model.layers = m.value("layers", p.model.layers);
      p.model.heads = m.value("heads", p.model.heads);
      p.model.d_model = m.value("d_model", p.model.d_model);
      p.model.d_ff = m.value("d_ff", p.model.d_ff);
      p.model.dropout = m.value("dropout", p.model.dropout);
      p.model.max_len = m.value("max_len", p.model.max_len);
    }
    p.pairs_path = j.value("pairs", std::string());
    p.wlac_path = j.value("wlac", std::string());
    p.tokenizer_path = j.value("tokenizer", std::string());
    p.romanization_path = j.value("romanization", std::string());
    p.out_dir = j.value("out_dir", std::string());
    p.resume_path = j.value("resume", std::string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad plan: ") + e.what());
  }
  p.Validate();
  return p;
}

TrainPlan LoadPlan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return PlanFromJson(ss.str());
}

double LrAt(std::int64_t step, const TrainPlan& plan) {
  WLAC_CHECK(step >= 0, "step must be >= 0");
  if (step == 0) return 0;
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(plan.warmup_steps);
  return plan.lr_peak * std::min(s / w, std::sqrt(w / s));
}

std::string LogEntryToJson(const LogEntry& e) {
  json j;
  j["step"] = e.step;
  j["lr"] = e.lr;
  j["loss_wlac"] = e.loss_wlac ? json(*e.loss_wlac) : json(nullptr);
  j["loss_cmlm"] = e.loss_cmlm ? json(*e.loss_cmlm) : json(nullptr);
  return j.dump();
}

// ---------------------------------------------------------------------------
// Masked-LM rows

CmlmSource::CmlmSource(const TrainPlan& plan, const TrainData& data,
                       const Tokenizer& tok)
    : plan_(plan), data_(data), tok_(tok) {
  for (std::size_t i = 0; i < data.pairs.size(); ++i) {
    std::vector<int> ids = tok.WordsToIds(data.pairs[i].tgt_tokens);
    if (ids.empty()) continue;
    if (plan.phase == Phase::kPretrainCmlm) {
      const double n = static_cast<double>(ids.size());
      const auto lo = static_cast<std::size_t>(std::ceil(plan.mask_range.first * n - 1e-9));
      const auto hi = static_cast<std::size_t>(std::floor(plan.mask_range.second * n + 1e-9));
      if (std::max<std::size_t>(lo, 1) > hi) continue;
    }
    sentences_.push_back(i);
    target_ids_.push_back(std::move(ids));
    src_lengths_.push_back(tok.SourceIds(data.pairs[i].src_tokens).size());
  }
}

std::size_t CmlmSource::TokenCost(std::size_t i) const {
  return src_lengths_.at(i) + target_ids_.at(i).size();
}

bool CmlmSource::Switched(std::size_t i) const {
  if (plan_.phase != Phase::kMultitask || data_.romanization == nullptr ||
      plan_.code_switch.p_select <= 0) {
    return false;
  }
  std::mt19937_64 rng = StepRng(plan_.seed, 0, sentences_.at(i), kSaltSelect);
  return std::uniform_real_distribution<double>(0, 1)(rng) < plan_.code_switch.p_select;
}

CmlmSample CmlmSource::Make(std::size_t i, std::int64_t step,
                            CodeSwitchStats* stats) const {
  const ParallelPair& pair = data_.pairs.at(sentences_.at(i));
  const std::vector<int>& ids = target_ids_.at(i);
  std::mt19937_64 rng = StepRng(plan_.seed, step, sentences_[i], kSaltMask);
  switch (plan_.phase) {
    case Phase::kPretrainMt:
      return GenerateCmlmSample(pair.src_tokens, ids, 1.0, rng);
    case Phase::kPretrainCmlm: {
      auto s = GenerateCmlmSampleInRange(pair.src_tokens, ids, plan_.mask_range.first,
                                         plan_.mask_range.second, rng);
      WLAC_CHECK(s.has_value(), "sentence cannot meet the mask range");
      return *s;
    }
    case Phase::kMultitask:
    case Phase::kWlacOnly:
      break;
  }
  if (Switched(i)) {
    const auto tokens = CodeSwitchSentence(pair.tgt_tokens, *data_.romanization, rng,
                                           plan_.code_switch.p_token,
                                           plan_.code_switch.p_char_mask, stats);
    return GenerateSwitchedCmlmSample(
        pair.src_tokens, EncodeSwitched(tok_.model(), tok_.table(), tokens),
        plan_.cmlm_mask, rng);
  }
  if (stats != nullptr && data_.romanization != nullptr) {
    for (const auto& t : pair.tgt_tokens) stats->mappable += data_.romanization->count(t);
  }
  return GenerateCmlmSample(pair.src_tokens, ids, plan_.cmlm_mask, rng);
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult Train(const TrainPlan& plan, const TrainData& data, const Tokenizer& tok,
                  ModelParams init, const TrainHooks& hooks,
                  const TrainOptions& options, std::optional<Checkpoint> resume) {
  plan.Validate();
  const auto t0 = std::chrono::steady_clock::now();
  const bool is_pretrain =
      plan.phase == Phase::kPretrainMt || plan.phase == Phase::kPretrainCmlm;
  if (is_pretrain && data.pairs.empty()) throw ConfigError("pre-training needs sentences");

  CmlmSource cmlm(plan, data, tok);
  std::vector<std::size_t> wlac_cost;
  if (!is_pretrain) {
    for (const auto& ex : data.wlac) wlac_cost.push_back(ex.src.size() + ex.dec.ids.size());
  }
  std::vector<std::size_t> cmlm_cost;
  const auto ratio = RatioFor(plan);
  if (ratio.second > 0) {
    for (std::size_t i = 0; i < cmlm.size(); ++i) cmlm_cost.push_back(cmlm.TokenCost(i));
  }
  if (is_pretrain && cmlm_cost.empty()) {
    throw ConfigError("no sentence can meet the pre-training mask range");
  }
  BatchMixer mixer(std::move(wlac_cost), std::move(cmlm_cost), ratio,
                   plan.batch_tokens, plan.seed);

  TrainResult result;
  std::int64_t start = 0;
  if (resume) {
    result.params = std::move(resume->params);
    result.optimizer = resume->optimizer.value_or(AdamState{});
    start = resume->step;
  } else {
    result.params = std::move(init);
  }
  CheckParams(result.params);
  for (std::int64_t s = 0; s < start; ++s) mixer.Next();
  if (!plan.out_dir.empty()) std::filesystem::create_directories(plan.out_dir);

  double sum_w = 0, sum_c = 0;
  std::size_t n_w = 0, n_c = 0;
  std::vector<WlacExample> wlac_batch;
  std::vector<CmlmExample> cmlm_batch;
  for (std::int64_t step = start + 1; step <= plan.steps; ++step) {
    const Batch batch = mixer.Next();
    wlac_batch.clear();
    cmlm_batch.clear();
    if (batch.kind == BatchKind::kWlac) {
      for (std::size_t i : batch.indices) wlac_batch.push_back(data.wlac[i]);
    } else {
      for (std::size_t i : batch.indices) {
        CmlmSample s = cmlm.Make(i, step);
        if (options.record_mask_fractions) {
          result.mask_fractions.push_back(static_cast<double>(s.gold_at_masks.size()) /
                                          static_cast<double>(s.corrupted.size()));
        }
        cmlm_batch.push_back(MakeCmlmExample(s, tok));
      }
    }
    std::mt19937_64 dropout_rng = StepRng(plan.seed, step, 0, kSaltDropout);
    ForwardOptions fwd;
    fwd.train = true;
    fwd.rng = &dropout_rng;
    Tape tape;
    const LossTerms terms =
        JointLossGraph(tape, result.params, wlac_batch, cmlm_batch, fwd);
    Gradients grads;
    tape.Backward(terms.total, &grads);
    const double lr = LrAt(step, plan);
    AdamUpdate(result.params, grads, result.optimizer, lr);

    if (terms.wlac_rows > 0) {
      sum_w += terms.wlac;
      ++n_w;
    }
    if (terms.cmlm_positions > 0) {
      sum_c += terms.cmlm;
      ++n_c;
    }
    if (step % plan.log_every == 0 || step == plan.steps) {
      LogEntry e;
      e.step = step;
      e.lr = lr;
      if (n_w > 0) e.loss_wlac = sum_w / static_cast<double>(n_w);
      if (n_c > 0) e.loss_cmlm = sum_c / static_cast<double>(n_c);
      sum_w = sum_c = 0;
      n_w = n_c = 0;
      result.log.push_back(e);
      if (hooks.on_log) hooks.on_log(e);
    }
    if (step % plan.checkpoint_every == 0 || step == plan.steps) {
      if (!plan.out_dir.empty()) {
        Checkpoint ck{result.params, step, result.optimizer};
        const std::string path =
            (std::filesystem::path(plan.out_dir) / CheckpointName(step)).string();
        SaveCheckpoint(path, ck);
        result.checkpoint_paths.push_back(path);
      }
      if (options.keep_recent > 0) {
        result.recent.push_back(result.params);
        if (result.recent.size() > options.keep_recent) {
          result.recent.erase(result.recent.begin());
        }
      }
      if (hooks.on_checkpoint) hooks.on_checkpoint(step, result.params);
    }
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

// ---------------------------------------------------------------------------
// Averaging

ModelParams AverageParams(const std::vector<ModelParams>& params) {
  WLAC_CHECK(!params.empty(), "nothing to average");
  const ModelParams& first = params.front();
  for (const ModelParams& p : params) {
    WLAC_CHECK(p.config == first.config, "checkpoint configs differ");
    WLAC_CHECK(p.tensors.size() == first.tensors.size(), "checkpoint parameter sets differ");
    for (const auto& [name, t] : first.tensors) {
      auto it = p.tensors.find(name);
      WLAC_CHECK(it != p.tensors.end() && it->second.shape() == t.shape(),
                 "checkpoint parameter '" + name + "' differs in shape");
    }
  }
  ModelParams out = first;
  const double k = static_cast<double>(params.size());
  for (auto& [name, t] : out.tensors) {
    std::vector<double> delta(t.size(), 0.0);
    for (std::size_t c = 1; c < params.size(); ++c) {
      const Tensor& other = params[c].tensors.at(name);
      for (std::size_t i = 0; i < t.size(); ++i) {
        delta[i] += static_cast<double>(other[i]) - static_cast<double>(t[i]);
      }
    }
    // x0 + mean(x_i - x0) returns x0 exactly when all inputs agree.
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<Real>(static_cast<double>(t[i]) + delta[i] / k);
    }
  }
  return out;
}

ModelParams AverageCheckpoints(const std::vector<std::string>& paths) {
  WLAC_CHECK(!paths.empty(), "no checkpoints to average");
  std::vector<ModelParams> params;
  for (const auto& p : paths) params.push_back(LoadCheckpoint(p).params);
  return AverageParams(params);
}

std::vector<std::string> LastCheckpoints(const std::string& dir, std::size_t k) {
  const std::regex re("ckpt_([0-9]+)\\.bin");
  std::vector<std::pair<long long, std::string>> found;
  if (!std::filesystem::is_directory(dir)) throw InputError("not a directory: " + dir);
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, re)) {
      found.emplace_back(std::stoll(m[1].str()), entry.path().string());
    }
  }
  std::sort(found.begin(), found.end());
  if (found.size() > k) found.erase(found.begin(), found.end() - static_cast<std::ptrdiff_t>(k));
  std::vector<std::string> out;
  for (auto& [step, path] : found) out.push_back(std::move(path));
  return out;
}

WLAC_NAMESPACE_END
