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

// Training phases, the learning-rate schedule and checkpoint averaging.
//
// All randomness in a step (masking, code switching, dropout) is derived from
// (seed, step, row), and batch order from the seed alone, so a run resumed
// from a checkpoint replays the same sequence of updates.

#ifndef WLAC_TRAINING_H_
#define WLAC_TRAINING_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wlac/common.h"
#include "wlac/datagen.h"
#include "wlac/model.h"
#include "wlac/transformer.h"

WLAC_NAMESPACE_BEGIN

enum class Phase { kPretrainMt, kPretrainCmlm, kMultitask, kWlacOnly };
const char* PhaseName(Phase p);
Phase ParsePhase(const std::string& name);

struct CodeSwitchConfig {
  // Fraction of CMLM sentences that are code-switched.
  double p_select = 0;
  double p_token = 0.3;
  double p_char_mask = 0.15;
};

struct TrainPlan {
  Phase phase = Phase::kMultitask;
  std::int64_t steps = 1000;
  std::size_t batch_tokens = 2000;
  double lr_peak = 5e-4;
  std::int64_t warmup_steps = 400;
  std::pair<double, double> mask_range{0.15, 0.5};
  double cmlm_mask = 0.2;
  std::pair<double, double> mix_ratio{1, 1};
  std::int64_t checkpoint_every = 200;
  std::uint64_t seed = 1;

  std::int64_t log_every = 50;
  CodeSwitchConfig code_switch;
  bool use_instruction_unit = true;
  TransformerConfig model;
  // Files, used by the command-line front end.
  std::string pairs_path;
  std::string wlac_path;
  std::string tokenizer_path;
  std::string romanization_path;
  std::string out_dir;
  // Continue from this checkpoint (with optimizer state).
  std::string resume_path;

  void Validate() const;
};

std::string PlanToJson(const TrainPlan& plan);
TrainPlan PlanFromJson(const std::string& json);
TrainPlan LoadPlan(const std::string& path);

double LrAt(std::int64_t step, const TrainPlan& plan);

struct TrainData {
  // Sentences for the masked-LM term.
  std::vector<ParallelPair> pairs;
  // Completion rows, already assembled.
  std::vector<WlacExample> wlac;
  const std::map<std::string, std::string>* romanization = nullptr;
};

struct LogEntry {
  std::int64_t step = 0;
  double lr = 0;
  std::optional<double> loss_wlac;
  std::optional<double> loss_cmlm;
};
std::string LogEntryToJson(const LogEntry& e);

struct TrainHooks {
  std::function<void(const LogEntry&)> on_log;
  // Called after each checkpoint with the step.
  std::function<void(std::int64_t, const ModelParams&)> on_checkpoint;
};

struct TrainResult {
  ModelParams params;
  AdamState optimizer;
  std::vector<LogEntry> log;
  // Paths written under out_dir, oldest first.
  std::vector<std::string> checkpoint_paths;
  // In-memory copies of the checkpoints (the last `keep` of them).
  std::vector<ModelParams> recent;
  double seconds = 0;
  // Per-sample mask fractions seen by the masked-LM term.
  std::vector<double> mask_fractions;
};

struct TrainOptions {
  std::size_t keep_recent = 10;
  bool record_mask_fractions = false;
};

// Runs plan.steps updates starting from `init` (or from the resumed state).
TrainResult Train(const TrainPlan& plan, const TrainData& data, const Tokenizer& tok,
                  ModelParams init, const TrainHooks& hooks = {},
                  const TrainOptions& options = {},
                  std::optional<Checkpoint> resume = std::nullopt);

// Masked-LM rows for a phase. Sentence i masked at step t is a pure function
// of (plan.seed, t, i). pretrain_cmlm drops sentences too short to meet the
// mask range; pretrain_mt masks every position; multitask masks each
// position with probability cmlm_mask and code-switches a fixed
// p_select share of the sentences.
class CmlmSource {
 public:
  CmlmSource(const TrainPlan& plan, const TrainData& data, const Tokenizer& tok);

  std::size_t size() const { return sentences_.size(); }
  std::size_t TokenCost(std::size_t i) const;
  CmlmSample Make(std::size_t i, std::int64_t step,
                  CodeSwitchStats* stats = nullptr) const;
  bool Switched(std::size_t i) const;

 private:
  const TrainPlan& plan_;
  const TrainData& data_;
  const Tokenizer& tok_;
  std::vector<std::size_t> sentences_;
  std::vector<std::vector<int>> target_ids_;
  std::vector<std::size_t> src_lengths_;
};

ModelParams AverageParams(const std::vector<ModelParams>& params);
ModelParams AverageCheckpoints(const std::vector<std::string>& paths);
// Checkpoint files in `dir` ordered by step; the last `k` of them.
std::vector<std::string> LastCheckpoints(const std::string& dir, std::size_t k);

WLAC_NAMESPACE_END

#endif  // WLAC_TRAINING_H_
