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

// Glue shared by the command-line tool and the end-to-end checks: tokenizer
// training over a parallel corpus and bulk sample generation.

#ifndef WLAC_PIPELINE_H_
#define WLAC_PIPELINE_H_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wlac/common.h"
#include "wlac/datagen.h"
#include "wlac/model.h"
#include "wlac/subword.h"

WLAC_NAMESPACE_BEGIN

// Trains one subword model over both sides of the corpus. The character
// alphabet covers every target-side character and every character of the
// romanized spellings.
Tokenizer TrainTokenizer(const std::vector<ParallelPair>& pairs,
                         const std::map<std::string, std::string>* romanization,
                         const SubwordTrainerConfig& cfg);

struct SampleSetConfig {
  // Context types drawn uniformly per sample.
  std::vector<ContextType> types{std::begin(kAllContextTypes), std::end(kAllContextTypes)};
  std::size_t samples_per_pair = 1;
  std::uint64_t seed = 1;
  GenConfig gen;
};

// Samples_per_pair attempts per pair; infeasible attempts are skipped (or
// resampled, per gen.resample_context).
std::vector<WlacSample> GenerateWlacSet(const std::vector<ParallelPair>& pairs,
                                        const SampleSetConfig& cfg);

// Iterative training rows of every sample.
std::vector<WlacExample> ExpandToExamples(const std::vector<WlacSample>& samples,
                                          const Tokenizer& tok,
                                          const AssembleOptions& opts = {});

WLAC_NAMESPACE_END

#endif  // WLAC_PIPELINE_H_
