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

#ifndef WLAC_TEXT_H_
#define WLAC_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

#include "wlac/common.h"

WLAC_NAMESPACE_BEGIN

// Splits UTF-8 text into one string per code point. Invalid bytes are kept as
// single-byte code points so the split is always lossless.
std::vector<std::string> SplitCodepoints(std::string_view text);

// Splits on ASCII whitespace; empty fields are dropped.
std::vector<std::string> SplitWhitespace(std::string_view text);

std::string JoinStrings(const std::vector<std::string>& parts,
                        std::string_view sep);

// True if `text` begins with `prefix` (byte-wise, which is code-point-wise for
// valid UTF-8).
bool StartsWith(std::string_view text, std::string_view prefix);

// A word is eligible as a completion target when it contains at least one
// letter: ASCII letters or any non-ASCII code point outside the common
// punctuation blocks. Pure punctuation and pure digits are not eligible.
bool IsEligibleWord(std::string_view word);

WLAC_NAMESPACE_END

#endif  // WLAC_TEXT_H_
