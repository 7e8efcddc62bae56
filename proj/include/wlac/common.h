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

#ifndef WLAC_COMMON_H_
#define WLAC_COMMON_H_

#include <stdexcept>
#include <string>

// The library is compiled once per floating-point precision. Each build lives
// in its own inline namespace so a test binary can link both variants.
#if defined(WLAC_DOUBLE) && WLAC_DOUBLE
#define WLAC_NAMESPACE_BEGIN \
  namespace wlac {           \
  inline namespace f64 {
#else
#define WLAC_NAMESPACE_BEGIN \
  namespace wlac {           \
  inline namespace f32 {
#endif
#define WLAC_NAMESPACE_END \
  }                        \
  }

WLAC_NAMESPACE_BEGIN

#if defined(WLAC_DOUBLE) && WLAC_DOUBLE
using Real = double;
inline constexpr const char* kRealName = "f64";
#else
using Real = float;
inline constexpr const char* kRealName = "f32";
#endif

// Malformed user input: corpus files, request payloads, unknown symbols.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent or impossible configuration (vocab sizes, plans, ratios).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (shapes, ids, consumed tapes).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A computation produced NaN or Inf.
class NumericFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WLAC_CHECK(cond, msg)                                        \
  do {                                                               \
    if (!(cond)) {                                                   \
      throw ::wlac::ContractError(std::string(__func__) + ": " + msg); \
    }                                                                \
  } while (0)

WLAC_NAMESPACE_END

#endif  // WLAC_COMMON_H_
