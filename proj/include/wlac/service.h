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

// HTTP completion service.
//
//   POST /v1/complete  {src, context_left, context_right, typed, top_k,
//                       hard_prefix}
//                   -> {candidates: [{word, logprob}], truncated, latency_ms}
//   GET  /v1/health -> {status: "ok" | "loading", model_id, vocab_size}
//
// Errors are {error: {code, message}} with status 400 (empty_typed,
// bad_top_k, bad_request) or 503 (not_ready).

#ifndef WLAC_SERVICE_H_
#define WLAC_SERVICE_H_

#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "wlac/common.h"
#include "wlac/decoder.h"
#include "wlac/model.h"
#include "wlac/transformer.h"

namespace httplib {
class Server;
class ThreadPool;
}  // namespace httplib

WLAC_NAMESPACE_BEGIN

inline constexpr const char* kModelDirEnv = "WLAC_MODEL_DIR";
inline constexpr std::size_t kMaxTopK = 50;

struct CompleteRequest {
  std::string src;
  std::string context_left;
  std::string context_right;
  std::string typed;
  std::size_t top_k = 5;
  bool hard_prefix = false;
};

struct CompleteResponse {
  std::vector<Candidate> candidates;
  bool truncated = false;
  double latency_ms = 0;
};

// A rejected request.
class RequestError : public InputError {
 public:
  RequestError(int status, std::string code, const std::string& message)
      : InputError(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

// Parses and validates a request body. Unknown fields are rejected.
CompleteRequest ParseCompleteRequest(const std::string& body);
std::string CompleteResponseToJson(const CompleteResponse& r);

struct LoadedModel {
  ModelParams params;
  std::shared_ptr<const Tokenizer> tokenizer;
  std::string model_id;
};

// Default file locations under a model directory.
std::string DefaultModelPath(const std::string& dir);
std::string DefaultTokenizerPath(const std::string& dir);

std::shared_ptr<const LoadedModel> LoadModel(const std::string& checkpoint_path,
                                             const std::string& tokenizer_path);

struct ServiceOptions {
  std::size_t workers = 2;
  // Beam width and iteration cap; top_k and hard_prefix come per request.
  DecodeConfig decode;
};

struct HttpReply {
  int status = 200;
  std::string body;
};

// Request handling with a bounded, FIFO pool of decode workers. The model is
// swapped in atomically, so a request sees either no model or a fully
// loaded one.
class CompletionService {
 public:
  explicit CompletionService(const ServiceOptions& options);
  ~CompletionService();
  CompletionService(const CompletionService&) = delete;
  CompletionService& operator=(const CompletionService&) = delete;

  void SetModel(std::shared_ptr<const LoadedModel> model);
  // Loads in a background thread; health reports "loading" until done.
  void LoadInBackground(const std::string& checkpoint_path,
                        const std::string& tokenizer_path);
  // Waits for a background load; rethrows its failure.
  void WaitUntilLoaded();
  bool ready() const;

  CompleteResponse Complete(const CompleteRequest& request);

  HttpReply HandleComplete(const std::string& body);
  HttpReply HandleHealth() const;

  // Registers both endpoints on `server`.
  void Bind(httplib::Server& server);

 private:
  std::shared_ptr<const LoadedModel> model() const;

  ServiceOptions options_;
  mutable std::mutex mu_;
  std::shared_ptr<const LoadedModel> model_;
  std::future<void> loaded_;
  std::unique_ptr<httplib::ThreadPool> pool_;
};

WLAC_NAMESPACE_END

#endif  // WLAC_SERVICE_H_
