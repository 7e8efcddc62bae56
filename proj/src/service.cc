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

#include "wlac/service.h"

#include <chrono>
#include <filesystem>
#include <set>

#include "httplib.h"
#include "json.hpp"
#include "wlac/text.h"

WLAC_NAMESPACE_BEGIN

using nlohmann::json;

namespace {

std::string ErrorBody(const std::string& code, const std::string& message) {
  return json{{"error", {{"code", code}, {"message", message}}}}.dump();
}

std::string StringField(const json& j, const char* key) {
  if (!j.contains(key)) return "";
  if (!j[key].is_string()) {
    throw RequestError(400, "bad_request", std::string(key) + " must be a string");
  }
  return j[key].get<std::string>();
}

}  // namespace

CompleteRequest ParseCompleteRequest(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw RequestError(400, "bad_request", std::string("malformed body: ") + e.what());
  }
  if (!j.is_object()) throw RequestError(400, "bad_request", "body must be an object");
  static const std::set<std::string> kFields = {"src",   "context_left", "context_right",
                                                "typed", "top_k",        "hard_prefix"};
  for (const auto& [key, value] : j.items()) {
    if (!kFields.count(key)) throw RequestError(400, "bad_request", "unknown field " + key);
  }
  CompleteRequest r;
  r.src = StringField(j, "src");
  r.context_left = StringField(j, "context_left");
  r.context_right = StringField(j, "context_right");
  r.typed = StringField(j, "typed");
  if (r.typed.empty()) throw RequestError(400, "empty_typed", "typed must be non-empty");
  if (j.contains("top_k")) {
    const json& k = j["top_k"];
    if (!k.is_number_integer() || k.get<std::int64_t>() < 1 ||
        k.get<std::int64_t>() > static_cast<std::int64_t>(kMaxTopK)) {
      throw RequestError(400, "bad_top_k", "top_k must be an integer in [1, 50]");
    }
    r.top_k = k.get<std::size_t>();
  }
  if (j.contains("hard_prefix")) {
    if (!j["hard_prefix"].is_boolean()) {
      throw RequestError(400, "bad_request", "hard_prefix must be a boolean");
    }
    r.hard_prefix = j["hard_prefix"].get<bool>();
  }
  return r;
}

std::string CompleteResponseToJson(const CompleteResponse& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) cands.push_back({{"word", c.word}, {"logprob", c.logprob}});
  return json{{"candidates", cands}, {"truncated", r.truncated}, {"latency_ms", r.latency_ms}}
      .dump();
}

std::string DefaultModelPath(const std::string& dir) {
  return (std::filesystem::path(dir) / "model.bin").string();
}

std::string DefaultTokenizerPath(const std::string& dir) {
  return (std::filesystem::path(dir) / "tokenizer.model").string();
}

std::shared_ptr<const LoadedModel> LoadModel(const std::string& checkpoint_path,
                                             const std::string& tokenizer_path) {
  auto m = std::make_shared<LoadedModel>();
  m->tokenizer = Tokenizer::Load(tokenizer_path);
  Checkpoint ckpt = LoadCheckpoint(checkpoint_path);
  if (ckpt.params.config.vocab_size != m->tokenizer->table().size() ||
      ckpt.params.config.output_size != m->tokenizer->table().size()) {
    throw ConfigError("checkpoint does not match the tokenizer's symbol table");
  }
  m->params = std::move(ckpt.params);
  m->model_id = std::filesystem::path(checkpoint_path).stem().string() + "@" +
                std::to_string(ckpt.step);
  return m;
}

CompletionService::CompletionService(const ServiceOptions& options)
    : options_(options) {
  if (options_.workers < 1) throw ConfigError("workers must be >= 1");
  options_.decode.Validate();
  pool_ = std::make_unique<httplib::ThreadPool>(options_.workers);
}

CompletionService::~CompletionService() {
  if (loaded_.valid()) loaded_.wait();
  pool_->shutdown();
}

void CompletionService::SetModel(std::shared_ptr<const LoadedModel> model) {
  std::lock_guard<std::mutex> lock(mu_);
  model_ = std::move(model);
}

void CompletionService::LoadInBackground(const std::string& checkpoint_path,
                                         const std::string& tokenizer_path) {
  loaded_ = std::async(std::launch::async, [this, checkpoint_path, tokenizer_path] {
    SetModel(LoadModel(checkpoint_path, tokenizer_path));
  });
}

void CompletionService::WaitUntilLoaded() {
  if (loaded_.valid()) loaded_.get();
}

bool CompletionService::ready() const { return model() != nullptr; }

std::shared_ptr<const LoadedModel> CompletionService::model() const {
  std::lock_guard<std::mutex> lock(mu_);
  return model_;
}

CompleteResponse CompletionService::Complete(const CompleteRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  if (request.typed.empty()) throw RequestError(400, "empty_typed", "typed must be non-empty");
  if (request.top_k < 1 || request.top_k > kMaxTopK) {
    throw RequestError(400, "bad_top_k", "top_k must be an integer in [1, 50]");
  }
  std::shared_ptr<const LoadedModel> m = model();
  if (m == nullptr) throw RequestError(503, "not_ready", "model is still loading");

  DecodeConfig cfg = options_.decode;
  cfg.top_k = request.top_k;
  cfg.hard_prefix = request.hard_prefix;
  auto task = std::make_shared<std::packaged_task<DecodeResult()>>([m, &request, cfg] {
    return DecodeWord(m->params, SplitWhitespace(request.src),
                      SplitWhitespace(request.context_left),
                      SplitWhitespace(request.context_right), request.typed, cfg,
                      *m->tokenizer);
  });
  std::future<DecodeResult> result = task->get_future();
  pool_->enqueue([task] { (*task)(); });
  DecodeResult d = result.get();

  CompleteResponse r;
  r.candidates = std::move(d.candidates);
  r.truncated = d.truncated;
  r.latency_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return r;
}

HttpReply CompletionService::HandleComplete(const std::string& body) {
  try {
    return {200, CompleteResponseToJson(Complete(ParseCompleteRequest(body)))};
  } catch (const RequestError& e) {
    return {e.status(), ErrorBody(e.code(), e.what())};
  } catch (const InputError& e) {
    return {400, ErrorBody("bad_request", e.what())};
  } catch (const std::exception& e) {
    return {500, ErrorBody("internal", e.what())};
  }
}

HttpReply CompletionService::HandleHealth() const {
  std::shared_ptr<const LoadedModel> m = model();
  json j;
  if (m == nullptr) {
    j = {{"status", "loading"}, {"model_id", nullptr}, {"vocab_size", nullptr}};
  } else {
    j = {{"status", "ok"},
         {"model_id", m->model_id},
         {"vocab_size", m->tokenizer->table().size()}};
  }
  return {200, j.dump()};
}

void CompletionService::Bind(httplib::Server& server) {
  server.Post("/v1/complete", [this](const httplib::Request& req, httplib::Response& res) {
    const HttpReply r = HandleComplete(req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  server.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    const HttpReply r = HandleHealth();
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
}

WLAC_NAMESPACE_END
