// Copyright 2026 The mecpe Authors. All Rights Reserved.
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

#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mecpe/cause.hpp"

namespace mecpe {

/// A generative model behind the prompt contract. Implementations must be
/// safe to call from several threads at once.
class GenerativeClient {
 public:
  virtual ~GenerativeClient() = default;

  /// Throws GenerationError on timeout, transport failure, or a malformed reply.
  virtual GeneratedResponse generate(const Prompt& prompt) const = 0;

  virtual std::string id() const = 0;
};

/// "conversation_id:utterance_index", the stub fixture key.
std::string fixture_key(const UtteranceKey& key);

/// Canned responses keyed by target. Targets without an entry get "".
class ScriptedStubClient final : public GenerativeClient {
 public:
  explicit ScriptedStubClient(std::map<std::string, std::string> responses)
      : responses_(std::move(responses)) {}

  /// Reads the JSON object fixture {"c1:6": "text", ...}.
  static ScriptedStubClient from_fixture(const std::string& path);
  static ScriptedStubClient from_json(const nlohmann::json& j);

  GeneratedResponse generate(const Prompt& prompt) const override;
  std::string id() const override { return "scripted-stub"; }

  const std::map<std::string, std::string>& responses() const { return responses_; }

 private:
  std::map<std::string, std::string> responses_;
};

struct HttpClientOptions {
  std::string endpoint = "http://127.0.0.1:8080";  // scheme://host:port
  std::string path = "/generate";
  std::chrono::milliseconds timeout{10000};
};

/// POSTs {"prompt": ..., "image_ref": ...} as JSON and expects {"text": ...}.
class HttpGenerativeClient final : public GenerativeClient {
 public:
  explicit HttpGenerativeClient(HttpClientOptions options) : options_(std::move(options)) {}

  GeneratedResponse generate(const Prompt& prompt) const override;
  std::string id() const override { return "http:" + options_.endpoint + options_.path; }

 private:
  HttpClientOptions options_;
};

/// Request body sent for a prompt.
nlohmann::json request_body(const Prompt& prompt);

/// Outcome of one call: the response or the error message.
using GenerationOutcome = std::variant<GeneratedResponse, std::string>;

/// Calls the client for every prompt with at most `max_in_flight` concurrent
/// requests. Results are positionally aligned with `prompts`.
std::vector<GenerationOutcome> generate_all(const GenerativeClient& client,
                                            const std::vector<Prompt>& prompts,
                                            std::size_t max_in_flight);

}  // namespace mecpe
