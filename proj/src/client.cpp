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

#include "mecpe/client.hpp"

#include <atomic>
#include <thread>

#include <httplib.h>

#include "mecpe/errors.hpp"

namespace mecpe {

using nlohmann::json;

std::string fixture_key(const UtteranceKey& key) {
  return key.conversation_id + ":" + std::to_string(key.utterance_index);
}

ScriptedStubClient ScriptedStubClient::from_json(const json& j) {
  if (!j.is_object()) throw ParseError("stub fixture must be a JSON object of key -> text");
  std::map<std::string, std::string> responses;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) throw ParseError("stub fixture entry '" + key + "' is not a string");
    responses.emplace(key, value.get<std::string>());
  }
  return ScriptedStubClient(std::move(responses));
}

ScriptedStubClient ScriptedStubClient::from_fixture(const std::string& path) {
  const std::string raw = read_file(path);
  try {
    return from_json(json::parse(raw));
  } catch (const json::parse_error& e) {
    throw ParseError("malformed stub fixture '" + path + "': " + e.what());
  }
}

GeneratedResponse ScriptedStubClient::generate(const Prompt& prompt) const {
  GeneratedResponse out;
  out.client_id = id();
  if (auto it = responses_.find(fixture_key(prompt.target)); it != responses_.end()) {
    out.text = it->second;
  }
  return out;
}

json request_body(const Prompt& prompt) {
  json body = {{"prompt", prompt.text}};
  if (prompt.image_ref) body["image_ref"] = *prompt.image_ref;
  return body;
}

GeneratedResponse HttpGenerativeClient::generate(const Prompt& prompt) const {
  const auto started = std::chrono::steady_clock::now();
  httplib::Client http(options_.endpoint);
  if (!http.is_valid()) throw GenerationError("invalid endpoint '" + options_.endpoint + "'");
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto micros =
      std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - seconds);
  http.set_connection_timeout(seconds.count(), micros.count());
  http.set_read_timeout(seconds.count(), micros.count());
  http.set_write_timeout(seconds.count(), micros.count());

  auto reply = http.Post(options_.path, request_body(prompt).dump(), "application/json");
  if (!reply) {
    throw GenerationError("request for " + fixture_key(prompt.target) + " failed: " +
                          httplib::to_string(reply.error()));
  }
  if (reply->status != 200) {
    throw GenerationError("request for " + fixture_key(prompt.target) + " returned HTTP " +
                          std::to_string(reply->status));
  }
  json body;
  try {
    body = json::parse(reply->body);
  } catch (const json::parse_error&) {
    throw GenerationError("reply for " + fixture_key(prompt.target) + " is not JSON");
  }
  if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
    throw GenerationError("reply for " + fixture_key(prompt.target) + " lacks a string 'text'");
  }
  return {body["text"].get<std::string>(), std::chrono::steady_clock::now() - started, id()};
}

std::vector<GenerationOutcome> generate_all(const GenerativeClient& client,
                                            const std::vector<Prompt>& prompts,
                                            std::size_t max_in_flight) {
  std::vector<GenerationOutcome> outcomes(prompts.size());
  auto call = [&](std::size_t i) {
    try {
      outcomes[i] = client.generate(prompts[i]);
    } catch (const std::exception& e) {
      outcomes[i] = std::string(e.what());
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(max_in_flight, 1), prompts.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < prompts.size(); ++i) call(i);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < prompts.size(); i = next++) call(i);
    });
  }
  pool.clear();  // joins
  return outcomes;
}

}  // namespace mecpe
