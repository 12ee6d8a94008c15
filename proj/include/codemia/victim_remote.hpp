// Copyright 2026 The Codemia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CODEMIA_VICTIM_REMOTE_HPP_
#define CODEMIA_VICTIM_REMOTE_HPP_

#include <string>

#include "codemia/http.hpp"
#include "codemia/victim.hpp"

namespace codemia::victim {

// Client for a completion service speaking
//   POST /complete {prompt, max_tokens, temperature} -> {text, tokens, token_logprobs}
//   POST /score    {text}                           -> {tokens, token_logprobs}
class RemoteVictim final : public Victim {
 public:
  RemoteVictim(const std::string& url, HttpOptions options = {})
      : http_(url, std::move(options)) {}

  CompletionRecord Complete(const std::string& prompt,
                            const std::string& prompt_id,
                            int max_tokens) const override {
    Require(!prompt.empty(), "prompt must be non-empty");
    const HttpResponse r = http_.Post(
        "/complete",
        Json{{"prompt", prompt}, {"max_tokens", max_tokens}, {"temperature", 0}});
    if (r.status != 200) {
      Fail(ErrorKind::kProtocol,
           "/complete returned HTTP " + std::to_string(r.status));
    }
    CompletionRecord record;
    record.prompt_id = prompt_id;
    record.text = Expect<std::string>(r.body, "text", "/complete");
    record.tokens = Expect<std::vector<std::string>>(r.body, "tokens", "/complete");
    record.token_logprobs =
        Expect<std::vector<double>>(r.body, "token_logprobs", "/complete");
    ValidateLogprobs(record.tokens, record.token_logprobs, ErrorKind::kProtocol,
                     "/complete");
    return record;
  }

  ScoreResult Score(const std::string& text) const override {
    Require(!text.empty(), "scored text must be non-empty");
    const HttpResponse r = http_.Post("/score", Json{{"text", text}});
    if (r.status == 404 || r.status == 405 || r.status == 501) {
      Fail(ErrorKind::kUnsupported,
           "victim endpoint has no scoring mode (HTTP " +
               std::to_string(r.status) + ")");
    }
    if (r.status != 200) {
      Fail(ErrorKind::kProtocol, "/score returned HTTP " + std::to_string(r.status));
    }
    ScoreResult result;
    result.tokens = Expect<std::vector<std::string>>(r.body, "tokens", "/score");
    result.token_logprobs =
        Expect<std::vector<double>>(r.body, "token_logprobs", "/score");
    ValidateLogprobs(result.tokens, result.token_logprobs, ErrorKind::kProtocol,
                     "/score");
    return result;
  }

 private:
  template <typename T>
  static T Expect(const Json& body, const char* field, const char* route) {
    if (!body.is_object() || !body.contains(field)) {
      Fail(ErrorKind::kProtocol,
           std::string(route) + " response missing field '" + field + "'");
    }
    try {
      return body.at(field).get<T>();
    } catch (const Json::exception&) {
      Fail(ErrorKind::kProtocol, std::string(route) + " response field '" +
                                     field + "' has the wrong type");
    }
  }

  JsonHttpClient http_;
};

}  // namespace codemia::victim

#endif  // CODEMIA_VICTIM_REMOTE_HPP_
