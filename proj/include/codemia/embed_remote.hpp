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

#ifndef CODEMIA_EMBED_REMOTE_HPP_
#define CODEMIA_EMBED_REMOTE_HPP_

#include <string>
#include <string_view>

#include "codemia/embed.hpp"
#include "codemia/http.hpp"

namespace codemia::embed {

// Client for POST /embed {text} -> {vector: [768 floats]}.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(const std::string& url, HttpOptions options = {})
      : http_(url, std::move(options)) {}

  Embedding Embed(std::string_view text) const override {
    if (text.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos) {
      Fail(ErrorKind::kValidation, "cannot embed empty text");
    }
    const HttpResponse r = http_.Post("/embed", Json{{"text", text}});
    if (r.status != 200) {
      Fail(ErrorKind::kProtocol, "/embed returned HTTP " + std::to_string(r.status));
    }
    if (!r.body.is_object() || !r.body.contains("vector")) {
      Fail(ErrorKind::kProtocol, "/embed response missing field 'vector'");
    }
    const Json& vec = r.body["vector"];
    if (!vec.is_array()) {
      Fail(ErrorKind::kProtocol, "/embed field 'vector' is not an array");
    }
    Embedding out;
    out.reserve(vec.size());
    for (const Json& x : vec) {
      if (x.is_number()) {
        out.push_back(x.get<double>());
      } else if (x.is_null() || x.is_string()) {
        // NaN and infinities arrive as null or as strings; reject them as
        // invalid values rather than as a malformed response.
        Fail(ErrorKind::kValidation, "/embed: embedding has a non-finite entry");
      } else {
        Fail(ErrorKind::kProtocol, "/embed field 'vector' has a non-numeric entry");
      }
    }
    CheckEmbedding(out, ErrorKind::kProtocol, "/embed");
    return out;
  }

 private:
  JsonHttpClient http_;
};

}  // namespace codemia::embed

#endif  // CODEMIA_EMBED_REMOTE_HPP_
