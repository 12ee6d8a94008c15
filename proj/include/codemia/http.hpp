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

#ifndef CODEMIA_HTTP_HPP_
#define CODEMIA_HTTP_HPP_

#include <chrono>
#include <string>
#include <thread>

#include "codemia/error.hpp"
#include "codemia/jsonio.hpp"
#include "httplib.h"

namespace codemia {

struct HttpOptions {
  int attempts = 3;
  std::chrono::milliseconds backoff{200};  // doubled after each failure
  std::chrono::seconds timeout{120};
  std::string bearer_token;
};

struct HttpResponse {
  int status = 0;
  Json body;
};

// JSON-over-HTTP POST client for plain http:// endpoints. Transport failures
// and 5xx responses (other than 501) are retried with exponential backoff;
// other statuses are returned to the caller.
class JsonHttpClient {
 public:
  JsonHttpClient(const std::string& url, HttpOptions options)
      : options_(std::move(options)) {
    const std::string scheme = "http://";
    Require(url.starts_with(scheme),
            "endpoint URL must start with http://, got '" + url + "'");
    const size_t slash = url.find('/', scheme.size());
    if (slash == std::string::npos) {
      origin_ = url;
    } else {
      origin_ = url.substr(0, slash);
      base_path_ = url.substr(slash);
      while (!base_path_.empty() && base_path_.back() == '/') {
        base_path_.pop_back();
      }
    }
    Require(origin_.size() > scheme.size(), "endpoint URL has no host");
    Require(options_.attempts >= 1, "attempts must be >= 1");
  }

  const std::string& origin() const { return origin_; }

  HttpResponse Post(const std::string& path, const Json& body) const {
    const std::string target = base_path_ + path;
    const std::string payload = body.dump();
    std::chrono::milliseconds wait = options_.backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= options_.attempts; ++attempt) {
      httplib::Client client(origin_);
      client.set_connection_timeout(options_.timeout);
      client.set_read_timeout(options_.timeout);
      client.set_write_timeout(options_.timeout);
      httplib::Headers headers;
      if (!options_.bearer_token.empty()) {
        headers.emplace("Authorization", "Bearer " + options_.bearer_token);
      }
      auto result = client.Post(target, headers, payload, "application/json");
      if (!result) {
        last_error = httplib::to_string(result.error());
      } else if (result->status >= 500 && result->status != 501) {
        last_error = "HTTP " + std::to_string(result->status);
      } else {
        HttpResponse response;
        response.status = result->status;
        if (result->status >= 200 && result->status < 300) {
          try {
            response.body = Json::parse(result->body);
          } catch (const Json::parse_error&) {
            Fail(ErrorKind::kProtocol,
                 "POST " + target + ": response body is not JSON");
          }
        }
        return response;
      }
      if (attempt < options_.attempts) {
        std::this_thread::sleep_for(wait);
        wait *= 2;
      }
    }
    Fail(ErrorKind::kTransport, "POST " + origin_ + target + " failed after " +
                                    std::to_string(options_.attempts) +
                                    " attempts: " + last_error);
  }

 private:
  HttpOptions options_;
  std::string origin_;
  std::string base_path_;
};

}  // namespace codemia

#endif  // CODEMIA_HTTP_HPP_
