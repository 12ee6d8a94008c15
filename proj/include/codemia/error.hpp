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

#ifndef CODEMIA_ERROR_HPP_
#define CODEMIA_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace codemia {

enum class ErrorKind {
  kValidation,
  kParse,
  kCapacity,
  kDependency,
  kTransport,
  kProtocol,
  kUnsupported,
};

inline std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
      return "validation";
    case ErrorKind::kParse:
      return "parse";
    case ErrorKind::kCapacity:
      return "capacity";
    case ErrorKind::kDependency:
      return "dependency";
    case ErrorKind::kTransport:
      return "transport";
    case ErrorKind::kProtocol:
      return "protocol";
    case ErrorKind::kUnsupported:
      return "unsupported";
  }
  return "unknown";
}

// Every failure the library reports is an Error; `kind` decides how callers
// (and the CLI exit status) react to it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + " error: " +
                           message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // Transport failures may be retried by the caller.
  bool retryable() const { return kind_ == ErrorKind::kTransport; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void Require(bool condition, const std::string& message) {
  if (!condition) Fail(ErrorKind::kValidation, message);
}

}  // namespace codemia

#endif  // CODEMIA_ERROR_HPP_
