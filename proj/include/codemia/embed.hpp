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

#ifndef CODEMIA_EMBED_HPP_
#define CODEMIA_EMBED_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "codemia/codeast.hpp"
#include "codemia/error.hpp"
#include "codemia/rng.hpp"

namespace codemia::embed {

inline constexpr size_t kDim = 768;
inline constexpr size_t kMaxTokens = 4096;

using Embedding = std::vector<double>;

// Throws unless `v` has kDim finite entries. `kind` is the error category for
// a wrong dimension.
inline void CheckEmbedding(const Embedding& v, ErrorKind kind,
                           const std::string& where) {
  if (v.size() != kDim) {
    Fail(kind, where + ": embedding has dimension " + std::to_string(v.size()) +
                   ", expected " + std::to_string(kDim));
  }
  for (double x : v) {
    if (!std::isfinite(x)) {
      Fail(ErrorKind::kValidation, where + ": embedding has a non-finite entry");
    }
  }
}

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding Embed(std::string_view text) const = 0;
};

// Deterministic bag-of-tokens embedder. Each distinct lexer token maps to a
// seeded point on the unit sphere; a text embeds to the mean over its tokens.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(uint64_t seed = 0) : seed_(seed) {}

  Embedding Embed(std::string_view text) const override {
    if (text.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos) {
      Fail(ErrorKind::kValidation, "cannot embed empty text");
    }
    std::vector<std::string> tokens;
    for (codeast::Token& t : codeast::Lex(text).tokens) {
      if (t.kind != codeast::TokenKind::kComment) tokens.push_back(std::move(t.text));
    }
    if (tokens.empty()) {
      // Comment-only text still embeds; fall back to the raw lexemes.
      for (codeast::Token& t : codeast::Lex(text).tokens) {
        tokens.push_back(std::move(t.text));
      }
    }
    if (tokens.size() > kMaxTokens) {
      std::cerr << "warning: embedding input has " << tokens.size()
                << " tokens; truncated to " << kMaxTokens << "\n";
      tokens.resize(kMaxTokens);
    }

    std::unordered_map<std::string_view, size_t> counts;
    for (const std::string& t : tokens) ++counts[t];
    // Sum in sorted token order so the result is independent of hash-map
    // iteration order and of the token order in the text.
    std::vector<std::pair<std::string_view, size_t>> sorted(counts.begin(),
                                                            counts.end());
    std::sort(sorted.begin(), sorted.end());
    Embedding mean(kDim, 0.0);
    for (const auto& [token, count] : sorted) {
      const Embedding unit = TokenVector(token);
      for (size_t d = 0; d < kDim; ++d) {
        mean[d] += static_cast<double>(count) * unit[d];
      }
    }
    const double n = static_cast<double>(tokens.size());
    for (double& x : mean) x /= n;
    return mean;
  }

  Embedding TokenVector(std::string_view token) const {
    Rng rng(DeriveSeed(seed_, token));
    Embedding v(kDim);
    double norm2 = 0.0;
    for (double& x : v) {
      x = rng.Normal();
      norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    for (double& x : v) x /= norm;
    return v;
  }

 private:
  uint64_t seed_;
};

inline double Norm(const Embedding& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double Cosine(const Embedding& a, const Embedding& b) {
  Require(a.size() == b.size(), "cosine of vectors with different dimensions");
  const double na = Norm(a);
  const double nb = Norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) {
    Fail(ErrorKind::kValidation, "degenerate embedding: zero norm");
  }
  double dot = 0.0;
  for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

}  // namespace codemia::embed

#endif  // CODEMIA_EMBED_HPP_
