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

#ifndef CODEMIA_SYNTH_HPP_
#define CODEMIA_SYNTH_HPP_

#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "codemia/corpus.hpp"
#include "codemia/error.hpp"
#include "codemia/perturb.hpp"
#include "codemia/rng.hpp"

// Seeded generator of small executable Python programs split into a prefix
// and its ground-truth completion.
namespace codemia::synth {

namespace internal {

// "@@" marks the prefix/suffix boundary; $X placeholders are filled per
// program.
inline constexpr std::array<std::string_view, 10> kTemplates = {
    R"(def $F($A):
    $T = 0
    for $X in range($A):
        $T += $X * $K
@@
        if $T > $M:
            $T -= $M
    return $T


print($F($N))
)",
    R"(def $F($A):
    $X, $Y = 0, 1
    for _ in range($A):
@@
        $X, $Y = $Y, $X + $Y
    return $X


for $T in range($K):
    print($F($T))
)",
    R"(def $F($S):
    $T = 0
    for $C in $S:
@@
        if $C in "$V":
            $T += 1
    return $T


print($F("$W"))
)",
    R"(def $F($A, $B):
    while $B:
@@
        $A, $B = $B, $A % $B
    return $A


print($F($N, $K))
)",
    R"(def $F($L):
    $R = []
    for $X in $L:
        if $X % $K == 0:
@@
            $R.append($X * $M)
    return $R


print($F(list(range($N))))
)",
    R"(def $F($L):
    $B = $L[0]
    $C = 0
    for $X in $L:
@@
        $C = max($X, $C + $X)
        $B = max($B, $C)
    return $B


print($F([$Q]))
)",
    R"(def $F($S):
    $L = $S.split()
    $L.reverse()
@@
    $R = " ".join($L)
    return $R.upper() if len($L) > $K else $R


print($F("$W"))
)",
    R"(class $G:
    def __init__(self, $A):
        self.$P = $A

    def $H(self, $B):
@@
        self.$P += $B
        return self.$P * $K


$O = $G($N)
print($O.$H($M))
)",
    R"(def $F($L):
    $D = {}
    for $X in $L:
@@
        $D[$X] = $D.get($X, 0) + $K
    return sorted($D.items())


print($F([$Q]))
)",
    R"(def $F($A):
    if $A < 2:
        return False
    $X = 2
@@
    while $X * $X <= $A:
        if $A % $X == 0:
            return False
        $X += 1
    return True


print([$T for $T in range($N) if $F($T)])
)",
};

inline constexpr std::array<std::string_view, 16> kFunctionNames = {
    "compute", "solve",   "process", "transform", "measure", "tally",
    "fold",    "scan",    "walk",    "gather",    "reckon",  "evaluate",
    "combine", "distill", "assess",  "derive"};

inline constexpr std::array<std::string_view, 28> kVariableNames = {
    "total", "acc",   "value", "count", "item",  "elem",  "num",
    "idx",   "buf",   "res",   "node",  "key",   "cur",   "best",
    "left",  "right", "step",  "size",  "data",  "seq",   "word",
    "text",  "ch",    "prev",  "nxt",   "limit", "score", "bucket"};

inline constexpr std::array<std::string_view, 8> kClassNames = {
    "Counter", "Tracker", "Ledger", "Meter", "Gauge", "Register", "Tally", "Box"};

inline constexpr std::array<std::string_view, 8> kWords = {
    "alpha", "beta", "gamma", "delta", "omega", "sigma", "kappa", "theta"};

inline std::string Fill(std::string_view tmpl, const std::map<char, std::string>& values) {
  std::string out;
  for (size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '$' && i + 1 < tmpl.size() && values.contains(tmpl[i + 1])) {
      out += values.at(tmpl[i + 1]);
      ++i;
    } else {
      out += tmpl[i];
    }
  }
  return out;
}

inline std::string Program(Rng& rng) {
  const std::string_view tmpl = kTemplates[rng.Index(kTemplates.size())];
  std::map<char, std::string> v;
  std::set<std::string> used;
  auto fresh = [&](auto& pool) {
    for (;;) {
      std::string name(pool[rng.Index(pool.size())]);
      if (used.insert(name).second) return name;
    }
  };
  v['F'] = fresh(kFunctionNames);
  v['H'] = fresh(kFunctionNames);
  v['G'] = fresh(kClassNames);
  for (char c : std::string_view("ABCDLOPRSTXY")) v[c] = fresh(kVariableNames);
  v['K'] = std::to_string(rng.UniformInt(2, 9));
  v['M'] = std::to_string(rng.UniformInt(10, 99));
  v['N'] = std::to_string(rng.UniformInt(5, 40));
  v['V'] = rng.Bernoulli(0.5) ? "aeiou" : "xyz";
  std::string words;
  const int n_words = static_cast<int>(rng.UniformInt(2, 5));
  for (int i = 0; i < n_words; ++i) {
    if (i > 0) words += ' ';
    words += kWords[rng.Index(kWords.size())];
  }
  v['W'] = words;
  std::string list;
  const int n_items = static_cast<int>(rng.UniformInt(3, 7));
  for (int i = 0; i < n_items; ++i) {
    if (i > 0) list += ", ";
    list += std::to_string(rng.UniformInt(-9, 20));
  }
  v['Q'] = list;
  return Fill(tmpl, v);
}

}  // namespace internal

// `n_members` train_pool samples followed by `n_nonmembers` test_pool ones,
// with pairwise distinct canonical prefixes.
inline corpus::Corpus SyntheticCorpus(int n_members, int n_nonmembers, uint64_t seed) {
  Require(n_members >= 0 && n_nonmembers >= 0, "sample counts must be >= 0");
  corpus::Corpus out("synthetic");
  Rng rng(DeriveSeed(seed, "synthetic-corpus"));
  std::set<std::string> seen;
  const int total = n_members + n_nonmembers;
  for (int i = 0; i < total; ++i) {
    for (int attempt = 0;; ++attempt) {
      Require(attempt < 10000, "synthetic corpus generator ran out of programs");
      const std::string program = internal::Program(rng);
      const size_t cut = program.find("@@\n");
      corpus::Sample s;
      s.prefix = program.substr(0, cut);
      s.suffix = program.substr(cut + 3);
      if (!seen.insert(perturb::Canonicalize(s.prefix)).second) continue;
      char id[16];
      std::snprintf(id, sizeof(id), "syn%04d", i);
      s.id = id;
      s.origin = i < n_members ? corpus::Origin::kTrainPool : corpus::Origin::kTestPool;
      out.Add(std::move(s));
      break;
    }
  }
  return out;
}

}  // namespace codemia::synth

#endif  // CODEMIA_SYNTH_HPP_
