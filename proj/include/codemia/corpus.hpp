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

#ifndef CODEMIA_CORPUS_HPP_
#define CODEMIA_CORPUS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "codemia/error.hpp"
#include "codemia/jsonio.hpp"
#include "codemia/rng.hpp"

namespace codemia {

// Class index 0 is the non-member class, 1 the member class, everywhere.
enum class Membership { kNonmember = 0, kMember = 1 };

inline std::string_view MembershipName(Membership m) {
  return m == Membership::kMember ? "member" : "nonmember";
}

inline Membership ParseMembership(std::string_view s) {
  if (s == "member") return Membership::kMember;
  if (s == "nonmember") return Membership::kNonmember;
  Fail(ErrorKind::kValidation,
       "membership must be 'member' or 'nonmember', got '" + std::string(s) +
           "'");
}

inline std::string StripTrailingWhitespace(std::string_view s) {
  size_t end = s.size();
  while (end > 0 && (s[end - 1] == ' ' || s[end - 1] == '\t' ||
                     s[end - 1] == '\n' || s[end - 1] == '\r' ||
                     s[end - 1] == '\f' || s[end - 1] == '\v')) {
    --end;
  }
  return std::string(s.substr(0, end));
}

}  // namespace codemia

namespace codemia::corpus {

enum class Origin { kTrainPool, kTestPool };

inline std::string_view OriginName(Origin o) {
  return o == Origin::kTrainPool ? "train_pool" : "test_pool";
}

struct Sample {
  std::string id;
  std::string prefix;
  std::string suffix;
  Origin origin = Origin::kTrainPool;
};

// The text submitted to a victim's scoring endpoint for the rank baseline.
inline std::string ScoringText(const Sample& s) {
  return s.prefix + "\n" + s.suffix;
}

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  const std::vector<Sample>& samples() const { return samples_; }
  size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  // Enforces the Sample invariants and id uniqueness.
  void Add(Sample sample) {
    sample.prefix = StripTrailingWhitespace(sample.prefix);
    sample.suffix = StripTrailingWhitespace(sample.suffix);
    Require(!sample.id.empty(), "sample id must be non-empty");
    Require(!sample.prefix.empty(),
            "sample '" + sample.id + "': prefix is empty");
    Require(!sample.suffix.empty(),
            "sample '" + sample.id + "': suffix is empty");
    if (index_.contains(sample.id)) {
      Fail(ErrorKind::kValidation, "duplicate sample id '" + sample.id + "'");
    }
    index_.emplace(sample.id, samples_.size());
    samples_.push_back(std::move(sample));
  }

  const Sample* Find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &samples_[it->second];
  }

  const Sample& At(std::string_view id) const {
    const Sample* s = Find(id);
    if (s == nullptr) {
      Fail(ErrorKind::kValidation, "unknown sample id '" + std::string(id) +
                                       "'");
    }
    return *s;
  }

 private:
  std::string name_;
  std::vector<Sample> samples_;
  std::unordered_map<std::string, size_t> index_;
};

inline Json SampleToJson(const Sample& s) {
  return Json{{"id", s.id},
              {"prefix", s.prefix},
              {"suffix", s.suffix},
              {"origin", OriginName(s.origin)}};
}

inline Corpus ParseCorpus(std::istream& in, const std::string& origin_name,
                          std::string corpus_name) {
  Corpus corpus(std::move(corpus_name));
  const JsonlDocument doc = ParseJsonl(in, origin_name);
  for (const JsonlRecord& rec : doc.records) {
    const std::string where = origin_name + ":" + std::to_string(rec.line);
    Sample s;
    for (const char* key : {"id", "prefix", "suffix", "origin"}) {
      if (!rec.value.contains(key) || !rec.value[key].is_string()) {
        Fail(ErrorKind::kParse,
             where + ": field '" + key + "' missing or not a string");
      }
    }
    s.id = rec.value["id"].get<std::string>();
    s.prefix = rec.value["prefix"].get<std::string>();
    s.suffix = rec.value["suffix"].get<std::string>();
    const std::string origin = rec.value["origin"].get<std::string>();
    if (origin == "train_pool") {
      s.origin = Origin::kTrainPool;
    } else if (origin == "test_pool") {
      s.origin = Origin::kTestPool;
    } else {
      Fail(ErrorKind::kParse, where + ": field 'origin' must be train_pool or "
                                      "test_pool, got '" + origin + "'");
    }
    try {
      corpus.Add(std::move(s));
    } catch (const Error& e) {
      Fail(e.kind(), where + ": " + e.what());
    }
  }
  return corpus;
}

// Reads a JSONL corpus {id, prefix, suffix, origin}, preserving file order.
inline Corpus Ingest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kDependency, "cannot open " + path.string());
  return ParseCorpus(in, path.string(), path.stem().string());
}

struct SplitPlan {
  double known_fraction = 0.2;
  uint64_t seed = 0;
  std::vector<std::string> train_members;
  std::vector<std::string> train_nonmembers;
  std::vector<std::string> eval_members;
  std::vector<std::string> eval_nonmembers;

  bool operator==(const SplitPlan&) const = default;

  // Label of `id` if it takes part in the split.
  std::optional<Membership> LabelOf(std::string_view id) const {
    auto has = [&](const std::vector<std::string>& v) {
      return std::find(v.begin(), v.end(), id) != v.end();
    };
    if (has(train_members) || has(eval_members)) return Membership::kMember;
    if (has(train_nonmembers) || has(eval_nonmembers)) {
      return Membership::kNonmember;
    }
    return std::nullopt;
  }
};

inline Json SplitToJson(const SplitPlan& p) {
  return Json{{"known_fraction", p.known_fraction},
              {"seed", p.seed},
              {"train_members", p.train_members},
              {"train_nonmembers", p.train_nonmembers},
              {"eval_members", p.eval_members},
              {"eval_nonmembers", p.eval_nonmembers}};
}

inline SplitPlan SplitFromJson(const Json& j) {
  const std::string where = "split plan";
  SplitPlan p;
  p.known_fraction = Field<double>(j, "known_fraction", where);
  p.seed = Field<uint64_t>(j, "seed", where);
  p.train_members = Field<std::vector<std::string>>(j, "train_members", where);
  p.train_nonmembers =
      Field<std::vector<std::string>>(j, "train_nonmembers", where);
  p.eval_members = Field<std::vector<std::string>>(j, "eval_members", where);
  p.eval_nonmembers =
      Field<std::vector<std::string>>(j, "eval_nonmembers", where);
  return p;
}

// Partial-knowledge split: a seeded `known_fraction` of the train pool is
// known to the adversary, balanced by an equal number of test-pool samples;
// the remainder, truncated to equal sizes, is the evaluation set.
inline SplitPlan MakeSplit(const Corpus& corpus, double known_fraction,
                           uint64_t seed) {
  Require(known_fraction > 0.0 && known_fraction <= 1.0,
          "known_fraction must lie in (0, 1]");
  std::vector<std::string> train_pool;
  std::vector<std::string> test_pool;
  std::unordered_map<std::string, size_t> position;
  for (const Sample& s : corpus.samples()) {
    position.emplace(s.id, position.size());
    (s.origin == Origin::kTrainPool ? train_pool : test_pool).push_back(s.id);
  }
  Require(!train_pool.empty(), "corpus has no train_pool samples");
  Require(!test_pool.empty(), "corpus has no test_pool samples");

  const size_t known = std::max<size_t>(
      1, static_cast<size_t>(std::floor(
             known_fraction * static_cast<double>(train_pool.size()) + 1e-9)));
  if (test_pool.size() < known) {
    Fail(ErrorKind::kCapacity,
         "need " + std::to_string(known) +
             " test_pool samples to balance the training split, have " +
             std::to_string(test_pool.size()));
  }

  Rng rng(seed);
  rng.Shuffle(std::span<std::string>(train_pool));
  rng.Shuffle(std::span<std::string>(test_pool));

  SplitPlan plan;
  plan.known_fraction = known_fraction;
  plan.seed = seed;
  plan.train_members.assign(train_pool.begin(), train_pool.begin() + known);
  plan.train_nonmembers.assign(test_pool.begin(), test_pool.begin() + known);
  const size_t eval = std::min(train_pool.size(), test_pool.size()) - known;
  plan.eval_members.assign(train_pool.begin() + known,
                           train_pool.begin() + known + eval);
  plan.eval_nonmembers.assign(test_pool.begin() + known,
                              test_pool.begin() + known + eval);

  auto by_position = [&](std::vector<std::string>& ids) {
    std::sort(ids.begin(), ids.end(), [&](const auto& a, const auto& b) {
      return position.at(a) < position.at(b);
    });
  };
  by_position(plan.train_members);
  by_position(plan.train_nonmembers);
  by_position(plan.eval_members);
  by_position(plan.eval_nonmembers);
  return plan;
}

}  // namespace codemia::corpus

#endif  // CODEMIA_CORPUS_HPP_
