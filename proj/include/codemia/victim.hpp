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

#ifndef CODEMIA_VICTIM_HPP_
#define CODEMIA_VICTIM_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "codemia/codeast.hpp"
#include "codemia/corpus.hpp"
#include "codemia/error.hpp"
#include "codemia/jsonio.hpp"
#include "codemia/perturb.hpp"
#include "codemia/rng.hpp"

namespace codemia::victim {

inline constexpr int kDefaultMaxTokens = 256;

// One model response. Log-probabilities are natural logs, one per token.
struct CompletionRecord {
  std::string prompt_id;  // sample id, or "<sample id>#<variant index>"
  std::string text;
  std::vector<std::string> tokens;
  std::vector<double> token_logprobs;
  bool truncated = false;  // the prompt was cut to fit the model context

  bool operator==(const CompletionRecord&) const = default;
};

inline void ValidateLogprobs(const std::vector<std::string>& tokens,
                             const std::vector<double>& logprobs,
                             ErrorKind kind, const std::string& where) {
  if (tokens.size() != logprobs.size()) {
    Fail(kind, where + ": " + std::to_string(tokens.size()) + " tokens but " +
                   std::to_string(logprobs.size()) + " token_logprobs");
  }
  for (double lp : logprobs) {
    if (!std::isfinite(lp) || lp > 0.0) {
      Fail(kind, where + ": token_logprobs entries must be finite and <= 0");
    }
  }
}

inline std::string PromptId(std::string_view sample_id, int variant_index) {
  return std::string(sample_id) + "#" + std::to_string(variant_index);
}

inline Json RecordToJson(const CompletionRecord& r) {
  Json j{{"prompt_id", r.prompt_id},
         {"text", r.text},
         {"tokens", r.tokens},
         {"token_logprobs", r.token_logprobs}};
  if (r.truncated) j["truncated"] = true;
  return j;
}

inline CompletionRecord RecordFromJson(const Json& j, const std::string& where) {
  CompletionRecord r;
  r.prompt_id = Field<std::string>(j, "prompt_id", where);
  r.text = Field<std::string>(j, "text", where);
  r.tokens = Field<std::vector<std::string>>(j, "tokens", where);
  r.token_logprobs = Field<std::vector<double>>(j, "token_logprobs", where);
  r.truncated = j.value("truncated", false);
  ValidateLogprobs(r.tokens, r.token_logprobs, ErrorKind::kValidation, where);
  return r;
}

struct ScoreResult {
  std::vector<std::string> tokens;
  std::vector<double> token_logprobs;
};

// Black-box access to the model under audit.
class Victim {
 public:
  virtual ~Victim() = default;

  // Greedy (temperature 0) completion of `prompt`.
  virtual CompletionRecord Complete(const std::string& prompt,
                                    const std::string& prompt_id,
                                    int max_tokens) const = 0;

  // Teacher-forced log-probabilities of `text`. Throws kUnsupported when the
  // endpoint has no scoring mode.
  virtual ScoreResult Score(const std::string& text) const = 0;
};

struct SimVictimConfig {
  std::set<std::string> memorized_ids;
  double member_noise = 0.02;
  double nonmember_noise = 0.30;
  double member_logprob = -0.35;
  double nonmember_logprob = -0.40;
  // Per-sample difficulty: every logprob of a sample is shifted by a seeded
  // offset in [-sample_offset, sample_offset] keyed on the sample id.
  double sample_offset = 0.25;
  double jitter = 0.05;
  uint64_t seed = 0;

  void Validate() const {
    Require(member_noise >= 0.0 && member_noise <= 1.0,
            "member_noise must lie in [0, 1]");
    Require(nonmember_noise >= 0.0 && nonmember_noise <= 1.0,
            "nonmember_noise must lie in [0, 1]");
    Require(member_noise < nonmember_noise,
            "member_noise must be smaller than nonmember_noise");
    Require(member_logprob <= 0.0 && nonmember_logprob <= 0.0,
            "simulator logprobs must be <= 0");
    Require(jitter >= 0.0 && sample_offset >= 0.0,
            "jitter and sample_offset must be >= 0");
  }
};

// Deterministic stand-in for a fine-tuned code model.
//
// A prompt is canonicalized to recover its parent sample. The completion is
// the parent's suffix with a fraction of tokens replaced. For memorized
// samples the replacement stream is keyed on the sample id, so every
// perturbed prompt of a member yields the same output; for other samples it
// is keyed on the full prompt, so each perturbation yields a different one.
class SimVictim final : public Victim {
 public:
  SimVictim(SimVictimConfig config, const corpus::Corpus& corpus)
      : config_(std::move(config)) {
    config_.Validate();
    for (const std::string& id : config_.memorized_ids) {
      Require(corpus.Find(id) != nullptr,
              "memorized id '" + id + "' is not in the corpus");
    }
    for (const corpus::Sample& s : corpus.samples()) {
      samples_.push_back(s);
    }
    for (size_t i = 0; i < samples_.size(); ++i) {
      by_canonical_prefix_.emplace(perturb::Canonicalize(samples_[i].prefix), i);
      by_scoring_text_.emplace(samples_[i].suffix, i);
      by_scoring_text_.emplace(corpus::ScoringText(samples_[i]), i);
    }
  }

  const SimVictimConfig& config() const { return config_; }

  CompletionRecord Complete(const std::string& prompt,
                            const std::string& prompt_id,
                            int max_tokens) const override {
    Require(!prompt.empty(), "prompt must be non-empty");
    Require(max_tokens >= 1, "max_tokens must be >= 1");
    CompletionRecord record;
    record.prompt_id = prompt_id;

    auto it = by_canonical_prefix_.find(perturb::Canonicalize(prompt));
    if (it == by_canonical_prefix_.end()) {
      record.tokens = {"pass"};
      record.token_logprobs = {config_.nonmember_logprob};
      record.text = "pass";
      return record;
    }
    const corpus::Sample& sample = samples_[it->second];
    const bool member = config_.memorized_ids.contains(sample.id);
    const double noise = member ? config_.member_noise : config_.nonmember_noise;
    const double level = ClassLogprob(sample, member);
    Rng rng(DeriveSeed(config_.seed, member ? "member:" + sample.id
                                            : "prompt:" + prompt));

    const std::vector<std::string> pieces = codeast::Pieces(sample.suffix);
    const size_t count =
        std::min(pieces.size(), static_cast<size_t>(max_tokens));
    for (size_t i = 0; i < count; ++i) {
      std::string piece = pieces[i];
      const bool replace = rng.Bernoulli(noise);
      const std::string ws = LeadingSpace(piece);
      if (replace && ws.size() < piece.size()) {
        piece = ws + Replacement(piece.substr(ws.size()), rng);
      }
      const double u = rng.Uniform(-1.0, 1.0);
      record.tokens.push_back(piece);
      record.token_logprobs.push_back(
          std::min(0.0, level + config_.jitter * u));
      record.text += piece;
    }
    return record;
  }

  ScoreResult Score(const std::string& text) const override {
    Require(!text.empty(), "scored text must be non-empty");
    ScoreResult result;
    result.tokens = codeast::Pieces(text);
    double level = config_.nonmember_logprob;
    auto it = by_scoring_text_.find(text);
    if (it != by_scoring_text_.end()) {
      const corpus::Sample& s = samples_[it->second];
      level = ClassLogprob(s, config_.memorized_ids.contains(s.id));
    }
    result.token_logprobs.assign(result.tokens.size(), std::min(0.0, level));
    return result;
  }

 private:
  double ClassLogprob(const corpus::Sample& s, bool member) const {
    Rng rng(DeriveSeed(config_.seed, "offset:" + s.id));
    const double offset = config_.sample_offset * rng.Uniform(-1.0, 1.0);
    return (member ? config_.member_logprob : config_.nonmember_logprob) +
           offset;
  }

  static std::string LeadingSpace(const std::string& piece) {
    size_t k = 0;
    while (k < piece.size() &&
           std::isspace(static_cast<unsigned char>(piece[k]))) {
      ++k;
    }
    return piece.substr(0, k);
  }

  static std::string Replacement(const std::string& lexeme, Rng& rng) {
    static constexpr std::array<std::string_view, 24> kVocabulary = {
        "x",      "y",     "i",     "n",      "0",     "1",
        "2",      "+",     "-",     "*",      "(",     ")",
        ",",      ":",     "=",     "==",     "return", "if",
        "for",    "None",  "True",  "result", "value", "tmp"};
    size_t k = rng.Index(kVocabulary.size());
    if (kVocabulary[k] == lexeme) k = (k + 1) % kVocabulary.size();
    return std::string(kVocabulary[k]);
  }

  SimVictimConfig config_;
  std::vector<corpus::Sample> samples_;
  std::unordered_map<std::string, size_t> by_canonical_prefix_;
  std::unordered_map<std::string, size_t> by_scoring_text_;
};

}  // namespace codemia::victim

#endif  // CODEMIA_VICTIM_HPP_
