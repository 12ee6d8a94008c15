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

#ifndef CODEMIA_FEATURES_HPP_
#define CODEMIA_FEATURES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "codemia/corpus.hpp"
#include "codemia/embed.hpp"
#include "codemia/error.hpp"
#include "codemia/jsonio.hpp"
#include "codemia/perturb.hpp"
#include "codemia/victim.hpp"

namespace codemia::features {

inline constexpr int kSlots = perturb::kVariantsPerSample;  // 11
inline constexpr int kFullDim = 2 * kSlots + 5;             // 27

// Positions in the full 27-entry layout.
inline constexpr int kSimBase = 0;
inline constexpr int SimIndex(int slot) { return 1 + slot; }
inline constexpr int kSimMean = kSlots + 1;  // 12
inline constexpr int kSimStd = kSlots + 2;   // 13
inline constexpr int PplIndex(int slot) { return kSlots + 3 + slot; }
inline constexpr int kPplMean = 2 * kSlots + 3;  // 25
inline constexpr int kPplStd = 2 * kSlots + 4;   // 26

inline std::string FeatureName(int index) {
  Require(index >= 0 && index < kFullDim, "feature index out of range");
  if (index == kSimBase) return "sim_base";
  if (index <= kSlots) return "sim_" + std::to_string(index);
  if (index == kSimMean) return "sim_mean";
  if (index == kSimStd) return "sim_std";
  if (index < kPplMean) return "ppl_" + std::to_string(index - kSlots - 2);
  return index == kPplMean ? "ppl_mean" : "ppl_std";
}

// exp of the negative mean token log-probability.
inline double Perplexity(std::span<const double> logprobs) {
  Require(!logprobs.empty(), "perplexity of an empty token sequence");
  double sum = 0.0;
  for (double lp : logprobs) {
    Require(std::isfinite(lp) && lp <= 0.0,
            "token log-probabilities must be finite and <= 0");
    sum += lp;
  }
  return std::exp(-sum / static_cast<double>(logprobs.size()));
}

inline double NormalizedPerplexity(double ppl, double ppl_base) {
  Require(ppl_base >= 1.0, "base perplexity below 1 (corrupt log-probabilities)");
  return (ppl - ppl_base) / ppl_base;
}

inline double Mean(std::span<const double> xs) {
  Require(!xs.empty(), "mean of an empty set");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Population standard deviation.
inline double StdDev(std::span<const double> xs) {
  const double m = Mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

struct FeatureVector {
  double sim_base = 0.0;
  std::array<double, kSlots> sim{};
  double sim_mean = 0.0;
  double sim_std = 0.0;
  std::array<double, kSlots> ppl{};
  double ppl_mean = 0.0;
  double ppl_std = 0.0;
  // Completions that came back empty: 0 for the base, 1..11 for variants.
  std::vector<int> degenerate;

  std::vector<double> Flatten() const {
    std::vector<double> out;
    out.reserve(kFullDim);
    out.push_back(sim_base);
    out.insert(out.end(), sim.begin(), sim.end());
    out.push_back(sim_mean);
    out.push_back(sim_std);
    out.insert(out.end(), ppl.begin(), ppl.end());
    out.push_back(ppl_mean);
    out.push_back(ppl_std);
    return out;
  }
};

namespace internal {

inline bool Blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string::npos;
}

inline double PerplexityOrOne(const victim::CompletionRecord& r) {
  return r.token_logprobs.empty() ? 1.0 : Perplexity(r.token_logprobs);
}

}  // namespace internal

// Behavioral features of one sample from its ground truth `y`, the completion
// of the original prefix, and the completions of the 11 variants in slot
// order.
inline FeatureVector BuildFeatures(
    const std::string& y, const victim::CompletionRecord& base,
    std::span<const victim::CompletionRecord> perturbed,
    const embed::Embedder& embedder) {
  if (perturbed.size() != static_cast<size_t>(kSlots)) {
    Fail(ErrorKind::kValidation,
         "expected " + std::to_string(kSlots) + " perturbed completions, got " +
             std::to_string(perturbed.size()));
  }
  Require(!internal::Blank(y), "ground-truth completion is empty");
  FeatureVector f;
  const embed::Embedding vy = embedder.Embed(y);

  auto similarity = [&](const victim::CompletionRecord& r, int index) {
    if (internal::Blank(r.text)) {
      f.degenerate.push_back(index);
      return 0.0;
    }
    try {
      return embed::Cosine(vy, embedder.Embed(r.text));
    } catch (const Error& e) {
      throw Error(e.kind(), "variant " + std::to_string(index) + ": " + e.what());
    }
  };

  f.sim_base = similarity(base, 0);
  const double ppl_base = internal::PerplexityOrOne(base);
  for (int i = 0; i < kSlots; ++i) {
    f.sim[i] = similarity(perturbed[i], i + 1);
    f.ppl[i] = perturbed[i].token_logprobs.empty()
                   ? 0.0
                   : NormalizedPerplexity(internal::PerplexityOrOne(perturbed[i]),
                                          ppl_base);
  }
  std::vector<double> sims{f.sim_base};
  sims.insert(sims.end(), f.sim.begin(), f.sim.end());
  f.sim_mean = Mean(sims);
  f.sim_std = StdDev(sims);
  f.ppl_mean = Mean(f.ppl);
  f.ppl_std = StdDev(f.ppl);
  return f;
}

// Ablation masks. Dropped slots remove one similarity and one normalized
// perplexity each, and the summary statistics are recomputed over the
// survivors; dropped features are indices into the full 27-entry layout.
struct FeatureMask {
  std::set<int> dropped_features;
  std::set<int> dropped_slots;

  bool empty() const { return dropped_features.empty() && dropped_slots.empty(); }

  void Validate() const {
    for (int i : dropped_features) {
      Require(i >= 0 && i < kFullDim,
              "feature_mask index " + std::to_string(i) + " outside [0, 26]");
    }
    for (int s : dropped_slots) {
      Require(s >= 0 && s < kSlots, "slot index outside [0, 10]");
    }
    Require(static_cast<int>(dropped_slots.size()) < kSlots,
            "perturbation_mask drops every variant");
  }

  static FeatureMask FromLists(const std::vector<int>& feature_mask,
                               const std::vector<std::string>& families) {
    FeatureMask m;
    m.dropped_features.insert(feature_mask.begin(), feature_mask.end());
    for (const std::string& name : families) {
      const perturb::Family family = perturb::ParseFamily(name);
      for (int s = 0; s < kSlots; ++s) {
        if (perturb::kSlotFamilies[s] == family) m.dropped_slots.insert(s);
      }
    }
    m.Validate();
    return m;
  }
};

struct ProjectedFeatures {
  std::vector<int> ids;  // positions in the full layout
  std::vector<double> values;
};

inline ProjectedFeatures Project(const FeatureVector& f, const FeatureMask& mask) {
  const std::vector<double> full = f.Flatten();
  std::vector<double> sims{f.sim_base};
  std::vector<double> ppls;
  for (int s = 0; s < kSlots; ++s) {
    if (mask.dropped_slots.contains(s)) continue;
    sims.push_back(f.sim[s]);
    ppls.push_back(f.ppl[s]);
  }
  ProjectedFeatures out;
  auto emit = [&](int id, double value) {
    if (mask.dropped_features.contains(id)) return;
    out.ids.push_back(id);
    out.values.push_back(value);
  };
  emit(kSimBase, f.sim_base);
  for (int s = 0; s < kSlots; ++s) {
    if (!mask.dropped_slots.contains(s)) emit(SimIndex(s), full[SimIndex(s)]);
  }
  emit(kSimMean, Mean(sims));
  emit(kSimStd, StdDev(sims));
  for (int s = 0; s < kSlots; ++s) {
    if (!mask.dropped_slots.contains(s)) emit(PplIndex(s), full[PplIndex(s)]);
  }
  emit(kPplMean, Mean(ppls));
  emit(kPplStd, StdDev(ppls));
  return out;
}

// One row of the features artifact.
struct FeatureRecord {
  std::string sample_id;
  std::optional<Membership> label;
  std::vector<int> feature_ids;
  std::vector<double> features;
  std::vector<int> degenerate_variants;
};

inline Json FeatureRecordToJson(const FeatureRecord& r) {
  Json j{{"sample_id", r.sample_id},
         {"feature_ids", r.feature_ids},
         {"features", r.features},
         {"degenerate_variants", r.degenerate_variants}};
  if (r.label) j["label"] = MembershipName(*r.label);
  return j;
}

inline FeatureRecord FeatureRecordFromJson(const Json& j, const std::string& where) {
  FeatureRecord r;
  r.sample_id = Field<std::string>(j, "sample_id", where);
  r.features = Field<std::vector<double>>(j, "features", where);
  r.feature_ids = j.contains("feature_ids")
                      ? Field<std::vector<int>>(j, "feature_ids", where)
                      : std::vector<int>();
  if (r.feature_ids.empty() && r.features.size() == kFullDim) {
    for (int i = 0; i < kFullDim; ++i) r.feature_ids.push_back(i);
  }
  Require(r.feature_ids.size() == r.features.size(),
          where + ": 'feature_ids' and 'features' differ in length");
  if (j.contains("degenerate_variants")) {
    r.degenerate_variants = Field<std::vector<int>>(j, "degenerate_variants", where);
  }
  if (j.contains("label") && !j["label"].is_null()) {
    try {
      r.label = ParseMembership(Field<std::string>(j, "label", where));
    } catch (const Error& e) {
      Fail(ErrorKind::kValidation, where + ": field 'label': " + e.what());
    }
  }
  for (double x : r.features) {
    Require(std::isfinite(x), where + ": field 'features' has a non-finite entry");
  }
  return r;
}

}  // namespace codemia::features

#endif  // CODEMIA_FEATURES_HPP_
