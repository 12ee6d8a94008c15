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

#include "codemia/features.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace codemia::features {
namespace {

using ::codemia::testing::ErrorKindOf;
using victim::CompletionRecord;

// Maps each text to a fixed vector; unknown texts are an error.
class TableEmbedder final : public embed::Embedder {
 public:
  void Set(const std::string& text, embed::Embedding v) { table_[text] = std::move(v); }
  embed::Embedding Embed(std::string_view text) const override {
    auto it = table_.find(std::string(text));
    if (it == table_.end()) Fail(ErrorKind::kProtocol, "no vector");
    return it->second;
  }

 private:
  std::map<std::string, embed::Embedding> table_;
};

embed::Embedding Unit2(double angle) {
  embed::Embedding v(embed::kDim, 0.0);
  v[0] = std::cos(angle);
  v[1] = std::sin(angle);
  return v;
}

CompletionRecord Rec(const std::string& text, std::vector<double> lps) {
  CompletionRecord r;
  r.text = text;
  r.token_logprobs = std::move(lps);
  r.tokens.assign(r.token_logprobs.size(), "t");
  return r;
}

// Two-pass reference statistics in long double.
long double RefMean(const std::vector<double>& xs) {
  long double s = 0;
  for (double x : xs) s += x;
  return s / xs.size();
}
long double RefPopStd(const std::vector<double>& xs) {
  const long double m = RefMean(xs);
  long double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / xs.size());
}

TEST(PerplexityTest, HandCases) {
  const double l5 = std::log(0.5);
  const double l25 = std::log(0.25);
  EXPECT_NEAR(Perplexity(std::vector<double>{l5, l5}), 2.0, 1e-9);
  EXPECT_NEAR(Perplexity(std::vector<double>{0.0, 0.0, 0.0}), 1.0, 1e-12);
  EXPECT_NEAR(Perplexity(std::vector<double>{l25, l5}), 2.82842712, 1e-8);
  EXPECT_NEAR(Perplexity(std::vector<double>{l25, l5}), 2.0 * std::sqrt(2.0), 1e-12);
}

TEST(PerplexityTest, Errors) {
  EXPECT_EQ(ErrorKindOf([] { Perplexity(std::vector<double>{}); }), ErrorKind::kValidation);
  EXPECT_EQ(ErrorKindOf([] { Perplexity(std::vector<double>{-0.1, 0.2}); }),
            ErrorKind::kValidation);
}

TEST(PerplexityTest, LoweringALogprobRaisesPerplexity) {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> lps(1 + rng.Index(20));
    for (double& x : lps) x = -rng.Uniform(0.0, 3.0);
    const double before = Perplexity(lps);
    lps[rng.Index(lps.size())] -= rng.Uniform(0.01, 1.0);
    ASSERT_GT(Perplexity(lps), before);
  }
}

TEST(NormalizedPerplexityTest, HandCases) {
  EXPECT_NEAR(NormalizedPerplexity(2.0, 2.0), 0.0, 1e-12);
  EXPECT_NEAR(NormalizedPerplexity(3.0, 2.0), 0.5, 1e-12);
  EXPECT_NEAR(NormalizedPerplexity(1.0, 2.0), -0.5, 1e-12);
  EXPECT_EQ(ErrorKindOf([] { NormalizedPerplexity(2.0, 0.9); }), ErrorKind::kValidation);
}

TEST(NormalizedPerplexityTest, StrictlyIncreasingInPerturbed) {
  double prev = NormalizedPerplexity(1.0, 1.7);
  for (double p = 1.01; p < 10.0; p += 0.37) {
    const double cur = NormalizedPerplexity(p, 1.7);
    ASSERT_GT(cur, prev);
    prev = cur;
  }
}

TEST(LayoutTest, IndicesAndNames) {
  EXPECT_EQ(kFullDim, 27);
  EXPECT_EQ(SimIndex(0), 1);
  EXPECT_EQ(SimIndex(10), 11);
  EXPECT_EQ(kSimMean, 12);
  EXPECT_EQ(kSimStd, 13);
  EXPECT_EQ(PplIndex(0), 14);
  EXPECT_EQ(PplIndex(10), 24);
  EXPECT_EQ(kPplMean, 25);
  EXPECT_EQ(kPplStd, 26);
  EXPECT_EQ(FeatureName(13), "sim_std");
}

TEST(BuildFeaturesTest, PerfectlyStableVector) {
  TableEmbedder e;
  e.Set("y", Unit2(0.0));
  const std::vector<double> lps = {-0.2, -0.1};
  const CompletionRecord base = Rec("y", lps);
  const std::vector<CompletionRecord> perturbed(kSlots, Rec("y", lps));
  const FeatureVector f = BuildFeatures("y", base, perturbed, e);
  std::vector<double> expected(12, 1.0);
  expected.insert(expected.end(), {1.0, 0.0});
  expected.insert(expected.end(), 11, 0.0);
  expected.insert(expected.end(), {0.0, 0.0});
  const std::vector<double> got = f.Flatten();
  ASSERT_EQ(got.size(), 27u);
  for (size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-12) << i;
  EXPECT_TRUE(f.degenerate.empty());
}

TEST(BuildFeaturesTest, HalfSimilarVariantsSummary) {
  TableEmbedder e;
  e.Set("y", Unit2(0.0));
  e.Set("b", Unit2(std::acos(0.5)));
  const std::vector<CompletionRecord> perturbed(kSlots, Rec("b", {-0.5}));
  const FeatureVector f = BuildFeatures("y", Rec("y", {-0.5}), perturbed, e);
  std::vector<double> sims{1.0};
  sims.insert(sims.end(), 11, 0.5);
  EXPECT_NEAR(f.sim_mean, 0.54166667, 1e-8);
  EXPECT_NEAR(f.sim_mean, static_cast<double>(RefMean(sims)), 1e-12);
  // Population deviation of {1, 0.5 x 11} is 0.5 * sqrt(11) / 12.
  EXPECT_NEAR(f.sim_std, 0.5 * std::sqrt(11.0) / 12.0, 1e-12);
  EXPECT_NEAR(f.sim_std, static_cast<double>(RefPopStd(sims)), 1e-12);
}

TEST(BuildFeaturesTest, RandomInputsMatchReference) {
  Rng rng(44);
  for (int t = 0; t < 100; ++t) {
    TableEmbedder e;
    e.Set("y", Unit2(0.0));
    std::vector<CompletionRecord> perturbed;
    std::vector<double> sims;
    const double a0 = rng.Uniform(0.0, 3.0);
    e.Set("base", Unit2(a0));
    sims.push_back(std::cos(a0));
    std::vector<double> base_lps(1 + rng.Index(6));
    for (double& x : base_lps) x = -rng.Uniform(0.0, 2.0);
    long double base_sum = 0;
    for (double x : base_lps) base_sum += x;
    const long double base_ppl = std::exp(-base_sum / base_lps.size());
    std::vector<double> ppls;
    for (int s = 0; s < kSlots; ++s) {
      const double a = rng.Uniform(0.0, 3.0);
      const std::string text = "v" + std::to_string(s);
      e.Set(text, Unit2(a));
      sims.push_back(std::cos(a));
      std::vector<double> lps(1 + rng.Index(6));
      long double sum = 0;
      for (double& x : lps) sum += (x = -rng.Uniform(0.0, 2.0));
      const long double ppl = std::exp(-sum / lps.size());
      ppls.push_back(static_cast<double>((ppl - base_ppl) / base_ppl));
      perturbed.push_back(Rec(text, lps));
    }
    const std::vector<double> got =
        BuildFeatures("y", Rec("base", base_lps), perturbed, e).Flatten();
    ASSERT_EQ(got.size(), 27u);
    for (int s = 0; s < 12; ++s) ASSERT_NEAR(got[s], sims[s], 1e-12);
    ASSERT_NEAR(got[12], static_cast<double>(RefMean(sims)), 1e-12);
    ASSERT_NEAR(got[13], static_cast<double>(RefPopStd(sims)), 1e-12);
    for (int s = 0; s < kSlots; ++s) ASSERT_NEAR(got[14 + s], ppls[s], 1e-10);
    ASSERT_NEAR(got[25], static_cast<double>(RefMean(ppls)), 1e-10);
    ASSERT_NEAR(got[26], static_cast<double>(RefPopStd(ppls)), 1e-10);
    for (double x : got) ASSERT_TRUE(std::isfinite(x));
    ASSERT_GE(got[13], 0.0);
    ASSERT_GE(got[26], 0.0);
  }
}

TEST(BuildFeaturesTest, PermutingVariantsPermutesSlotsOnly) {
  Rng rng(71);
  TableEmbedder e;
  e.Set("y", Unit2(0.0));
  e.Set("base", Unit2(0.3));
  std::vector<CompletionRecord> perturbed;
  for (int s = 0; s < kSlots; ++s) {
    const std::string text = "v" + std::to_string(s);
    e.Set(text, Unit2(rng.Uniform(0.0, 3.0)));
    perturbed.push_back(Rec(text, {-rng.Uniform(0.0, 2.0), -rng.Uniform(0.0, 2.0)}));
  }
  const CompletionRecord base = Rec("base", {-0.4});
  const FeatureVector a = BuildFeatures("y", base, perturbed, e);
  std::vector<int> perm(kSlots);
  std::iota(perm.begin(), perm.end(), 0);
  rng.Shuffle(std::span<int>(perm));
  std::vector<CompletionRecord> shuffled;
  for (int p : perm) shuffled.push_back(perturbed[p]);
  const FeatureVector b = BuildFeatures("y", base, shuffled, e);
  for (int s = 0; s < kSlots; ++s) {
    EXPECT_EQ(b.sim[s], a.sim[perm[s]]);
    EXPECT_EQ(b.ppl[s], a.ppl[perm[s]]);
  }
  EXPECT_NEAR(b.sim_mean, a.sim_mean, 1e-12);
  EXPECT_NEAR(b.sim_std, a.sim_std, 1e-12);
  EXPECT_NEAR(b.ppl_mean, a.ppl_mean, 1e-12);
  EXPECT_NEAR(b.ppl_std, a.ppl_std, 1e-12);
}

TEST(BuildFeaturesTest, EmptyCompletionsAreDegenerate) {
  TableEmbedder e;
  e.Set("y", Unit2(0.0));
  std::vector<CompletionRecord> perturbed(kSlots, Rec("y", {-0.1}));
  perturbed[4] = Rec("", {});
  const FeatureVector f = BuildFeatures("y", Rec("", {}), perturbed, e);
  EXPECT_EQ(f.sim_base, 0.0);
  EXPECT_EQ(f.sim[4], 0.0);
  EXPECT_EQ(f.ppl[4], 0.0);
  EXPECT_EQ(f.degenerate, (std::vector<int>{0, 5}));
  // Empty base logprobs count as perplexity 1.
  EXPECT_NEAR(f.ppl[0], std::exp(0.1) - 1.0, 1e-12);
}

TEST(BuildFeaturesTest, Errors) {
  TableEmbedder e;
  e.Set("y", Unit2(0.0));
  const std::vector<CompletionRecord> ten(10, Rec("y", {-0.1}));
  EXPECT_EQ(ErrorKindOf([&] { BuildFeatures("y", Rec("y", {-0.1}), ten, e); }),
            ErrorKind::kValidation);
  std::vector<CompletionRecord> eleven(kSlots, Rec("y", {-0.1}));
  eleven[7] = Rec("unknown", {-0.1});
  try {
    BuildFeatures("y", Rec("y", {-0.1}), eleven, e);
    FAIL() << "no throw";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kProtocol);
    EXPECT_NE(std::string(err.what()).find("variant 8"), std::string::npos);
  }
}

FeatureVector RandomVector(Rng& rng) {
  FeatureVector f;
  f.sim_base = rng.Uniform(-1, 1);
  for (double& s : f.sim) s = rng.Uniform(-1, 1);
  for (double& p : f.ppl) p = rng.Uniform(-0.5, 2);
  return f;
}

TEST(ProjectTest, EmptyMaskKeepsLayout) {
  Rng rng(2);
  FeatureVector f = RandomVector(rng);
  std::vector<double> sims{f.sim_base};
  sims.insert(sims.end(), f.sim.begin(), f.sim.end());
  f.sim_mean = Mean(sims);
  f.sim_std = StdDev(sims);
  f.ppl_mean = Mean(f.ppl);
  f.ppl_std = StdDev(f.ppl);
  const ProjectedFeatures p = Project(f, {});
  ASSERT_EQ(p.ids.size(), 27u);
  const std::vector<double> full = f.Flatten();
  for (int i = 0; i < 27; ++i) {
    EXPECT_EQ(p.ids[i], i);
    EXPECT_NEAR(p.values[i], full[i], 1e-15);
  }
}

TEST(ProjectTest, DroppingIdlGivesTwentyOneDimensions) {
  Rng rng(3);
  const FeatureVector f = RandomVector(rng);
  const FeatureMask m = FeatureMask::FromLists({}, {"IDL"});
  EXPECT_EQ(m.dropped_slots, (std::set<int>{8, 9, 10}));
  const ProjectedFeatures p = Project(f, m);
  ASSERT_EQ(p.values.size(), 21u);
  std::vector<double> sims{f.sim_base};
  for (int s = 0; s < 8; ++s) sims.push_back(f.sim[s]);
  const std::vector<double> ppls(f.ppl.begin(), f.ppl.begin() + 8);
  auto at = [&](int id) {
    const auto it = std::find(p.ids.begin(), p.ids.end(), id);
    EXPECT_NE(it, p.ids.end()) << id;
    return p.values[it - p.ids.begin()];
  };
  EXPECT_NEAR(at(kSimMean), static_cast<double>(RefMean(sims)), 1e-12);
  EXPECT_NEAR(at(kSimStd), static_cast<double>(RefPopStd(sims)), 1e-12);
  EXPECT_NEAR(at(kPplMean), static_cast<double>(RefMean(ppls)), 1e-12);
  EXPECT_NEAR(at(kPplStd), static_cast<double>(RefPopStd(ppls)), 1e-12);
  for (int s = 8; s < 11; ++s) {
    EXPECT_EQ(std::count(p.ids.begin(), p.ids.end(), SimIndex(s)), 0);
    EXPECT_EQ(std::count(p.ids.begin(), p.ids.end(), PplIndex(s)), 0);
  }
}

TEST(ProjectTest, DroppingSimStd) {
  Rng rng(4);
  const ProjectedFeatures p = Project(RandomVector(rng), FeatureMask::FromLists({13}, {}));
  EXPECT_EQ(p.values.size(), 26u);
  EXPECT_EQ(std::count(p.ids.begin(), p.ids.end(), 13), 0);
}

TEST(FeatureMaskTest, Validation) {
  EXPECT_EQ(ErrorKindOf([] { FeatureMask::FromLists({27}, {}); }), ErrorKind::kValidation);
  EXPECT_EQ(ErrorKindOf([] { FeatureMask::FromLists({-1}, {}); }), ErrorKind::kValidation);
  EXPECT_EQ(ErrorKindOf([] { FeatureMask::FromLists({}, {"XYZ"}); }), ErrorKind::kValidation);
  EXPECT_EQ(ErrorKindOf([] {
              FeatureMask::FromLists({}, {"IDC", "IRV", "VR", "IDP", "IDL"});
            }),
            ErrorKind::kValidation);
}

TEST(FeatureRecordTest, JsonRoundTrip) {
  FeatureRecord r{"s", Membership::kMember, {0, 1, 2}, {0.5, -0.25, 1.0 / 3.0}, {4}};
  const FeatureRecord back = FeatureRecordFromJson(FeatureRecordToJson(r), "t");
  EXPECT_EQ(back.sample_id, r.sample_id);
  EXPECT_EQ(back.label, r.label);
  EXPECT_EQ(back.feature_ids, r.feature_ids);
  EXPECT_EQ(back.features, r.features);
  EXPECT_EQ(back.degenerate_variants, r.degenerate_variants);
  Json bad = FeatureRecordToJson(r);
  bad["feature_ids"] = {0, 1};
  EXPECT_EQ(ErrorKindOf([&] { FeatureRecordFromJson(bad, "t"); }), ErrorKind::kValidation);
  bad = FeatureRecordToJson(r);
  bad["label"] = "maybe";
  EXPECT_EQ(ErrorKindOf([&] { FeatureRecordFromJson(bad, "t"); }), ErrorKind::kValidation);
}

}  // namespace
}  // namespace codemia::features
