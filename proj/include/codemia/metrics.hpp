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

#ifndef CODEMIA_METRICS_HPP_
#define CODEMIA_METRICS_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "codemia/corpus.hpp"
#include "codemia/error.hpp"
#include "codemia/jsonio.hpp"

namespace codemia::metrics {

struct Prediction {
  std::string sample_id;
  Membership truth = Membership::kNonmember;
  double score = 0.0;  // higher means more likely a member
  Membership label = Membership::kNonmember;
};

struct Confusion {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t tn = 0;
  int64_t fn = 0;
  double tpr = 0.0;
  double fpr = 0.0;
};

struct EvalReport {
  double tpr = 0.0;
  double fpr = 0.0;
  double auc = 0.0;
  std::vector<std::pair<double, double>> roc_points;  // (fpr, tpr)
  Confusion counts;
};

inline void CheckPredictions(const std::vector<Prediction>& preds) {
  bool member = false;
  bool nonmember = false;
  for (const Prediction& p : preds) {
    Require(std::isfinite(p.score) && p.score >= 0.0 && p.score <= 1.0,
            "prediction score for '" + p.sample_id + "' must lie in [0, 1]");
    (p.truth == Membership::kMember ? member : nonmember) = true;
  }
  Require(member && nonmember,
          "evaluation needs both member and nonmember ground truth");
}

inline Confusion ConfusionOf(const std::vector<Prediction>& preds) {
  CheckPredictions(preds);
  Confusion c;
  for (const Prediction& p : preds) {
    const bool truth = p.truth == Membership::kMember;
    const bool said = p.label == Membership::kMember;
    if (truth && said) ++c.tp;
    if (!truth && said) ++c.fp;
    if (!truth && !said) ++c.tn;
    if (truth && !said) ++c.fn;
  }
  c.tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  c.fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
  return c;
}

// ROC from thresholds at each distinct score, highest first. A run of tied
// scores moves the curve in a single diagonal step.
inline std::vector<std::pair<double, double>> RocCurve(
    const std::vector<Prediction>& preds) {
  CheckPredictions(preds);
  std::vector<const Prediction*> sorted;
  for (const Prediction& p : preds) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const Prediction* a, const Prediction* b) { return a->score > b->score; });
  int64_t pos = 0;
  int64_t neg = 0;
  for (const Prediction& p : preds) (p.truth == Membership::kMember ? pos : neg)++;
  std::vector<std::pair<double, double>> roc{{0.0, 0.0}};
  int64_t tp = 0;
  int64_t fp = 0;
  for (size_t i = 0; i < sorted.size();) {
    size_t j = i;
    while (j < sorted.size() && sorted[j]->score == sorted[i]->score) {
      (sorted[j]->truth == Membership::kMember ? tp : fp)++;
      ++j;
    }
    roc.emplace_back(static_cast<double>(fp) / neg, static_cast<double>(tp) / pos);
    i = j;
  }
  return roc;
}

inline double Auc(const std::vector<Prediction>& preds) {
  CheckPredictions(preds);
  std::vector<const Prediction*> sorted;
  for (const Prediction& p : preds) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const Prediction* a, const Prediction* b) { return a->score > b->score; });
  int64_t pos = 0;
  int64_t neg = 0;
  for (const Prediction& p : preds) (p.truth == Membership::kMember ? pos : neg)++;
  // Twice the area in count units, accumulated exactly.
  int64_t area2 = 0;
  int64_t tp = 0;
  int64_t fp = 0;
  for (size_t i = 0; i < sorted.size();) {
    int64_t dtp = 0;
    int64_t dfp = 0;
    size_t j = i;
    while (j < sorted.size() && sorted[j]->score == sorted[i]->score) {
      (sorted[j]->truth == Membership::kMember ? dtp : dfp)++;
      ++j;
    }
    area2 += dfp * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    i = j;
  }
  return static_cast<double>(area2) / (2.0 * static_cast<double>(pos) *
                                       static_cast<double>(neg));
}

inline EvalReport Evaluate(const std::vector<Prediction>& preds) {
  EvalReport r;
  r.counts = ConfusionOf(preds);
  r.tpr = r.counts.tpr;
  r.fpr = r.counts.fpr;
  r.auc = Auc(preds);
  r.roc_points = RocCurve(preds);
  return r;
}

inline Json ReportToJson(const EvalReport& r) {
  Json roc = Json::array();
  for (const auto& [fpr, tpr] : r.roc_points) roc.push_back(Json::array({fpr, tpr}));
  return Json{{"tpr", r.tpr},
              {"fpr", r.fpr},
              {"auc", r.auc},
              {"counts",
               {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn},
                {"fn", r.counts.fn}}},
              {"roc_points", roc}};
}

inline Json SummaryToJson(const EvalReport& r) {
  return Json{{"tpr", r.tpr}, {"fpr", r.fpr}, {"auc", r.auc}};
}

namespace internal {

// Strips trailing whitespace on every line, then trailing blank lines.
inline std::string NormalizeTrailing(const std::string& s) {
  std::string out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t end = s.find('\n', start);
    if (end == std::string::npos) end = s.size();
    std::string line = s.substr(start, end - start);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) {
      line.pop_back();
    }
    out += line;
    out += '\n';
    start = end + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

}  // namespace internal

// Exact-match membership guess on the completion of the original prefix.
inline Membership GtMatch(const std::string& y, const std::string& y_hat) {
  return internal::NormalizeTrailing(y) == internal::NormalizeTrailing(y_hat)
             ? Membership::kMember
             : Membership::kNonmember;
}

struct RankEntry {
  std::string sample_id;
  double perplexity = 1.0;
};

// The ceil(n/2) lowest-perplexity samples are members; equal perplexities
// are ordered by sample id.
inline std::map<std::string, Membership> PplRank(std::vector<RankEntry> scored) {
  Require(!scored.empty(), "perplexity ranking needs at least one sample");
  for (const RankEntry& e : scored) {
    Require(std::isfinite(e.perplexity),
            "perplexity of '" + e.sample_id + "' is not finite");
  }
  std::sort(scored.begin(), scored.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.perplexity != b.perplexity) return a.perplexity < b.perplexity;
    return a.sample_id < b.sample_id;
  });
  const size_t members = (scored.size() + 1) / 2;
  std::map<std::string, Membership> out;
  for (size_t i = 0; i < scored.size(); ++i) {
    out[scored[i].sample_id] =
        i < members ? Membership::kMember : Membership::kNonmember;
  }
  return out;
}

// Rank score in (0, 1], strictly decreasing in perplexity.
inline double RankScore(double perplexity) { return 1.0 / (1.0 + perplexity); }

}  // namespace codemia::metrics

#endif  // CODEMIA_METRICS_HPP_
