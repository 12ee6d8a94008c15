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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "codemia/embed.hpp"
#include "codemia/features.hpp"
#include "codemia/metrics.hpp"
#include "codemia/mlp.hpp"
#include "codemia/perturb.hpp"
#include "codemia/pipeline.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace codemia {
namespace {

namespace fs = std::filesystem;
using testing::ReadFile;
using testing::TempDir;
using testing::WriteFile;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Semantics preservation on the bundled programs.

Outcome Semantics() {
  const fs::path programs = fs::path(CODEMIA_TEST_DATA_DIR) / "programs";
  TempDir dir("semantics");
  Json manifest = Json::array();
  int n_programs = 0;
  std::vector<fs::path> sources;
  for (const auto& e : fs::directory_iterator(programs)) {
    if (e.path().extension() == ".py") sources.push_back(e.path());
  }
  std::sort(sources.begin(), sources.end());
  for (const fs::path& src : sources) {
    ++n_programs;
    const std::string text = ReadFile(src);
    const std::string stem = src.stem().string();
    Json variants = Json::array();
    for (uint64_t seed : {uint64_t{42}, uint64_t{7}}) {
      const corpus::Sample sample{stem, text, "", corpus::Origin::kTrainPool};
      for (const auto& v : perturb::GenerateVariants(sample, seed)) {
        const fs::path out =
            dir / (stem + "_s" + std::to_string(seed) + "_v" + std::to_string(v.index) + ".py");
        WriteFile(out, v.text);
        variants.push_back(
            {{"path", out.string()}, {"family", perturb::FamilyName(v.transform.family)}});
      }
    }
    fs::path input = src;
    input.replace_extension(".in");
    manifest.push_back({{"name", stem},
                        {"original", src.string()},
                        {"input", input.string()},
                        {"variants", variants}});
  }
  WriteFile(dir / "manifest.json", manifest.dump());
  const std::string cmd = std::string(CODEMIA_PYTHON) + " " + CODEMIA_TEST_DATA_DIR +
                          "/semantics_harness.py " + (dir / "manifest.json").string();
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {false, "cannot start the Python harness"};
  std::string output;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  if (status != 0) return {false, "harness exited with status " + std::to_string(status)};
  const Json summary = Json::parse(output, nullptr, false);
  if (summary.is_discarded()) return {false, "harness output is not JSON"};
  const int checked = summary["checked"].get<int>();
  const Json& failures = summary["failures"];
  std::ostringstream detail;
  detail << n_programs << " programs, " << checked << " variants, " << failures.size()
         << " failures";
  for (size_t i = 0; i < failures.size() && i < 5; ++i) {
    detail << "\n    " << failures[i]["variant"].get<std::string>() << ": "
           << failures[i]["reason"].get<std::string>();
  }
  return {n_programs >= 30 && checked == n_programs * 22 && failures.empty(), detail.str()};
}

// ---------------------------------------------------------------------------
// 2. Cardinality and slot layout on fuzzed input. Also returns the variants
// JSONL text for the determinism check.

Outcome Cardinality(uint64_t seed, std::string* jsonl) {
  Rng rng(seed);
  static const char* kSpecial[] = {"pass", "#", "...", "1", "()", "'''", "\\", "x",
                                   "@", "é", "\t", "if"};
  int inputs = 0;
  int bad = 0;
  std::ostringstream out;
  while (inputs < 1000) {
    std::string src = inputs < 12 ? kSpecial[inputs] : testing::FuzzSource(rng);
    if (StripTrailingWhitespace(src).empty()) src += "x";
    ++inputs;
    const corpus::Sample s{"f" + std::to_string(inputs), src, "", corpus::Origin::kTestPool};
    std::vector<perturb::PerturbedVariant> vs;
    try {
      vs = perturb::GenerateVariants(s, rng.NextU64());
    } catch (const Error&) {
      ++bad;
      continue;
    }
    std::array<int, 5> counts{};
    bool ok = vs.size() == 11;
    for (size_t i = 0; i < vs.size(); ++i) {
      ok = ok && vs[i].index == static_cast<int>(i) &&
           vs[i].transform.family == perturb::kSlotFamilies[i];
      ++counts[static_cast<size_t>(vs[i].transform.family)];
      out << perturb::VariantToJson(vs[i]).dump() << "\n";
    }
    if (!ok || counts != std::array<int, 5>{2, 2, 2, 2, 3}) ++bad;
  }
  if (jsonl != nullptr) *jsonl = out.str();
  return {bad == 0, std::to_string(inputs) + " inputs, " + std::to_string(bad) + " violations"};
}

// ---------------------------------------------------------------------------
// 3. Feature formulas.

Outcome FeatureFormulas() {
  int failed = 0;
  std::ostringstream why;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) {
      ++failed;
      why << " " << what;
    }
  };
  const double l5 = std::log(0.5);
  const double l25 = std::log(0.25);
  check(std::abs(features::Perplexity(std::vector<double>{l5, l5}) - 2.0) <= 1e-8, "ppl-uniform");
  check(std::abs(features::Perplexity(std::vector<double>{0, 0, 0}) - 1.0) <= 1e-8, "ppl-certain");
  check(std::abs(features::Perplexity(std::vector<double>{l25, l5}) - 2.82842712) <= 1e-8,
        "ppl-mixed");
  check(std::abs(features::NormalizedPerplexity(2, 2) - 0.0) <= 1e-12, "norm-zero");
  check(std::abs(features::NormalizedPerplexity(3, 2) - 0.5) <= 1e-12, "norm-half");
  check(std::abs(features::NormalizedPerplexity(1, 2) + 0.5) <= 1e-12, "norm-negative");
  embed::Embedding a(embed::kDim, 0.0);
  embed::Embedding b(embed::kDim, 0.0);
  a[0] = 1;
  b[0] = 1;
  b[1] = 1;
  // 0.70710678 is 1/sqrt(2) printed to 8 places; hold the exact value to 1e-9.
  check(std::abs(embed::Cosine(a, b) - 1.0L / std::sqrt(2.0L)) <= 1e-9, "cosine");
  check(std::abs(embed::Cosine(a, b) - 0.70710678) <= 5e-9, "cosine-printed");

  // Layout on randomized inputs: each flattened position matches its field.
  Rng rng(27);
  const embed::HashEmbedder e(3);
  for (int t = 0; t < 200; ++t) {
    auto rec = [&](int k) {
      victim::CompletionRecord r;
      r.text = "v" + std::to_string(rng.Index(5)) + " = " + std::to_string(k);
      for (size_t i = 0, n = 1 + rng.Index(5); i < n; ++i) {
        r.tokens.push_back("t");
        r.token_logprobs.push_back(-rng.Uniform(0.0, 2.0));
      }
      return r;
    };
    std::vector<victim::CompletionRecord> perturbed;
    for (int s = 0; s < features::kSlots; ++s) perturbed.push_back(rec(s));
    const features::FeatureVector f = features::BuildFeatures("v1 = 3", rec(99), perturbed, e);
    const std::vector<double> flat = f.Flatten();
    bool ok = flat.size() == 27 && flat[0] == f.sim_base && flat[12] == f.sim_mean &&
              flat[13] == f.sim_std && flat[25] == f.ppl_mean && flat[26] == f.ppl_std;
    for (int s = 0; s < features::kSlots && ok; ++s) {
      ok = flat[1 + s] == f.sim[s] && flat[14 + s] == f.ppl[s];
    }
    check(ok, "layout");
    if (!ok) break;
  }
  return {failed == 0, failed == 0 ? "all formula cases within tolerance" : why.str()};
}

// ---------------------------------------------------------------------------
// 4. Gradient check of the classifier network. Also returns a JSON dump of
// the model and its analytic gradient for the determinism check.

Outcome GradientCheck(std::string* artifact) {
  mlp::MlpConfig cfg;
  cfg.seed = 42;
  mlp::MlpModel model = mlp::Init(cfg);
  Rng rng(DeriveSeed(42, "gradcheck"));
  for (mlp::Layer& l : model.layers) {
    for (double& bias : l.biases) bias = rng.Uniform(-0.05, 0.05);
  }
  std::vector<std::vector<double>> xs;
  std::vector<Membership> ys;
  std::vector<int> labels;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> x(27);
    for (double& v : x) v = rng.Uniform(-1.0, 1.0);
    xs.push_back(std::move(x));
    ys.push_back(i % 2 == 0 ? Membership::kMember : Membership::kNonmember);
    labels.push_back(mlp::LabelIndex(ys.back()));
  }
  mlp::Gradients grads;
  mlp::LossAndGradients(model, xs, ys, &grads);
  const oracle::IncrementalGradCheck check(model.layers, xs, labels);
  const oracle::GradCheckResult r = check.Run(grads, 1e-5L, 1e-7);
  size_t total = 0;
  for (const mlp::Layer& l : model.layers) total += l.weights.size() + l.biases.size();
  if (artifact != nullptr) {
    *artifact = mlp::ModelToJson(model).dump() + "\n" + mlp::ModelToJson({cfg, grads}).dump();
  }
  std::ostringstream d;
  d << r.checked << " of " << total << " parameters checked (" << r.kinks
    << " straddle a ReLU kink), worst relative error " << r.worst;
  // Kinks are excluded from the comparison; require them to be rare.
  const bool pass = r.checked + r.kinks == total && r.kinks * 1000 <= total && r.worst <= 1e-4;
  return {pass, d.str()};
}

// ---------------------------------------------------------------------------
// 5. AUC against pair counting.

Outcome AucOracle() {
  Rng rng(500);
  int bad = 0;
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const size_t n = 2 + rng.Index(199);
    const int levels = 1 + static_cast<int>(rng.Index(40));
    std::vector<metrics::Prediction> preds;
    for (size_t i = 0; i < n; ++i) {
      const Membership truth = i == 0   ? Membership::kMember
                               : i == 1 ? Membership::kNonmember
                               : rng.Bernoulli(0.5) ? Membership::kMember
                                                    : Membership::kNonmember;
      preds.push_back({"p" + std::to_string(i), truth,
                       static_cast<double>(rng.UniformInt(0, levels)) / levels,
                       Membership::kNonmember});
    }
    const double auc = metrics::Auc(preds);
    worst = std::max(worst, std::abs(auc - oracle::BruteForceAuc(preds)));
    if (std::abs(auc - oracle::BruteForceAuc(preds)) > 1e-12) ++bad;

    // Strictly increasing re-scoring leaves AUC unchanged.
    std::vector<metrics::Prediction> squashed = preds;
    for (auto& p : squashed) p.score = std::sqrt(p.score) * 0.5 + 0.25;
    if (metrics::Auc(squashed) != auc) ++bad;

    // Swapping the classes reflects the pair count exactly.
    std::vector<metrics::Prediction> negated = preds;
    int64_t pos = 0;
    for (auto& p : negated) {
      pos += p.truth == Membership::kMember;
      p.truth = p.truth == Membership::kMember ? Membership::kNonmember : Membership::kMember;
    }
    const double pairs2 = 2.0 * static_cast<double>(pos) * static_cast<double>(n - pos);
    if (std::llround(auc * pairs2) + std::llround(metrics::Auc(negated) * pairs2) !=
        std::llround(pairs2)) {
      ++bad;
    }
  }
  return {bad == 0, "500 sets, " + std::to_string(bad) + " violations, max |diff| " +
                        Fmt("%.3g", worst)};
}

// ---------------------------------------------------------------------------
// 6-8. Synthetic end-to-end run, ablations, determinism.

pipeline::PipelineConfig SimConfig() {
  pipeline::PipelineConfig c;
  c.seed = 42;
  c.victim.sim.member_noise = 0.02;
  c.victim.sim.nonmember_noise = 0.30;
  return c;
}

double BaselineAuc(const Json& report, const char* name) {
  const Json& b = report["baselines"][name];
  return b.is_null() ? -1.0 : b["auc"].get<double>();
}

Outcome EndToEnd(const fs::path& workdir, Json* report_out) {
  const Json report = pipeline::Simulate(SimConfig(), {50, 50, workdir});
  *report_out = report;
  const double auc = report["auc"].get<double>();
  const double gt = BaselineAuc(report, "gt_match");
  const double rank = BaselineAuc(report, "ppl_rank");
  return {auc >= 0.95 && auc > gt && auc > rank && gt >= 0 && rank >= 0,
          Fmt("classifier AUC %.4f, GT-Match AUC %.4f, PPL-Rank AUC %.4f", auc, gt, rank)};
}

double AblatedAuc(const fs::path& w, pipeline::PipelineConfig c, const std::string& tag) {
  using pipeline::Stage;
  const fs::path f = w / ("features_" + tag + ".jsonl");
  const fs::path m = w / ("model_" + tag + ".json");
  const fs::path p = w / ("predictions_" + tag + ".jsonl");
  const fs::path r = w / ("report_" + tag + ".json");
  pipeline::RunStage(Stage::kFeaturize, c, {w / "dataset.json", w / "completions.jsonl"}, f);
  pipeline::RunStage(Stage::kTrain, c, {w / "dataset.json", f}, m);
  pipeline::RunStage(Stage::kInfer, c, {w / "dataset.json", f, m}, p);
  pipeline::RunStage(Stage::kEvaluate, c, {w / "dataset.json", p}, r);
  return ReadJsonDocument(r)["auc"].get<double>();
}

Outcome Ablation(const fs::path& w, double full_auc) {
  pipeline::PipelineConfig no_std = SimConfig();
  no_std.feature_mask = {13};
  const double a13 = AblatedAuc(w, no_std, "no_sim_std");
  pipeline::PipelineConfig no_idl = SimConfig();
  no_idl.perturbation_mask = {"IDL"};
  const double aidl = AblatedAuc(w, no_idl, "no_idl");
  return {a13 <= full_auc && aidl <= full_auc,
          Fmt("full %.4f, without sim_std %.4f, without IDL %.4f", full_auc, a13, aidl)};
}

Outcome Determinism(const std::string& variants_a, const std::string& grad_a,
                    const fs::path& run_a) {
  std::string variants_b;
  std::string grad_b;
  Cardinality(2026, &variants_b);
  GradientCheck(&grad_b);
  TempDir run_b("accept_rerun");
  pipeline::Simulate(SimConfig(), {50, 50, run_b.path()});
  std::vector<std::string> differing;
  if (variants_a != variants_b) differing.push_back("fuzz variants");
  if (grad_a != grad_b) differing.push_back("gradient-check model");
  for (const char* name : {"variants.jsonl", "model.json", "report.json", "completions.jsonl",
                           "features.jsonl", "predictions.jsonl"}) {
    if (ReadFile(run_a / name) != ReadFile(run_b / name)) differing.push_back(name);
  }
  std::string detail = "byte-identical on rerun";
  if (!differing.empty()) {
    detail = "differs:";
    for (const auto& d : differing) detail += " " + d;
  }
  return {differing.empty(), detail};
}

int Main() {
  int failures = 0;
  auto report = [&](int n, const char* name, const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << name << " ("
              << o.detail << "; " << Fmt("%.1fs", secs) << ")" << std::endl;
  };

  std::string variants_a;
  std::string grad_a;
  TempDir run_a("accept_run");
  Json sim_report;
  report(1, "semantics preservation", [] { return Semantics(); });
  report(2, "variant cardinality and slots", [&] { return Cardinality(2026, &variants_a); });
  report(3, "feature formulas", [] { return FeatureFormulas(); });
  report(4, "gradient check", [&] { return GradientCheck(&grad_a); });
  report(5, "AUC oracle equivalence", [] { return AucOracle(); });
  report(6, "synthetic end-to-end", [&] { return EndToEnd(run_a.path(), &sim_report); });
  report(7, "ablation direction", [&] {
    if (!sim_report.contains("auc")) return Outcome{false, "criterion 6 produced no report"};
    return Ablation(run_a.path(), sim_report["auc"].get<double>());
  });
  report(8, "determinism", [&] { return Determinism(variants_a, grad_a, run_a.path()); });
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace codemia

int main() { return codemia::Main(); }
