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

// mia: membership inference audit of a code completion model.
//
//   mia ingest    --in corpus.jsonl --out dataset.json
//   mia perturb   --in dataset.json --out variants.jsonl
//   mia query     --in dataset.json --in variants.jsonl --out completions.jsonl
//   mia featurize --in dataset.json --in completions.jsonl --out features.jsonl
//   mia train     --in dataset.json --in features.jsonl --out model.json
//   mia infer     --in dataset.json --in features.jsonl --in model.json --out predictions.jsonl
//   mia evaluate  --in dataset.json --in predictions.jsonl [--in completions.jsonl] --out report.json
//   mia simulate  --members 50 --nonmembers 50 --workdir run/ [--out report.json]
//
// Exit status: 0 success, 1 validation error, 2 dependency or transport error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "codemia/error.hpp"
#include "codemia/jsonio.hpp"
#include "codemia/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using codemia::ErrorKind;

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDependency:
    case ErrorKind::kTransport:
    case ErrorKind::kProtocol:
      return 2;
    default:
      return 1;
  }
}

struct Options {
  std::string config;
  std::vector<std::string> in;
  std::string out;
  std::optional<uint64_t> seed;
  bool force = false;
  int members = 50;
  int nonmembers = 50;
  std::string workdir;
};

const char* Describe(codemia::pipeline::Stage s) {
  using codemia::pipeline::Stage;
  switch (s) {
    case Stage::kIngest: return "Load a corpus and fix the known/eval split";
    case Stage::kPerturb: return "Write 11 semantics-preserving variants per sample";
    case Stage::kQuery: return "Collect victim completions for every prompt";
    case Stage::kFeaturize: return "Build 27-dim stability feature vectors";
    case Stage::kTrain: return "Train the membership classifier on known samples";
    case Stage::kInfer: return "Predict membership for the eval samples";
    case Stage::kEvaluate: return "Report TPR, FPR, AUC and baselines";
  }
  return "";
}

codemia::pipeline::PipelineConfig LoadConfig(const Options& o) {
  codemia::pipeline::PipelineConfig c;
  if (!o.config.empty()) c = codemia::pipeline::LoadConfig(o.config);
  if (o.seed) c.seed = *o.seed;
  c.Validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Membership inference audit for code completion models"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Pipeline config (JSON)");
    sub->add_option("--in", o.in, "Input artifact (repeatable)");
    sub->add_option("--out", o.out, "Output artifact");
    sub->add_option("--seed", o.seed, "Override the config seed");
  };
  std::vector<std::pair<CLI::App*, codemia::pipeline::Stage>> stages;
  for (codemia::pipeline::Stage s : codemia::pipeline::kStages) {
    CLI::App* sub = app.add_subcommand(std::string(codemia::pipeline::StageName(s)), Describe(s));
    common(sub);
    sub->add_flag("--force", o.force, "Accept inputs written under another config");
    stages.emplace_back(sub, s);
  }
  CLI::App* simulate =
      app.add_subcommand("simulate", "Synthetic end-to-end run against the simulator");
  common(simulate);
  simulate->add_option("--members", o.members, "Number of memorized samples");
  simulate->add_option("--nonmembers", o.nonmembers, "Number of unseen samples");
  simulate->add_option("--workdir", o.workdir, "Directory for stage artifacts")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const codemia::pipeline::PipelineConfig config = LoadConfig(o);
    if (simulate->parsed()) {
      const codemia::Json report = codemia::pipeline::Simulate(
          config, {o.members, o.nonmembers, fs::path(o.workdir)});
      if (!o.out.empty()) codemia::WriteJsonDocument(o.out, report);
      std::cout << report.dump(2) << "\n";
      return 0;
    }
    for (const auto& [sub, stage] : stages) {
      if (!sub->parsed()) continue;
      std::vector<fs::path> inputs(o.in.begin(), o.in.end());
      codemia::pipeline::RunStage(stage, config, inputs, o.out, o.force);
    }
    return 0;
  } catch (const codemia::Error& e) {
    std::cerr << "mia: " << e.what() << "\n";
    return ExitCode(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "mia: " << e.what() << "\n";
    return 1;
  }
}
