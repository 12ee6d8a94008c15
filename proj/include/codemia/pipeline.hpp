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

#ifndef CODEMIA_PIPELINE_HPP_
#define CODEMIA_PIPELINE_HPP_

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "codemia/corpus.hpp"
#include "codemia/embed.hpp"
#include "codemia/embed_remote.hpp"
#include "codemia/error.hpp"
#include "codemia/features.hpp"
#include "codemia/jsonio.hpp"
#include "codemia/metrics.hpp"
#include "codemia/mlp.hpp"
#include "codemia/parallel.hpp"
#include "codemia/perturb.hpp"
#include "codemia/rng.hpp"
#include "codemia/synth.hpp"
#include "codemia/victim.hpp"
#include "codemia/victim_remote.hpp"

namespace codemia::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kTokenEnv = "MIA_VICTIM_TOKEN";

enum class Stage { kIngest, kPerturb, kQuery, kFeaturize, kTrain, kInfer, kEvaluate };

inline constexpr std::array<Stage, 7> kStages = {
    Stage::kIngest, Stage::kPerturb, Stage::kQuery,   Stage::kFeaturize,
    Stage::kTrain,  Stage::kInfer,   Stage::kEvaluate};

inline std::string_view StageName(Stage s) {
  static constexpr std::array<std::string_view, 7> kNames = {
      "ingest", "perturb", "query", "featurize", "train", "infer", "evaluate"};
  return kNames[static_cast<int>(s)];
}

inline Stage ParseStage(std::string_view name) {
  for (Stage s : kStages) {
    if (StageName(s) == name) return s;
  }
  Fail(ErrorKind::kValidation, "unknown stage '" + std::string(name) + "'");
}

// Artifact kinds and the stage that writes each.
inline constexpr std::string_view kDataset = "dataset";
inline constexpr std::string_view kVariants = "variants";
inline constexpr std::string_view kCompletions = "completions";
inline constexpr std::string_view kFeatures = "features";
inline constexpr std::string_view kModel = "model";
inline constexpr std::string_view kPredictions = "predictions";
inline constexpr std::string_view kReport = "report";
inline constexpr std::string_view kCorpus = "corpus";  // raw input, no header

inline std::string_view ProducerOf(std::string_view artifact) {
  if (artifact == kDataset) return "ingest";
  if (artifact == kVariants) return "perturb";
  if (artifact == kCompletions) return "query";
  if (artifact == kFeatures) return "featurize";
  if (artifact == kModel) return "train";
  if (artifact == kPredictions) return "infer";
  if (artifact == kReport) return "evaluate";
  return "a corpus file";
}

struct VictimSpec {
  std::string kind = "simulator";  // "simulator" or "remote"
  std::string url;
  // Simulator only. Without an explicit list, the simulated model has been
  // trained on every train_pool sample.
  std::optional<std::vector<std::string>> memorized_ids;
  victim::SimVictimConfig sim;
};

struct EmbedderSpec {
  std::string kind = "hash";  // "hash" or "remote"
  std::string url;
};

struct PipelineConfig {
  uint64_t seed = 0;
  VictimSpec victim;
  EmbedderSpec embedder;
  double known_fraction = 0.2;
  int max_tokens = victim::kDefaultMaxTokens;
  int max_prompt_tokens = 0;  // 0: no context limit
  int concurrency_limit = 4;
  std::vector<int> feature_mask;
  std::vector<std::string> perturbation_mask;
  Json classifier = Json::object();  // MlpConfig overrides
  int http_attempts = 3;
  int http_backoff_ms = 200;
  int http_timeout_s = 120;

  void Validate() const {
    Require(victim.kind == "simulator" || victim.kind == "remote",
            "victim.kind must be 'simulator' or 'remote'");
    Require(victim.kind != "remote" || !victim.url.empty(),
            "victim.url is required for a remote victim");
    Require(embedder.kind == "hash" || embedder.kind == "remote",
            "embedder.kind must be 'hash' or 'remote'");
    Require(embedder.kind != "remote" || !embedder.url.empty(),
            "embedder.url is required for a remote embedder");
    Require(known_fraction > 0.0 && known_fraction <= 1.0,
            "known_fraction must lie in (0, 1]");
    Require(max_tokens >= 1, "max_tokens must be >= 1");
    Require(max_prompt_tokens >= 0, "max_prompt_tokens must be >= 0");
    Require(concurrency_limit >= 1, "concurrency_limit must be >= 1");
    Require(http_attempts >= 1, "http.attempts must be >= 1");
    victim.sim.Validate();
    Mask();
  }

  features::FeatureMask Mask() const {
    return features::FeatureMask::FromLists(feature_mask, perturbation_mask);
  }

  Json VictimJson() const {
    Json v{{"kind", victim.kind}};
    if (victim.kind == "remote") {
      v["url"] = victim.url;
      return v;
    }
    v["member_noise"] = victim.sim.member_noise;
    v["nonmember_noise"] = victim.sim.nonmember_noise;
    v["member_logprob"] = victim.sim.member_logprob;
    v["nonmember_logprob"] = victim.sim.nonmember_logprob;
    v["sample_offset"] = victim.sim.sample_offset;
    v["jitter"] = victim.sim.jitter;
    if (victim.memorized_ids) v["memorized_ids"] = *victim.memorized_ids;
    return v;
  }

  Json ToJson() const {
    Json e{{"kind", embedder.kind}};
    if (embedder.kind == "remote") e["url"] = embedder.url;
    return Json{{"seed", seed},
                {"victim", VictimJson()},
                {"embedder", e},
                {"known_fraction", known_fraction},
                {"max_tokens", max_tokens},
                {"max_prompt_tokens", max_prompt_tokens},
                {"concurrency_limit", concurrency_limit},
                {"feature_mask", feature_mask},
                {"perturbation_mask", perturbation_mask},
                {"classifier", classifier},
                {"http",
                 {{"attempts", http_attempts},
                  {"backoff_ms", http_backoff_ms},
                  {"timeout_s", http_timeout_s}}}};
  }

  // Settings that change upstream artifacts. Masks, the classifier, and
  // transport knobs are excluded so ablations can reuse query output.
  std::string ConfigHash() const {
    Json j = ToJson();
    for (const char* key : {"concurrency_limit", "feature_mask", "perturbation_mask",
                            "classifier", "http"}) {
      j.erase(key);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(Fnv1a64(j.dump())));
    return buf;
  }

  static PipelineConfig FromJson(const Json& j) {
    const std::string where = "config";
    Require(j.is_object(), "config must be a JSON object");
    static const std::set<std::string> kKeys = {
        "seed",         "victim",          "embedder",      "known_fraction",
        "max_tokens",   "max_prompt_tokens", "concurrency_limit", "feature_mask",
        "perturbation_mask", "classifier", "http"};
    for (const auto& [key, _] : j.items()) {
      Require(kKeys.contains(key), "config: unknown field '" + key + "'");
    }
    PipelineConfig c;
    auto opt = [&](const Json& obj, const char* key, auto& field, const std::string& w) {
      if (obj.contains(key)) field = Field<std::decay_t<decltype(field)>>(obj, key, w);
    };
    opt(j, "seed", c.seed, where);
    opt(j, "known_fraction", c.known_fraction, where);
    opt(j, "max_tokens", c.max_tokens, where);
    opt(j, "max_prompt_tokens", c.max_prompt_tokens, where);
    opt(j, "concurrency_limit", c.concurrency_limit, where);
    opt(j, "feature_mask", c.feature_mask, where);
    opt(j, "perturbation_mask", c.perturbation_mask, where);
    if (j.contains("classifier")) {
      c.classifier = Field<Json>(j, "classifier", where);
      Require(c.classifier.is_object(), "config: field 'classifier' must be an object");
    }
    if (j.contains("victim")) {
      const Json v = Field<Json>(j, "victim", where);
      const std::string w = "config.victim";
      opt(v, "kind", c.victim.kind, w);
      opt(v, "url", c.victim.url, w);
      opt(v, "member_noise", c.victim.sim.member_noise, w);
      opt(v, "nonmember_noise", c.victim.sim.nonmember_noise, w);
      opt(v, "member_logprob", c.victim.sim.member_logprob, w);
      opt(v, "nonmember_logprob", c.victim.sim.nonmember_logprob, w);
      opt(v, "sample_offset", c.victim.sim.sample_offset, w);
      opt(v, "jitter", c.victim.sim.jitter, w);
      if (v.contains("memorized_ids")) {
        c.victim.memorized_ids = Field<std::vector<std::string>>(v, "memorized_ids", w);
      }
    }
    if (j.contains("embedder")) {
      const Json e = Field<Json>(j, "embedder", where);
      opt(e, "kind", c.embedder.kind, "config.embedder");
      opt(e, "url", c.embedder.url, "config.embedder");
    }
    if (j.contains("http")) {
      const Json h = Field<Json>(j, "http", where);
      opt(h, "attempts", c.http_attempts, "config.http");
      opt(h, "backoff_ms", c.http_backoff_ms, "config.http");
      opt(h, "timeout_s", c.http_timeout_s, "config.http");
    }
    c.Validate();
    return c;
  }
};

inline PipelineConfig LoadConfig(const fs::path& path) {
  return PipelineConfig::FromJson(ReadJsonDocument(path));
}

inline Provenance MakeProvenance(const PipelineConfig& c, std::string_view artifact) {
  Provenance p;
  p.artifact = artifact;
  p.seed = c.seed;
  p.config_hash = c.ConfigHash();
  return p;
}

// ---------------------------------------------------------------------------
// Artifact discovery

struct Artifact {
  fs::path path;
  std::string kind;
  std::optional<Provenance> provenance;
  Json document;          // JSON documents
  JsonlDocument records;  // JSONL artifacts
};

inline Artifact LoadArtifact(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kDependency, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  Artifact a;
  a.path = path;
  Json whole = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (whole.is_object() && whole.contains("provenance")) {
    a.provenance = Provenance::FromJson(whole["provenance"]);
    a.kind = a.provenance->artifact;
    a.document = std::move(whole);
    return a;
  }
  std::istringstream lines(text);
  a.records = ParseJsonl(lines, path.string());
  a.provenance = a.records.header;
  a.kind = a.provenance ? a.provenance->artifact : std::string(kCorpus);
  return a;
}

class Inputs {
 public:
  Inputs(const std::vector<fs::path>& paths, const PipelineConfig& config,
         Stage stage, bool force)
      : stage_(stage) {
    for (const fs::path& p : paths) {
      Artifact a = LoadArtifact(p);
      if (a.provenance && a.kind != kCorpus && !force &&
          a.provenance->config_hash != config.ConfigHash()) {
        Fail(ErrorKind::kValidation,
             p.string() + " was written with config_hash " +
                 a.provenance->config_hash + " but the current config hashes to " +
                 config.ConfigHash() + "; rerun upstream stages or pass --force");
      }
      if (by_kind_.contains(a.kind)) {
        Fail(ErrorKind::kValidation, "two '" + a.kind + "' inputs given");
      }
      by_kind_.emplace(a.kind, std::move(a));
    }
  }

  bool Has(std::string_view kind) const { return by_kind_.contains(std::string(kind)); }

  const Artifact& Get(std::string_view kind) const {
    auto it = by_kind_.find(std::string(kind));
    if (it == by_kind_.end()) {
      Fail(ErrorKind::kDependency,
           std::string(StageName(stage_)) + " needs a '" + std::string(kind) +
               "' artifact; run the \"" + std::string(ProducerOf(kind)) +
               "\" stage first and pass its output with --in");
    }
    return it->second;
  }

 private:
  Stage stage_;
  std::map<std::string, Artifact> by_kind_;
};

// ---------------------------------------------------------------------------
// Dataset: the ingested corpus together with its split plan.

struct Dataset {
  corpus::Corpus corpus;
  corpus::SplitPlan split;

  // Samples taking part in the split, in corpus order.
  std::vector<const corpus::Sample*> Participants() const {
    std::vector<const corpus::Sample*> out;
    for (const corpus::Sample& s : corpus.samples()) {
      if (split.LabelOf(s.id)) out.push_back(&s);
    }
    return out;
  }
};

inline Json DatasetToJson(const Dataset& d, const Provenance& p) {
  Json samples = Json::array();
  for (const corpus::Sample& s : d.corpus.samples()) samples.push_back(SampleToJson(s));
  return Json{{"provenance", p.ToJson()},
              {"name", d.corpus.name()},
              {"split", corpus::SplitToJson(d.split)},
              {"samples", samples}};
}

inline Dataset DatasetFromJson(const Json& j, const std::string& where) {
  Dataset d;
  const Json samples = Field<Json>(j, "samples", where);
  Require(samples.is_array(), where + ": field 'samples' must be an array");
  std::ostringstream lines;
  for (const Json& s : samples) lines << s.dump() << "\n";
  std::istringstream in(lines.str());
  d.corpus = corpus::ParseCorpus(in, where, j.value("name", std::string("corpus")));
  d.split = corpus::SplitFromJson(Field<Json>(j, "split", where));
  for (const auto* list : {&d.split.train_members, &d.split.train_nonmembers,
                           &d.split.eval_members, &d.split.eval_nonmembers}) {
    for (const std::string& id : *list) d.corpus.At(id);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Collaborators built from the config.

inline HttpOptions MakeHttpOptions(const PipelineConfig& c, bool with_token) {
  HttpOptions o;
  o.attempts = c.http_attempts;
  o.backoff = std::chrono::milliseconds(c.http_backoff_ms);
  o.timeout = std::chrono::seconds(c.http_timeout_s);
  if (with_token) {
    if (const char* token = std::getenv(kTokenEnv)) o.bearer_token = token;
  }
  return o;
}

inline std::unique_ptr<victim::Victim> MakeVictim(const PipelineConfig& c,
                                                  const corpus::Corpus& corpus) {
  if (c.victim.kind == "remote") {
    return std::make_unique<victim::RemoteVictim>(c.victim.url, MakeHttpOptions(c, true));
  }
  victim::SimVictimConfig sim = c.victim.sim;
  sim.seed = DeriveSeed(c.seed, "victim");
  if (c.victim.memorized_ids) {
    sim.memorized_ids.insert(c.victim.memorized_ids->begin(),
                             c.victim.memorized_ids->end());
  } else {
    for (const corpus::Sample& s : corpus.samples()) {
      if (s.origin == corpus::Origin::kTrainPool) sim.memorized_ids.insert(s.id);
    }
  }
  return std::make_unique<victim::SimVictim>(std::move(sim), corpus);
}

inline std::unique_ptr<embed::Embedder> MakeEmbedder(const PipelineConfig& c) {
  if (c.embedder.kind == "remote") {
    return std::make_unique<embed::RemoteEmbedder>(c.embedder.url,
                                                   MakeHttpOptions(c, false));
  }
  return std::make_unique<embed::HashEmbedder>(DeriveSeed(c.seed, "embedder"));
}

inline mlp::MlpConfig ClassifierConfig(const PipelineConfig& c, int input_dim) {
  Json j = c.classifier;
  Require(!j.contains("input_dim"), "classifier.input_dim is derived from the features");
  if (!j.contains("seed")) j["seed"] = DeriveSeed(c.seed, "classifier");
  j["input_dim"] = input_dim;
  return mlp::MlpConfig::FromJson(j, "config.classifier");
}

// Drops leading prompt pieces until at most `limit` remain.
inline std::string TruncatePrompt(const std::string& prompt, int limit, bool* truncated) {
  *truncated = false;
  if (limit <= 0) return prompt;
  const std::vector<std::string> pieces = codeast::Pieces(prompt);
  if (pieces.size() <= static_cast<size_t>(limit)) return prompt;
  *truncated = true;
  std::string out;
  for (size_t i = pieces.size() - limit; i < pieces.size(); ++i) out += pieces[i];
  return out;
}

// ---------------------------------------------------------------------------
// Stages operating on in-memory values.

inline Dataset IngestCorpus(corpus::Corpus corpus, const PipelineConfig& c) {
  Dataset d;
  d.split = corpus::MakeSplit(corpus, c.known_fraction, DeriveSeed(c.seed, "split"));
  d.corpus = std::move(corpus);
  return d;
}

inline std::vector<perturb::PerturbedVariant> PerturbAll(const corpus::Corpus& corpus,
                                                         const PipelineConfig& c) {
  std::vector<std::vector<perturb::PerturbedVariant>> slots(corpus.size());
  ParallelFor(corpus.size(), static_cast<size_t>(c.concurrency_limit), [&](size_t i) {
    slots[i] = perturb::GenerateVariants(corpus.samples()[i], DeriveSeed(c.seed, "perturb"));
  });
  std::vector<perturb::PerturbedVariant> out;
  for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
  return out;
}

struct QueryResult {
  std::vector<victim::CompletionRecord> completions;  // 12 per sample
  std::map<std::string, double> perplexity;          // scoring endpoint, by sample
};

inline QueryResult QueryAll(const Dataset& d,
                            const std::vector<perturb::PerturbedVariant>& variants,
                            const victim::Victim& model, const PipelineConfig& c) {
  std::map<std::string, std::vector<const perturb::PerturbedVariant*>> by_parent;
  for (const auto& v : variants) by_parent[v.parent_id].push_back(&v);

  struct Job {
    std::string prompt;
    std::string prompt_id;
  };
  std::vector<Job> jobs;
  const std::vector<const corpus::Sample*> samples = d.Participants();
  for (const corpus::Sample* s : samples) {
    auto it = by_parent.find(s->id);
    if (it == by_parent.end() ||
        it->second.size() != static_cast<size_t>(perturb::kVariantsPerSample)) {
      Fail(ErrorKind::kValidation, "variants artifact lacks the " +
                                       std::to_string(perturb::kVariantsPerSample) +
                                       " variants of sample '" + s->id + "'");
    }
    std::vector<const perturb::PerturbedVariant*> vs = it->second;
    std::sort(vs.begin(), vs.end(), [](auto* a, auto* b) { return a->index < b->index; });
    jobs.push_back({s->prefix, s->id});
    for (const auto* v : vs) jobs.push_back({v->text, victim::PromptId(s->id, v->index)});
  }

  QueryResult result;
  result.completions.resize(jobs.size());
  ParallelFor(jobs.size(), static_cast<size_t>(c.concurrency_limit), [&](size_t i) {
    bool truncated = false;
    const std::string prompt = TruncatePrompt(jobs[i].prompt, c.max_prompt_tokens, &truncated);
    victim::CompletionRecord r = model.Complete(prompt, jobs[i].prompt_id, c.max_tokens);
    r.truncated = truncated;
    result.completions[i] = std::move(r);
  });

  std::vector<std::optional<double>> ppl(samples.size());
  bool unsupported = false;
  try {
    ParallelFor(samples.size(), static_cast<size_t>(c.concurrency_limit), [&](size_t i) {
      const victim::ScoreResult s = model.Score(corpus::ScoringText(*samples[i]));
      ppl[i] = features::Perplexity(s.token_logprobs);
    });
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kUnsupported) throw;
    unsupported = true;
    std::cerr << "warning: " << e.what() << "; the perplexity baseline is skipped\n";
  }
  if (!unsupported) {
    for (size_t i = 0; i < samples.size(); ++i) result.perplexity[samples[i]->id] = *ppl[i];
  }
  return result;
}

inline std::vector<Json> QueryRecords(const QueryResult& q) {
  std::vector<Json> out;
  for (const auto& r : q.completions) {
    Json j = victim::RecordToJson(r);
    j["type"] = "completion";
    out.push_back(std::move(j));
  }
  for (const auto& [id, ppl] : q.perplexity) {
    out.push_back(Json{{"type", "score"}, {"sample_id", id}, {"perplexity", ppl}});
  }
  return out;
}

inline QueryResult QueryFromRecords(const JsonlDocument& doc, const std::string& origin) {
  QueryResult q;
  for (const JsonlRecord& rec : doc.records) {
    const std::string where = origin + ":" + std::to_string(rec.line);
    const std::string type = rec.value.value("type", "completion");
    if (type == "score") {
      const double ppl = Field<double>(rec.value, "perplexity", where);
      Require(std::isfinite(ppl) && ppl >= 1.0, where + ": field 'perplexity' must be >= 1");
      q.perplexity[Field<std::string>(rec.value, "sample_id", where)] = ppl;
    } else {
      Require(type == "completion", where + ": field 'type' must be completion or score");
      q.completions.push_back(victim::RecordFromJson(rec.value, where));
    }
  }
  return q;
}

inline std::vector<features::FeatureRecord> FeaturizeAll(const Dataset& d,
                                                         const QueryResult& q,
                                                         const embed::Embedder& embedder,
                                                         const PipelineConfig& c) {
  std::map<std::string, const victim::CompletionRecord*> by_prompt;
  for (const auto& r : q.completions) by_prompt[r.prompt_id] = &r;
  auto lookup = [&](const std::string& prompt_id) -> const victim::CompletionRecord& {
    auto it = by_prompt.find(prompt_id);
    if (it == by_prompt.end()) {
      Fail(ErrorKind::kValidation,
           "completions artifact has no record for prompt '" + prompt_id + "'");
    }
    return *it->second;
  };

  const features::FeatureMask mask = c.Mask();
  const std::vector<const corpus::Sample*> samples = d.Participants();
  std::vector<features::FeatureRecord> out(samples.size());
  ParallelFor(samples.size(), static_cast<size_t>(c.concurrency_limit), [&](size_t i) {
    const corpus::Sample& s = *samples[i];
    std::vector<victim::CompletionRecord> perturbed;
    for (int k = 0; k < perturb::kVariantsPerSample; ++k) {
      perturbed.push_back(lookup(victim::PromptId(s.id, k)));
    }
    const features::FeatureVector f =
        features::BuildFeatures(s.suffix, lookup(s.id), perturbed, embedder);
    const features::ProjectedFeatures p = features::Project(f, mask);
    out[i] = {s.id, d.split.LabelOf(s.id), p.ids, p.values, f.degenerate};
  });
  return out;
}

inline std::vector<features::FeatureRecord> FeaturesFromRecords(const JsonlDocument& doc,
                                                                const std::string& origin) {
  std::vector<features::FeatureRecord> out;
  for (const JsonlRecord& rec : doc.records) {
    out.push_back(features::FeatureRecordFromJson(
        rec.value, origin + ":" + std::to_string(rec.line)));
  }
  return out;
}

namespace internal {

struct Selected {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> xs;
  std::vector<Membership> ys;
  std::vector<int> feature_ids;
};

inline Selected Select(const std::vector<features::FeatureRecord>& records,
                       const corpus::SplitPlan& split, bool train) {
  std::map<std::string, const features::FeatureRecord*> by_id;
  for (const auto& r : records) by_id[r.sample_id] = &r;
  Selected s;
  const auto& members = train ? split.train_members : split.eval_members;
  const auto& nonmembers = train ? split.train_nonmembers : split.eval_nonmembers;
  std::vector<std::pair<std::string, Membership>> wanted;
  for (const auto& id : members) wanted.emplace_back(id, Membership::kMember);
  for (const auto& id : nonmembers) wanted.emplace_back(id, Membership::kNonmember);
  for (const auto& [id, label] : wanted) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      Fail(ErrorKind::kValidation, "features artifact has no record for '" + id + "'");
    }
    if (s.ids.empty()) {
      s.feature_ids = it->second->feature_ids;
    } else if (it->second->feature_ids != s.feature_ids) {
      Fail(ErrorKind::kValidation, "feature records disagree on 'feature_ids'");
    }
    s.ids.push_back(id);
    s.xs.push_back(it->second->features);
    s.ys.push_back(label);
  }
  return s;
}

}  // namespace internal

struct TrainedModel {
  mlp::MlpModel model;
  std::vector<int> feature_ids;
};

inline TrainedModel TrainClassifier(const Dataset& d,
                                    const std::vector<features::FeatureRecord>& records,
                                    const PipelineConfig& c) {
  const internal::Selected s = internal::Select(records, d.split, /*train=*/true);
  Require(!s.ids.empty(), "the split has no training samples");
  TrainedModel t;
  t.feature_ids = s.feature_ids;
  t.model = mlp::Init(ClassifierConfig(c, static_cast<int>(s.feature_ids.size())));
  mlp::Train(t.model, s.xs, s.ys);
  return t;
}

inline Json ModelDocument(const TrainedModel& t, const Provenance& p) {
  Json j = mlp::ModelToJson(t.model);
  j["provenance"] = p.ToJson();
  j["feature_ids"] = t.feature_ids;
  return j;
}

inline TrainedModel ModelFromDocument(const Json& j, const std::string& where) {
  TrainedModel t;
  t.model = mlp::ModelFromJson(j, where);
  t.feature_ids = Field<std::vector<int>>(j, "feature_ids", where);
  Require(t.feature_ids.size() == static_cast<size_t>(t.model.config.input_dim),
          where + ": 'feature_ids' does not match the model input size");
  return t;
}

inline std::vector<metrics::Prediction> InferAll(
    const Dataset& d, const std::vector<features::FeatureRecord>& records,
    const TrainedModel& t) {
  const internal::Selected s = internal::Select(records, d.split, /*train=*/false);
  Require(!s.ids.empty(), "the split has no evaluation samples");
  if (s.feature_ids != t.feature_ids) {
    Fail(ErrorKind::kValidation,
         "features were built with a different feature mask than the model");
  }
  std::vector<metrics::Prediction> out;
  for (size_t i = 0; i < s.ids.size(); ++i) {
    const mlp::Verdict v = mlp::Predict(t.model, s.xs[i]);
    out.push_back({s.ids[i], s.ys[i], v.member_probability, v.label});
  }
  return out;
}

inline Json PredictionToJson(const metrics::Prediction& p) {
  return Json{{"sample_id", p.sample_id},
              {"truth", MembershipName(p.truth)},
              {"score", p.score},
              {"label", MembershipName(p.label)}};
}

inline metrics::Prediction PredictionFromJson(const Json& j, const std::string& where) {
  metrics::Prediction p;
  p.sample_id = Field<std::string>(j, "sample_id", where);
  p.truth = ParseMembership(Field<std::string>(j, "truth", where));
  p.score = Field<double>(j, "score", where);
  p.label = ParseMembership(Field<std::string>(j, "label", where));
  return p;
}

// Classifier report plus the exact-match and perplexity-rank baselines over
// the same evaluation samples.
inline Json EvaluateAll(const Dataset& d, const std::vector<metrics::Prediction>& preds,
                        const std::optional<QueryResult>& q) {
  Json report = metrics::ReportToJson(metrics::Evaluate(preds));
  Json baselines = {{"gt_match", nullptr}, {"ppl_rank", nullptr}};
  if (q) {
    std::map<std::string, const victim::CompletionRecord*> base;
    for (const auto& r : q->completions) base[r.prompt_id] = &r;
    std::vector<metrics::Prediction> gt;
    std::vector<metrics::RankEntry> ranked;
    for (const metrics::Prediction& p : preds) {
      auto it = base.find(p.sample_id);
      if (it == base.end()) {
        Fail(ErrorKind::kValidation, "completions artifact has no record for '" +
                                         p.sample_id + "'");
      }
      const Membership m = metrics::GtMatch(d.corpus.At(p.sample_id).suffix, it->second->text);
      gt.push_back({p.sample_id, p.truth, m == Membership::kMember ? 1.0 : 0.0, m});
      auto ppl = q->perplexity.find(p.sample_id);
      if (ppl != q->perplexity.end()) ranked.push_back({p.sample_id, ppl->second});
    }
    baselines["gt_match"] = metrics::SummaryToJson(metrics::Evaluate(gt));
    if (ranked.size() == preds.size()) {
      const auto labels = metrics::PplRank(ranked);
      std::vector<metrics::Prediction> rank;
      for (size_t i = 0; i < preds.size(); ++i) {
        rank.push_back({preds[i].sample_id, preds[i].truth,
                        metrics::RankScore(ranked[i].perplexity),
                        labels.at(preds[i].sample_id)});
      }
      baselines["ppl_rank"] = metrics::SummaryToJson(metrics::Evaluate(rank));
    }
  }
  report["baselines"] = baselines;
  return report;
}

// ---------------------------------------------------------------------------
// File-level stage runner used by the CLI.

inline Dataset LoadDataset(const Inputs& in) {
  const Artifact& a = in.Get(kDataset);
  return DatasetFromJson(a.document, a.path.string());
}

inline std::optional<QueryResult> LoadQuery(const Inputs& in, bool required) {
  if (!required && !in.Has(kCompletions)) return std::nullopt;
  const Artifact& a = in.Get(kCompletions);
  return QueryFromRecords(a.records, a.path.string());
}

inline void RunStage(Stage stage, const PipelineConfig& c, const std::vector<fs::path>& in_paths,
                     const fs::path& out, bool force = false) {
  c.Validate();
  Require(!out.empty(), std::string(StageName(stage)) + " needs --out");
  if (stage == Stage::kIngest) {
    Require(in_paths.size() == 1, "ingest takes exactly one --in corpus file");
    Dataset d = IngestCorpus(corpus::Ingest(in_paths[0]), c);
    WriteJsonDocument(out, DatasetToJson(d, MakeProvenance(c, kDataset)));
    return;
  }
  const Inputs in(in_paths, c, stage, force);
  const Dataset d = LoadDataset(in);
  switch (stage) {
    case Stage::kPerturb: {
      std::vector<Json> records;
      for (const auto& v : PerturbAll(d.corpus, c)) records.push_back(perturb::VariantToJson(v));
      WriteJsonl(out, MakeProvenance(c, kVariants), records);
      return;
    }
    case Stage::kQuery: {
      const Artifact& a = in.Get(kVariants);
      std::vector<perturb::PerturbedVariant> variants;
      for (const JsonlRecord& r : a.records.records) {
        variants.push_back(perturb::VariantFromJson(
            r.value, a.path.string() + ":" + std::to_string(r.line)));
      }
      const auto model = MakeVictim(c, d.corpus);
      WriteJsonl(out, MakeProvenance(c, kCompletions),
                 QueryRecords(QueryAll(d, variants, *model, c)));
      return;
    }
    case Stage::kFeaturize: {
      const QueryResult q = *LoadQuery(in, /*required=*/true);
      const auto embedder = MakeEmbedder(c);
      std::vector<Json> records;
      for (const auto& r : FeaturizeAll(d, q, *embedder, c)) {
        records.push_back(features::FeatureRecordToJson(r));
      }
      WriteJsonl(out, MakeProvenance(c, kFeatures), records);
      return;
    }
    case Stage::kTrain: {
      const Artifact& a = in.Get(kFeatures);
      const TrainedModel t =
          TrainClassifier(d, FeaturesFromRecords(a.records, a.path.string()), c);
      WriteJsonDocument(out, ModelDocument(t, MakeProvenance(c, kModel)));
      return;
    }
    case Stage::kInfer: {
      const Artifact& f = in.Get(kFeatures);
      const Artifact& m = in.Get(kModel);
      const TrainedModel t = ModelFromDocument(m.document, m.path.string());
      std::vector<Json> records;
      for (const auto& p : InferAll(d, FeaturesFromRecords(f.records, f.path.string()), t)) {
        records.push_back(PredictionToJson(p));
      }
      WriteJsonl(out, MakeProvenance(c, kPredictions), records);
      return;
    }
    case Stage::kEvaluate: {
      const Artifact& a = in.Get(kPredictions);
      std::vector<metrics::Prediction> preds;
      for (const JsonlRecord& r : a.records.records) {
        preds.push_back(
            PredictionFromJson(r.value, a.path.string() + ":" + std::to_string(r.line)));
      }
      Json report = EvaluateAll(d, preds, LoadQuery(in, /*required=*/false));
      report["provenance"] = MakeProvenance(c, kReport).ToJson();
      WriteJsonDocument(out, report);
      return;
    }
    case Stage::kIngest:
      break;
  }
}

// ---------------------------------------------------------------------------
// One-shot synthetic run.

struct SimulateOptions {
  int n_members = 50;
  int n_nonmembers = 50;
  fs::path workdir;
};

inline void WriteCorpus(const fs::path& path, const corpus::Corpus& corpus) {
  std::vector<Json> records;
  for (const corpus::Sample& s : corpus.samples()) records.push_back(corpus::SampleToJson(s));
  WriteJsonl(path, std::nullopt, records);
}

// Generates a corpus whose train_pool is exactly what the simulated victim
// memorized, runs every stage through files in `workdir`, and returns the
// evaluation report.
inline Json Simulate(const PipelineConfig& config, const SimulateOptions& o) {
  Require(o.n_members >= 4 && o.n_nonmembers >= 4,
          "simulate needs at least 4 members and 4 nonmembers");
  Require(config.victim.kind == "simulator", "simulate requires the simulator victim");
  Require(!o.workdir.empty(), "simulate needs a working directory");
  PipelineConfig c = config;
  const corpus::Corpus corpus = synth::SyntheticCorpus(o.n_members, o.n_nonmembers, c.seed);
  if (c.victim.memorized_ids) {
    const std::set<std::string> memorized(c.victim.memorized_ids->begin(),
                                          c.victim.memorized_ids->end());
    corpus::Corpus relabeled(corpus.name());
    for (corpus::Sample s : corpus.samples()) {
      s.origin = memorized.contains(s.id) ? corpus::Origin::kTrainPool
                                          : corpus::Origin::kTestPool;
      relabeled.Add(std::move(s));
    }
    bool any_member = false;
    bool any_nonmember = false;
    for (const corpus::Sample& s : relabeled.samples()) {
      (s.origin == corpus::Origin::kTrainPool ? any_member : any_nonmember) = true;
    }
    Require(any_member && any_nonmember,
            "the memorized set leaves a single truth class; membership cannot be "
            "trained or evaluated");
    WriteCorpus(o.workdir / "corpus.jsonl", relabeled);
  } else {
    WriteCorpus(o.workdir / "corpus.jsonl", corpus);
  }

  const fs::path w = o.workdir;
  RunStage(Stage::kIngest, c, {w / "corpus.jsonl"}, w / "dataset.json");
  RunStage(Stage::kPerturb, c, {w / "dataset.json"}, w / "variants.jsonl");
  RunStage(Stage::kQuery, c, {w / "dataset.json", w / "variants.jsonl"},
           w / "completions.jsonl");
  RunStage(Stage::kFeaturize, c, {w / "dataset.json", w / "completions.jsonl"},
           w / "features.jsonl");
  RunStage(Stage::kTrain, c, {w / "dataset.json", w / "features.jsonl"}, w / "model.json");
  RunStage(Stage::kInfer, c,
           {w / "dataset.json", w / "features.jsonl", w / "model.json"},
           w / "predictions.jsonl");
  RunStage(Stage::kEvaluate, c,
           {w / "dataset.json", w / "predictions.jsonl", w / "completions.jsonl"},
           w / "report.json");
  return ReadJsonDocument(w / "report.json");
}

}  // namespace codemia::pipeline

#endif  // CODEMIA_PIPELINE_HPP_
