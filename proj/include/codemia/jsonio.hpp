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

#ifndef CODEMIA_JSONIO_HPP_
#define CODEMIA_JSONIO_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "codemia/error.hpp"
#include "json.hpp"

namespace codemia {

using Json = nlohmann::json;

inline constexpr std::string_view kToolVersion = "0.1.0";

// Stamped on every artifact a pipeline stage writes. JSONL artifacts carry it
// as a first line {"header": {...}}; JSON documents under "provenance".
struct Provenance {
  std::string artifact;
  std::string tool_version{kToolVersion};
  uint64_t seed = 0;
  std::string config_hash;

  Json ToJson() const {
    return Json{{"artifact", artifact},
                {"tool_version", tool_version},
                {"seed", seed},
                {"config_hash", config_hash}};
  }
  static Provenance FromJson(const Json& j) {
    Provenance p;
    p.artifact = j.value("artifact", "");
    p.tool_version = j.value("tool_version", "");
    p.seed = j.value("seed", uint64_t{0});
    p.config_hash = j.value("config_hash", "");
    return p;
  }
};

struct JsonlRecord {
  size_t line = 0;  // 1-based line number in the file
  Json value;
};

struct JsonlDocument {
  std::optional<Provenance> header;
  std::vector<JsonlRecord> records;
};

inline JsonlDocument ParseJsonl(std::istream& in, const std::string& origin) {
  JsonlDocument doc;
  std::string text;
  size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    Json value;
    try {
      value = Json::parse(text);
    } catch (const Json::parse_error& e) {
      Fail(ErrorKind::kParse, origin + ":" + std::to_string(line) +
                                  ": malformed JSON (" + e.what() + ")");
    }
    if (!value.is_object()) {
      Fail(ErrorKind::kParse, origin + ":" + std::to_string(line) +
                                  ": expected a JSON object");
    }
    if (value.size() == 1 && value.contains("header")) {
      doc.header = Provenance::FromJson(value["header"]);
      continue;
    }
    doc.records.push_back({line, std::move(value)});
  }
  return doc;
}

inline JsonlDocument ReadJsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    Fail(ErrorKind::kDependency, "cannot open " + path.string());
  }
  return ParseJsonl(in, path.string());
}

inline void WriteFileAtomically(const std::filesystem::path& path,
                                const std::string& contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorKind::kValidation, "cannot write " + tmp.string());
    out << contents;
  }
  std::filesystem::rename(tmp, path);
}

inline void WriteJsonl(const std::filesystem::path& path,
                       const std::optional<Provenance>& header,
                       const std::vector<Json>& records) {
  std::string out;
  if (header) out += Json{{"header", header->ToJson()}}.dump() + "\n";
  for (const Json& r : records) out += r.dump() + "\n";
  WriteFileAtomically(path, out);
}

inline Json ReadJsonDocument(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kDependency, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    Fail(ErrorKind::kParse, path.string() + ": malformed JSON (" + e.what() +
                                ")");
  }
}

inline void WriteJsonDocument(const std::filesystem::path& path,
                              const Json& doc) {
  WriteFileAtomically(path, doc.dump(2) + "\n");
}

// Typed field access that names the offending field on failure.
template <typename T>
T Field(const Json& obj, std::string_view name, const std::string& where) {
  const std::string key(name);
  if (!obj.is_object() || !obj.contains(key)) {
    Fail(ErrorKind::kValidation, where + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    Fail(ErrorKind::kValidation,
         where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace codemia

#endif  // CODEMIA_JSONIO_HPP_
