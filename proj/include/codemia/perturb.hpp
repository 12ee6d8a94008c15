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

// Semantics-preserving rewrites of code prefixes.
//
// Five families, each inserting or renaming without changing what the
// program does when run:
//   IDC  dead `if` branch (statically false predicate)
//   IRV  redundant variable declaration that nothing reads
//   VR   consistent whole-token rename of a variable or function
//   IDP  debug print (the only family that changes stdout)
//   IDL  loop whose condition is statically false
//
// GenerateVariants applies each family to the original prefix (never
// composing) and always returns 11 variants in a fixed slot layout.

#ifndef CODEMIA_PERTURB_HPP_
#define CODEMIA_PERTURB_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "codemia/codeast.hpp"
#include "codemia/corpus.hpp"
#include "codemia/error.hpp"
#include "codemia/jsonio.hpp"
#include "codemia/rng.hpp"

namespace codemia::perturb {

enum class Family { kIdc = 0, kIrv = 1, kVr = 2, kIdp = 3, kIdl = 4 };

inline constexpr std::array<Family, 5> kFamilies = {
    Family::kIdc, Family::kIrv, Family::kVr, Family::kIdp, Family::kIdl};

inline std::string_view FamilyName(Family f) {
  static constexpr std::array<std::string_view, 5> kNames = {"IDC", "IRV",
                                                             "VR", "IDP", "IDL"};
  return kNames[static_cast<size_t>(f)];
}

inline Family ParseFamily(std::string_view name) {
  for (Family f : kFamilies) {
    if (FamilyName(f) == name) return f;
  }
  Fail(ErrorKind::kValidation,
       "unknown perturbation family '" + std::string(name) + "'");
}

inline int FormCount(Family f) {
  switch (f) {
    case Family::kIdc:
      return 4;
    case Family::kIdl:
      return 3;
    default:
      return 2;
  }
}

struct TransformKind {
  Family family = Family::kIdc;
  int form = 0;
  bool operator==(const TransformKind&) const = default;
};

// Surface-syntax templates. Everything the rewriters emit, and everything the
// simulator's canonicalizer strips, comes from here.
namespace templates {

inline constexpr std::array<std::string_view, 4> kDeadPredicates = {
    "False", "1 == 2", "\"a\" == \"b\"", "0 > 1"};
inline constexpr std::array<std::string_view, 3> kDeadLoops = {
    "while False:", "while 1 > 2:", "for _ in []:"};
inline constexpr std::string_view kBranchVarBase = "flag";
inline constexpr std::string_view kUnusedBase = "unused";
inline constexpr std::string_view kDummyBase = "tmp";
inline constexpr std::string_view kDebugTag = "[debug]";

inline std::string DeadBranchHeader(int form) {
  return "if " + std::string(kDeadPredicates[static_cast<size_t>(form)]) + ":";
}

inline std::string Print(std::string_view argument) {
  return "print(" + std::string(argument) + ")";
}

inline std::string DebugMessage(std::string_view message) {
  return Print("\"" + std::string(kDebugTag) + " " + std::string(message) +
               "\"");
}

}  // namespace templates

// A rewrite plus what was actually applied (fallbacks change the form).
struct Rewrite {
  std::string text;
  TransformKind transform;
  bool fallback = false;
  std::string target;  // identifier involved, if any
};

struct PerturbedVariant {
  std::string parent_id;
  int index = 0;
  TransformKind transform;
  std::string text;
  bool fallback = false;
};

namespace internal {

struct InsertionPoint {
  size_t before_line = 0;
  std::string indent;
  bool operator<(const InsertionPoint& o) const {
    return std::tie(before_line, indent) < std::tie(o.before_line, o.indent);
  }
  bool operator==(const InsertionPoint&) const = default;
};

using codeast::CodeFacts;
using codeast::LeadingWhitespace;
using codeast::LineRole;
using codeast::LogicalLine;

inline std::string FirstCodeIndent(const CodeFacts& facts) {
  for (const LogicalLine& ll : facts.logical) {
    if (ll.role != LineRole::kBlank) {
      return LeadingWhitespace(facts.lines[ll.first].text);
    }
  }
  return "";
}

// Positions directly before or after a complete simple statement, at that
// statement's indentation. Such a position never separates a block header
// from its body and never lands inside a multi-line expression.
inline std::vector<InsertionPoint> InsertionPoints(const CodeFacts& facts) {
  std::set<InsertionPoint> points;
  for (const LogicalLine& ll : facts.logical) {
    if (ll.role != LineRole::kStatement || !ll.complete) continue;
    const std::string ws = LeadingWhitespace(facts.lines[ll.first].text);
    points.insert({ll.first, ws});
    points.insert({ll.last + 1, ws});
  }
  if (points.empty()) points.insert({0, FirstCodeIndent(facts)});
  return {points.begin(), points.end()};
}

// First position inside the body of the header logical line `ll`.
inline InsertionPoint BodyStart(const CodeFacts& facts, const LogicalLine& ll) {
  const std::string head = LeadingWhitespace(facts.lines[ll.first].text);
  for (size_t p = ll.last + 1; p < facts.lines.size(); ++p) {
    const LogicalLine* body = facts.LogicalAt(p);
    if (body == nullptr || body->role == LineRole::kBlank) continue;
    const std::string ws = LeadingWhitespace(facts.lines[p].text);
    if (ws.size() > head.size() && ws.starts_with(head)) {
      return {ll.last + 1, ws};
    }
    break;
  }
  return {ll.last + 1, head + facts.indent_unit};
}

// Right after the line that first defines `name`: inside the body when that
// line is a header (parameters, loop targets), otherwise after the statement.
inline InsertionPoint AfterDefinition(const CodeFacts& facts,
                                      const std::string& name) {
  const size_t line = facts.var_first_line.at(name);
  const LogicalLine& ll = *facts.LogicalAt(line);
  if (ll.role == LineRole::kHeader) return BodyStart(facts, ll);
  return {ll.last + 1, LeadingWhitespace(facts.lines[ll.first].text)};
}

// Variables whose defining line is complete, so code can follow it.
inline std::vector<std::string> Definable(const CodeFacts& facts) {
  std::vector<std::string> out;
  for (const std::string& v : facts.variables) {
    if (facts.LogicalAt(facts.var_first_line.at(v))->complete) out.push_back(v);
  }
  return out;
}

inline std::string Insert(const CodeFacts& facts, const InsertionPoint& at,
                          const std::vector<std::string>& new_lines) {
  std::vector<codeast::Line> lines = facts.lines;
  std::vector<codeast::Line> added;
  for (const std::string& l : new_lines) {
    added.push_back({l + facts.eol, codeast::IndentColumns(l)});
  }
  const size_t pos = std::min(at.before_line, lines.size());
  lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(pos), added.begin(),
               added.end());
  return codeast::Join(lines);
}

inline std::string StripEol(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

// Whole-token rename; strings and comments are left alone.
inline std::string RenameToken(std::string_view source, const std::string& from,
                               const std::string& to) {
  std::string out;
  size_t prev = 0;
  for (const codeast::Token& t : codeast::Lex(source).tokens) {
    if (t.kind == codeast::TokenKind::kIdentifier && t.text == from) {
      out.append(source.substr(prev, t.offset - prev));
      out += to;
      prev = t.offset + t.text.size();
    }
  }
  out.append(source.substr(prev));
  return out;
}

inline std::vector<std::string> SafeNames(const CodeFacts& facts,
                                          const std::vector<std::string>& names,
                                          const std::set<std::string>& avoid) {
  std::vector<std::string> out;
  for (const std::string& n : names) {
    if (facts.RenameSafe(n) && !avoid.contains(n)) out.push_back(n);
  }
  return out;
}

inline void CheckInput(std::string_view source, Family family, int form) {
  Require(!source.empty(), "cannot perturb an empty source");
  Require(form >= 0 && form < FormCount(family),
          std::string(FamilyName(family)) + " form out of range: " +
              std::to_string(form));
}

}  // namespace internal

// IDC: `if <false predicate>:` wrapping either an assignment to a fresh name
// (forms 0, 1) or a copy of an existing statement (forms 2, 3). Copies are
// placed next to the statement they duplicate so the copy is legal where it
// lands (`return`, `break` and friends stay in their enclosing construct).
inline Rewrite ApplyIdc(std::string_view source, int form, uint64_t seed) {
  internal::CheckInput(source, Family::kIdc, form);
  const codeast::CodeFacts facts = codeast::Analyze(source);
  Rng rng(seed);
  Rewrite result;
  result.transform = {Family::kIdc, form};

  std::vector<const codeast::LogicalLine*> copyable;
  for (const codeast::LogicalLine& ll : facts.logical) {
    if (ll.role != codeast::LineRole::kStatement || !ll.complete) continue;
    const codeast::Token& first = facts.tokens[ll.tok_begin];
    if (first.is("global") || first.is("nonlocal")) continue;
    copyable.push_back(&ll);
  }
  if (form >= 2 && copyable.empty()) {
    form = 0;
    result.transform.form = 0;
    result.fallback = true;
  }

  const std::string header = templates::DeadBranchHeader(form);
  if (form < 2) {
    const auto points = internal::InsertionPoints(facts);
    const internal::InsertionPoint at = points[rng.Index(points.size())];
    const std::string fresh = codeast::FreshIdentifier(
        facts, templates::kBranchVarBase, rng.NextU64());
    const int64_t value = rng.UniformInt(0, 99);
    result.target = fresh;
    result.text = internal::Insert(
        facts, at,
        {at.indent + header,
         at.indent + facts.indent_unit + fresh + " = " + std::to_string(value)});
    return result;
  }

  const codeast::LogicalLine& stmt = *copyable[rng.Index(copyable.size())];
  const bool after = rng.Bernoulli(0.5);
  const std::string ws = codeast::LeadingWhitespace(facts.lines[stmt.first].text);
  std::vector<std::string> block = {ws + header};
  for (size_t p = stmt.first; p <= stmt.last; ++p) {
    std::string text = internal::StripEol(facts.lines[p].text);
    if (p == stmt.first) {
      text = ws + facts.indent_unit + text.substr(ws.size());
    }
    block.push_back(std::move(text));
  }
  result.text = internal::Insert(
      facts, {after ? stmt.last + 1 : stmt.first, ws}, block);
  return result;
}

// IRV: form 0 declares `<v>_<n> = v` right after v's first definition; form 1
// declares `unused_<n> = k` for a constant k in [0, 99] at a seeded position.
inline Rewrite ApplyIrv(std::string_view source, int form, uint64_t seed) {
  internal::CheckInput(source, Family::kIrv, form);
  const codeast::CodeFacts facts = codeast::Analyze(source);
  Rng rng(seed);
  Rewrite result;
  result.transform = {Family::kIrv, form};
  const std::vector<std::string> definable = internal::Definable(facts);
  if (form == 0 && definable.empty()) {
    form = 1;
    result.transform.form = 1;
    result.fallback = true;
  }
  if (form == 0) {
    const std::string& v = definable[rng.Index(definable.size())];
    const std::string fresh = codeast::FreshIdentifier(facts, v, rng.NextU64());
    const internal::InsertionPoint at = internal::AfterDefinition(facts, v);
    result.target = v;
    result.text = internal::Insert(facts, at, {at.indent + fresh + " = " + v});
    return result;
  }
  const auto points = internal::InsertionPoints(facts);
  const internal::InsertionPoint at = points[rng.Index(points.size())];
  const std::string fresh =
      codeast::FreshIdentifier(facts, templates::kUnusedBase, rng.NextU64());
  const int64_t value = rng.UniformInt(0, 99);
  result.target = fresh;
  result.text = internal::Insert(
      facts, at, {at.indent + fresh + " = " + std::to_string(value)});
  return result;
}

// VR: renames every whole-token occurrence of a variable (form 0) or a
// function name (form 1). Names in `avoid` are not picked when another
// candidate exists. With nothing renameable, a dummy `tmp_<n> = 0` is
// declared at the top and renamed instead.
inline Rewrite ApplyVr(std::string_view source, int form, uint64_t seed,
                       const std::set<std::string>& avoid = {}) {
  internal::CheckInput(source, Family::kVr, form);
  const codeast::CodeFacts facts = codeast::Analyze(source);
  Rng rng(seed);
  Rewrite result;
  result.transform = {Family::kVr, form};

  std::vector<std::string> candidates;
  auto pick_from = [&](const std::vector<std::string>& names) {
    candidates = internal::SafeNames(facts, names, avoid);
    if (candidates.empty()) candidates = internal::SafeNames(facts, names, {});
  };
  if (form == 1) {
    pick_from(facts.methods);
    if (candidates.empty()) {
      result.fallback = true;
      pick_from(facts.variables);
    }
  } else {
    pick_from(facts.variables);
  }

  if (candidates.empty()) {
    result.fallback = true;
    const std::string dummy =
        codeast::FreshIdentifier(facts, templates::kDummyBase, rng.NextU64());
    const std::string seeded = internal::Insert(
        facts, {0, internal::FirstCodeIndent(facts)}, {
            internal::FirstCodeIndent(facts) + dummy + " = 0"});
    const codeast::CodeFacts seeded_facts = codeast::Analyze(seeded);
    const std::string fresh =
        codeast::FreshIdentifier(seeded_facts, dummy, rng.NextU64());
    result.target = dummy;
    result.text = internal::RenameToken(seeded, dummy, fresh);
    return result;
  }
  const std::string& name = candidates[rng.Index(candidates.size())];
  const std::string fresh = codeast::FreshIdentifier(facts, name, rng.NextU64());
  result.target = name;
  result.text = internal::RenameToken(source, name, fresh);
  return result;
}

// IDP: form 0 prints a debug message as the first statement of the first
// function body (or at the top without functions); form 1 prints a variable
// right after its first definition.
inline Rewrite ApplyIdp(std::string_view source, int form, uint64_t seed) {
  internal::CheckInput(source, Family::kIdp, form);
  const codeast::CodeFacts facts = codeast::Analyze(source);
  Rng rng(seed);
  Rewrite result;
  result.transform = {Family::kIdp, form};
  const std::vector<std::string> definable = internal::Definable(facts);
  if (form == 1 && definable.empty()) {
    form = 0;
    result.transform.form = 0;
    result.fallback = true;
  }
  if (form == 1) {
    const std::string& v = definable[rng.Index(definable.size())];
    const internal::InsertionPoint at = internal::AfterDefinition(facts, v);
    result.target = v;
    result.text = internal::Insert(facts, at, {at.indent + templates::Print(v)});
    return result;
  }
  for (const codeast::LogicalLine& ll : facts.logical) {
    if (ll.role != codeast::LineRole::kHeader) continue;
    size_t b = ll.tok_begin;
    if (facts.tokens[b].is("async") && b + 1 < ll.tok_end) ++b;
    if (!facts.tokens[b].is("def") || b + 1 >= ll.tok_end) continue;
    const std::string& name = facts.tokens[b + 1].text;
    const internal::InsertionPoint at = internal::BodyStart(facts, ll);
    result.target = name;
    result.text = internal::Insert(
        facts, at, {at.indent + templates::DebugMessage("enter " + name)});
    return result;
  }
  const std::string ws = internal::FirstCodeIndent(facts);
  result.text =
      internal::Insert(facts, {0, ws}, {ws + templates::DebugMessage("start")});
  return result;
}

// IDL: a never-entered loop (form picks the header) with a one-line body
// drawn from {print, pass, unused assignment}.
inline Rewrite ApplyIdl(std::string_view source, int form, uint64_t seed) {
  internal::CheckInput(source, Family::kIdl, form);
  const codeast::CodeFacts facts = codeast::Analyze(source);
  Rng rng(seed);
  Rewrite result;
  result.transform = {Family::kIdl, form};
  const auto points = internal::InsertionPoints(facts);
  const internal::InsertionPoint at = points[rng.Index(points.size())];
  std::string body;
  switch (rng.UniformInt(0, 2)) {
    case 0:
      body = templates::DebugMessage("unreachable");
      break;
    case 1:
      body = "pass";
      break;
    default: {
      const std::string fresh =
          codeast::FreshIdentifier(facts, templates::kDummyBase, rng.NextU64());
      body = fresh + " = " + std::to_string(rng.UniformInt(0, 99));
      result.target = fresh;
    }
  }
  result.text = internal::Insert(
      facts, at,
      {at.indent + std::string(templates::kDeadLoops[static_cast<size_t>(form)]),
       at.indent + facts.indent_unit + body});
  return result;
}

inline Rewrite Apply(std::string_view source, TransformKind kind, uint64_t seed) {
  switch (kind.family) {
    case Family::kIdc:
      return ApplyIdc(source, kind.form, seed);
    case Family::kIrv:
      return ApplyIrv(source, kind.form, seed);
    case Family::kVr:
      return ApplyVr(source, kind.form, seed);
    case Family::kIdp:
      return ApplyIdp(source, kind.form, seed);
    case Family::kIdl:
      return ApplyIdl(source, kind.form, seed);
  }
  Fail(ErrorKind::kValidation, "unknown transform family");
}

inline constexpr int kVariantsPerSample = 11;

// Family of each variant slot: [IDC, IDC, IRV, IRV, VR, VR, IDP, IDP, IDL,
// IDL, IDL].
inline constexpr std::array<Family, kVariantsPerSample> kSlotFamilies = {
    Family::kIdc, Family::kIdc, Family::kIrv, Family::kIrv,
    Family::kVr,  Family::kVr,  Family::kIdp, Family::kIdp,
    Family::kIdl, Family::kIdl, Family::kIdl};

inline std::vector<PerturbedVariant> GenerateVariants(
    const corpus::Sample& sample, uint64_t seed) {
  Require(!StripTrailingWhitespace(sample.prefix).empty(),
          "sample '" + sample.id + "' has an empty prefix");
  const uint64_t base = DeriveSeed(seed, sample.id);
  auto slot_seed = [&](int slot) {
    return DeriveSeed(base, static_cast<uint64_t>(slot));
  };
  Rng picks(DeriveSeed(base, std::string_view("forms")));

  std::vector<PerturbedVariant> out;
  out.reserve(kVariantsPerSample);
  auto push = [&](int index, const Rewrite& r) {
    out.push_back({sample.id, index, r.transform, r.text, r.fallback});
  };

  // IDC: two distinct forms out of four.
  std::array<int, 4> idc_forms = {0, 1, 2, 3};
  picks.Shuffle(std::span<int>(idc_forms));
  push(0, ApplyIdc(sample.prefix, idc_forms[0], slot_seed(0)));
  push(1, ApplyIdc(sample.prefix, idc_forms[1], slot_seed(1)));

  push(2, ApplyIrv(sample.prefix, 0, slot_seed(2)));
  push(3, ApplyIrv(sample.prefix, 1, slot_seed(3)));

  // VR: two seeded form picks; the second renames a different identifier
  // whenever one is available.
  const int vr_first = static_cast<int>(picks.UniformInt(0, 1));
  const int vr_second = static_cast<int>(picks.UniformInt(0, 1));
  const Rewrite vr = ApplyVr(sample.prefix, vr_first, slot_seed(4));
  push(4, vr);
  push(5, ApplyVr(sample.prefix, vr_second, slot_seed(5), {vr.target}));

  push(6, ApplyIdp(sample.prefix, 0, slot_seed(6)));
  push(7, ApplyIdp(sample.prefix, 1, slot_seed(7)));

  for (int form = 0; form < 3; ++form) {
    push(8 + form, ApplyIdl(sample.prefix, form, slot_seed(8 + form)));
  }
  return out;
}

inline Json VariantToJson(const PerturbedVariant& v) {
  return Json{{"parent_id", v.parent_id},
              {"index", v.index},
              {"kind", FamilyName(v.transform.family)},
              {"form", v.transform.form},
              {"fallback", v.fallback},
              {"text", v.text}};
}

inline PerturbedVariant VariantFromJson(const Json& j, const std::string& where) {
  PerturbedVariant v;
  v.parent_id = Field<std::string>(j, "parent_id", where);
  v.index = Field<int>(j, "index", where);
  v.transform.family = ParseFamily(Field<std::string>(j, "kind", where));
  v.transform.form = Field<int>(j, "form", where);
  v.text = Field<std::string>(j, "text", where);
  v.fallback = j.value("fallback", false);
  Require(v.index >= 0 && v.index < kVariantsPerSample,
          where + ": variant index out of range");
  Require(v.transform.form >= 0 && v.transform.form < FormCount(v.transform.family),
          where + ": form out of range for " +
              std::string(FamilyName(v.transform.family)));
  return v;
}

// Maps a prompt back to the text of its unperturbed parent, as far as the
// templates above allow: numeric rename suffixes are undone, injected dead
// blocks, prints, self-assignments and template constants are dropped, blank
// lines and trailing whitespace are removed. Two prompts derived from the
// same prefix by a single rewrite canonicalize to the same string.
inline std::string Canonicalize(std::string_view text) {
  // Undo `<name>_<dddd>` suffixes, repeatedly (renames of renames).
  auto strip_suffix = [](std::string name) {
    for (;;) {
      if (name.size() < 6) return name;
      const size_t n = name.size();
      bool digits = name[n - 5] == '_';
      for (size_t k = n - 4; k < n && digits; ++k) {
        digits = name[k] >= '0' && name[k] <= '9';
      }
      if (!digits) return name;
      name.resize(n - 5);
    }
  };
  std::string undone;
  size_t prev = 0;
  for (const codeast::Token& t : codeast::Lex(text).tokens) {
    if (t.kind != codeast::TokenKind::kIdentifier) continue;
    undone.append(text.substr(prev, t.offset - prev));
    undone += strip_suffix(t.text);
    prev = t.offset + t.text.size();
  }
  undone.append(text.substr(prev));

  std::set<std::string, std::less<>> dead_headers;
  for (size_t f = 0; f < templates::kDeadPredicates.size(); ++f) {
    dead_headers.insert(templates::DeadBranchHeader(static_cast<int>(f)));
  }
  for (std::string_view loop : templates::kDeadLoops) {
    dead_headers.emplace(loop);
  }
  auto is_template_constant = [](std::string_view s) {
    for (std::string_view base :
         {templates::kUnusedBase, templates::kDummyBase}) {
      const std::string lead = std::string(base) + " = ";
      if (!s.starts_with(lead)) continue;
      std::string_view rest = s.substr(lead.size());
      if (rest.starts_with("-")) rest.remove_prefix(1);
      if (!rest.empty() && std::all_of(rest.begin(), rest.end(), [](char c) {
            return c >= '0' && c <= '9';
          })) {
        return true;
      }
    }
    return false;
  };
  auto is_self_assignment = [](std::string_view s) {
    const size_t eq = s.find(" = ");
    if (eq == std::string_view::npos || eq == 0) return false;
    const std::string_view lhs = s.substr(0, eq);
    const std::string_view rhs = s.substr(eq + 3);
    if (lhs != rhs) return false;
    return std::all_of(lhs.begin(), lhs.end(), [](char c) {
      return codeast::internal::IsIdentChar(static_cast<unsigned char>(c));
    });
  };

  std::string out;
  const std::vector<std::string> lines = codeast::SplitLines(undone);
  int skip_deeper_than = -1;
  for (const std::string& raw : lines) {
    const std::string line = StripTrailingWhitespace(raw);
    const std::string ws = codeast::LeadingWhitespace(line);
    const std::string content = line.substr(ws.size());
    if (content.empty()) continue;
    const int indent = codeast::IndentColumns(line);
    if (skip_deeper_than >= 0) {
      if (indent > skip_deeper_than) continue;
      skip_deeper_than = -1;
    }
    if (dead_headers.contains(content)) {
      skip_deeper_than = indent;
      continue;
    }
    if (content.starts_with("print(") || is_self_assignment(content) ||
        is_template_constant(content)) {
      continue;
    }
    if (!out.empty()) out.push_back('\n');
    out += line;
  }
  return out;
}

}  // namespace codemia::perturb

#endif  // CODEMIA_PERTURB_HPP_
