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

// Parse-tolerant analysis of Python-style source prefixes.
//
// The input is usually an incomplete program, so nothing here builds a
// syntax tree. A lexer tracks strings, comments and bracket depth well enough
// to find logical lines; statements, block headers and identifier
// definitions are read off the token stream of each logical line. Every
// function is total: malformed input degrades to smaller fact sets.

#ifndef CODEMIA_CODEAST_HPP_
#define CODEMIA_CODEAST_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "codemia/rng.hpp"

namespace codemia::codeast {

enum class TokenKind { kIdentifier, kNumber, kString, kOperator, kComment };

struct Token {
  TokenKind kind;
  std::string text;
  size_t offset = 0;  // byte offset into the source
  size_t line = 0;    // physical line of the first byte
  bool is(std::string_view s) const { return text == s; }
};

struct LexResult {
  std::vector<Token> tokens;
  // One entry per physical line: true when the line starts inside an open
  // bracket, a triple-quoted string, or after a backslash continuation.
  std::vector<bool> continuation;
  // Physical lines touched by an unterminated string literal.
  std::set<size_t> broken_lines;
  // Source ends inside a bracket or string.
  bool open_at_eof = false;
};

namespace internal {

inline bool IsIdentStart(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
         c >= 0x80;
}

inline bool IsIdentChar(unsigned char c) {
  return IsIdentStart(c) || (c >= '0' && c <= '9');
}

inline bool IsDigit(unsigned char c) { return c >= '0' && c <= '9'; }

inline bool IsStringPrefix(std::string_view word) {
  if (word.empty() || word.size() > 2) return false;
  std::string lower;
  for (char c : word) lower.push_back(static_cast<char>(std::tolower(c)));
  static const std::array<std::string_view, 9> kPrefixes = {
      "r", "b", "u", "f", "rb", "br", "fr", "rf", "ur"};
  return std::find(kPrefixes.begin(), kPrefixes.end(), lower) !=
         kPrefixes.end();
}

constexpr std::array<std::string_view, 5> kOps3 = {"**=", "//=", ">>=", "<<=",
                                                   "..."};
constexpr std::array<std::string_view, 19> kOps2 = {
    "==", "!=", "<=", ">=", "**", "//", "->", ":=", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "@=", "<<", ">>"};

}  // namespace internal

inline LexResult Lex(std::string_view src) {
  using internal::IsDigit;
  using internal::IsIdentChar;
  using internal::IsIdentStart;

  LexResult out;
  out.continuation.push_back(false);
  size_t line = 0;
  int depth = 0;
  bool backslash = false;
  size_t i = 0;
  const size_t n = src.size();

  auto new_line = [&](bool inside) {
    ++line;
    out.continuation.push_back(inside);
  };

  auto scan_string = [&](size_t start, size_t quote_pos) {
    const char q = src[quote_pos];
    const bool triple = quote_pos + 2 < n && src[quote_pos + 1] == q &&
                        src[quote_pos + 2] == q;
    const size_t start_line = line;
    size_t j = quote_pos + (triple ? 3 : 1);
    bool closed = false;
    while (j < n) {
      const char c = src[j];
      if (c == '\\' && j + 1 < n) {
        if (src[j + 1] == '\n') {
          // Escaped newline: the string continues on the next line.
          j += 2;
          new_line(true);
          continue;
        }
        j += 2;
        continue;
      }
      if (c == '\n') {
        if (!triple) break;
        new_line(true);
        ++j;
        continue;
      }
      if (c == q) {
        if (!triple) {
          ++j;
          closed = true;
          break;
        }
        if (j + 2 < n && src[j + 1] == q && src[j + 2] == q) {
          j += 3;
          closed = true;
          break;
        }
      }
      ++j;
    }
    if (!closed) {
      for (size_t l = start_line; l <= line; ++l) out.broken_lines.insert(l);
      if (triple) out.open_at_eof = true;
    }
    out.tokens.push_back(
        {TokenKind::kString, std::string(src.substr(start, j - start)), start,
         start_line});
    return j;
  };

  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(src[i]);
    if (c == '\n') {
      new_line(depth > 0 || backslash);
      backslash = false;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
      ++i;
      continue;
    }
    if (c == '\\') {
      size_t j = i + 1;
      if (j < n && src[j] == '\r') ++j;
      if (j < n && src[j] == '\n') {
        new_line(true);
        i = j + 1;
        continue;
      }
      out.tokens.push_back({TokenKind::kOperator, "\\", i, line});
      ++i;
      continue;
    }
    backslash = false;
    if (c == '#') {
      size_t j = i;
      while (j < n && src[j] != '\n') ++j;
      out.tokens.push_back(
          {TokenKind::kComment, std::string(src.substr(i, j - i)), i, line});
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      i = scan_string(i, i);
      continue;
    }
    if (IsDigit(c) || (c == '.' && i + 1 < n && IsDigit(src[i + 1]))) {
      size_t j = i + 1;
      const bool hex = c == '0' && j < n && (src[j] == 'x' || src[j] == 'X');
      while (j < n) {
        const unsigned char d = static_cast<unsigned char>(src[j]);
        if (IsIdentChar(d) || d == '.') {
          ++j;
        } else if ((d == '+' || d == '-') && !hex &&
                   (src[j - 1] == 'e' || src[j - 1] == 'E')) {
          ++j;
        } else {
          break;
        }
      }
      out.tokens.push_back(
          {TokenKind::kNumber, std::string(src.substr(i, j - i)), i, line});
      i = j;
      continue;
    }
    if (IsIdentStart(c)) {
      size_t j = i + 1;
      while (j < n && IsIdentChar(static_cast<unsigned char>(src[j]))) ++j;
      const std::string_view word = src.substr(i, j - i);
      if (j < n && (src[j] == '"' || src[j] == '\'') &&
          internal::IsStringPrefix(word)) {
        i = scan_string(i, j);
        continue;
      }
      out.tokens.push_back({TokenKind::kIdentifier, std::string(word), i, line});
      i = j;
      continue;
    }
    size_t len = 1;
    for (std::string_view op : internal::kOps3) {
      if (src.substr(i, 3) == op) len = 3;
    }
    if (len == 1) {
      for (std::string_view op : internal::kOps2) {
        if (src.substr(i, 2) == op) len = 2;
      }
    }
    if (len == 1) {
      if (c == '(' || c == '[' || c == '{') ++depth;
      if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
    }
    out.tokens.push_back(
        {TokenKind::kOperator, std::string(src.substr(i, len)), i, line});
    i += len;
  }
  if (depth > 0) out.open_at_eof = true;
  return out;
}

// Splits text into pieces whose concatenation is exactly `text`: each token
// carries the whitespace that precedes it; trailing whitespace becomes its
// own piece.
inline std::vector<std::string> Pieces(std::string_view text) {
  std::vector<std::string> pieces;
  size_t prev = 0;
  for (const Token& t : Lex(text).tokens) {
    pieces.emplace_back(text.substr(prev, t.offset + t.text.size() - prev));
    prev = t.offset + t.text.size();
  }
  if (prev < text.size()) pieces.emplace_back(text.substr(prev));
  return pieces;
}

// Keywords and builtins that must never be chosen as a rename target or a
// generated identifier.
inline const std::set<std::string, std::less<>>& DenyList() {
  static const std::set<std::string, std::less<>> kWords = {
      // Reserved and soft keywords.
      "False", "None", "True", "and", "as", "assert", "async", "await",
      "break", "class", "continue", "def", "del", "elif", "else", "except",
      "finally", "for", "from", "global", "if", "import", "in", "is",
      "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try",
      "while", "with", "yield", "match", "case", "_", "self", "cls",
      // Builtins.
      "print", "len", "range", "input", "int", "str", "list", "dict", "set",
      "sum", "min", "max", "abs", "all", "any", "bool", "bytes", "chr",
      "divmod", "enumerate", "filter", "float", "format", "frozenset",
      "getattr", "globals", "hasattr", "hash", "hex", "id", "isinstance",
      "issubclass", "iter", "locals", "map", "next", "object", "oct", "open",
      "ord", "pow", "repr", "reversed", "round", "setattr", "slice",
      "sorted", "staticmethod", "classmethod", "property", "super", "tuple",
      "type", "vars", "zip", "complex", "exec", "eval", "compile", "exit",
      "quit", "callable", "bin", "bytearray", "memoryview", "delattr",
      "Exception", "ValueError", "TypeError", "KeyError", "IndexError",
      "StopIteration", "RuntimeError", "ZeroDivisionError", "NameError",
      "AttributeError", "NotImplemented", "NotImplementedError", "math",
      "sys", "os", "re"};
  return kWords;
}

inline bool IsKeyword(std::string_view word) {
  static const std::set<std::string, std::less<>> kKeywords = {
      "False", "None",   "True",     "and",   "as",     "assert", "async",
      "await", "break",  "class",    "continue", "def", "del",    "elif",
      "else",  "except", "finally",  "for",   "from",   "global", "if",
      "import", "in",    "is",       "lambda", "nonlocal", "not", "or",
      "pass",  "raise",  "return",   "try",   "while",  "with",   "yield"};
  return kKeywords.contains(word);
}

struct Line {
  std::string text;  // raw physical line, without the '\n'
  int indent = 0;    // leading columns, tabs to the next multiple of 8
};

enum class LineRole { kBlank, kStatement, kHeader, kDecorator };

struct LogicalLine {
  size_t first = 0;  // physical line indices, inclusive
  size_t last = 0;
  size_t tok_begin = 0;  // [tok_begin, tok_end) into CodeFacts::tokens,
  size_t tok_end = 0;    // comments excluded
  LineRole role = LineRole::kBlank;
  bool complete = true;  // false when it runs into EOF or a broken string
};

struct CodeFacts {
  std::vector<Line> lines;
  std::vector<size_t> statements;
  std::vector<std::string> variables;  // first-definition order
  std::vector<std::string> methods;    // declaration order
  std::map<std::string, size_t> var_first_line;

  std::vector<Token> tokens;  // comments removed
  std::vector<LogicalLine> logical;
  std::vector<int> logical_of_line;  // physical line -> logical index or -1
  std::set<std::string, std::less<>> identifiers;
  // Identifiers observed in positions a whole-token rename cannot follow
  // (attributes, keyword arguments, imports, f-string bodies, dunders).
  std::set<std::string, std::less<>> rename_unsafe;
  std::string indent_unit = "    ";
  std::string eol;  // "\r" when the source uses CRLF line endings

  bool IsVariable(std::string_view name) const {
    return std::find(variables.begin(), variables.end(), name) !=
           variables.end();
  }
  bool IsMethod(std::string_view name) const {
    return std::find(methods.begin(), methods.end(), name) != methods.end();
  }
  bool IsStatement(size_t line) const {
    return std::binary_search(statements.begin(), statements.end(), line);
  }
  bool RenameSafe(std::string_view name) const {
    return !rename_unsafe.contains(name) && !DenyList().contains(name);
  }
  const LogicalLine* LogicalAt(size_t line) const {
    if (line >= logical_of_line.size() || logical_of_line[line] < 0) {
      return nullptr;
    }
    return &logical[static_cast<size_t>(logical_of_line[line])];
  }
};

inline std::string LeadingWhitespace(std::string_view text) {
  size_t k = 0;
  while (k < text.size() && (text[k] == ' ' || text[k] == '\t')) ++k;
  return std::string(text.substr(0, k));
}

inline int IndentColumns(std::string_view text) {
  int col = 0;
  for (char c : text) {
    if (c == ' ') {
      ++col;
    } else if (c == '\t') {
      col = (col / 8 + 1) * 8;
    } else {
      break;
    }
  }
  return col;
}

inline std::string Join(const std::vector<Line>& lines) {
  std::string out;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i].text;
  }
  return out;
}

inline std::vector<std::string> SplitLines(std::string_view source) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    const size_t nl = source.find('\n', start);
    if (nl == std::string_view::npos) {
      out.emplace_back(source.substr(start));
      return out;
    }
    out.emplace_back(source.substr(start, nl - start));
    start = nl + 1;
  }
}

namespace internal {

inline void AddOrdered(std::vector<std::string>& set, const std::string& name) {
  if (std::find(set.begin(), set.end(), name) == set.end()) {
    set.push_back(name);
  }
}

// Identifiers of an assignment target such as `a`, `a, b` or `(a, *b)`.
// Attribute and subscript targets yield nothing.
inline std::vector<std::string> TargetNames(const std::vector<Token>& toks,
                                            size_t begin, size_t end) {
  std::vector<std::string> names;
  if (begin >= end) return names;
  // Annotated assignment: `name: type = value`.
  for (size_t k = begin; k < end; ++k) {
    if (toks[k].is(":")) {
      if (k == begin + 1 && toks[begin].kind == TokenKind::kIdentifier &&
          !IsKeyword(toks[begin].text)) {
        names.push_back(toks[begin].text);
      }
      return names;
    }
  }
  for (size_t k = begin; k < end; ++k) {
    const Token& t = toks[k];
    if (t.kind == TokenKind::kIdentifier) {
      if (IsKeyword(t.text)) return {};
      if (k + 1 < end && (toks[k + 1].is("[") || toks[k + 1].is("(") ||
                          toks[k + 1].is("."))) {
        return {};
      }
      names.push_back(t.text);
    } else if (!(t.is(",") || t.is("(") || t.is(")") || t.is("[") ||
                 t.is("]") || t.is("*"))) {
      return {};
    }
  }
  return names;
}

inline void CollectFStringWords(std::string_view literal,
                                std::set<std::string, std::less<>>& out) {
  size_t q = 0;
  while (q < literal.size() && literal[q] != '"' && literal[q] != '\'') ++q;
  const std::string_view prefix = literal.substr(0, q);
  if (prefix.find('f') == std::string_view::npos &&
      prefix.find('F') == std::string_view::npos) {
    return;
  }
  size_t k = q;
  while (k < literal.size()) {
    if (IsIdentStart(static_cast<unsigned char>(literal[k]))) {
      size_t j = k + 1;
      while (j < literal.size() &&
             IsIdentChar(static_cast<unsigned char>(literal[j]))) {
        ++j;
      }
      out.emplace(literal.substr(k, j - k));
      k = j;
    } else {
      ++k;
    }
  }
}

}  // namespace internal

inline CodeFacts Analyze(std::string_view source) {
  CodeFacts facts;
  for (std::string& raw : SplitLines(source)) {
    const int indent = IndentColumns(raw);
    facts.lines.push_back({std::move(raw), indent});
  }
  for (const Line& l : facts.lines) {
    if (!l.text.empty() && l.text.back() == '\r') {
      facts.eol = "\r";
      break;
    }
  }

  LexResult lexed = Lex(source);
  for (Token& t : lexed.tokens) {
    if (t.kind != TokenKind::kComment) facts.tokens.push_back(std::move(t));
  }
  const std::vector<Token>& toks = facts.tokens;
  const size_t num_lines = facts.lines.size();
  lexed.continuation.resize(num_lines, false);

  // Group physical lines into logical lines.
  facts.logical_of_line.assign(num_lines, -1);
  size_t tk = 0;
  for (size_t l = 0; l < num_lines;) {
    LogicalLine ll;
    ll.first = l;
    size_t last = l;
    while (last + 1 < num_lines && lexed.continuation[last + 1]) ++last;
    ll.last = last;
    while (tk < toks.size() && toks[tk].line < ll.first) ++tk;
    ll.tok_begin = tk;
    while (tk < toks.size() && toks[tk].line <= ll.last) ++tk;
    ll.tok_end = tk;
    if (last + 1 == num_lines && lexed.open_at_eof) ll.complete = false;
    for (size_t p = ll.first; p <= ll.last; ++p) {
      if (lexed.broken_lines.contains(p)) ll.complete = false;
    }
    if (ll.tok_begin == ll.tok_end) {
      ll.role = LineRole::kBlank;
    } else if (toks[ll.tok_begin].is("@")) {
      ll.role = LineRole::kDecorator;
    } else if (ll.complete && toks[ll.tok_end - 1].is(":")) {
      ll.role = LineRole::kHeader;
    } else {
      ll.role = LineRole::kStatement;
    }
    for (size_t p = ll.first; p <= ll.last; ++p) {
      facts.logical_of_line[p] = static_cast<int>(facts.logical.size());
    }
    facts.logical.push_back(ll);
    l = last + 1;
  }

  auto define = [&](const std::string& name, size_t line) {
    if (IsKeyword(name)) return;
    internal::AddOrdered(facts.variables, name);
    facts.var_first_line.emplace(name, line);
  };

  for (const LogicalLine& ll : facts.logical) {
    if (ll.role == LineRole::kBlank) continue;
    if (ll.role == LineRole::kStatement) facts.statements.push_back(ll.first);

    size_t b = ll.tok_begin;
    const size_t e = ll.tok_end;
    if (toks[b].is("async") && b + 1 < e) ++b;
    const bool is_def = toks[b].is("def");
    const bool is_import = toks[b].is("import") || toks[b].is("from");

    // Rename hazards visible on this line.
    int depth = 0;
    for (size_t k = ll.tok_begin; k < e; ++k) {
      const Token& t = toks[k];
      if (t.is("(") || t.is("[") || t.is("{")) ++depth;
      if ((t.is(")") || t.is("]") || t.is("}")) && depth > 0) --depth;
      if (t.kind == TokenKind::kString) {
        internal::CollectFStringWords(t.text, facts.rename_unsafe);
      }
      if (t.kind != TokenKind::kIdentifier) continue;
      facts.identifiers.insert(t.text);
      if (is_import) facts.rename_unsafe.insert(t.text);
      if (t.text.size() > 4 && t.text.starts_with("__") &&
          t.text.ends_with("__")) {
        facts.rename_unsafe.insert(t.text);
      }
      if (k > ll.tok_begin && toks[k - 1].is(".")) {
        facts.rename_unsafe.insert(t.text);
      }
      const bool kwarg = depth > 0 && k + 1 < e && toks[k + 1].is("=");
      if (kwarg && !(is_def && depth == 1)) facts.rename_unsafe.insert(t.text);
    }

    if (ll.role == LineRole::kHeader) {
      if (is_def && b + 1 < e && toks[b + 1].kind == TokenKind::kIdentifier) {
        internal::AddOrdered(facts.methods, toks[b + 1].text);
        // Parameters: first identifier of each depth-1 segment.
        size_t k = b + 2;
        if (k < e && toks[k].is("(")) {
          int d = 0;
          bool segment_start = true;
          for (; k < e; ++k) {
            const Token& t = toks[k];
            if (t.is("(") || t.is("[") || t.is("{")) {
              ++d;
              if (d == 1) {
                segment_start = true;
                continue;
              }
            }
            if (t.is(")") || t.is("]") || t.is("}")) {
              if (--d == 0) break;
            }
            if (d != 1) continue;
            if (t.is(",")) {
              segment_start = true;
            } else if (segment_start && (t.is("*") || t.is("**"))) {
              // Star prefix; the name (if any) follows.
            } else if (segment_start) {
              if (t.kind == TokenKind::kIdentifier) define(t.text, ll.first);
              segment_start = false;
            }
          }
        }
      } else if (toks[b].is("for")) {
        for (size_t k = b + 1; k < e && !toks[k].is("in"); ++k) {
          if (toks[k].kind == TokenKind::kIdentifier) {
            define(toks[k].text, ll.first);
          }
        }
      }
      continue;
    }
    if (ll.role != LineRole::kStatement || IsKeyword(toks[b].text)) continue;

    // Assignment targets: segments separated by depth-0 '='.
    std::vector<size_t> eqs;
    depth = 0;
    for (size_t k = b; k < e; ++k) {
      const Token& t = toks[k];
      if (t.is("(") || t.is("[") || t.is("{")) ++depth;
      if ((t.is(")") || t.is("]") || t.is("}")) && depth > 0) --depth;
      if (depth == 0 && t.is("=")) eqs.push_back(k);
      if (depth == 0 && t.is("lambda")) break;
    }
    size_t seg = b;
    for (size_t eq : eqs) {
      for (const std::string& name : internal::TargetNames(toks, seg, eq)) {
        define(name, ll.first);
      }
      seg = eq + 1;
    }
  }

  // Indentation unit: the step from the first header to its body.
  for (const LogicalLine& ll : facts.logical) {
    if (ll.role != LineRole::kHeader) continue;
    const std::string head_ws = LeadingWhitespace(facts.lines[ll.first].text);
    for (size_t p = ll.last + 1; p < num_lines; ++p) {
      const LogicalLine* body = facts.LogicalAt(p);
      if (body == nullptr || body->role == LineRole::kBlank) continue;
      const std::string body_ws = LeadingWhitespace(facts.lines[p].text);
      if (body_ws.size() > head_ws.size() && body_ws.starts_with(head_ws)) {
        facts.indent_unit = body_ws.substr(head_ws.size());
      }
      break;
    }
    break;
  }
  return facts;
}

// `base + "_" + n` for a seeded n in [1000, 9999]; redraws until the name
// clashes with no identifier in the source and no reserved word.
inline std::string FreshIdentifier(const CodeFacts& facts,
                                   std::string_view base, uint64_t seed) {
  Rng rng(seed);
  for (;;) {
    std::string candidate =
        std::string(base) + "_" + std::to_string(rng.UniformInt(1000, 9999));
    if (!facts.IsVariable(candidate) && !facts.IsMethod(candidate) &&
        !facts.identifiers.contains(candidate) &&
        !DenyList().contains(candidate)) {
      return candidate;
    }
  }
}

}  // namespace codemia::codeast

#endif  // CODEMIA_CODEAST_HPP_
