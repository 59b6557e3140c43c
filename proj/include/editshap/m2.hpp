/*
 * Copyright 2026 The editshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// M2 annotation format.
//
//   S <tokenized source>
//   A <start> <end>|||<type>|||<replacement>|||REQUIRED|||-NONE-|||<annotator>
//   <blank line>
//
// "A -1 -1|||noop|||..." marks an annotator that made no change.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "editshap/core.hpp"

namespace editshap {

struct M2Annotation {
  int annotator = 0;
  EditSet edits;

  friend bool operator==(const M2Annotation&, const M2Annotation&) = default;
};

struct M2Sentence {
  Sentence source;
  // In order of first appearance. A block without A-lines gets one empty
  // annotation for annotator 0.
  std::vector<M2Annotation> annotations;

  // Annotation for `annotator`, or nullptr.
  const EditSet* find(int annotator) const {
    for (const auto& a : annotations) {
      if (a.annotator == annotator) return &a.edits;
    }
    return nullptr;
  }

  friend bool operator==(const M2Sentence&, const M2Sentence&) = default;
};

namespace m2_detail {

inline std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find("|||", pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 3;
  }
}

inline bool parse_int(std::string_view s, long& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct PendingAnnotation {
  int annotator;
  bool noop = false;
  std::vector<Edit> edits;
  std::size_t first_line;
};

}  // namespace m2_detail

inline std::vector<M2Sentence> parse_m2(std::istream& in) {
  using namespace m2_detail;
  std::vector<M2Sentence> out;
  std::optional<Sentence> source;
  std::vector<PendingAnnotation> pending;

  auto close_block = [&] {
    if (!source) return;
    M2Sentence block;
    block.source = *source;
    if (pending.empty()) {
      block.annotations.push_back({0, validate_edit_set(*source, {})});
    }
    for (auto& p : pending) {
      try {
        block.annotations.push_back({p.annotator, validate_edit_set(*source, std::move(p.edits))});
      } catch (const Error& e) {
        throw M2SyntaxError(p.first_line, e.what());
      }
    }
    out.push_back(std::move(block));
    source.reset();
    pending.clear();
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view view(line);
    if (split_tokens(view).empty()) {
      close_block();
      continue;
    }
    if (view.starts_with("S ") || view == "S") {
      if (source) throw M2SyntaxError(lineno, "S line inside a block without blank separator");
      source = parse_sentence(view.substr(1));
      continue;
    }
    if (!view.starts_with("A ")) {
      throw M2SyntaxError(lineno, "expected 'S' or 'A' line");
    }
    if (!source) throw M2SyntaxError(lineno, "annotation without preceding 'S' header");

    auto fields = split_fields(view.substr(2));
    if (fields.size() < 3) throw M2SyntaxError(lineno, "annotation needs at least 3 fields");
    auto span = split_tokens(fields[0]);
    long start = 0, end = 0;
    if (span.size() != 2 || !parse_int(span[0], start) || !parse_int(span[1], end)) {
      throw M2SyntaxError(lineno, "malformed span '" + std::string(fields[0]) + "'");
    }
    long annotator = 0;
    if (fields.size() >= 6 && !parse_int(fields.back(), annotator)) {
      throw M2SyntaxError(lineno, "malformed annotator id");
    }
    auto it = std::find_if(pending.begin(), pending.end(), [&](const PendingAnnotation& p) {
      return p.annotator == static_cast<int>(annotator);
    });
    if (it == pending.end()) {
      pending.push_back({static_cast<int>(annotator), false, {}, lineno});
      it = pending.end() - 1;
    }
    const std::string_view type = fields[1];
    if (start == -1 && end == -1) {
      if (type != "noop") throw M2SyntaxError(lineno, "span -1 -1 is reserved for noop");
      it->noop = true;
      continue;
    }
    if (start < 0 || end < start) throw M2SyntaxError(lineno, "invalid span");
    Edit e;
    e.start = static_cast<std::size_t>(start);
    e.end = static_cast<std::size_t>(end);
    if (fields[2] != "-NONE-") e.replacement = split_tokens(fields[2]);
    if (!type.empty()) e.error_type = std::string(type);
    if (it->noop) throw M2SyntaxError(lineno, "edit after noop for the same annotator");
    it->edits.push_back(std::move(e));
  }
  close_block();
  return out;
}

inline std::vector<M2Sentence> parse_m2(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_m2(in);
}

// Writes normalized M2: empty annotations as noop lines, deletions with an
// empty replacement field, untyped edits as "UNK".
inline void emit_m2(std::ostream& out, const std::vector<M2Sentence>& sentences) {
  for (const auto& s : sentences) {
    out << "S " << s.source.str() << '\n';
    for (const auto& a : s.annotations) {
      if (a.edits.edit_count() == 0) {
        out << "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||" << a.annotator << '\n';
        continue;
      }
      for (const auto& e : a.edits.edits()) {
        out << "A " << e.start << ' ' << e.end << "|||" << e.error_type.value_or("UNK")
            << "|||" << join_tokens(e.replacement) << "|||REQUIRED|||-NONE-|||"
            << a.annotator << '\n';
      }
    }
    out << '\n';
  }
}

inline std::string emit_m2(const std::vector<M2Sentence>& sentences) {
  std::ostringstream out;
  emit_m2(out, sentences);
  return out.str();
}

}  // namespace editshap
