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

// Applying edit subsets, recovering subsets from hypotheses, and word-level
// edit extraction.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "editshap/core.hpp"

namespace editshap {

// Per-edit on/off selection.
using EditSelection = std::vector<char>;

inline EditSelection selection_from_mask(const EditSet& es, SubsetMask mask) {
  EditSelection on(es.edit_count(), 0);
  for (std::size_t p = 0; p < es.size(); ++p) {
    if (mask >> p & 1u) {
      for (std::size_t e : es.groups()[p]) on[e] = 1;
    }
  }
  return on;
}

// Builds S_e' for a per-edit selection. Spans are anchored on source
// indices, so this is identical to applying the chosen edits in descending
// start order.
inline Sentence apply_selection(const EditSet& es, const EditSelection& on) {
  const auto& src = es.source().tokens();
  std::vector<Token> out;
  out.reserve(src.size() + 4);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < es.edit_count(); ++i) {
    if (!on[i]) continue;
    const Edit& e = es.edits()[i];
    out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(pos),
               src.begin() + static_cast<std::ptrdiff_t>(e.start));
    out.insert(out.end(), e.replacement.begin(), e.replacement.end());
    pos = e.end;
  }
  out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(pos), src.end());
  return Sentence(std::move(out));
}

inline Sentence apply_subset(const EditSet& es, SubsetMask mask) {
  return apply_selection(es, selection_from_mask(es, mask));
}

inline Sentence apply_all(const EditSet& es) {
  return apply_selection(es, EditSelection(es.edit_count(), 1));
}

// Validates the edits and checks that applying all of them yields
// `hypothesis`.
inline EditSet make_edit_set(Sentence source, std::vector<Edit> edits,
                             const Sentence& hypothesis) {
  EditSet es = validate_edit_set(std::move(source), std::move(edits));
  Sentence got = apply_all(es);
  if (!(got == hypothesis)) {
    throw HypothesisMismatchError("edits produce \"" + got.str() +
                                  "\" but hypothesis is \"" + hypothesis.str() + "\"");
  }
  return es;
}

// Finds which edits of `es` were applied to obtain `hypothesis`. When several
// selections produce the same sentence, the one leaving earlier edits
// unapplied is returned.
inline std::optional<EditSelection> recognize_selection(const EditSet& es,
                                                        const Sentence& hypothesis) {
  const auto& src = es.source().tokens();
  const auto& hyp = hypothesis.tokens();
  const std::size_t n_edits = es.edit_count();
  // memo[k][p]: 0 unknown, 1 dead end. State: about to handle edit k with
  // hypothesis position p; source position is edits[k-1].end (or 0).
  std::vector<std::vector<char>> dead(n_edits + 1, std::vector<char>(hyp.size() + 1, 0));
  EditSelection on(n_edits, 0);

  auto match = [&](std::size_t p, auto first, auto last) -> std::optional<std::size_t> {
    for (auto it = first; it != last; ++it, ++p) {
      if (p >= hyp.size() || hyp[p] != *it) return std::nullopt;
    }
    return p;
  };

  auto solve = [&](auto&& self, std::size_t k, std::size_t p) -> bool {
    if (dead[k][p]) return false;
    const std::size_t src_pos = k == 0 ? 0 : es.edits()[k - 1].end;
    if (k == n_edits) {
      auto q = match(p, src.begin() + static_cast<std::ptrdiff_t>(src_pos), src.end());
      if (q && *q == hyp.size()) return true;
      dead[k][p] = 1;
      return false;
    }
    const Edit& e = es.edits()[k];
    auto gap_end = match(p, src.begin() + static_cast<std::ptrdiff_t>(src_pos),
                         src.begin() + static_cast<std::ptrdiff_t>(e.start));
    if (gap_end) {
      if (auto q = match(*gap_end, src.begin() + static_cast<std::ptrdiff_t>(e.start),
                         src.begin() + static_cast<std::ptrdiff_t>(e.end))) {
        on[k] = 0;
        if (self(self, k + 1, *q)) return true;
      }
      if (auto q = match(*gap_end, e.replacement.begin(), e.replacement.end())) {
        on[k] = 1;
        if (self(self, k + 1, *q)) return true;
        on[k] = 0;
      }
    }
    dead[k][p] = 1;
    return false;
  };
  if (!solve(solve, 0, 0)) return std::nullopt;
  return on;
}

// Player-level variant: groups must be all-or-nothing.
inline std::optional<SubsetMask> recognize_subset(const EditSet& es,
                                                  const Sentence& hypothesis) {
  auto on = recognize_selection(es, hypothesis);
  if (!on) return std::nullopt;
  SubsetMask mask = 0;
  for (std::size_t p = 0; p < es.size(); ++p) {
    const auto& g = es.groups()[p];
    std::size_t count = 0;
    for (std::size_t e : g) count += (*on)[e] ? 1 : 0;
    if (count == g.size()) {
      mask |= SubsetMask{1} << p;
    } else if (count != 0) {
      return std::nullopt;
    }
  }
  return mask;
}

// Token-level minimal edit script (longest common subsequence). Every
// maximal run of non-matching tokens between two matches becomes one edit.
inline EditSet extract_edits(const Sentence& source, const Sentence& hypothesis) {
  const auto& a = source.tokens();
  const auto& b = hypothesis.tokens();
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  // lcs[i][j]: LCS length of a[i..] and b[j..].
  std::vector<std::vector<std::size_t>> lcs(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1
                               : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  std::vector<Edit> edits;
  std::size_t i = 0, j = 0;
  std::optional<Edit> pending;
  auto flush = [&] {
    if (pending) edits.push_back(std::move(*pending));
    pending.reset();
  };
  while (i < n || j < m) {
    if (i < n && j < m && a[i] == b[j] && lcs[i][j] == lcs[i + 1][j + 1] + 1) {
      flush();
      ++i;
      ++j;
      continue;
    }
    if (!pending) pending = Edit{i, i, {}, std::nullopt};
    if (i < n && (j == m || lcs[i + 1][j] >= lcs[i][j + 1])) {
      ++i;
      pending->end = i;
    } else {
      pending->replacement.push_back(b[j]);
      ++j;
    }
  }
  flush();
  return validate_edit_set(source, std::move(edits));
}

}  // namespace editshap
