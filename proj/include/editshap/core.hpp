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

// Domain types shared across the library: sentences, edits, edit sets and
// attribution results, together with the error hierarchy.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace editshap {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OverlapError : public Error { using Error::Error; };
class OutOfBoundsError : public Error { using Error::Error; };
class IdentityEditError : public Error { using Error::Error; };
class HypothesisMismatchError : public Error { using Error::Error; };
class InvalidPartitionError : public Error { using Error::Error; };
class M2SyntaxError : public Error {
 public:
  M2SyntaxError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};
class TooManyEditsError : public Error { using Error::Error; };
class MissingReferenceError : public Error { using Error::Error; };

// Anything raised while evaluating a scorer.
class ScorerError : public Error { using Error::Error; };
class UntrainedModelError : public ScorerError { using ScorerError::ScorerError; };
class UnrecognizedEditError : public ScorerError { using ScorerError::ScorerError; };
class BridgeUnavailableError : public ScorerError { using ScorerError::ScorerError; };
class ProtocolError : public ScorerError { using ScorerError::ScorerError; };
class ScoreLengthMismatchError : public ProtocolError { using ProtocolError::ProtocolError; };

// ---------------------------------------------------------------------------
// Sentence
// ---------------------------------------------------------------------------

// A whitespace-free surface form.
using Token = std::string;

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::vector<Token> split_tokens(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string join_tokens(const std::vector<Token>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

// A pre-tokenized sentence. Tokenization is whitespace splitting.
class Sentence {
 public:
  Sentence() = default;
  explicit Sentence(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
    for (const auto& t : tokens_) {
      if (t.empty() || std::any_of(t.begin(), t.end(), is_space)) {
        throw Error("token must be non-empty and whitespace-free: '" + t + "'");
      }
    }
  }

  const std::vector<Token>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }

  std::string str() const { return join_tokens(tokens_); }

  friend bool operator==(const Sentence&, const Sentence&) = default;

 private:
  std::vector<Token> tokens_;
};

inline Sentence parse_sentence(std::string_view text) {
  return Sentence(split_tokens(text));
}

// ---------------------------------------------------------------------------
// Edits
// ---------------------------------------------------------------------------

// Replaces source tokens [start, end) by `replacement`. start == end is an
// insertion, an empty replacement a deletion.
struct Edit {
  std::size_t start = 0;
  std::size_t end = 0;
  std::vector<Token> replacement;
  std::optional<std::string> error_type;

  bool is_insertion() const { return start == end; }

  // Identity on (span, replacement); the error type is a label only.
  bool same_correction(const Edit& other) const {
    return start == other.start && end == other.end &&
           replacement == other.replacement;
  }

  friend bool operator==(const Edit&, const Edit&) = default;
};

inline bool edit_order(const Edit& a, const Edit& b) {
  if (a.start != b.start) return a.start < b.start;
  if (a.end != b.end) return a.end < b.end;
  return a.replacement < b.replacement;
}

inline std::string describe(const Edit& e) {
  return "(" + std::to_string(e.start) + "," + std::to_string(e.end) + ",\"" +
         join_tokens(e.replacement) + "\")";
}

// Widest supported player count for subset bitmasks.
inline constexpr std::size_t kMaxMaskWidth = 30;

// Bit i set <=> player i included.
using SubsetMask = std::uint32_t;

inline SubsetMask full_mask(std::size_t n) {
  return n == 0 ? 0u : static_cast<SubsetMask>((std::uint64_t{1} << n) - 1);
}

// A validated, ordered, overlap-free collection of edits over one source.
//
// The players of the attribution game are `groups()`: each group is a set of
// edit indices applied and removed together. A freshly validated set has one
// singleton group per edit; group_edits() builds coarser partitions.
class EditSet {
 public:
  EditSet() = default;

  const Sentence& source() const { return source_; }
  const std::vector<Edit>& edits() const { return edits_; }
  const std::vector<std::vector<std::size_t>>& groups() const { return groups_; }

  // Number of players (N).
  std::size_t size() const { return groups_.size(); }
  std::size_t edit_count() const { return edits_.size(); }
  bool is_grouped() const {
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      if (groups_[g].size() != 1 || groups_[g][0] != g) return true;
    }
    return false;
  }

  friend bool operator==(const EditSet&, const EditSet&) = default;

 private:
  friend EditSet validate_edit_set(Sentence source, std::vector<Edit> edits);
  friend EditSet group_edits(const EditSet& es,
                             const std::vector<std::vector<std::size_t>>& groups);

  Sentence source_;
  std::vector<Edit> edits_;
  std::vector<std::vector<std::size_t>> groups_;
};

// Sorts and checks the edits against `source`.
inline EditSet validate_edit_set(Sentence source, std::vector<Edit> edits) {
  const std::size_t n = source.size();
  for (const auto& e : edits) {
    if (e.start > e.end || e.end > n) {
      throw OutOfBoundsError("edit " + describe(e) + " outside source of length " +
                             std::to_string(n));
    }
    if (e.start == e.end && e.replacement.empty()) {
      throw IdentityEditError("empty insertion " + describe(e));
    }
    if (std::equal(source.tokens().begin() + static_cast<std::ptrdiff_t>(e.start),
                   source.tokens().begin() + static_cast<std::ptrdiff_t>(e.end),
                   e.replacement.begin(), e.replacement.end())) {
      throw IdentityEditError("edit " + describe(e) + " does not change the source");
    }
    for (const auto& t : e.replacement) {
      if (t.empty() || std::any_of(t.begin(), t.end(), is_space)) {
        throw Error("invalid replacement token in edit " + describe(e));
      }
    }
  }
  std::stable_sort(edits.begin(), edits.end(), edit_order);
  for (std::size_t i = 1; i < edits.size(); ++i) {
    const Edit& a = edits[i - 1];
    const Edit& b = edits[i];
    // Touching spans are fine; two insertions at one index are ambiguous.
    if (a.end > b.start || (a.is_insertion() && b.is_insertion() && a.start == b.start)) {
      throw OverlapError("edits " + describe(a) + " and " + describe(b) + " overlap");
    }
  }
  EditSet es;
  es.source_ = std::move(source);
  es.edits_ = std::move(edits);
  es.groups_.resize(es.edits_.size());
  for (std::size_t i = 0; i < es.groups_.size(); ++i) es.groups_[i] = {i};
  return es;
}

// Merges players: `groups` must partition {0..N-1} of the current players.
// Group order follows the order given.
inline EditSet group_edits(const EditSet& es,
                           const std::vector<std::vector<std::size_t>>& groups) {
  std::vector<int> seen(es.size(), 0);
  for (const auto& g : groups) {
    if (g.empty()) throw InvalidPartitionError("empty group");
    for (std::size_t p : g) {
      if (p >= es.size()) {
        throw InvalidPartitionError("player index " + std::to_string(p) +
                                    " out of range");
      }
      if (seen[p]++) {
        throw InvalidPartitionError("player " + std::to_string(p) +
                                    " appears in more than one group");
      }
    }
  }
  for (std::size_t p = 0; p < seen.size(); ++p) {
    if (!seen[p]) {
      throw InvalidPartitionError("player " + std::to_string(p) + " not covered");
    }
  }
  EditSet out;
  out.source_ = es.source_;
  out.edits_ = es.edits_;
  for (const auto& g : groups) {
    std::vector<std::size_t> members;
    for (std::size_t p : g) {
      members.insert(members.end(), es.groups_[p].begin(), es.groups_[p].end());
    }
    std::sort(members.begin(), members.end());
    out.groups_.push_back(std::move(members));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Attribution results
// ---------------------------------------------------------------------------

enum class Method { kShapley, kShapleySampling, kAdd, kSub };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::kShapley: return "shapley";
    case Method::kShapleySampling: return "shapley_sampling";
    case Method::kAdd: return "add";
    case Method::kSub: return "sub";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  if (s == "shapley") return Method::kShapley;
  if (s == "sampling" || s == "shapley_sampling") return Method::kShapleySampling;
  if (s == "add") return Method::kAdd;
  if (s == "sub") return Method::kSub;
  throw Error("unknown attribution method '" + std::string(s) + "'");
}

struct AttributionResult {
  Method method = Method::kShapley;
  double delta_m = 0.0;
  std::vector<double> raw;         // one per player
  std::vector<double> normalized;  // sign-preserving L1 normalization of raw
  std::uint64_t scorer_calls = 0;
  double wall_time_s = 0.0;
  std::optional<std::uint64_t> sampling_t;
  std::optional<std::uint64_t> seed;

  // Add/Sub: values before rescaling onto delta_m.
  std::vector<double> unscaled;
  // Add/Sub whose raw sum vanished, so no rescaling was possible.
  bool non_effective = false;
  // Sampling: requested T exceeded N! and was capped.
  bool sampling_capped = false;
  // Sampling: all N! permutations were enumerated.
  bool sampling_exhaustive = false;
};

// -1, 0 or +1. Zero attributions are neither positive nor negative.
inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace editshap
