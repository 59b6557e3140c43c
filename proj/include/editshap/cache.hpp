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

// Memoized score differences over edit subsets.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "editshap/core.hpp"
#include "editshap/edits.hpp"
#include "editshap/scorer.hpp"

namespace editshap {

// Maps a player subset to dM = M(S_mask | S) - M(S | S) for one sentence.
// Every scorer evaluation made on behalf of the sentence goes through here,
// so `evaluations()` is the scorer call count.
class SubsetCache {
 public:
  // Dense storage up to this many players, hashed above.
  static constexpr std::size_t kDenseLimit = 20;

  explicit SubsetCache(std::size_t n_players, bool enabled = true)
      : n_players_(n_players), enabled_(enabled) {
    if (n_players > kMaxMaskWidth) {
      throw TooManyEditsError(std::to_string(n_players) + " edits exceed the mask width of " +
                              std::to_string(kMaxMaskWidth));
    }
    if (enabled_ && n_players <= kDenseLimit) {
      dense_values_.resize(std::size_t{1} << n_players, 0.0);
      dense_present_.resize(std::size_t{1} << n_players, 0);
    }
  }

  std::size_t players() const { return n_players_; }
  bool enabled() const { return enabled_; }

  std::optional<double> find(SubsetMask mask) const {
    if (mask == 0) return 0.0;
    if (!enabled_) return std::nullopt;
    if (!dense_present_.empty()) {
      if (!dense_present_[mask]) return std::nullopt;
      return dense_values_[mask];
    }
    auto it = sparse_.find(mask);
    if (it == sparse_.end()) return std::nullopt;
    return it->second;
  }

  void store(SubsetMask mask, double value) {
    if (!enabled_ || mask == 0) return;
    if (!dense_present_.empty()) {
      dense_values_[mask] = value;
      dense_present_[mask] = 1;
    } else {
      sparse_[mask] = value;
    }
  }

  // M(S | S), if already evaluated.
  std::optional<double> source_score() const {
    return enabled_ ? source_score_ : std::nullopt;
  }
  void set_source_score(double v) {
    if (enabled_) source_score_ = v;
  }

  void count_evaluations(std::uint64_t n) { evaluations_ += n; }
  void count_hit() { ++hits_; }

  std::uint64_t evaluations() const { return evaluations_; }
  std::uint64_t hits() const { return hits_; }

 private:
  std::size_t n_players_;
  bool enabled_;
  std::vector<double> dense_values_;
  std::vector<char> dense_present_;
  std::unordered_map<SubsetMask, double> sparse_;
  std::optional<double> source_score_;
  std::uint64_t evaluations_ = 0;
  std::uint64_t hits_ = 0;
};

// Scores every mask in `masks` that is not cached yet, batching the scorer
// calls. The source score is fetched in the same batch when missing.
inline void prefetch_delta_m(const Scorer& scorer, const EditSet& es,
                             std::span<const SubsetMask> masks, SubsetCache& cache) {
  if (!cache.enabled()) return;
  std::vector<SubsetMask> todo;
  std::vector<SentencePair> pairs;
  const bool need_source = !cache.source_score().has_value();
  if (need_source) pairs.push_back({es.source(), es.source()});
  for (SubsetMask m : masks) {
    if (!cache.find(m)) todo.push_back(m);
  }
  std::sort(todo.begin(), todo.end());
  todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
  for (SubsetMask m : todo) pairs.push_back({es.source(), apply_subset(es, m)});
  if (pairs.empty()) return;

  auto scores = scorer.batch_score(pairs);
  if (scores.size() != pairs.size()) {
    throw ScoreLengthMismatchError("scorer returned " + std::to_string(scores.size()) +
                                   " scores for " + std::to_string(pairs.size()) + " inputs");
  }
  cache.count_evaluations(pairs.size());
  std::size_t k = 0;
  if (need_source) cache.set_source_score(scores[k++]);
  const double base = *cache.source_score();
  for (SubsetMask m : todo) cache.store(m, scores[k++] - base);
}

// dM for one subset. mask == 0 is exactly 0; the source score is still
// evaluated (and cached) because every other subset is measured against it.
inline double delta_m(const Scorer& scorer, const EditSet& es, SubsetMask mask,
                      SubsetCache& cache) {
  if (auto hit = cache.find(mask); hit && (mask != 0 || cache.source_score())) {
    cache.count_hit();
    return *hit;
  }
  double base;
  if (auto s = cache.source_score()) {
    base = *s;
  } else {
    base = scorer.score(es.source(), es.source());
    cache.count_evaluations(1);
    cache.set_source_score(base);
  }
  if (mask == 0) return 0.0;
  const double value = scorer.score(es.source(), apply_subset(es, mask)) - base;
  cache.count_evaluations(1);
  cache.store(mask, value);
  return value;
}

}  // namespace editshap
