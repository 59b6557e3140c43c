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

// Shared fixtures for the test suites: random instances and independent
// reference implementations.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "editshap/core.hpp"
#include "editshap/edits.hpp"
#include "editshap/scorer.hpp"

namespace editshap::testing {

inline std::string word(std::size_t i) { return "w" + std::to_string(i); }

// A corpus from a sparse first-order Markov chain over `vocab` words, so that
// a trained n-gram model clearly prefers some orders over others.
inline std::vector<Sentence> markov_corpus(std::mt19937_64& rng, std::size_t n_sentences,
                                           std::size_t vocab = 20) {
  std::uniform_int_distribution<std::size_t> any(0, vocab - 1);
  std::uniform_int_distribution<std::size_t> len(4, 12);
  std::bernoulli_distribution follow(0.8);
  std::vector<Sentence> out;
  for (std::size_t s = 0; s < n_sentences; ++s) {
    std::vector<Token> toks;
    std::size_t cur = any(rng);
    const std::size_t L = len(rng);
    for (std::size_t k = 0; k < L; ++k) {
      toks.push_back(word(cur));
      cur = follow(rng) ? (cur * 7 + 3) % vocab : any(rng);
    }
    out.emplace_back(std::move(toks));
  }
  return out;
}

inline std::shared_ptr<const NGramLM> toy_lm(std::uint64_t seed = 1, int order = 3) {
  std::mt19937_64 rng(seed);
  auto corpus = markov_corpus(rng, 300);
  return std::make_shared<const NGramLM>(NGramLM::train(corpus, order, 0.1));
}

// Random source with `n_edits` non-overlapping replacements, deletions and
// insertions (each confined to its own token slot). Words come from w0..w24,
// a few of them unseen by toy_lm().
inline EditSet random_edit_set(std::mt19937_64& rng, std::size_t n_edits,
                               std::size_t vocab = 25) {
  std::uniform_int_distribution<std::size_t> any(0, vocab - 1);
  std::uniform_int_distribution<std::size_t> extra(0, 3);
  const std::size_t len = n_edits + 1 + extra(rng);
  std::vector<Token> src;
  for (std::size_t i = 0; i < len; ++i) src.push_back(word(any(rng)));

  std::vector<std::size_t> slots(len);
  for (std::size_t i = 0; i < len; ++i) slots[i] = i;
  std::shuffle(slots.begin(), slots.end(), rng);
  slots.resize(n_edits);

  std::uniform_int_distribution<int> kind(0, 5);
  std::vector<Edit> edits;
  for (std::size_t p : slots) {
    Edit e;
    const int k = kind(rng);
    if (k <= 2) {  // replacement
      e.start = p;
      e.end = p + 1;
      std::string w;
      do {
        w = word(any(rng));
      } while (w == src[p]);
      e.replacement = {w};
      if (k == 2) e.replacement.push_back(word(any(rng)));
    } else if (k == 3) {  // deletion
      e.start = p;
      e.end = p + 1;
    } else {  // insertion before token p
      e.start = e.end = p;
      e.replacement = {word(any(rng))};
    }
    e.error_type = k <= 2 ? "R:X" : (k == 3 ? "U:X" : "M:X");
    edits.push_back(std::move(e));
  }
  return validate_edit_set(Sentence(std::move(src)), std::move(edits));
}

// Like random_edit_set, but every source and replacement token is unique, so
// each subset of edits yields a different hypothesis. Oracle scorers that
// decode the subset from the hypothesis need this.
inline EditSet distinct_edit_set(std::mt19937_64& rng, std::size_t n_edits) {
  std::uniform_int_distribution<std::size_t> extra(0, 3);
  const std::size_t len = n_edits + 1 + extra(rng);
  std::vector<Token> src;
  for (std::size_t i = 0; i < len; ++i) src.push_back("s" + std::to_string(i));
  std::vector<std::size_t> slots(len);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  std::shuffle(slots.begin(), slots.end(), rng);
  slots.resize(n_edits);
  std::uniform_int_distribution<int> kind(0, 2);
  std::vector<Edit> edits;
  for (std::size_t p : slots) {
    const std::string r = "r" + std::to_string(p);
    switch (kind(rng)) {
      case 0: edits.push_back(Edit{p, p + 1, {r}, "R:X"}); break;
      case 1: edits.push_back(Edit{p, p + 1, {}, "U:X"}); break;
      default: edits.push_back(Edit{p, p, {r}, "M:X"}); break;
    }
  }
  return validate_edit_set(Sentence(std::move(src)), std::move(edits));
}

// Literal exact Shapley: for every edit i and every subset of the other edits,
// weight |e'|!(N-|e'|-1)!/N! times the marginal score change. No caching,
// every term scores both sentences afresh.
inline std::vector<double> brute_force_shapley(const Scorer& scorer, const EditSet& es) {
  const std::size_t n = es.size();
  const double n_fact = std::tgamma(static_cast<double>(n) + 1.0);
  auto dm = [&](SubsetMask m) {
    return scorer.score(es.source(), apply_subset(es, m)) -
           scorer.score(es.source(), es.source());
  };
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (SubsetMask m = 0; m < (SubsetMask{1} << n); ++m) {
      if (m >> i & 1u) continue;
      std::size_t size = 0;
      for (std::size_t b = 0; b < n; ++b) size += (m >> b) & 1u;
      const double w = std::tgamma(static_cast<double>(size) + 1.0) *
                       std::tgamma(static_cast<double>(n - size)) / n_fact;
      phi[i] += w * (dm(m | (SubsetMask{1} << i)) - dm(m));
    }
  }
  return phi;
}

// Three-edit running example: "A job is performed by him ." with
// [A -> The], [job -> work], [is -> was].
inline EditSet overview_edit_set() {
  return validate_edit_set(parse_sentence("A job is performed by him ."),
                           {Edit{0, 1, {"The"}, "R:DET"}, Edit{1, 2, {"work"}, "R:NOUN"},
                            Edit{2, 3, {"was"}, "R:VERB:TENSE"}});
}

// Counts calls made through the Scorer interface.
class CountingScorer final : public Scorer {
 public:
  explicit CountingScorer(const Scorer& inner) : inner_(inner) {}
  double score(const Sentence& s, const Sentence& h) const override {
    ++calls_;
    return inner_.score(s, h);
  }
  std::string name() const override { return "counting"; }
  std::uint64_t calls() const { return calls_; }

 private:
  const Scorer& inner_;
  mutable std::uint64_t calls_ = 0;
};

}  // namespace editshap::testing
