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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "editshap/edits.hpp"
#include "support.hpp"

namespace editshap {
namespace {

TEST(ApplySubset, RunningExample) {
  auto es = testing::overview_edit_set();
  EXPECT_EQ(apply_subset(es, 0b011).str(), "The work is performed by him .");
  EXPECT_EQ(apply_subset(es, 0b000), es.source());
  EXPECT_EQ(apply_subset(es, 0b010).str(), "A work is performed by him .");
  EXPECT_EQ(apply_subset(es, 0b111).str(), "The work was performed by him .");
}

TEST(ApplySubset, InsertionsAndDeletions) {
  auto es = validate_edit_set(parse_sentence("a b c"),
                              {Edit{0, 0, {"x", "y"}, {}}, Edit{1, 2, {}, {}}, Edit{3, 3, {"z"}, {}}});
  EXPECT_EQ(apply_all(es).str(), "x y a c z");
  EXPECT_EQ(apply_subset(es, 0b010).str(), "a c");
  EXPECT_EQ(apply_subset(es, 0b101).str(), "x y a b c z");
}

TEST(ApplySubset, GroupBitControlsAllMembers) {
  auto es = testing::overview_edit_set();
  auto grouped = group_edits(es, {{0, 1}, {2}});
  EXPECT_EQ(apply_subset(grouped, 0b01).str(), "The work is performed by him .");
  EXPECT_EQ(apply_subset(grouped, 0b10).str(), "A job was performed by him .");
}

// Shifted start of edit i once the edits in `mask` before it are applied.
std::size_t shifted_start(const EditSet& es, SubsetMask mask, std::size_t i) {
  std::ptrdiff_t shift = 0;
  for (std::size_t j = 0; j < i; ++j) {
    if (mask >> j & 1u) {
      const Edit& e = es.edits()[j];
      shift += static_cast<std::ptrdiff_t>(e.replacement.size()) -
               static_cast<std::ptrdiff_t>(e.end - e.start);
    }
  }
  return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(es.edits()[i].start) + shift);
}

TEST(ApplySubset, AddingAnEditOnlyChangesItsSpan) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto es = testing::random_edit_set(rng, 1 + trial % 7);
    std::uniform_int_distribution<SubsetMask> pick(0, full_mask(es.size()));
    const SubsetMask m = pick(rng);
    for (std::size_t i = 0; i < es.size(); ++i) {
      if (m >> i & 1u) continue;
      const auto a = apply_subset(es, m).tokens();
      const auto b = apply_subset(es, m | (SubsetMask{1} << i)).tokens();
      const Edit& e = es.edits()[i];
      const std::size_t s = shifted_start(es, m, i);
      ASSERT_TRUE(std::equal(a.begin(), a.begin() + s, b.begin(), b.begin() + s));
      ASSERT_TRUE(std::equal(a.begin() + s + (e.end - e.start), a.end(),
                             b.begin() + s + e.replacement.size(), b.end()));
      ASSERT_TRUE(std::equal(b.begin() + s, b.begin() + s + e.replacement.size(),
                             e.replacement.begin(), e.replacement.end()));
    }
  }
}

// Longest common subsequence by enumerating every subsequence of `a`.
std::size_t brute_force_lcs(const std::vector<Token>& a, const std::vector<Token>& b) {
  std::size_t best = 0;
  for (std::uint32_t m = 0; m < (1u << a.size()); ++m) {
    std::size_t j = 0, len = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(m >> i & 1u)) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else { ++j; ++len; }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

std::size_t untouched_tokens(const EditSet& es) {
  std::size_t touched = 0;
  for (const auto& e : es.edits()) touched += e.end - e.start;
  return es.source().size() - touched;
}

TEST(ExtractEdits, TwoMaximalRuns) {
  auto src = parse_sentence("A job is done .");
  auto hyp = parse_sentence("The job was done .");
  auto es = extract_edits(src, hyp);
  ASSERT_EQ(es.size(), 2u);
  EXPECT_EQ(es.edits()[0], (Edit{0, 1, {"The"}, std::nullopt}));
  EXPECT_EQ(es.edits()[1], (Edit{2, 3, {"was"}, std::nullopt}));
  EXPECT_EQ(brute_force_lcs(src.tokens(), hyp.tokens()), 3u);
  EXPECT_EQ(untouched_tokens(es), 3u);
}

TEST(ExtractEdits, IdenticalSentencesGiveNoEdits) {
  auto s = parse_sentence("nothing to fix here .");
  EXPECT_EQ(extract_edits(s, s).size(), 0u);
  EXPECT_EQ(extract_edits(Sentence{}, Sentence{}).size(), 0u);
}

TEST(ExtractEdits, SuffixInsertion) {
  auto es = extract_edits(parse_sentence("a b"), parse_sentence("a b c"));
  ASSERT_EQ(es.size(), 1u);
  EXPECT_EQ(es.edits()[0], (Edit{2, 2, {"c"}, std::nullopt}));
}

TEST(ExtractEdits, EmptySides) {
  auto del = extract_edits(parse_sentence("a b"), Sentence{});
  ASSERT_EQ(del.size(), 1u);
  EXPECT_EQ(del.edits()[0], (Edit{0, 2, {}, std::nullopt}));
  auto ins = extract_edits(Sentence{}, parse_sentence("a b"));
  ASSERT_EQ(ins.size(), 1u);
  EXPECT_EQ(ins.edits()[0], (Edit{0, 0, {"a", "b"}, std::nullopt}));
}

TEST(ExtractEdits, RoundTripAndMinimalityOnRandomPairs) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> len(0, 9);
  std::uniform_int_distribution<std::size_t> tok(0, 4);
  auto random_sentence = [&] {
    std::vector<Token> t(len(rng));
    for (auto& x : t) x = testing::word(tok(rng));
    return Sentence(std::move(t));
  };
  for (int trial = 0; trial < 500; ++trial) {
    const Sentence src = random_sentence();
    const Sentence hyp = random_sentence();
    const auto es = extract_edits(src, hyp);
    ASSERT_EQ(apply_all(es), hyp);
    ASSERT_EQ(untouched_tokens(es), brute_force_lcs(src.tokens(), hyp.tokens()));
    // Re-extracting from the reproduced hypothesis is stable.
    ASSERT_EQ(extract_edits(src, apply_subset(es, full_mask(es.size()))), es);
  }
}

TEST(MakeEditSet, ChecksHypothesis) {
  auto src = parse_sentence("a b c");
  EXPECT_NO_THROW(make_edit_set(src, {Edit{1, 2, {"x"}, {}}}, parse_sentence("a x c")));
  EXPECT_THROW(make_edit_set(src, {Edit{1, 2, {"x"}, {}}}, parse_sentence("a y c")),
               HypothesisMismatchError);
}

TEST(RecognizeSubset, RecoversEveryMask) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto es = testing::random_edit_set(rng, 1 + trial % 6);
    for (SubsetMask m = 0; m <= full_mask(es.size()); ++m) {
      auto got = recognize_subset(es, apply_subset(es, m));
      ASSERT_TRUE(got.has_value());
      // Distinct masks can coincide as sentences; the decoded one must
      // reproduce the same sentence.
      ASSERT_EQ(apply_subset(es, *got), apply_subset(es, m));
    }
  }
  auto es = testing::overview_edit_set();
  EXPECT_FALSE(recognize_subset(es, parse_sentence("The job is done .")).has_value());
}

TEST(RecognizeSubset, PartialGroupIsUnrecognized) {
  auto es = group_edits(testing::overview_edit_set(), {{0, 1}, {2}});
  EXPECT_EQ(recognize_subset(es, parse_sentence("The work is performed by him .")), 0b01u);
  EXPECT_FALSE(recognize_subset(es, parse_sentence("The job is performed by him .")));
}

}  // namespace
}  // namespace editshap
