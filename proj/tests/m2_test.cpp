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

#include <random>

#include "editshap/edits.hpp"
#include "editshap/m2.hpp"
#include "support.hpp"

namespace editshap {
namespace {

TEST(ParseM2, SingleAnnotation) {
  auto out = parse_m2("S A job .\nA 0 1|||R:DET|||The|||REQUIRED|||-NONE-|||0\n\n");
  ASSERT_EQ(out.size(), 1u);
  const EditSet* es = out[0].find(0);
  ASSERT_NE(es, nullptr);
  ASSERT_EQ(es->size(), 1u);
  EXPECT_EQ(es->edits()[0].error_type, "R:DET");
  EXPECT_EQ(apply_all(*es).str(), "The job .");
}

TEST(ParseM2, NoopGivesEmptyEditSet) {
  auto out = parse_m2("S A job .\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n");
  ASSERT_EQ(out.size(), 1u);
  ASSERT_NE(out[0].find(0), nullptr);
  EXPECT_EQ(out[0].find(0)->size(), 0u);
}

TEST(ParseM2, BlockWithoutAnnotationsIsUnchanged) {
  auto out = parse_m2("S Fine as is .\n\nS Other .\n");
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].source.str(), "Other .");
  EXPECT_EQ(out[0].find(0)->size(), 0u);
}

TEST(ParseM2, DeletionsAndMultipleAnnotators) {
  const char* text =
      "S He go to the the school .\n"
      "A 1 2|||R:VERB:SVA|||goes|||REQUIRED|||-NONE-|||0\n"
      "A 3 4|||U:DET||||||REQUIRED|||-NONE-|||0\n"
      "A 4 5|||U:DET|||-NONE-|||REQUIRED|||-NONE-|||1\n"
      "A 1 2|||R:VERB|||went|||REQUIRED|||-NONE-|||1\n"
      "\n";
  auto out = parse_m2(text);
  ASSERT_EQ(out.size(), 1u);
  ASSERT_EQ(out[0].annotations.size(), 2u);
  EXPECT_EQ(apply_all(*out[0].find(0)).str(), "He goes to the school .");
  EXPECT_EQ(apply_all(*out[0].find(1)).str(), "He went to the school .");
  EXPECT_EQ(out[0].find(1)->edits()[0].start, 1u);  // sorted
}

TEST(ParseM2, Errors) {
  try {
    parse_m2("A 0 1|||R:DET|||The|||REQUIRED|||-NONE-|||0\n");
    FAIL() << "expected M2SyntaxError";
  } catch (const M2SyntaxError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  EXPECT_THROW(parse_m2("S a b\nA x 1|||R|||c|||REQUIRED|||-NONE-|||0\n"), M2SyntaxError);
  EXPECT_THROW(parse_m2("S a b\nA 0 1|||R\n"), M2SyntaxError);
  EXPECT_THROW(parse_m2("S a b\nA 0 5|||R|||c|||REQUIRED|||-NONE-|||0\n"), M2SyntaxError);
  EXPECT_THROW(parse_m2("S a b\nQ what\n"), M2SyntaxError);
  try {
    parse_m2("S a b c\n\nS a b\nA 0 2|||R|||x|||REQUIRED|||-NONE-|||0\n"
             "A 1 2|||R|||y|||REQUIRED|||-NONE-|||0\n");
    FAIL() << "expected M2SyntaxError";
  } catch (const M2SyntaxError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(EmitM2, ParseOfEmitIsIdentity) {
  std::mt19937_64 rng(29);
  std::vector<M2Sentence> corpus;
  for (int s = 0; s < 40; ++s) {
    M2Sentence block;
    auto es = testing::random_edit_set(rng, static_cast<std::size_t>(s % 5));
    block.source = es.source();
    block.annotations.push_back({0, es});
    if (s % 3 == 0) block.annotations.push_back({1, validate_edit_set(es.source(), {})});
    corpus.push_back(std::move(block));
  }
  const std::string text = emit_m2(corpus);
  EXPECT_EQ(parse_m2(text), corpus);
  EXPECT_EQ(emit_m2(parse_m2(text)), text);
}

}  // namespace
}  // namespace editshap
