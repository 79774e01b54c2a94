// SPDX-License-Identifier: Apache-2.0
#include "fidl/vqa_templates.h"

#include <set>

#include <gtest/gtest.h>

#include "fidl/error.h"
#include "frozen_values.h"

namespace fidl {
namespace {

TEST(VqaTemplatesTest, TableHasTenTemplatesInOrder) {
  const auto& templates = ListTemplates();
  ASSERT_EQ(templates.size(), 10u);
  for (int i = 0; i < kTemplateCount; ++i) EXPECT_EQ(templates[i].id, i);
  EXPECT_EQ(templates[0].question,
            "Are there any signs of tampering in this image?");
  EXPECT_EQ(templates[2].negative_answer,
            "Never, We did not find any signs of tampering in the image.");
}

TEST(VqaTemplatesTest, ChecksumMatchesFrozenTranscription) {
  EXPECT_EQ(Fnv1a64(TemplateTableText()), frozen::kTemplateTableFnv1a64);
}

TEST(VqaTemplatesTest, Fnv1a64KnownVectors) {
  EXPECT_EQ(Fnv1a64(""), 0xCBF29CE484222325ULL);
  EXPECT_EQ(Fnv1a64("a"), 0xAF63DC4C8601EC8CULL);
  EXPECT_EQ(Fnv1a64("foobar"), 0x85944171F73967E8ULL);
}

TEST(VqaTemplatesTest, AllTwentyAnswersStartInTheRightHalf) {
  for (const auto& t : ListTemplates()) {
    EXPECT_TRUE(StartsWithPositiveWord(t.positive_answer)) << t.id;
    EXPECT_FALSE(StartsWithNegativeWord(t.positive_answer)) << t.id;
    EXPECT_TRUE(StartsWithNegativeWord(t.negative_answer)) << t.id;
    EXPECT_FALSE(StartsWithPositiveWord(t.negative_answer)) << t.id;
  }
}

TEST(VqaTemplatesTest, FirstWordStopsAtNonLetters) {
  EXPECT_EQ(FirstWord("Never,there is none"), "Never");
  EXPECT_EQ(FirstWord("Yes, it is"), "Yes");
  EXPECT_EQ(FirstWord(""), "");
  EXPECT_TRUE(StartsWithPositiveWord("sure thing"));
  EXPECT_FALSE(StartsWithPositiveWord("Yesterday"));
}

TEST(VqaTemplatesTest, RenderPicksAnswerByLabel) {
  const RenderedPair t = Render(3, Decision::kTampered);
  const RenderedPair a = Render(3, Decision::kAuthentic);
  EXPECT_EQ(t.question, a.question);
  EXPECT_EQ(t.answer, ListTemplates()[3].positive_answer);
  EXPECT_EQ(a.answer, ListTemplates()[3].negative_answer);
  EXPECT_EQ(t.template_id, 3);
}

TEST(VqaTemplatesTest, RenderRejectsUnknownIds) {
  for (int id : {-1, 10, 42}) {
    try {
      Render(id, Decision::kTampered);
      FAIL() << id;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kUnknownTemplate);
    }
  }
}

TEST(VqaTemplatesTest, SampleTemplateIsSeededAndCoversTable) {
  EXPECT_EQ(SampleTemplate(0).id, frozen::kTemplateForSeed0);
  EXPECT_EQ(SampleTemplate(42).id, frozen::kTemplateForSeed42);
  EXPECT_EQ(&SampleTemplate(17), &SampleTemplate(17));
  std::set<int> seen;
  for (std::uint64_t s = 0; s < 200; ++s) seen.insert(SampleTemplate(s).id);
  EXPECT_EQ(seen.size(), 10u);
}

TEST(VqaTemplatesTest, ParserRejectsWrongVocabularyAndBadIds) {
  EXPECT_THROW(ParseTemplateTable("0\tQ?\tNo, wrong half.\tNo, fine.\n"),
               ParseError);
  EXPECT_THROW(ParseTemplateTable("1\tQ?\tYes, a.\tNo, b.\n"), ParseError);
  EXPECT_THROW(ParseTemplateTable("0\tQ?\tYes, a.\n"), ParseError);
  EXPECT_EQ(ParseTemplateTable(TemplateTableText()).size(), 10u);
}

}  // namespace
}  // namespace fidl
