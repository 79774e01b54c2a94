// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_VQA_TEMPLATES_H_
#define FIDL_VQA_TEMPLATES_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fidl/vocab_scorer.h"

namespace fidl {

struct VqaTemplate {
  int id = 0;
  std::string question;
  std::string positive_answer;
  std::string negative_answer;
};

struct RenderedPair {
  int template_id = 0;
  Decision label = Decision::kAuthentic;
  std::string question;
  std::string answer;
};

inline constexpr int kTemplateCount = 10;

// The built-in table, compiled from data/vqa_templates.tsv. Always returns
// the same 10 templates in table order.
const std::vector<VqaTemplate>& ListTemplates();

// Raw bytes of the built-in table file.
std::string_view TemplateTableText();

// FNV-1a 64-bit hash of a byte string.
std::uint64_t Fnv1a64(std::string_view bytes);

// Parses the tab-separated template format: one record per line,
// "id<TAB>question<TAB>positive<TAB>negative". Validates ids 0..9 in order
// and first-word vocabulary membership; throws ParseError otherwise.
std::vector<VqaTemplate> ParseTemplateTable(std::string_view text);
std::vector<VqaTemplate> LoadTemplateTable(const std::filesystem::path& path);

// Leading run of ASCII letters, e.g. "Never,there" -> "Never".
std::string_view FirstWord(std::string_view answer);

// Case-insensitive vocabulary half membership of an answer's first word.
bool StartsWithPositiveWord(std::string_view answer);
bool StartsWithNegativeWord(std::string_view answer);

// Throws Error(kUnknownTemplate) for ids outside [0, 9].
RenderedPair Render(int template_id, Decision label);

// Deterministic template rotation: SplitMix64(seed).NextBelow(10).
const VqaTemplate& SampleTemplate(std::uint64_t seed);

}  // namespace fidl

#endif  // FIDL_VQA_TEMPLATES_H_
