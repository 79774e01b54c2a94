// SPDX-License-Identifier: Apache-2.0
#include "fidl/vqa_templates.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "fidl/error.h"
#include "fidl/rng.h"
#include "vqa_table_data.h"

namespace fidl {
namespace {

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

template <typename Words>
bool FirstWordIn(std::string_view answer, const Words& words) {
  const std::string_view first = FirstWord(answer);
  return std::any_of(words.begin(), words.end(), [&](std::string_view w) {
    return EqualsIgnoreCase(first, w);
  });
}

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

std::string_view TemplateTableText() { return internal::kVqaTableText; }

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string_view FirstWord(std::string_view answer) {
  std::size_t n = 0;
  while (n < answer.size() &&
         std::isalpha(static_cast<unsigned char>(answer[n]))) {
    ++n;
  }
  return answer.substr(0, n);
}

bool StartsWithPositiveWord(std::string_view answer) {
  return FirstWordIn(answer, DetectionVocab::kPositive);
}

bool StartsWithNegativeWord(std::string_view answer) {
  return FirstWordIn(answer, DetectionVocab::kNegative);
}

std::vector<VqaTemplate> ParseTemplateTable(std::string_view text) {
  std::vector<VqaTemplate> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto fields = SplitTabs(line);
    if (fields.size() != 4) {
      throw ParseError(line_no, "expected 4 tab-separated fields, got " +
                                    std::to_string(fields.size()));
    }
    VqaTemplate t;
    try {
      std::size_t used = 0;
      t.id = std::stoi(std::string(fields[0]), &used);
      if (used != fields[0].size()) throw std::invalid_argument("id");
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad template id '" + std::string(fields[0]) +
                                    "'");
    }
    if (t.id != static_cast<int>(out.size())) {
      throw ParseError(line_no, "template ids must be consecutive from 0");
    }
    t.question = fields[1];
    t.positive_answer = fields[2];
    t.negative_answer = fields[3];
    if (!StartsWithPositiveWord(t.positive_answer)) {
      throw ParseError(line_no, "positive answer does not start with a "
                                "positive vocabulary word");
    }
    if (!StartsWithNegativeWord(t.negative_answer)) {
      throw ParseError(line_no, "negative answer does not start with a "
                                "negative vocabulary word");
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<VqaTemplate> LoadTemplateTable(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseTemplateTable(ss.str());
}

const std::vector<VqaTemplate>& ListTemplates() {
  static const std::vector<VqaTemplate> kTemplates = [] {
    auto parsed = ParseTemplateTable(TemplateTableText());
    if (parsed.size() != kTemplateCount) {
      throw Error(ErrorKind::kIntegrity, "built-in template table has " +
                                             std::to_string(parsed.size()) +
                                             " rows");
    }
    return parsed;
  }();
  return kTemplates;
}

RenderedPair Render(int template_id, Decision label) {
  if (template_id < 0 || template_id >= kTemplateCount) {
    throw Error(ErrorKind::kUnknownTemplate,
                "template id " + std::to_string(template_id) +
                    " outside [0, " + std::to_string(kTemplateCount - 1) +
                    "]");
  }
  const VqaTemplate& t = ListTemplates()[template_id];
  RenderedPair pair;
  pair.template_id = template_id;
  pair.label = label;
  pair.question = t.question;
  pair.answer =
      label == Decision::kTampered ? t.positive_answer : t.negative_answer;
  return pair;
}

const VqaTemplate& SampleTemplate(std::uint64_t seed) {
  SplitMix64 rng(seed);
  return ListTemplates()[rng.NextBelow(kTemplateCount)];
}

}  // namespace fidl
