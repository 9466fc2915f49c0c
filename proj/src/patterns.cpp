#include "typelabel/patterns.hpp"

#include <algorithm>
#include <set>

namespace typelabel::patterns {

HypernymPattern HypernymPattern::parse(const std::string& template_line) {
  HypernymPattern p;
  p.tokens = split_whitespace(template_line);
  int mentions = 0, hypernyms = 0;
  for (const auto& tok : p.tokens) {
    if (tok == kMentionSlot) ++mentions;
    if (tok == kHypernymSlot) ++hypernyms;
  }
  if (mentions != 1 || hypernyms != 1)
    throw ParseError("pattern must contain exactly one <M> and one <H>: " + template_line);
  p.mention_leading = p.tokens.front() == kMentionSlot;
  std::vector<std::string> rendered = p.tokens;
  for (auto& tok : rendered) {
    if (tok == kMentionSlot) tok = "M";
    if (tok == kHypernymSlot) tok = "H";
  }
  p.id = join_tokens(rendered);
  return p;
}

const std::vector<HypernymPattern>& builtin_patterns() {
  static const std::vector<HypernymPattern> patterns = {
      HypernymPattern::parse("<M> and any other <H>"),
      HypernymPattern::parse("<M> and some other <H>"),
      HypernymPattern::parse("<H> such as <M>"),
      HypernymPattern::parse("such <H> as <M>"),
      HypernymPattern::parse("<H> including <M>"),
      HypernymPattern::parse("<H> especially <M>"),
  };
  return patterns;
}

std::vector<HypernymPattern> load_pattern_file(const std::filesystem::path& path) {
  std::vector<HypernymPattern> out;
  std::set<std::string> seen;
  for (const auto& line : read_lines(path)) {
    HypernymPattern p = HypernymPattern::parse(line);
    if (!seen.insert(p.id).second) throw ParseError("duplicate pattern: " + p.id);
    out.push_back(std::move(p));
  }
  return out;
}

int head_word_index(std::span<const std::string> mention_tokens) {
  static const std::set<std::string> markers = {"of",   "in",   "on",  "at",  "for",
                                                "from", "with", "by",  "to",  "that",
                                                "which", "who", ","};
  // A marker in first position is a determiner/complementizer, not a
  // boundary, so the scan starts at 1.
  for (std::size_t i = 1; i < mention_tokens.size(); ++i) {
    if (markers.count(to_lower(mention_tokens[i]))) return static_cast<int>(i) - 1;
  }
  return static_cast<int>(mention_tokens.size()) - 1;
}

namespace {

// Pattern tokens minus <M>, with <H> turned into the mask token.
std::vector<std::string> fragment_without_mention(const HypernymPattern& pattern,
                                                  bool after_mention_only) {
  std::vector<std::string> fragment;
  bool past_mention = false;
  for (const auto& tok : pattern.tokens) {
    if (tok == kMentionSlot) {
      past_mention = true;
      continue;
    }
    if (after_mention_only && !past_mention) continue;
    fragment.push_back(tok == kHypernymSlot ? kMaskToken : tok);
  }
  return fragment;
}

}  // namespace

Prompt build_prompt(const MentionSample& sample, const HypernymPattern& pattern) {
  std::vector<std::string> fragment =
      fragment_without_mention(pattern, /*after_mention_only=*/pattern.mention_leading);

  std::size_t insert_pos;
  if (!pattern.mention_leading) {
    insert_pos = sample.left_context.size();
  } else if (sample.kind == MentionKind::Nominal) {
    int head = head_word_index(sample.mention_tokens);
    insert_pos = sample.left_context.size() + static_cast<std::size_t>(head) + 1;
  } else {
    insert_pos = sample.left_context.size() + sample.mention_tokens.size();
  }

  std::vector<std::string> sentence = sample.sentence_tokens();
  Prompt prompt;
  prompt.tokens.reserve(sentence.size() + fragment.size());
  prompt.tokens.insert(prompt.tokens.end(), sentence.begin(), sentence.begin() + insert_pos);
  prompt.tokens.insert(prompt.tokens.end(), fragment.begin(), fragment.end());
  prompt.tokens.insert(prompt.tokens.end(), sentence.begin() + insert_pos, sentence.end());
  prompt.insert_pos = static_cast<int>(insert_pos);
  prompt.insert_len = static_cast<int>(fragment.size());
  for (std::size_t i = 0; i < fragment.size(); ++i) {
    if (fragment[i] == kMaskToken) prompt.mask_index = static_cast<int>(insert_pos + i);
  }
  return prompt;
}

std::vector<std::string> strip_insertion(const Prompt& prompt) {
  std::vector<std::string> out;
  out.reserve(prompt.tokens.size() - prompt.insert_len);
  for (int i = 0; i < static_cast<int>(prompt.tokens.size()); ++i) {
    if (i >= prompt.insert_pos && i < prompt.insert_pos + prompt.insert_len) continue;
    out.push_back(prompt.tokens[i]);
  }
  return out;
}

}  // namespace typelabel::patterns
