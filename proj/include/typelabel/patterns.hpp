#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "typelabel/core.hpp"

namespace typelabel::patterns {

inline constexpr const char* kMentionSlot = "<M>";
inline constexpr const char* kHypernymSlot = "<H>";
inline constexpr const char* kMaskToken = "[MASK]";

// A Hearst-like template with one mention slot <M> and one hypernym slot <H>.
struct HypernymPattern {
  std::string id;                   // template rendered with bare M / H
  std::vector<std::string> tokens;  // with <M> / <H> placeholder tokens
  bool mention_leading = false;     // true iff tokens.front() == <M>

  // Parses a template line ("<M> and any other <H>"). Throws ParseError
  // unless exactly one <M> and one <H> are present.
  static HypernymPattern parse(const std::string& template_line);
};

// MLM input with a single mask slot. insert_pos/insert_len locate the
// spliced-in fragment so it can be removed again.
struct Prompt {
  std::vector<std::string> tokens;
  int mask_index = -1;
  int insert_pos = 0;
  int insert_len = 0;
};

// The six compiled-in patterns, strongest first:
//   M and any other H / M and some other H / H such as M /
//   such H as M / H including M / H especially M
const std::vector<HypernymPattern>& builtin_patterns();

// Extended catalog: one template per line, tokens space-separated.
std::vector<HypernymPattern> load_pattern_file(const std::filesystem::path& path);

// Heuristic head of a noun phrase: the rightmost token before the first
// preposition / relative marker / comma, else the last token.
int head_word_index(std::span<const std::string> mention_tokens);

// Splices the pattern fragment (with <H> replaced by [MASK]) into the
// sample's sentence. Mask-leading patterns insert before the full mention;
// mention-leading patterns insert after the mention, except for nominal
// mentions where the insertion point is after the head word.
Prompt build_prompt(const MentionSample& sample, const HypernymPattern& pattern);

// Prompt with the inserted fragment removed; round-trips to the original
// sentence tokens.
std::vector<std::string> strip_insertion(const Prompt& prompt);

}  // namespace typelabel::patterns
