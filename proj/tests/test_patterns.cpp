#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "testutil.hpp"
#include "typelabel/patterns.hpp"

using namespace typelabel;
using namespace typelabel::patterns;
using testutil::make_sample;

TEST_CASE("builtin patterns are ordered strongest first") {
  const auto& pats = builtin_patterns();
  REQUIRE(pats.size() >= 6);
  CHECK(pats[0].id == "M and any other H");
  CHECK(pats[1].id == "M and some other H");
  CHECK(pats[2].id == "H such as M");
  CHECK(pats[3].id == "such H as M");
  CHECK(pats[4].id == "H including M");
  CHECK(pats[5].id == "H especially M");
  for (const auto& p : pats) {
    int m = 0, h = 0;
    for (const auto& t : p.tokens) {
      m += t == kMentionSlot;
      h += t == kHypernymSlot;
    }
    CHECK(m == 1);
    CHECK(h == 1);
    CHECK(p.mention_leading == (p.tokens.front() == kMentionSlot));
  }
}

TEST_CASE("pattern parsing validates slots") {
  CHECK_THROWS_AS(HypernymPattern::parse("no slots here"), ParseError);
  CHECK_THROWS_AS(HypernymPattern::parse("<M> but no hypernym"), ParseError);
  CHECK_THROWS_AS(HypernymPattern::parse("<M> and <H> or <H>"), ParseError);
  HypernymPattern p = HypernymPattern::parse("<H> known as <M>");
  CHECK(p.id == "H known as M");
  CHECK_FALSE(p.mention_leading);
}

TEST_CASE("pattern file loading") {
  testutil::TempDir dir("patterns");
  testutil::write_file(dir.file("extra.txt"), "<H> like <M>\n<M> or other <H>\n");
  auto pats = load_pattern_file(dir.file("extra.txt"));
  REQUIRE(pats.size() == 2);
  CHECK(pats[0].id == "H like M");
  CHECK(pats[1].mention_leading);

  testutil::write_file(dir.file("dup.txt"), "<H> like <M>\n<H> like <M>\n");
  CHECK_THROWS_AS(load_pattern_file(dir.file("dup.txt")), ParseError);
}

TEST_CASE("head word heuristic") {
  CHECK(head_word_index(std::vector<std::string>{"the", "factory", "in", "Thailand"}) == 1);
  CHECK(head_word_index(std::vector<std::string>{"a", "famous", "actor"}) == 2);
  CHECK(head_word_index(std::vector<std::string>{"He"}) == 0);
  CHECK(head_word_index(std::vector<std::string>{"the", "man", "who", "sang"}) == 1);
  CHECK(head_word_index(std::vector<std::string>{"that", "man"}) == 1);
  CHECK(head_word_index(std::vector<std::string>{"the", "house", ",", "old"}) == 1);
}

TEST_CASE("mask-leading prompt inserts before the mention") {
  MentionSample s = make_sample({"In", "late", "2015", ","}, {"Leonardo", "DiCaprio"},
                                {"starred", "in", "The", "Revenant", "."});
  Prompt p = build_prompt(s, builtin_patterns()[2]);  // H such as M
  CHECK(join_tokens(p.tokens) ==
        "In late 2015 , [MASK] such as Leonardo DiCaprio starred in The Revenant .");
  CHECK(p.tokens[p.mask_index] == kMaskToken);
  CHECK(strip_insertion(p) == s.sentence_tokens());
}

TEST_CASE("mention-leading prompt inserts after the mention") {
  MentionSample s = make_sample({"disruption", "faced", "by"}, {"our", "competitors"}, {"."},
                                MentionKind::Named);
  Prompt p = build_prompt(s, builtin_patterns()[0]);  // M and any other H
  CHECK(join_tokens(p.tokens) == "disruption faced by our competitors and any other [MASK] .");
}

TEST_CASE("nominal mentions insert after the head word") {
  MentionSample s = make_sample({}, {"the", "factory", "in", "Thailand"}, {"closed", "."},
                                MentionKind::Nominal);
  Prompt p = build_prompt(s, builtin_patterns()[1]);  // M and some other H
  CHECK(join_tokens(p.tokens) ==
        "the factory and some other [MASK] in Thailand closed .");
  CHECK(strip_insertion(p) == s.sentence_tokens());
}

TEST_CASE("pronoun mentions use the full-mention boundary") {
  MentionSample s = make_sample({"At", "some", "clinics", ","}, {"they"},
                                {"are", "told", "to", "go", "elsewhere", "."},
                                MentionKind::Pronoun);
  Prompt p = build_prompt(s, builtin_patterns()[1]);
  CHECK(join_tokens(p.tokens) ==
        "At some clinics , they and some other [MASK] are told to go elsewhere .");
}

TEST_CASE("mask-leading patterns ignore the head rule for nominals") {
  MentionSample s = make_sample({}, {"the", "factory", "in", "Thailand"}, {"closed", "."},
                                MentionKind::Nominal);
  Prompt p = build_prompt(s, builtin_patterns()[2]);  // H such as M
  CHECK(join_tokens(p.tokens) ==
        "[MASK] such as the factory in Thailand closed .");
}

TEST_CASE("prompt round trip over random cases") {
  std::mt19937_64 rng(41);
  const auto& pats = builtin_patterns();
  for (int round = 0; round < 60; ++round) {
    MentionSample s;
    s.left_context = testutil::random_tokens(rng, 0, 6);
    s.mention_tokens = testutil::random_tokens(rng, 1, 4);
    s.right_context = testutil::random_tokens(rng, 0, 6);
    s.kind = static_cast<MentionKind>(round % 3);
    const auto& pat = pats[round % pats.size()];
    Prompt p = build_prompt(s, pat);
    int masks = 0;
    for (const auto& t : p.tokens) masks += t == kMaskToken;
    CHECK(masks == 1);
    CHECK(p.tokens[p.mask_index] == kMaskToken);
    CHECK(strip_insertion(p) == s.sentence_tokens());
  }
}
