#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "testutil.hpp"
#include "typelabel/core.hpp"

using namespace typelabel;
using testutil::make_sample;

TEST_CASE("vocabulary partition from lists") {
  TypeVocabulary v = make_vocabulary({"person", "actor", "location"}, {"person", "location"}, {});
  CHECK(v.size() == 3);
  CHECK(v.tier_size(TypeVocabulary::Tier::General) == 2);
  CHECK(v.tier_size(TypeVocabulary::Tier::Fine) == 0);
  CHECK(v.tier_types(TypeVocabulary::Tier::Ultra) == std::vector<std::string>{"actor"});
  CHECK(v.index_of("actor") == 1);
  CHECK(v.index_of("missing") == -1);
}

TEST_CASE("vocabulary rejects duplicates and unknown tier entries") {
  CHECK_THROWS_AS(make_vocabulary({"person", "person"}, {}, {}), ParseError);
  CHECK_THROWS_AS(make_vocabulary({"person"}, {"actor"}, {}), ParseError);
  CHECK_THROWS_AS(make_vocabulary({"person"}, {}, {"actor"}), ParseError);
  CHECK_THROWS_AS(make_vocabulary({"person"}, {"person"}, {"person"}), ParseError);
}

TEST_CASE("vocabulary partition is exact on random splits") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 20; ++round) {
    int n = std::uniform_int_distribution<int>(1, 40)(rng);
    std::vector<std::string> all;
    for (int i = 0; i < n; ++i) all.push_back("t" + std::to_string(i));
    std::vector<std::string> general, fine;
    for (const auto& t : all) {
      int bucket = std::uniform_int_distribution<int>(0, 2)(rng);
      if (bucket == 0) general.push_back(t);
      if (bucket == 1) fine.push_back(t);
    }
    TypeVocabulary v = make_vocabulary(all, general, fine);
    CHECK(v.tier_size(TypeVocabulary::Tier::General) +
              v.tier_size(TypeVocabulary::Tier::Fine) +
              v.tier_size(TypeVocabulary::Tier::Ultra) ==
          v.size());
  }
}

TEST_CASE("load_vocabulary reads tier files") {
  testutil::TempDir dir("vocab");
  testutil::write_file(dir.file("types.txt"), "person\nactor\nlocation\n");
  testutil::write_file(dir.file("general.txt"), "person\nlocation\n");
  testutil::write_file(dir.file("fine.txt"), "");
  TypeVocabulary v = load_vocabulary(dir.file("types.txt"), dir.file("general.txt"),
                                     dir.file("fine.txt"));
  CHECK(v.tier_types(TypeVocabulary::Tier::Ultra) == std::vector<std::string>{"actor"});
  CHECK_THROWS_AS(load_vocabulary(dir.file("nope.txt"), dir.file("general.txt"),
                                  dir.file("fine.txt")),
                  ConfigError);
}

TEST_CASE("sample json round trip preserves every field") {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 30; ++round) {
    MentionSample s;
    s.left_context = testutil::random_tokens(rng, 0, 5);
    s.mention_tokens = testutil::random_tokens(rng, 1, 3);
    s.right_context = testutil::random_tokens(rng, 0, 5);
    s.kind = static_cast<MentionKind>(round % 3);
    if (round % 2) s.labels = {{"person", Provenance::Human}, {"actor", Provenance::Mlm}};
    MentionSample back = sample_from_json_line(sample_to_json_line(s));
    CHECK(back.left_context == s.left_context);
    CHECK(back.mention_tokens == s.mention_tokens);
    CHECK(back.right_context == s.right_context);
    CHECK(back.kind == s.kind);
    CHECK(back.labels == s.labels);
  }
}

TEST_CASE("read_samples yields records in order and reports bad lines") {
  testutil::TempDir dir("samples");
  MentionSample a = make_sample({"In"}, {"Paris"}, {"today", "."});
  MentionSample b = make_sample({}, {"He"}, {"ran", "."}, MentionKind::Pronoun);
  MentionSample c = make_sample({"the"}, {"old", "factory"}, {"closed", "."},
                                MentionKind::Nominal, {{"factory", Provenance::HeadWord}});
  write_samples(dir.file("ok.jsonl"), std::vector<MentionSample>{a, b, c});
  auto back = read_samples(dir.file("ok.jsonl"));
  REQUIRE(back.size() == 3);
  CHECK(back[0].mention_tokens == std::vector<std::string>{"Paris"});
  CHECK(back[1].kind == MentionKind::Pronoun);
  CHECK(back[2].labels.at("factory") == Provenance::HeadWord);

  SUBCASE("empty mention_tokens") {
    testutil::write_file(dir.file("bad.jsonl"),
                         R"({"left_context":[],"mention_tokens":[],"right_context":[],)"
                         R"("mention_kind":"NAMED","labels":[],"label_sources":{}})"
                         "\n");
    CHECK_THROWS_WITH_AS(read_samples(dir.file("bad.jsonl")),
                         doctest::Contains("mention_tokens"), ParseError);
  }
  SUBCASE("label missing from label_sources") {
    testutil::write_file(dir.file("bad.jsonl"),
                         R"({"left_context":[],"mention_tokens":["x"],"right_context":[],)"
                         R"("mention_kind":"NAMED","labels":["person"],"label_sources":{}})"
                         "\n");
    CHECK_THROWS_AS(read_samples(dir.file("bad.jsonl")), ParseError);
  }
  SUBCASE("unknown mention kind") {
    testutil::write_file(dir.file("bad.jsonl"),
                         R"({"left_context":[],"mention_tokens":["x"],"right_context":[],)"
                         R"("mention_kind":"VERB","labels":[],"label_sources":{}})"
                         "\n");
    CHECK_THROWS_WITH_AS(read_samples(dir.file("bad.jsonl")),
                         doctest::Contains("mention_kind"), ParseError);
  }
  SUBCASE("missing field is named with its line") {
    testutil::write_file(dir.file("bad.jsonl"),
                         sample_to_json_line(a) + "\n" +
                             R"({"left_context":[],"mention_tokens":["x"],)"
                             R"("mention_kind":"NAMED","labels":[],"label_sources":{}})"
                             "\n");
    CHECK_THROWS_WITH_AS(read_samples(dir.file("bad.jsonl")),
                         doctest::Contains("line 2: missing field 'right_context'"),
                         ParseError);
  }
}

TEST_CASE("sentence reconstruction invariant") {
  MentionSample s = make_sample({"In", "late", "2015", ","}, {"Leonardo", "DiCaprio"},
                                {"starred", "."});
  auto tokens = s.sentence_tokens();
  REQUIRE(tokens.size() == 8);
  CHECK(tokens[4] == "Leonardo");
  CHECK(s.mention_string() == "Leonardo DiCaprio");
}

TEST_CASE("merge_label_sources keeps stronger provenance") {
  MentionSample s = make_sample({}, {"DiCaprio"}, {}, MentionKind::Named,
                                {{"actor", Provenance::EntityLinking}});
  MentionSample merged = merge_label_sources(s, {"actor", "person"});
  CHECK(merged.labels.at("actor") == Provenance::EntityLinking);
  CHECK(merged.labels.at("person") == Provenance::Mlm);
  CHECK(merged.labels.size() == 2);
}

TEST_CASE("merge_label_sources on pronouns uses MLM labels only") {
  MentionSample s = make_sample({}, {"He"}, {"ran", "."}, MentionKind::Pronoun);
  MentionSample merged = merge_label_sources(s, {"person"});
  CHECK(merged.labels == std::map<std::string, Provenance>{{"person", Provenance::Mlm}});
}

TEST_CASE("merge_label_sources with empty additions is the identity") {
  MentionSample s = make_sample({}, {"factory"}, {}, MentionKind::Nominal,
                                {{"factory", Provenance::HeadWord}});
  MentionSample merged = merge_label_sources(s, {});
  CHECK(merged.labels == s.labels);
}

TEST_CASE("merge_label_sources is idempotent") {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 25; ++round) {
    MentionSample s = make_sample({}, testutil::random_tokens(rng, 1, 2), {},
                                  static_cast<MentionKind>(round % 3));
    if (round % 2) s.labels["person"] = Provenance::EntityLinking;
    std::vector<std::string> mlm = {"actor", "person"};
    MentionSample once = merge_label_sources(s, mlm);
    MentionSample twice = merge_label_sources(once, mlm);
    CHECK(once.labels == twice.labels);
  }
}

TEST_CASE("extract_pronoun_mentions") {
  auto& lex = default_pronoun_lexicon();

  SUBCASE("single match") {
    std::vector<std::string> sent = {"He", "ran", "."};
    auto out = extract_pronoun_mentions(sent, lex);
    REQUIRE(out.size() == 1);
    CHECK(out[0].mention_tokens == std::vector<std::string>{"He"});
    CHECK(out[0].kind == MentionKind::Pronoun);
    CHECK(out[0].labels.empty());
    CHECK(out[0].sentence_tokens() == sent);
  }
  SUBCASE("no pronouns") {
    std::vector<std::string> sent = {"Nothing", "matched", "."};
    CHECK(extract_pronoun_mentions(sent, lex).empty());
  }
  SUBCASE("two matches in one sentence") {
    std::vector<std::string> sent = {"They", "told", "them", "."};
    auto out = extract_pronoun_mentions(sent, lex);
    REQUIRE(out.size() == 2);
    CHECK(out[0].mention_tokens == std::vector<std::string>{"They"});
    CHECK(out[1].mention_tokens == std::vector<std::string>{"them"});
    CHECK(out[1].left_context == std::vector<std::string>{"They", "told"});
  }
  SUBCASE("matches equal an exhaustive scan") {
    std::mt19937_64 rng(23);
    std::set<std::string> words(lex.begin(), lex.end());
    for (int round = 0; round < 30; ++round) {
      std::vector<std::string> sent = testutil::random_tokens(rng, 1, 10);
      if (round % 2) sent.push_back("They");
      std::size_t expected = 0;
      for (const auto& t : sent) expected += words.count(t);
      CHECK(extract_pronoun_mentions(sent, lex).size() == expected);
    }
  }
}

TEST_CASE("vocabulary hash tracks content") {
  TypeVocabulary a = make_vocabulary({"x", "y"}, {}, {});
  TypeVocabulary b = make_vocabulary({"x", "z"}, {}, {});
  TypeVocabulary c = make_vocabulary({"x", "y"}, {"x"}, {});
  CHECK(a.hash() != b.hash());
  CHECK(a.hash() == c.hash());  // tiers do not change identity of the type list
}
