#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "testutil.hpp"
#include "typelabel/fg_typing.hpp"
#include "typelabel/training.hpp"

using namespace typelabel;
using namespace typelabel::fg;
using testutil::make_sample;

namespace {

// Mock keyed on the single annotation pattern's prompt for a sample.
mlm::MockBackend backend_answering(const MentionSample& s, const std::string& word) {
  mlm::MockBackend b;
  patterns::Prompt prompt =
      patterns::build_prompt(s, patterns::builtin_patterns().front());
  b.add_entry(mlm::prompt_key(prompt), mlm::MaskedPrediction{{{word, 0.9}, {"noise", 0.1}}});
  return b;
}

}  // namespace

TEST_CASE("type path parsing and rendering") {
  TypePath p = TypePath::parse("/person/artist/author");
  CHECK(p.segments == std::vector<std::string>{"person", "artist", "author"});
  CHECK(p.str() == "/person/artist/author");
  CHECK_THROWS_AS(TypePath::parse("person"), ParseError);
  CHECK_THROWS_AS(TypePath::parse("/person//artist"), ParseError);
  CHECK_THROWS_AS(TypePath::parse(""), ParseError);
}

TEST_CASE("expand_path returns all prefixes") {
  CHECK(expand_path(TypePath::parse("/organization/company")) ==
        std::set<std::string>{"/organization", "/organization/company"});
  CHECK(expand_path(TypePath::parse("/person")) == std::set<std::string>{"/person"});
  CHECK(expand_path(TypePath::parse("/person/artist/author")).size() == 3);
}

TEST_CASE("mapping file loading") {
  testutil::TempDir dir("mapping");
  testutil::write_file(dir.file("map.tsv"),
                       "company\t/organization/company\n"
                       "Author\t/person/artist/author\n"
                       "writer\t/person/artist/author\n");
  WordTypeMapping m = load_mapping(dir.file("map.tsv"));
  CHECK(m.entries.size() == 3);
  CHECK(m.lookup("company")->str() == "/organization/company");
  CHECK(m.lookup("author")->str() == "/person/artist/author");  // keys lowercased
  CHECK_FALSE(m.lookup("blue").has_value());

  testutil::write_file(dir.file("dup.tsv"), "company\t/a\ncompany\t/b\n");
  CHECK_THROWS_AS(load_mapping(dir.file("dup.tsv")), ParseError);
  testutil::write_file(dir.file("bad.tsv"), "company /organization\n");
  CHECK_THROWS_AS(load_mapping(dir.file("bad.tsv")), ParseError);
  testutil::write_file(dir.file("badpath.tsv"), "company\torganization\n");
  CHECK_THROWS_AS(load_mapping(dir.file("badpath.tsv")), ParseError);
}

TEST_CASE("annotate_fg maps the top word through the ontology") {
  testutil::TempDir dir("fg");
  testutil::write_file(dir.file("map.tsv"),
                       "company\t/organization/company\n"
                       "author\t/person/artist/author\n");
  WordTypeMapping mapping = load_mapping(dir.file("map.tsv"));
  MentionSample s = make_sample({"profits", "at"}, {"the", "firm"}, {"rose", "."},
                                MentionKind::Nominal);

  SUBCASE("plural company word expands the path") {
    mlm::MockBackend b = backend_answering(s, "companies");
    auto got = annotate_fg(s, b, mapping);
    REQUIRE(got.has_value());
    CHECK(*got == std::set<std::string>{"/organization", "/organization/company"});
  }
  SUBCASE("unmapped word leaves the sample unlabeled") {
    mlm::MockBackend b = backend_answering(s, "blue");
    CHECK_FALSE(annotate_fg(s, b, mapping).has_value());
  }
  SUBCASE("three-segment expansion") {
    mlm::MockBackend b = backend_answering(s, "author");
    auto got = annotate_fg(s, b, mapping);
    REQUIRE(got.has_value());
    CHECK(*got == std::set<std::string>{"/person", "/person/artist", "/person/artist/author"});
  }
  SUBCASE("empty prediction leaves the sample unlabeled") {
    mlm::MockBackend b;
    CHECK_FALSE(annotate_fg(s, b, mapping).has_value());
  }
}

TEST_CASE("annotate_fg output is prefix closed on random cases") {
  std::mt19937_64 rng(67);
  std::vector<std::string> words = {"company", "author", "city", "weapon", "blue", "loud"};
  testutil::TempDir dir("fgprop");
  testutil::write_file(dir.file("map.tsv"),
                       "company\t/organization/company\n"
                       "author\t/person/artist/author\n"
                       "city\t/location/city\n"
                       "weapon\t/object/weapon\n");
  WordTypeMapping mapping = load_mapping(dir.file("map.tsv"));

  for (int round = 0; round < 40; ++round) {
    MentionSample s = make_sample(testutil::random_tokens(rng, 0, 4),
                                  testutil::random_tokens(rng, 1, 3),
                                  testutil::random_tokens(rng, 0, 4),
                                  static_cast<MentionKind>(round % 3));
    const std::string& w = words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
    mlm::MockBackend b = backend_answering(s, w);
    auto got = annotate_fg(s, b, mapping);
    if (!got) continue;
    for (const auto& path : *got) {
      TypePath parsed = TypePath::parse(path);
      std::string prefix;
      for (const auto& seg : parsed.segments) {
        prefix += '/';
        prefix += seg;
        CHECK(got->count(prefix) == 1);
      }
    }
  }
}

TEST_CASE("mine_mapping_candidates tallies top predictions") {
  testutil::TempDir dir("mine");
  std::vector<MentionSample> samples;
  mlm::MockBackend b;
  std::map<std::string, long> expected;
  std::vector<std::string> words = {"companies", "company", "authors", "blue"};
  for (int i = 0; i < 20; ++i) {
    MentionSample s = make_sample({"ctx" + std::to_string(i)}, {"m" + std::to_string(i)}, {});
    const std::string& w = words[i % words.size()];
    patterns::Prompt prompt =
        patterns::build_prompt(s, patterns::builtin_patterns().front());
    b.add_entry(mlm::prompt_key(prompt), mlm::MaskedPrediction{{{w, 0.9}}});
    samples.push_back(s);
    ++expected[typelabel::to_lower(mlm::singularize(w))];
  }

  auto ranked = mine_mapping_candidates(samples, b, 10);
  std::map<std::string, long> got(ranked.begin(), ranked.end());
  CHECK(got == expected);
  CHECK(ranked.front().first == "company");  // companies + company collapse

  CHECK(mine_mapping_candidates(std::vector<MentionSample>{}, b, 3).empty());
  CHECK_THROWS_AS(mine_mapping_candidates(samples, b, 0), std::invalid_argument);
}

TEST_CASE("flat-vocabulary training reduces to plain bce without gating") {
  // Path labels live in a single tier, so the partitioned objective equals
  // plain BCE over the whole set.
  TypeVocabulary vocab = typelabel::make_vocabulary(
      {"/organization", "/organization/company", "/person"}, {}, {});
  MentionSample s = make_sample({}, {"firm"}, {}, MentionKind::Nominal);
  s.labels["/organization"] = Provenance::Mlm;
  s.labels["/organization/company"] = Provenance::Mlm;
  std::vector<double> p = {0.8, 0.6, 0.2};
  CHECK(train::partitioned_objective(s, p, vocab, train::LossKind::PlainBce, 5.0) ==
        train::plain_bce(s, p, vocab, TypeVocabulary::Tier::Ultra));
}
