#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "typelabel/util.hpp"

namespace typelabel {

enum class MentionKind { Named, Pronoun, Nominal };

// Where a label came from. Ordered strongest first: a label keeps the
// strongest tag it ever received when streams are merged.
enum class Provenance { Human, EntityLinking, HeadWord, Mlm };

std::string to_string(MentionKind kind);
std::string to_string(Provenance prov);
MentionKind mention_kind_from_string(const std::string& s);
Provenance provenance_from_string(const std::string& s);

// A mention in context. The labels map is the single source of truth for
// both the label set and the per-label provenance tags.
struct MentionSample {
  std::vector<std::string> left_context;
  std::vector<std::string> mention_tokens;
  std::vector<std::string> right_context;
  MentionKind kind = MentionKind::Named;
  std::map<std::string, Provenance> labels;

  std::vector<std::string> sentence_tokens() const;
  std::string mention_string() const;
  std::set<std::string> label_set() const;
};

// The full type set split into three disjoint tiers.
struct TypeVocabulary {
  enum class Tier { General, Fine, Ultra };

  std::vector<std::string> all_types;
  std::unordered_map<std::string, int> index;
  std::vector<Tier> tier;  // aligned with all_types

  int size() const { return static_cast<int>(all_types.size()); }
  bool contains(const std::string& type) const { return index.count(type) > 0; }
  // -1 when absent.
  int index_of(const std::string& type) const;
  std::vector<std::string> tier_types(Tier t) const;
  int tier_size(Tier t) const;
  // Fingerprint used to refuse mismatched checkpoint/vocabulary pairs.
  std::string hash() const;
};

// Builds and validates a vocabulary from in-memory lists. Throws ParseError
// on duplicates, on general/fine entries missing from the main list, or on
// overlap between the general and fine lists.
TypeVocabulary make_vocabulary(std::vector<std::string> all_types,
                               const std::vector<std::string>& general,
                               const std::vector<std::string>& fine);

// One type per line in each file; ultra-fine = everything not listed as
// general or fine.
TypeVocabulary load_vocabulary(const std::filesystem::path& vocab_file,
                               const std::filesystem::path& general_file,
                               const std::filesystem::path& fine_file);

// Line-delimited JSON sample records; see README for the field list.
// Single-consumer streaming reader. Parse errors carry the line number.
class SampleReader {
 public:
  explicit SampleReader(const std::filesystem::path& path);
  std::optional<MentionSample> next();

 private:
  std::ifstream in_;
  std::string path_;
  long line_no_ = 0;
};

std::vector<MentionSample> read_samples(const std::filesystem::path& path);
void write_samples(const std::filesystem::path& path, std::span<const MentionSample> samples);

std::string sample_to_json_line(const MentionSample& sample);
MentionSample sample_from_json_line(const std::string& line, long line_no = 0);

// Union of the sample's labels with MLM-generated ones. Pre-existing tags
// win over the incoming Mlm tag. Pronoun mentions take the MLM labels only.
MentionSample merge_label_sources(const MentionSample& sample,
                                  const std::vector<std::string>& mlm_labels);

// he/she/it/they/him/her/them/I/we/you/me/us plus case variants.
const std::vector<std::string>& default_pronoun_lexicon();

std::vector<std::string> load_pronoun_lexicon(const std::filesystem::path& path);

// One unlabeled Pronoun sample per lexicon match in the sentence.
std::vector<MentionSample> extract_pronoun_mentions(std::span<const std::string> sentence_tokens,
                                                    const std::vector<std::string>& lexicon);

}  // namespace typelabel
