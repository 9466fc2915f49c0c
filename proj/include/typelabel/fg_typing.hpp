#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "typelabel/core.hpp"
#include "typelabel/mlm.hpp"

namespace typelabel::fg {

// Slash-delimited hierarchical type, e.g. /organization/company.
struct TypePath {
  std::vector<std::string> segments;

  static TypePath parse(const std::string& rendered);  // "/a/b/c"
  std::string str() const;
};

// Free-form type word (singular, lowercase) -> ontology path.
struct WordTypeMapping {
  std::map<std::string, TypePath> entries;

  std::optional<TypePath> lookup(const std::string& word) const;
};

// TSV lines: word<TAB>/path. Keys are lowercased; duplicates rejected.
WordTypeMapping load_mapping(const std::filesystem::path& path);

// All prefixes of the path, itself included; prefix-closed by construction.
std::set<std::string> expand_path(const TypePath& path);

// Single-pattern, top-1-word annotation: prompt with "M and any other H",
// singularize the most probable word, map it, expand the path. Unmapped
// words leave the sample unlabeled.
std::optional<std::set<std::string>> annotate_fg(const MentionSample& sample,
                                                 mlm::MlmBackend& backend,
                                                 const WordTypeMapping& mapping);

// Frequency-ranked singularized top-1 predictions over an unlabeled stream;
// assists manual mapping construction. Ties resolve alphabetically.
std::vector<std::pair<std::string, long>> mine_mapping_candidates(
    std::span<const MentionSample> samples, mlm::MlmBackend& backend, int n);

}  // namespace typelabel::fg
