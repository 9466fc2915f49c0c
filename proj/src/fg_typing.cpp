#include "typelabel/fg_typing.hpp"

#include <algorithm>
#include <unordered_map>

namespace typelabel::fg {

TypePath TypePath::parse(const std::string& rendered) {
  if (rendered.empty() || rendered[0] != '/')
    throw ParseError("type path must start with '/': " + rendered);
  TypePath out;
  std::size_t i = 1;
  while (i <= rendered.size()) {
    std::size_t next = rendered.find('/', i);
    if (next == std::string::npos) next = rendered.size();
    if (next == i) throw ParseError("type path has an empty segment: " + rendered);
    out.segments.push_back(rendered.substr(i, next - i));
    i = next + 1;
  }
  return out;
}

std::string TypePath::str() const {
  std::string out;
  for (const auto& seg : segments) {
    out += '/';
    out += seg;
  }
  return out;
}

std::optional<TypePath> WordTypeMapping::lookup(const std::string& word) const {
  auto it = entries.find(word);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

WordTypeMapping load_mapping(const std::filesystem::path& path) {
  WordTypeMapping mapping;
  long line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected word<TAB>/path");
    std::string word = to_lower(line.substr(0, tab));
    std::string rendered = line.substr(tab + 1);
    while (!rendered.empty() && (rendered.front() == ' ' || rendered.front() == '\t'))
      rendered.erase(rendered.begin());
    if (word.empty())
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": empty word");
    TypePath parsed;
    try {
      parsed = TypePath::parse(rendered);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!mapping.entries.emplace(word, std::move(parsed)).second)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": duplicate key '" +
                       word + "'");
  }
  return mapping;
}

std::set<std::string> expand_path(const TypePath& path) {
  if (path.segments.empty()) throw std::invalid_argument("empty type path");
  std::set<std::string> out;
  std::string prefix;
  for (const auto& seg : path.segments) {
    prefix += '/';
    prefix += seg;
    out.insert(prefix);
  }
  return out;
}

namespace {

// Singularized, lowercased top-1 word for the "M and any other H" prompt;
// nullopt when the prediction is empty.
std::optional<std::string> top_word(const MentionSample& sample, mlm::MlmBackend& backend) {
  const patterns::HypernymPattern& pattern = patterns::builtin_patterns().front();
  patterns::Prompt prompt = patterns::build_prompt(sample, pattern);
  mlm::MaskedPrediction pred = backend.fill_mask(prompt, 1);
  if (pred.ranked.empty()) return std::nullopt;
  return to_lower(mlm::singularize(pred.ranked.front().first));
}

}  // namespace

std::optional<std::set<std::string>> annotate_fg(const MentionSample& sample,
                                                 mlm::MlmBackend& backend,
                                                 const WordTypeMapping& mapping) {
  std::optional<std::string> word = top_word(sample, backend);
  if (!word) return std::nullopt;
  std::optional<TypePath> path = mapping.lookup(*word);
  if (!path) return std::nullopt;
  return expand_path(*path);
}

std::vector<std::pair<std::string, long>> mine_mapping_candidates(
    std::span<const MentionSample> samples, mlm::MlmBackend& backend, int n) {
  if (n <= 0) throw std::invalid_argument("n must be positive");
  std::unordered_map<std::string, long> counts;
  for (const auto& sample : samples) {
    std::optional<std::string> word = top_word(sample, backend);
    if (word) ++counts[*word];
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) > n) ranked.resize(n);
  return ranked;
}

}  // namespace typelabel::fg
