#include "typelabel/core.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

namespace typelabel {

using nlohmann::json;

std::string to_string(MentionKind kind) {
  switch (kind) {
    case MentionKind::Named: return "NAMED";
    case MentionKind::Pronoun: return "PRONOUN";
    case MentionKind::Nominal: return "NOMINAL";
  }
  return "NAMED";
}

std::string to_string(Provenance prov) {
  switch (prov) {
    case Provenance::Human: return "HUMAN";
    case Provenance::EntityLinking: return "EL";
    case Provenance::HeadWord: return "HEAD";
    case Provenance::Mlm: return "MLM";
  }
  return "MLM";
}

MentionKind mention_kind_from_string(const std::string& s) {
  if (s == "NAMED") return MentionKind::Named;
  if (s == "PRONOUN") return MentionKind::Pronoun;
  if (s == "NOMINAL") return MentionKind::Nominal;
  throw ParseError("unknown mention_kind: " + s);
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "HUMAN") return Provenance::Human;
  if (s == "EL") return Provenance::EntityLinking;
  if (s == "HEAD") return Provenance::HeadWord;
  if (s == "MLM") return Provenance::Mlm;
  throw ParseError("unknown provenance: " + s);
}

std::vector<std::string> MentionSample::sentence_tokens() const {
  std::vector<std::string> out;
  out.reserve(left_context.size() + mention_tokens.size() + right_context.size());
  out.insert(out.end(), left_context.begin(), left_context.end());
  out.insert(out.end(), mention_tokens.begin(), mention_tokens.end());
  out.insert(out.end(), right_context.begin(), right_context.end());
  return out;
}

std::string MentionSample::mention_string() const { return join_tokens(mention_tokens); }

std::set<std::string> MentionSample::label_set() const {
  std::set<std::string> out;
  for (const auto& [type, prov] : labels) out.insert(type);
  return out;
}

int TypeVocabulary::index_of(const std::string& type) const {
  auto it = index.find(type);
  return it == index.end() ? -1 : it->second;
}

std::vector<std::string> TypeVocabulary::tier_types(Tier t) const {
  std::vector<std::string> out;
  for (int i = 0; i < size(); ++i)
    if (tier[i] == t) out.push_back(all_types[i]);
  return out;
}

int TypeVocabulary::tier_size(Tier t) const {
  int n = 0;
  for (Tier x : tier)
    if (x == t) ++n;
  return n;
}

std::string TypeVocabulary::hash() const {
  std::string blob;
  for (const auto& t : all_types) {
    blob += t;
    blob += '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(blob)));
  return std::string(buf);
}

TypeVocabulary make_vocabulary(std::vector<std::string> all_types,
                               const std::vector<std::string>& general,
                               const std::vector<std::string>& fine) {
  TypeVocabulary vocab;
  vocab.all_types = std::move(all_types);
  vocab.tier.assign(vocab.all_types.size(), TypeVocabulary::Tier::Ultra);
  for (int i = 0; i < vocab.size(); ++i) {
    auto [it, inserted] = vocab.index.emplace(vocab.all_types[i], i);
    if (!inserted) throw ParseError("duplicate type in vocabulary: " + vocab.all_types[i]);
  }
  for (const auto& t : general) {
    int idx = vocab.index_of(t);
    if (idx < 0) throw ParseError("general type not in vocabulary: " + t);
    if (vocab.tier[idx] != TypeVocabulary::Tier::Ultra)
      throw ParseError("type listed twice in tier files: " + t);
    vocab.tier[idx] = TypeVocabulary::Tier::General;
  }
  for (const auto& t : fine) {
    int idx = vocab.index_of(t);
    if (idx < 0) throw ParseError("fine type not in vocabulary: " + t);
    if (vocab.tier[idx] != TypeVocabulary::Tier::Ultra)
      throw ParseError("type listed twice in tier files: " + t);
    vocab.tier[idx] = TypeVocabulary::Tier::Fine;
  }
  return vocab;
}

TypeVocabulary load_vocabulary(const std::filesystem::path& vocab_file,
                               const std::filesystem::path& general_file,
                               const std::filesystem::path& fine_file) {
  return make_vocabulary(read_lines(vocab_file), read_lines(general_file),
                         read_lines(fine_file));
}

namespace {

std::vector<std::string> string_array(const json& j, const char* field, long line_no) {
  if (!j.contains(field))
    throw ParseError("line " + std::to_string(line_no) + ": missing field '" + field + "'");
  const json& v = j.at(field);
  if (!v.is_array())
    throw ParseError("line " + std::to_string(line_no) + ": field '" + field +
                     "' must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string())
      throw ParseError("line " + std::to_string(line_no) + ": field '" + field +
                       "' must contain strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

std::string sample_to_json_line(const MentionSample& sample) {
  json j;
  j["left_context"] = sample.left_context;
  j["mention_tokens"] = sample.mention_tokens;
  j["right_context"] = sample.right_context;
  j["mention_kind"] = to_string(sample.kind);
  std::vector<std::string> labels;
  json sources = json::object();
  for (const auto& [type, prov] : sample.labels) {
    labels.push_back(type);
    sources[type] = to_string(prov);
  }
  j["labels"] = labels;
  j["label_sources"] = sources;
  return j.dump();
}

MentionSample sample_from_json_line(const std::string& line, long line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
  }
  MentionSample s;
  s.left_context = string_array(j, "left_context", line_no);
  s.mention_tokens = string_array(j, "mention_tokens", line_no);
  s.right_context = string_array(j, "right_context", line_no);
  if (s.mention_tokens.empty())
    throw ParseError("line " + std::to_string(line_no) + ": mention_tokens is empty");
  if (!j.contains("mention_kind"))
    throw ParseError("line " + std::to_string(line_no) + ": missing field 'mention_kind'");
  try {
    s.kind = mention_kind_from_string(j.at("mention_kind").get<std::string>());
  } catch (const ParseError& e) {
    throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
  }
  std::vector<std::string> labels = string_array(j, "labels", line_no);
  if (!j.contains("label_sources"))
    throw ParseError("line " + std::to_string(line_no) + ": missing field 'label_sources'");
  const json& sources = j.at("label_sources");
  if (!sources.is_object())
    throw ParseError("line " + std::to_string(line_no) + ": label_sources must be an object");
  for (const auto& type : labels) {
    if (!sources.contains(type))
      throw ParseError("line " + std::to_string(line_no) + ": label '" + type +
                       "' has no entry in label_sources");
    try {
      s.labels[type] = provenance_from_string(sources.at(type).get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (sources.size() != labels.size())
    throw ParseError("line " + std::to_string(line_no) +
                     ": label_sources has entries not present in labels");
  return s;
}

SampleReader::SampleReader(const std::filesystem::path& path)
    : in_(path), path_(path.string()) {
  if (!in_) throw ConfigError("cannot open sample file: " + path_);
}

std::optional<MentionSample> SampleReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    return sample_from_json_line(line, line_no_);
  }
  return std::nullopt;
}

std::vector<MentionSample> read_samples(const std::filesystem::path& path) {
  SampleReader reader(path);
  std::vector<MentionSample> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  return out;
}

void write_samples(const std::filesystem::path& path, std::span<const MentionSample> samples) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write sample file: " + path.string());
  for (const auto& s : samples) out << sample_to_json_line(s) << '\n';
}

MentionSample merge_label_sources(const MentionSample& sample,
                                  const std::vector<std::string>& mlm_labels) {
  MentionSample out = sample;
  if (sample.kind == MentionKind::Pronoun) out.labels.clear();
  for (const auto& type : mlm_labels) out.labels.emplace(type, Provenance::Mlm);
  return out;
}

const std::vector<std::string>& default_pronoun_lexicon() {
  static const std::vector<std::string> lexicon = [] {
    std::vector<std::string> base = {"he",  "she",  "it", "they", "him", "her",
                                     "them", "i",    "we", "you",  "me",  "us"};
    std::vector<std::string> out;
    for (const auto& p : base) {
      out.push_back(p);
      std::string cap = p;
      cap[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(cap[0])));
      out.push_back(cap);
    }
    return out;
  }();
  return lexicon;
}

std::vector<std::string> load_pronoun_lexicon(const std::filesystem::path& path) {
  std::vector<std::string> lexicon = read_lines(path);
  if (lexicon.empty()) throw ParseError("pronoun lexicon is empty: " + path.string());
  return lexicon;
}

std::vector<MentionSample> extract_pronoun_mentions(std::span<const std::string> sentence_tokens,
                                                    const std::vector<std::string>& lexicon) {
  std::set<std::string> words(lexicon.begin(), lexicon.end());
  std::vector<MentionSample> out;
  for (std::size_t i = 0; i < sentence_tokens.size(); ++i) {
    if (!words.count(sentence_tokens[i])) continue;
    MentionSample s;
    s.kind = MentionKind::Pronoun;
    s.left_context.assign(sentence_tokens.begin(), sentence_tokens.begin() + i);
    s.mention_tokens = {sentence_tokens[i]};
    s.right_context.assign(sentence_tokens.begin() + i + 1, sentence_tokens.end());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace typelabel
