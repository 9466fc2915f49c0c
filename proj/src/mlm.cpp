#include "typelabel/mlm.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "httplib.h"
#include "typelabel/evaluation.hpp"

namespace typelabel::mlm {

using nlohmann::json;

void MaskedPrediction::validate() const {
  std::set<std::string> seen;
  double prev = 1.0;
  for (const auto& [word, prob] : ranked) {
    if (word.empty()) throw ParseError("masked prediction contains an empty word");
    if (prob < 0.0 || prob > 1.0)
      throw ParseError("masked prediction probability out of range for word: " + word);
    if (prob > prev + 1e-12)
      throw ParseError("masked prediction probabilities are not non-increasing at word: " + word);
    if (!seen.insert(word).second)
      throw ParseError("masked prediction contains duplicate word: " + word);
    prev = prob;
  }
}

std::vector<MaskedPrediction> MlmBackend::fill_mask_batch(
    std::span<const patterns::Prompt> prompts, int top_n) {
  std::vector<MaskedPrediction> out(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) out[i] = fill_mask(prompts[i], top_n);
  return out;
}

std::string prompt_key(const patterns::Prompt& prompt) { return join_tokens(prompt.tokens); }

namespace {

MaskedPrediction truncated(const MaskedPrediction& pred, int top_n) {
  if (top_n < 0) top_n = 0;
  MaskedPrediction out;
  std::size_t n = std::min<std::size_t>(pred.ranked.size(), static_cast<std::size_t>(top_n));
  out.ranked.assign(pred.ranked.begin(), pred.ranked.begin() + n);
  return out;
}

MaskedPrediction prediction_from_json(const json& top, const std::string& context) {
  MaskedPrediction pred;
  if (!top.is_array()) throw ParseError(context + ": 'top' must be an array");
  for (const auto& entry : top) {
    if (!entry.is_array() || entry.size() != 2)
      throw ParseError(context + ": entries must be [word, probability] pairs");
    pred.ranked.emplace_back(entry[0].get<std::string>(), entry[1].get<double>());
  }
  pred.validate();
  return pred;
}

}  // namespace

MockBackend MockBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock backend table: " + path.string());
  MockBackend backend;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::string context = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(context + ": invalid JSON: " + e.what());
    }
    if (!j.contains("prompt")) throw ParseError(context + ": missing field 'prompt'");
    backend.table_[j.at("prompt").get<std::string>()] =
        prediction_from_json(j.value("top", json::array()), context);
  }
  return backend;
}

void MockBackend::add_entry(std::string key, MaskedPrediction prediction) {
  prediction.validate();
  table_[std::move(key)] = std::move(prediction);
}

MaskedPrediction MockBackend::fill_mask(const patterns::Prompt& prompt, int top_n) {
  auto it = table_.find(prompt_key(prompt));
  if (it == table_.end()) it = table_.find("*");
  if (it == table_.end()) return {};
  return truncated(it->second, top_n);
}

HttpBackend::HttpBackend(std::string url, std::string checkpoint)
    : url_(std::move(url)), checkpoint_(std::move(checkpoint)) {
  if (url_.empty()) throw ConfigError("http backend requires a url");
}

MaskedPrediction HttpBackend::fill_mask(const patterns::Prompt& prompt, int top_n) {
  return fill_mask_batch(std::span<const patterns::Prompt>(&prompt, 1), top_n).front();
}

std::vector<MaskedPrediction> HttpBackend::fill_mask_batch(
    std::span<const patterns::Prompt> prompts, int top_n) {
  json req;
  req["top_n"] = top_n;
  req["checkpoint"] = checkpoint_;
  json arr = json::array();
  for (const auto& p : prompts) {
    arr.push_back(json{{"tokens", p.tokens}, {"mask_index", p.mask_index}});
  }
  req["prompts"] = std::move(arr);

  httplib::Client client(url_);
  client.set_read_timeout(300, 0);
  auto res = client.Post("/fill_mask", req.dump(), "application/json");
  if (!res || res->status != 200)
    throw BackendError("fill_mask request failed for url " + url_ +
                       (res ? " (status " + std::to_string(res->status) + ")" : ""));
  std::vector<MaskedPrediction> out;
  try {
    json body = json::parse(res->body);
    for (const auto& entry : body.at("predictions"))
      out.push_back(prediction_from_json(entry, url_));
  } catch (const json::exception& e) {
    throw BackendError(std::string("bad fill_mask response: ") + e.what());
  }
  if (out.size() != prompts.size())
    throw BackendError("fill_mask returned " + std::to_string(out.size()) +
                       " predictions for " + std::to_string(prompts.size()) + " prompts");
  return out;
}

CachingBackend::CachingBackend(std::unique_ptr<MlmBackend> inner, std::filesystem::path disk_dir)
    : inner_(std::move(inner)), disk_dir_(std::move(disk_dir)) {
  if (!disk_dir_.empty()) std::filesystem::create_directories(disk_dir_);
}

std::optional<MaskedPrediction> CachingBackend::disk_lookup(const std::string& key) const {
  if (disk_dir_.empty()) return std::nullopt;
  char name[32];
  std::snprintf(name, sizeof(name), "%016llx.json",
                static_cast<unsigned long long>(fnv1a64(key)));
  std::ifstream in(disk_dir_ / name);
  if (!in) return std::nullopt;
  try {
    json j;
    in >> j;
    if (j.at("key").get<std::string>() != key) return std::nullopt;
    return prediction_from_json(j.at("top"), (disk_dir_ / name).string());
  } catch (...) {
    return std::nullopt;
  }
}

void CachingBackend::disk_store(const std::string& key, const MaskedPrediction& pred) const {
  if (disk_dir_.empty()) return;
  char name[32];
  std::snprintf(name, sizeof(name), "%016llx.json",
                static_cast<unsigned long long>(fnv1a64(key)));
  json top = json::array();
  for (const auto& [w, p] : pred.ranked) top.push_back(json::array({w, p}));
  json j{{"key", key}, {"top", std::move(top)}};
  std::ofstream out(disk_dir_ / name);
  if (out) out << j.dump();
}

MaskedPrediction CachingBackend::fill_mask(const patterns::Prompt& prompt, int top_n) {
  std::string key = prompt_key(prompt) + "\x1f" + std::to_string(top_n);
  {
    std::shared_lock lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  MaskedPrediction pred;
  if (auto cached = disk_lookup(key)) {
    pred = std::move(*cached);
  } else {
    pred = inner_->fill_mask(prompt, top_n);
    disk_store(key, pred);
  }
  std::unique_lock lock(mu_);
  auto [it, inserted] = cache_.emplace(key, std::move(pred));
  return it->second;
}

std::unique_ptr<MlmBackend> make_backend(const json& cfg) {
  if (!cfg.is_object() || !cfg.contains("kind"))
    throw ConfigError("backend config must be an object with a 'kind' field");
  std::string kind = cfg.at("kind").get<std::string>();
  if (kind == "mock") {
    if (!cfg.contains("table")) throw ConfigError("mock backend requires a 'table' path");
    return std::make_unique<MockBackend>(
        MockBackend::load(cfg.at("table").get<std::string>()));
  }
  if (kind == "http") {
    auto inner = std::make_unique<HttpBackend>(cfg.value("url", ""),
                                               cfg.value("checkpoint", ""));
    std::filesystem::path disk;
    if (const char* env = std::getenv("TYPELABEL_BACKEND_CACHE")) disk = env;
    return std::make_unique<CachingBackend>(std::move(inner), disk);
  }
  throw ConfigError("unknown backend kind: " + kind);
}

std::string singularize(const std::string& word) {
  static const std::unordered_map<std::string, std::string> irregular = {
      {"people", "person"},       {"men", "man"},
      {"women", "woman"},         {"children", "child"},
      {"feet", "foot"},           {"teeth", "tooth"},
      {"geese", "goose"},         {"mice", "mouse"},
      {"lives", "life"},          {"wives", "wife"},
      {"knives", "knife"},        {"leaves", "leaf"},
      {"wolves", "wolf"},         {"halves", "half"},
      {"selves", "self"},         {"elves", "elf"},
      {"loaves", "loaf"},         {"thieves", "thief"},
      {"heroes", "hero"},         {"potatoes", "potato"},
      {"tomatoes", "tomato"},     {"echoes", "echo"},
      {"houses", "house"},        {"movies", "movie"},
      {"cookies", "cookie"},      {"zombies", "zombie"},
      {"calories", "calorie"},    {"businessmen", "businessman"},
      {"policemen", "policeman"}, {"gentlemen", "gentleman"},
      {"firemen", "fireman"},     {"salesmen", "salesman"},
      {"spokesmen", "spokesman"}, {"criteria", "criterion"},
      {"phenomena", "phenomenon"}};
  static const std::set<std::string> invariant = {
      "species", "series",    "news",    "means",     "headquarters",
      "politics", "economics", "physics", "mathematics", "athletics"};

  if (word.empty()) throw std::invalid_argument("cannot singularize an empty word");
  std::string lower = to_lower(word);
  if (auto it = irregular.find(lower); it != irregular.end()) return it->second;
  if (invariant.count(lower)) return word;

  auto ends_with = [&](std::string_view suffix) {
    return lower.size() >= suffix.size() &&
           lower.compare(lower.size() - suffix.size(), suffix.size(), suffix) == 0;
  };

  if (ends_with("ies") && lower.size() > 3) return word.substr(0, word.size() - 3) + "y";
  if (ends_with("ses") || ends_with("xes") || ends_with("zes") || ends_with("ches") ||
      ends_with("shes"))
    return word.substr(0, word.size() - 2);
  if (ends_with("ss") || ends_with("us") || ends_with("is")) return word;
  if (ends_with("s") && lower.size() >= 4) return word.substr(0, word.size() - 1);
  return word;
}

std::vector<std::string> derive_type_labels(const MaskedPrediction& prediction,
                                            const TypeVocabulary& vocab, int k) {
  std::vector<std::string> out;
  if (k <= 0) return out;
  std::set<std::string> seen;
  for (const auto& [word, prob] : prediction.ranked) {
    if (word.empty()) continue;
    std::string label = to_lower(singularize(word));
    if (!vocab.contains(label)) continue;
    if (!seen.insert(label).second) continue;
    out.push_back(std::move(label));
    if (static_cast<int>(out.size()) == k) break;
  }
  return out;
}

std::vector<std::string> labels_by_pattern(const MentionSample& sample,
                                           const patterns::HypernymPattern& pattern,
                                           MlmBackend& backend, const TypeVocabulary& vocab,
                                           int k, int top_n) {
  if (top_n < k)
    throw std::invalid_argument("top_n (" + std::to_string(top_n) +
                                ") must be at least k (" + std::to_string(k) + ")");
  patterns::Prompt prompt = patterns::build_prompt(sample, pattern);
  MaskedPrediction pred;
  try {
    pred = backend.fill_mask(prompt, top_n);
  } catch (const BackendError& e) {
    throw BackendError(std::string(e.what()) + " [prompt: " + prompt_key(prompt) + "]");
  }
  return derive_type_labels(pred, vocab, k);
}

json PatternList::to_json() const {
  json j;
  j["delta"] = selection_threshold;
  j["f1_trace"] = f1_trace;
  json arr = json::array();
  for (const auto& p : patterns) arr.push_back(join_tokens(p.tokens));
  j["patterns"] = std::move(arr);
  return j;
}

PatternList PatternList::from_json(const json& j) {
  PatternList out;
  out.selection_threshold = j.value("delta", 0.007);
  if (j.contains("f1_trace")) out.f1_trace = j.at("f1_trace").get<std::vector<double>>();
  for (const auto& tmpl : j.at("patterns"))
    out.patterns.push_back(patterns::HypernymPattern::parse(tmpl.get<std::string>()));
  return out;
}

std::vector<std::string> select_labels_for_mention(
    const MentionSample& sample, std::span<const patterns::HypernymPattern> list,
    MlmBackend& backend, const std::set<std::string>& baseline_positives,
    const TypeVocabulary& vocab, int k, int top_n, std::size_t* winner_index) {
  if (list.empty()) throw std::invalid_argument("pattern list is empty");
  std::vector<std::string> best;
  long best_overlap = -1;
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::vector<std::string> labels =
        labels_by_pattern(sample, list[i], backend, vocab, k, top_n);
    long overlap = 0;
    for (const auto& t : labels) overlap += baseline_positives.count(t);
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = std::move(labels);
      if (winner_index) *winner_index = i;
    }
  }
  return best;
}

std::vector<std::string> select_labels_for_mention(const MentionSample& sample,
                                                   const PatternList& list, MlmBackend& backend,
                                                   const model::TypingModel& baseline,
                                                   const TypeVocabulary& vocab, int k,
                                                   int top_n) {
  if (list.patterns.empty()) throw std::invalid_argument("pattern list is empty");
  if (list.patterns.size() == 1)
    return labels_by_pattern(sample, list.patterns.front(), backend, vocab, k, top_n);
  std::set<std::string> positives = baseline.predict(sample, vocab).type_names(vocab);
  return select_labels_for_mention(sample, list.patterns, backend, positives, vocab, k, top_n);
}

double score_labelset_f1(std::span<const std::vector<std::string>> generated,
                         std::span<const std::set<std::string>> gold) {
  if (generated.size() != gold.size())
    throw std::invalid_argument("generated/gold length mismatch");
  std::vector<std::set<std::string>> preds;
  preds.reserve(generated.size());
  for (const auto& g : generated) preds.emplace_back(g.begin(), g.end());
  return eval::macro_prf_lenient(gold, preds).f1;
}

namespace {

// Dev F1 of a fixed pattern list under the per-mention selection rule.
double evaluate_list_f1(std::span<const patterns::HypernymPattern> list,
                        std::span<const MentionSample> dev_samples,
                        std::span<const std::set<std::string>> baseline_positives,
                        std::span<const std::set<std::string>> gold, MlmBackend& backend,
                        const TypeVocabulary& vocab, int k, int top_n) {
  int n = static_cast<int>(dev_samples.size());
  std::vector<std::vector<std::string>> generated(n);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      generated[i] = list.size() == 1
                         ? labels_by_pattern(dev_samples[i], list.front(), backend, vocab, k,
                                             top_n)
                         : select_labels_for_mention(dev_samples[i], list, backend,
                                                     baseline_positives[i], vocab, k, top_n);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return score_labelset_f1(generated, gold);
}

}  // namespace

PatternList greedy_build_pattern_list(std::span<const patterns::HypernymPattern> candidates,
                                      std::span<const MentionSample> dev_samples,
                                      MlmBackend& backend, const model::TypingModel& baseline,
                                      const TypeVocabulary& vocab, int k, int top_n,
                                      double delta) {
  if (candidates.empty()) throw std::invalid_argument("no candidate patterns");
  if (dev_samples.empty()) throw std::invalid_argument("empty dev set");
  if (delta <= 0.0) throw std::invalid_argument("delta must be positive");

  std::vector<std::set<std::string>> gold;
  gold.reserve(dev_samples.size());
  for (const auto& s : dev_samples) {
    gold.push_back(s.label_set());
    if (gold.back().empty())
      throw std::invalid_argument("dev sample without gold labels: " + s.mention_string());
  }

  std::vector<std::set<std::string>> baseline_positives(dev_samples.size());
  {
    int n = static_cast<int>(dev_samples.size());
    std::vector<double> P = baseline.forward_batch(dev_samples);
    for (int i = 0; i < n; ++i) {
      std::span<const double> row(P.data() + static_cast<std::size_t>(i) * vocab.size(),
                                  vocab.size());
      baseline_positives[i] = model::predict_types(row, vocab).type_names(vocab);
    }
  }

  // Step 1: seed with the best standalone pattern.
  std::size_t seed = 0;
  double seed_f1 = -1.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double f1 = evaluate_list_f1(candidates.subspan(c, 1), dev_samples, baseline_positives,
                                 gold, backend, vocab, k, top_n);
    if (f1 > seed_f1) {
      seed_f1 = f1;
      seed = c;
    }
  }

  PatternList result;
  result.selection_threshold = delta;
  result.patterns.push_back(candidates[seed]);
  result.f1_trace.push_back(seed_f1);

  std::vector<std::size_t> remaining;
  for (std::size_t c = 0; c < candidates.size(); ++c)
    if (c != seed) remaining.push_back(c);

  // Steps 2-4: add the argmax-gain candidate while the gain clears delta.
  double current_f1 = seed_f1;
  while (!remaining.empty()) {
    double best_f1 = -1.0;
    std::size_t best_pos = remaining.size();
    for (std::size_t pos = 0; pos < remaining.size(); ++pos) {
      std::vector<patterns::HypernymPattern> trial = result.patterns;
      trial.push_back(candidates[remaining[pos]]);
      double f1 = evaluate_list_f1(trial, dev_samples, baseline_positives, gold, backend,
                                   vocab, k, top_n);
      if (f1 > best_f1) {
        best_f1 = f1;
        best_pos = pos;
      }
    }
    if (best_pos == remaining.size() || best_f1 - current_f1 <= delta) break;
    result.patterns.push_back(candidates[remaining[best_pos]]);
    result.f1_trace.push_back(best_f1);
    current_f1 = best_f1;
    remaining.erase(remaining.begin() + best_pos);
  }
  return result;
}

}  // namespace typelabel::mlm
