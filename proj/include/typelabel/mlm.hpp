#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "typelabel/core.hpp"
#include "typelabel/model.hpp"
#include "typelabel/patterns.hpp"

namespace typelabel::mlm {

// Ranked fill-mask candidates, probabilities non-increasing, words unique.
struct MaskedPrediction {
  std::vector<std::pair<std::string, double>> ranked;

  void validate() const;  // throws ParseError on invariant violations
};

// Fill-mask provider. Implementations must be safe to query concurrently.
class MlmBackend {
 public:
  virtual ~MlmBackend() = default;
  virtual MaskedPrediction fill_mask(const patterns::Prompt& prompt, int top_n) = 0;
  virtual std::vector<MaskedPrediction> fill_mask_batch(std::span<const patterns::Prompt> prompts,
                                                        int top_n);
};

// Space-joined prompt tokens; lookup key for the mock table and caches.
std::string prompt_key(const patterns::Prompt& prompt);

// Deterministic table-driven backend for tests and fixtures. Table rows are
// JSON lines {"prompt": "<key>", "top": [["word", prob], ...]}; the key "*"
// provides a fallback row. Unknown prompts yield an empty prediction.
class MockBackend final : public MlmBackend {
 public:
  static MockBackend load(const std::filesystem::path& path);

  MaskedPrediction fill_mask(const patterns::Prompt& prompt, int top_n) override;

  void add_entry(std::string key, MaskedPrediction prediction);

 private:
  std::unordered_map<std::string, MaskedPrediction> table_;
};

// Real pretrained checkpoint behind an HTTP bridge (POST /fill_mask); see
// tools/mlm_server.py.
class HttpBackend final : public MlmBackend {
 public:
  HttpBackend(std::string url, std::string checkpoint);

  MaskedPrediction fill_mask(const patterns::Prompt& prompt, int top_n) override;
  std::vector<MaskedPrediction> fill_mask_batch(std::span<const patterns::Prompt> prompts,
                                                int top_n) override;

 private:
  std::string url_;
  std::string checkpoint_;
};

// Memoizes fill_mask by (prompt, top_n); optionally persists entries under
// a cache directory (one JSON file per key hash).
class CachingBackend final : public MlmBackend {
 public:
  explicit CachingBackend(std::unique_ptr<MlmBackend> inner,
                          std::filesystem::path disk_dir = {});

  MaskedPrediction fill_mask(const patterns::Prompt& prompt, int top_n) override;

 private:
  std::optional<MaskedPrediction> disk_lookup(const std::string& key) const;
  void disk_store(const std::string& key, const MaskedPrediction& pred) const;

  std::unique_ptr<MlmBackend> inner_;
  std::filesystem::path disk_dir_;
  std::shared_mutex mu_;
  std::unordered_map<std::string, MaskedPrediction> cache_;
};

// cfg: {"kind": "mock", "table": path} or
//      {"kind": "http", "url": ..., "checkpoint": ...}
// Wraps the backend in a cache; TYPELABEL_BACKEND_CACHE selects an on-disk
// cache directory for http backends.
std::unique_ptr<MlmBackend> make_backend(const nlohmann::json& cfg);

// Rule-table singularization with an irregular-plural lexicon; non-plural
// words come back unchanged.
std::string singularize(const std::string& word);

// Walks the ranked words: singularize, lowercase, keep vocabulary hits,
// dedupe, stop after k survivors.
std::vector<std::string> derive_type_labels(const MaskedPrediction& prediction,
                                            const TypeVocabulary& vocab, int k);

// build_prompt + fill_mask + derive_type_labels for one pattern.
std::vector<std::string> labels_by_pattern(const MentionSample& sample,
                                           const patterns::HypernymPattern& pattern,
                                           MlmBackend& backend, const TypeVocabulary& vocab,
                                           int k, int top_n);

// The ordered pattern list L plus the greedy-selection record.
struct PatternList {
  std::vector<patterns::HypernymPattern> patterns;
  double selection_threshold = 0.007;
  std::vector<double> f1_trace;  // dev F1 after the seed and each accepted addition

  nlohmann::json to_json() const;
  static PatternList from_json(const nlohmann::json& j);
};

// Per-mention pattern choice: the candidate label set with the largest
// intersection with the baseline model's predicted positives; ties go to
// the earlier pattern in L.
std::vector<std::string> select_labels_for_mention(const MentionSample& sample,
                                                   const PatternList& list, MlmBackend& backend,
                                                   const model::TypingModel& baseline,
                                                   const TypeVocabulary& vocab, int k,
                                                   int top_n);

// Variant with the baseline's positive set precomputed; winner_index, when
// given, receives the position in L of the chosen pattern.
std::vector<std::string> select_labels_for_mention(
    const MentionSample& sample, std::span<const patterns::HypernymPattern> list,
    MlmBackend& backend, const std::set<std::string>& baseline_positives,
    const TypeVocabulary& vocab, int k, int top_n, std::size_t* winner_index = nullptr);

// Macro F1 of generated label lists against gold sets.
double score_labelset_f1(std::span<const std::vector<std::string>> generated,
                         std::span<const std::set<std::string>> gold);

// Greedy construction of L: seed with the best standalone pattern, then
// keep adding the argmax-gain candidate while the dev F1 improves by more
// than delta.
PatternList greedy_build_pattern_list(std::span<const patterns::HypernymPattern> candidates,
                                      std::span<const MentionSample> dev_samples,
                                      MlmBackend& backend, const model::TypingModel& baseline,
                                      const TypeVocabulary& vocab, int k, int top_n,
                                      double delta);

}  // namespace typelabel::mlm
