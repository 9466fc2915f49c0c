#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "typelabel/core.hpp"

namespace typelabel::model {

inline constexpr const char* kClsToken = "[CLS]";
inline constexpr const char* kSepToken = "[SEP]";

// "[CLS] sentence [SEP] mention string [SEP]"
std::vector<std::string> format_model_input(const MentionSample& sample);

// Decoded prediction; never empty (argmax fallback).
struct PredictionSet {
  std::vector<int> type_indices;
  std::vector<double> probabilities;

  std::set<std::string> type_names(const TypeVocabulary& vocab) const;
};

// Types with probability > 0.5; if none, the argmax (lowest index on ties).
PredictionSet predict_types(std::span<const double> p, const TypeVocabulary& vocab);

// Mention-in-context -> fixed-size vector. encode() must be const and safe
// to call concurrently.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual int hidden_size() const = 0;
  virtual void encode(std::span<const std::string> tokens, double* u) const = 0;
  virtual bool trainable() const { return false; }
  virtual std::span<double> params() { return {}; }
  virtual std::span<const double> params() const { return {}; }
  // Scatters d(loss)/d(u) into d(loss)/d(params); no-op for frozen encoders.
  virtual void accumulate_param_grad(std::span<const std::string> tokens,
                                     const double* grad_u, double* grad_params) const {
    (void)tokens, (void)grad_u, (void)grad_params;
  }
  virtual nlohmann::json spec() const = 0;
};

// Deterministic trainable bag-of-tokens encoder: tokens hash into embedding
// buckets, u = mean of the bucket embeddings.
class StubEncoder final : public Encoder {
 public:
  StubEncoder(int hidden_size, int buckets, std::uint64_t seed);

  int hidden_size() const override { return hidden_; }
  void encode(std::span<const std::string> tokens, double* u) const override;
  bool trainable() const override { return true; }
  std::span<double> params() override { return embeddings_; }
  std::span<const double> params() const override { return embeddings_; }
  void accumulate_param_grad(std::span<const std::string> tokens, const double* grad_u,
                             double* grad_params) const override;
  nlohmann::json spec() const override;

  int bucket_of(const std::string& token) const;

 private:
  int hidden_;
  int buckets_;
  std::uint64_t seed_;
  std::vector<double> embeddings_;  // buckets x hidden
};

// Frozen features from a pretrained transformer checkpoint behind an HTTP
// bridge (POST /encode). Responses are cached per input sequence.
class RemoteEncoder final : public Encoder {
 public:
  RemoteEncoder(int hidden_size, std::string url, std::string checkpoint);

  int hidden_size() const override { return hidden_; }
  void encode(std::span<const std::string> tokens, double* u) const override;
  nlohmann::json spec() const override;

 private:
  int hidden_;
  std::string url_;
  std::string checkpoint_;
};

// spec: {"kind": "stub", "buckets": 2048} or
//       {"kind": "remote", "url": ..., "checkpoint": ...}
std::unique_ptr<Encoder> make_encoder(const nlohmann::json& spec, int hidden_size,
                                      std::uint64_t seed);

// Sigmoid multi-label classifier over an encoder: p = sigmoid(W u).
class TypingModel {
 public:
  TypingModel(const TypeVocabulary& vocab, int hidden_size, const nlohmann::json& encoder_spec,
              std::uint64_t seed);

  int type_count() const { return type_count_; }
  int hidden_size() const { return encoder_->hidden_size(); }
  const std::string& vocab_hash() const { return vocab_hash_; }

  std::vector<double> forward(const MentionSample& sample) const;
  // Row-major [n x d]; encoding and forward are parallel across samples.
  std::vector<double> forward_batch(std::span<const MentionSample> samples) const;
  void encode_batch(std::span<const MentionSample> samples, double* U) const;
  PredictionSet predict(const MentionSample& sample, const TypeVocabulary& vocab) const;

  std::span<double> classifier() { return W_; }
  std::span<const double> classifier() const { return W_; }
  Encoder& encoder() { return *encoder_; }
  const Encoder& encoder() const { return *encoder_; }

  // Contiguous view of all trainable parameters: W first, then encoder
  // params when the encoder is trainable.
  std::size_t param_count() const;
  void copy_params_from(const TypingModel& other);

  void save(const std::filesystem::path& dir) const;
  static TypingModel load(const std::filesystem::path& dir, const TypeVocabulary& vocab);

 private:
  TypingModel() = default;

  int type_count_ = 0;
  std::string vocab_hash_;
  std::vector<double> W_;  // d x h
  std::unique_ptr<Encoder> encoder_;
};

}  // namespace typelabel::model
