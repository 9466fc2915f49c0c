#include "typelabel/model.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <unordered_map>

#include "httplib.h"
#include "typelabel/kernels.hpp"

namespace typelabel::model {

using nlohmann::json;

std::vector<std::string> format_model_input(const MentionSample& sample) {
  std::vector<std::string> out;
  std::vector<std::string> sentence = sample.sentence_tokens();
  out.reserve(sentence.size() + sample.mention_tokens.size() + 3);
  out.push_back(kClsToken);
  out.insert(out.end(), sentence.begin(), sentence.end());
  out.push_back(kSepToken);
  out.insert(out.end(), sample.mention_tokens.begin(), sample.mention_tokens.end());
  out.push_back(kSepToken);
  return out;
}

std::set<std::string> PredictionSet::type_names(const TypeVocabulary& vocab) const {
  std::set<std::string> out;
  for (int idx : type_indices) out.insert(vocab.all_types[idx]);
  return out;
}

PredictionSet predict_types(std::span<const double> p, const TypeVocabulary& vocab) {
  if (static_cast<int>(p.size()) != vocab.size())
    throw std::invalid_argument("probability vector length " + std::to_string(p.size()) +
                                " does not match vocabulary size " +
                                std::to_string(vocab.size()));
  PredictionSet out;
  for (int t = 0; t < vocab.size(); ++t) {
    if (p[t] > 0.5) {
      out.type_indices.push_back(t);
      out.probabilities.push_back(p[t]);
    }
  }
  if (out.type_indices.empty()) {
    int best = 0;
    for (int t = 1; t < vocab.size(); ++t)
      if (p[t] > p[best]) best = t;
    out.type_indices.push_back(best);
    out.probabilities.push_back(p[best]);
  }
  return out;
}

StubEncoder::StubEncoder(int hidden_size, int buckets, std::uint64_t seed)
    : hidden_(hidden_size), buckets_(buckets), seed_(seed) {
  if (hidden_size <= 0) throw ConfigError("hidden_size must be positive");
  if (buckets <= 0) throw ConfigError("encoder buckets must be positive");
  embeddings_.resize(static_cast<std::size_t>(buckets_) * hidden_);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (double& v : embeddings_) v = dist(rng);
}

int StubEncoder::bucket_of(const std::string& token) const {
  return static_cast<int>(fnv1a64(token) % static_cast<std::uint64_t>(buckets_));
}

void StubEncoder::encode(std::span<const std::string> tokens, double* u) const {
  std::fill(u, u + hidden_, 0.0);
  if (tokens.empty()) return;
  for (const auto& tok : tokens) {
    const double* e = embeddings_.data() + static_cast<std::size_t>(bucket_of(tok)) * hidden_;
    for (int j = 0; j < hidden_; ++j) u[j] += e[j];
  }
  double inv = 1.0 / static_cast<double>(tokens.size());
  for (int j = 0; j < hidden_; ++j) u[j] *= inv;
}

void StubEncoder::accumulate_param_grad(std::span<const std::string> tokens,
                                        const double* grad_u, double* grad_params) const {
  if (tokens.empty()) return;
  double inv = 1.0 / static_cast<double>(tokens.size());
  for (const auto& tok : tokens) {
    double* g = grad_params + static_cast<std::size_t>(bucket_of(tok)) * hidden_;
    for (int j = 0; j < hidden_; ++j) g[j] += grad_u[j] * inv;
  }
}

json StubEncoder::spec() const {
  return json{{"kind", "stub"}, {"buckets", buckets_}, {"seed", seed_}};
}

namespace {

// One response cache shared per (url, checkpoint); remote features are
// frozen so entries never invalidate.
struct RemoteCache {
  std::mutex mu;
  std::unordered_map<std::string, std::vector<double>> entries;
};

RemoteCache& remote_cache_for(const std::string& key) {
  static std::mutex registry_mu;
  static std::unordered_map<std::string, std::unique_ptr<RemoteCache>> registry;
  std::lock_guard lock(registry_mu);
  auto& slot = registry[key];
  if (!slot) slot = std::make_unique<RemoteCache>();
  return *slot;
}

}  // namespace

RemoteEncoder::RemoteEncoder(int hidden_size, std::string url, std::string checkpoint)
    : hidden_(hidden_size), url_(std::move(url)), checkpoint_(std::move(checkpoint)) {
  if (hidden_size <= 0) throw ConfigError("hidden_size must be positive");
  if (url_.empty()) throw ConfigError("remote encoder requires a url");
}

void RemoteEncoder::encode(std::span<const std::string> tokens, double* u) const {
  std::string key = join_tokens(tokens);
  RemoteCache& cache = remote_cache_for(url_ + "|" + checkpoint_);
  {
    std::lock_guard lock(cache.mu);
    auto it = cache.entries.find(key);
    if (it != cache.entries.end()) {
      std::copy(it->second.begin(), it->second.end(), u);
      return;
    }
  }

  json req;
  req["tokens"] = std::vector<std::string>(tokens.begin(), tokens.end());
  req["checkpoint"] = checkpoint_;
  httplib::Client client(url_);
  client.set_read_timeout(120, 0);
  auto res = client.Post("/encode", req.dump(), "application/json");
  if (!res || res->status != 200)
    throw BackendError("encoder request failed for url " + url_ +
                       (res ? " (status " + std::to_string(res->status) + ")" : ""));
  std::vector<double> vec;
  try {
    vec = json::parse(res->body).at("vector").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("bad encoder response: ") + e.what());
  }
  if (static_cast<int>(vec.size()) != hidden_)
    throw BackendError("encoder returned vector of size " + std::to_string(vec.size()) +
                       ", expected " + std::to_string(hidden_));
  std::copy(vec.begin(), vec.end(), u);
  std::lock_guard lock(cache.mu);
  cache.entries.emplace(std::move(key), std::move(vec));
}

json RemoteEncoder::spec() const {
  return json{{"kind", "remote"}, {"url", url_}, {"checkpoint", checkpoint_}};
}

std::unique_ptr<Encoder> make_encoder(const json& spec, int hidden_size, std::uint64_t seed) {
  if (!spec.is_object() || !spec.contains("kind"))
    throw ConfigError("encoder spec must be an object with a 'kind' field");
  std::string kind = spec.at("kind").get<std::string>();
  if (kind == "stub") {
    int buckets = spec.value("buckets", 2048);
    std::uint64_t enc_seed = spec.contains("seed") ? spec.at("seed").get<std::uint64_t>() : seed;
    return std::make_unique<StubEncoder>(hidden_size, buckets, enc_seed);
  }
  if (kind == "remote") {
    return std::make_unique<RemoteEncoder>(hidden_size, spec.value("url", ""),
                                           spec.value("checkpoint", ""));
  }
  throw ConfigError("unknown encoder kind: " + kind);
}

TypingModel::TypingModel(const TypeVocabulary& vocab, int hidden_size,
                         const json& encoder_spec, std::uint64_t seed) {
  if (hidden_size <= 0) throw ConfigError("hidden_size must be positive");
  type_count_ = vocab.size();
  vocab_hash_ = vocab.hash();
  encoder_ = make_encoder(encoder_spec, hidden_size, seed + 1);
  W_.resize(static_cast<std::size_t>(type_count_) * hidden_size);
  std::mt19937_64 rng(seed);
  double r = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> dist(-r, r);
  for (double& w : W_) w = dist(rng);
}

std::vector<double> TypingModel::forward(const MentionSample& sample) const {
  std::vector<std::string> tokens = format_model_input(sample);
  std::vector<double> u(hidden_size());
  encoder_->encode(tokens, u.data());
  std::vector<double> p(type_count_);
  kernels::ref::batch_linear_sigmoid(W_.data(), type_count_, hidden_size(), u.data(), 1,
                                     p.data());
  return p;
}

void TypingModel::encode_batch(std::span<const MentionSample> samples, double* U) const {
  int h = hidden_size();
  int n = static_cast<int>(samples.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> tokens = format_model_input(samples[i]);
    encoder_->encode(tokens, U + static_cast<std::size_t>(i) * h);
  }
}

std::vector<double> TypingModel::forward_batch(std::span<const MentionSample> samples) const {
  int n = static_cast<int>(samples.size());
  int h = hidden_size();
  std::vector<double> U(static_cast<std::size_t>(n) * h);
  encode_batch(samples, U.data());
  std::vector<double> P(static_cast<std::size_t>(n) * type_count_);
  kernels::batch_linear_sigmoid(W_.data(), type_count_, h, U.data(), n, P.data());
  return P;
}

PredictionSet TypingModel::predict(const MentionSample& sample,
                                   const TypeVocabulary& vocab) const {
  return predict_types(forward(sample), vocab);
}

std::size_t TypingModel::param_count() const {
  return W_.size() + (encoder_->trainable() ? encoder_->params().size() : 0);
}

void TypingModel::copy_params_from(const TypingModel& other) {
  if (other.W_.size() != W_.size() || other.param_count() != param_count())
    throw std::invalid_argument("cannot copy parameters between differently shaped models");
  W_ = other.W_;
  if (encoder_->trainable()) {
    auto src = other.encoder_->params();
    auto dst = encoder_->params();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

void TypingModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json meta;
  meta["format_version"] = 1;
  meta["vocab_hash"] = vocab_hash_;
  meta["vocab_size"] = type_count_;
  meta["hidden_size"] = hidden_size();
  meta["encoder"] = encoder_->spec();
  write_text_file(dir / "model.json", meta.dump(2) + "\n");

  std::vector<double> params(W_.begin(), W_.end());
  if (encoder_->trainable()) {
    auto e = encoder_->params();
    params.insert(params.end(), e.begin(), e.end());
  }
  write_doubles(dir / "params.bin", params);
}

TypingModel TypingModel::load(const std::filesystem::path& dir, const TypeVocabulary& vocab) {
  std::filesystem::path meta_path = dir / "model.json";
  std::ifstream in(meta_path);
  if (!in) throw ConfigError("cannot open checkpoint: " + meta_path.string());
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw ParseError("bad checkpoint metadata " + meta_path.string() + ": " + e.what());
  }

  std::string expect_hash = meta.at("vocab_hash").get<std::string>();
  if (expect_hash != vocab.hash())
    throw ConfigError("checkpoint " + dir.string() + " was trained with a different vocabulary (hash " +
                      expect_hash + " != " + vocab.hash() + ")");
  if (meta.at("vocab_size").get<int>() != vocab.size())
    throw ConfigError("checkpoint vocabulary size mismatch for " + dir.string());

  TypingModel model;
  model.type_count_ = vocab.size();
  model.vocab_hash_ = expect_hash;
  int hidden = meta.at("hidden_size").get<int>();
  model.encoder_ = make_encoder(meta.at("encoder"), hidden, /*seed=*/0);
  std::vector<double> params = read_doubles(dir / "params.bin");
  std::size_t w_size = static_cast<std::size_t>(model.type_count_) * hidden;
  std::size_t enc_size = model.encoder_->trainable() ? model.encoder_->params().size() : 0;
  if (params.size() != w_size + enc_size)
    throw ParseError("checkpoint parameter count mismatch in " + dir.string());
  model.W_.assign(params.begin(), params.begin() + w_size);
  if (enc_size > 0) {
    auto dst = model.encoder_->params();
    std::copy(params.begin() + w_size, params.end(), dst.begin());
  }
  return model;
}

}  // namespace typelabel::model
