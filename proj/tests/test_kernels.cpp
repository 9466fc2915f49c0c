#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include <random>

#include "testutil.hpp"
#include "typelabel/kernels.hpp"
#include "typelabel/model.hpp"
#include "typelabel/training.hpp"

using namespace typelabel;
using namespace typelabel::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

struct ThreadCountGuard {
  int saved;
  explicit ThreadCountGuard(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadCountGuard() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("sigmoid basics") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid(100.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-100.0) == doctest::Approx(0.0));
}

TEST_CASE("openmp kernels are bit-identical to the serial reference") {
  std::mt19937_64 rng(13);
  for (auto [n, d, h] : {std::tuple{1, 1, 1}, {3, 7, 5}, {16, 33, 8}, {19, 50, 24}}) {
    std::vector<double> W = random_vec(rng, static_cast<std::size_t>(d) * h);
    std::vector<double> U = random_vec(rng, static_cast<std::size_t>(n) * h);
    std::vector<double> G = random_vec(rng, static_cast<std::size_t>(n) * d);
    // zero out a few gradient entries to exercise the skip path
    for (std::size_t i = 0; i < G.size(); i += 3) G[i] = 0.0;

    std::vector<double> P_ref(static_cast<std::size_t>(n) * d);
    std::vector<double> gradW_ref(W.size());
    std::vector<double> GU_ref(U.size());
    ref::batch_linear_sigmoid(W.data(), d, h, U.data(), n, P_ref.data());
    ref::batch_classifier_grad(G.data(), U.data(), n, d, h, gradW_ref.data());
    ref::batch_input_grad(W.data(), d, h, G.data(), n, GU_ref.data());

    for (int threads : {1, 2, 4, 8}) {
      ThreadCountGuard guard(threads);
      std::vector<double> P(P_ref.size()), gradW(gradW_ref.size()), GU(GU_ref.size());
      batch_linear_sigmoid(W.data(), d, h, U.data(), n, P.data());
      batch_classifier_grad(G.data(), U.data(), n, d, h, gradW.data());
      batch_input_grad(W.data(), d, h, G.data(), n, GU.data());
      CHECK(P == P_ref);
      CHECK(gradW == gradW_ref);
      CHECK(GU == GU_ref);
    }
  }
}

TEST_CASE("sum is a fixed-order reduction") {
  std::vector<double> v = {1e16, 1.0, -1e16, 1.0};
  CHECK(sum(v) == ref::sum(v));
  CHECK(ref::sum(v) == ((1e16 + 1.0) + -1e16) + 1.0);
}

TEST_CASE("batched forward is thread-count independent") {
  TypeVocabulary vocab = testutil::tiny_vocab({"a", "b", "c", "d", "e"});
  model::TypingModel m(vocab, 16, nlohmann::json{{"kind", "stub"}, {"buckets", 128}}, 9);
  std::mt19937_64 rng(3);
  std::vector<MentionSample> samples;
  for (int i = 0; i < 23; ++i)
    samples.push_back(testutil::make_sample(testutil::random_tokens(rng, 0, 5),
                                            testutil::random_tokens(rng, 1, 3),
                                            testutil::random_tokens(rng, 0, 5)));
  std::vector<double> base;
  {
    ThreadCountGuard guard(1);
    base = m.forward_batch(samples);
  }
  for (int threads : {2, 4}) {
    ThreadCountGuard guard(threads);
    CHECK(m.forward_batch(samples) == base);
  }
}

TEST_CASE("training is thread-count independent") {
  TypeVocabulary vocab =
      testutil::tiny_vocab({"g0", "g1", "u0", "u1", "u2", "u3"}, {"g0", "g1"}, {});
  std::vector<MentionSample> data;
  for (int i = 0; i < 24; ++i) {
    MentionSample s = testutil::make_sample({"cue" + std::to_string(i % 6)},
                                            {"ent" + std::to_string(i % 6)}, {"."});
    s.labels["g" + std::to_string(i % 2)] = Provenance::EntityLinking;
    s.labels["u" + std::to_string(i % 4)] = Provenance::Mlm;
    data.push_back(s);
  }
  train::TrainConfig cfg;
  cfg.steps = 30;
  cfg.batch_size = 8;

  auto run = [&](int threads) {
    ThreadCountGuard guard(threads);
    model::TypingModel m(vocab, 12, nlohmann::json{{"kind", "stub"}, {"buckets", 64}}, 5);
    train::pretrain(m, data, vocab, cfg);
    std::vector<double> params(m.classifier().begin(), m.classifier().end());
    auto e = m.encoder().params();
    params.insert(params.end(), e.begin(), e.end());
    return params;
  };

  std::vector<double> p1 = run(1);
  CHECK(run(2) == p1);
  CHECK(run(4) == p1);
}
