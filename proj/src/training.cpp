#include "typelabel/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "typelabel/kernels.hpp"

namespace typelabel::train {

using nlohmann::json;

namespace {

constexpr double kProbEps = 1e-7;

double clamped_log(double p) { return std::log(std::clamp(p, kProbEps, 1.0 - kProbEps)); }

void check_prob_domain(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::domain_error("probability outside (0,1): " + std::to_string(p));
}

// alpha(t): alpha_strong for positives backed by entity linking or head
// words, 1 otherwise (negatives included).
double label_weight(const MentionSample& sample, const std::string& type, double alpha_strong) {
  auto it = sample.labels.find(type);
  if (it == sample.labels.end()) return 1.0;
  if (it->second == Provenance::EntityLinking || it->second == Provenance::HeadWord)
    return alpha_strong;
  return 1.0;
}

}  // namespace

void LossConfig::validate() const {
  if (!(alpha_strong > 1.0)) throw ConfigError("alpha_strong must be > 1");
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (!(P > 0.5 && P <= 1.0)) throw ConfigError("P must lie in (0.5, 1]");
  if (!(P_w > 0.0 && P_w <= P)) throw ConfigError("P_w must lie in (0, P]");
}

int partition_indicator(const std::set<std::string>& labels, const std::set<std::string>& T) {
  for (const auto& l : labels)
    if (T.count(l)) return 1;
  return 0;
}

int partition_indicator(const std::set<std::string>& labels, const TypeVocabulary& vocab,
                        TypeVocabulary::Tier tier) {
  for (const auto& l : labels) {
    int idx = vocab.index_of(l);
    if (idx >= 0 && vocab.tier[idx] == tier) return 1;
  }
  return 0;
}

namespace {

double tier_bce(const MentionSample& sample, std::span<const double> p,
                const TypeVocabulary& vocab, TypeVocabulary::Tier tier, bool weighted,
                double alpha_strong) {
  if (static_cast<int>(p.size()) != vocab.size())
    throw std::invalid_argument("probability vector does not match vocabulary size");
  double loss = 0.0;
  for (int t = 0; t < vocab.size(); ++t) {
    if (vocab.tier[t] != tier) continue;
    check_prob_domain(p[t]);
    bool positive = sample.labels.count(vocab.all_types[t]) > 0;
    double alpha = weighted && positive ? label_weight(sample, vocab.all_types[t], alpha_strong)
                                        : 1.0;
    loss -= alpha * (positive ? clamped_log(p[t]) : clamped_log(1.0 - p[t]));
  }
  return loss;
}

}  // namespace

double weighted_partition_bce(const MentionSample& sample, std::span<const double> p,
                              const TypeVocabulary& vocab, TypeVocabulary::Tier tier,
                              double alpha_strong) {
  return tier_bce(sample, p, vocab, tier, /*weighted=*/true, alpha_strong);
}

double plain_bce(const MentionSample& sample, std::span<const double> p,
                 const TypeVocabulary& vocab, TypeVocabulary::Tier tier) {
  return tier_bce(sample, p, vocab, tier, /*weighted=*/false, 1.0);
}

namespace {

std::array<bool, 3> tier_gates(const MentionSample& sample, const TypeVocabulary& vocab) {
  std::array<bool, 3> gate = {false, false, false};
  for (const auto& [type, prov] : sample.labels) {
    int idx = vocab.index_of(type);
    if (idx >= 0) gate[static_cast<int>(vocab.tier[idx])] = true;
  }
  return gate;
}

}  // namespace

double partitioned_objective(const MentionSample& sample, std::span<const double> p,
                             const TypeVocabulary& vocab, LossKind kind, double alpha_strong) {
  auto gate = tier_gates(sample, vocab);
  double loss = 0.0;
  for (TypeVocabulary::Tier tier : {TypeVocabulary::Tier::General, TypeVocabulary::Tier::Fine,
                                    TypeVocabulary::Tier::Ultra}) {
    if (!gate[static_cast<int>(tier)]) continue;
    loss += tier_bce(sample, p, vocab, tier, kind == LossKind::WeightedBce, alpha_strong);
  }
  return loss;
}

void partitioned_objective_grad(const MentionSample& sample, std::span<const double> p,
                                const TypeVocabulary& vocab, LossKind kind,
                                double alpha_strong, double* g) {
  if (static_cast<int>(p.size()) != vocab.size())
    throw std::invalid_argument("probability vector does not match vocabulary size");
  auto gate = tier_gates(sample, vocab);
  for (int t = 0; t < vocab.size(); ++t) {
    if (!gate[static_cast<int>(vocab.tier[t])]) {
      g[t] = 0.0;
      continue;
    }
    bool positive = sample.labels.count(vocab.all_types[t]) > 0;
    double alpha = kind == LossKind::WeightedBce && positive
                       ? label_weight(sample, vocab.all_types[t], alpha_strong)
                       : 1.0;
    g[t] = alpha * (p[t] - (positive ? 1.0 : 0.0));
  }
}

PseudoLabels pseudo_label_sets(std::span<const double> p_teacher, const TypeVocabulary& vocab,
                               const std::set<std::string>& weak_labels, double P, double P_w) {
  if (!(P > 0.5 && P <= 1.0)) throw std::invalid_argument("P must lie in (0.5, 1]");
  if (!(P_w > 0.0 && P_w <= P)) throw std::invalid_argument("P_w must lie in (0, P]");
  if (static_cast<int>(p_teacher.size()) != vocab.size())
    throw std::invalid_argument("probability vector does not match vocabulary size");
  PseudoLabels out;
  for (int t = 0; t < vocab.size(); ++t) {
    const std::string& type = vocab.all_types[t];
    if (p_teacher[t] > P || (weak_labels.count(type) && p_teacher[t] > P_w))
      out.positives.insert(type);
    if (p_teacher[t] < 1.0 - P) out.negatives.insert(type);
  }
  return out;
}

double self_training_loss(std::span<const double> p_student, const TypeVocabulary& vocab,
                          const PseudoLabels& pseudo) {
  if (static_cast<int>(p_student.size()) != vocab.size())
    throw std::invalid_argument("probability vector does not match vocabulary size");
  for (const auto& t : pseudo.positives)
    if (pseudo.negatives.count(t))
      throw std::invalid_argument("pseudo label sets overlap on type: " + t);
  double loss = 0.0;
  for (const auto& type : pseudo.positives) {
    int idx = vocab.index_of(type);
    if (idx < 0) continue;
    check_prob_domain(p_student[idx]);
    loss -= clamped_log(p_student[idx]);
  }
  for (const auto& type : pseudo.negatives) {
    int idx = vocab.index_of(type);
    if (idx < 0) continue;
    check_prob_domain(p_student[idx]);
    loss -= clamped_log(1.0 - p_student[idx]);
  }
  return loss;
}

void self_training_grad(std::span<const double> p_student, const TypeVocabulary& vocab,
                        const PseudoLabels& pseudo, double* g) {
  std::fill(g, g + vocab.size(), 0.0);
  for (const auto& type : pseudo.positives) {
    int idx = vocab.index_of(type);
    if (idx >= 0) g[idx] = p_student[idx] - 1.0;
  }
  for (const auto& type : pseudo.negatives) {
    int idx = vocab.index_of(type);
    if (idx < 0) continue;
    if (g[idx] != 0.0) throw std::invalid_argument("pseudo label sets overlap on type: " + type);
    g[idx] = p_student[idx];
  }
}

double self_training_objective(std::span<const MentionSample> batch_h,
                               std::span<const MentionSample> batch_a,
                               std::span<const PseudoLabels> pseudo_a,
                               const model::TypingModel& student, const TypeVocabulary& vocab,
                               const LossConfig& cfg) {
  if (batch_h.empty()) throw std::invalid_argument("empty human batch");
  if (batch_a.empty()) throw std::invalid_argument("empty automatically labeled batch");
  if (batch_a.size() != pseudo_a.size())
    throw std::invalid_argument("pseudo label list does not match batch");
  double loss_h = 0.0;
  for (const auto& x : batch_h)
    loss_h += partitioned_objective(x, student.forward(x), vocab, LossKind::PlainBce,
                                    cfg.alpha_strong);
  double loss_a = 0.0;
  for (std::size_t i = 0; i < batch_a.size(); ++i)
    loss_a += self_training_loss(student.forward(batch_a[i]), vocab, pseudo_a[i]);
  return loss_h / static_cast<double>(batch_h.size()) +
         cfg.lambda * loss_a / static_cast<double>(batch_a.size());
}

std::vector<PseudoLabels> precompute_pseudo_labels(const model::TypingModel& teacher,
                                                   std::span<const MentionSample> weak,
                                                   const TypeVocabulary& vocab,
                                                   const LossConfig& cfg) {
  cfg.validate();
  std::vector<PseudoLabels> out(weak.size());
  const int d = vocab.size();
  constexpr std::size_t kChunk = 1024;
  for (std::size_t base = 0; base < weak.size(); base += kChunk) {
    std::size_t n = std::min(kChunk, weak.size() - base);
    std::vector<double> P = teacher.forward_batch(weak.subspan(base, n));
    for (std::size_t i = 0; i < n; ++i) {
      std::span<const double> row(P.data() + i * d, d);
      out[base + i] = pseudo_label_sets(row, vocab, weak[base + i].label_set(), cfg.P, cfg.P_w);
    }
  }
  return out;
}

void write_pseudo_labels(const std::filesystem::path& path,
                         std::span<const PseudoLabels> pseudo) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write pseudo label file: " + path.string());
  for (const auto& p : pseudo) {
    json j;
    j["positives"] = p.positives;
    j["negatives"] = p.negatives;
    out << j.dump() << '\n';
  }
}

std::vector<PseudoLabels> read_pseudo_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pseudo label file: " + path.string());
  std::vector<PseudoLabels> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      PseudoLabels p;
      for (const auto& t : j.at("positives")) p.positives.insert(t.get<std::string>());
      for (const auto& t : j.at("negatives")) p.negatives.insert(t.get<std::string>());
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

namespace {

struct OptimizerState {
  long t = 0;
  std::vector<double> m, v;
};

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t nparams) : cfg_(cfg) {
    if (cfg.optimizer != "adam" && cfg.optimizer != "sgd")
      throw ConfigError("unknown optimizer: " + cfg.optimizer);
    if (cfg.optimizer == "adam") {
      state_.m.assign(nparams, 0.0);
      state_.v.assign(nparams, 0.0);
    }
  }

  long steps_done() const { return state_.t; }

  void load(const std::filesystem::path& path, std::size_t nparams) {
    std::vector<double> blob = read_doubles(path);
    if (blob.empty()) throw ParseError("empty optimizer state: " + path.string());
    state_.t = static_cast<long>(blob[0]);
    if (cfg_.optimizer == "adam") {
      if (blob.size() != 1 + 2 * nparams)
        throw ParseError("optimizer state size mismatch: " + path.string());
      state_.m.assign(blob.begin() + 1, blob.begin() + 1 + nparams);
      state_.v.assign(blob.begin() + 1 + nparams, blob.end());
    }
  }

  void save(const std::filesystem::path& path) const {
    std::vector<double> blob;
    blob.reserve(1 + state_.m.size() + state_.v.size());
    blob.push_back(static_cast<double>(state_.t));
    blob.insert(blob.end(), state_.m.begin(), state_.m.end());
    blob.insert(blob.end(), state_.v.begin(), state_.v.end());
    write_doubles(path, blob);
  }

  void step(std::span<double> w, std::span<double> enc, std::span<const double> grad) {
    ++state_.t;
    update(w, grad, 0);
    update(enc, grad, w.size());
  }

 private:
  void update(std::span<double> params, std::span<const double> grad, std::size_t offset) {
    int n = static_cast<int>(params.size());
    if (cfg_.optimizer == "sgd") {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) params[i] -= cfg_.lr * grad[offset + i];
      return;
    }
    double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(state_.t));
    double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(state_.t));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double g = grad[offset + i];
      double& m = state_.m[offset + i];
      double& v = state_.v[offset + i];
      m = cfg_.adam_beta1 * m + (1.0 - cfg_.adam_beta1) * g;
      v = cfg_.adam_beta2 * v + (1.0 - cfg_.adam_beta2) * g * g;
      params[i] -= cfg_.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.adam_eps);
    }
  }

  TrainConfig cfg_;
  OptimizerState state_;
};

// Deterministic batch schedule: a fresh seeded permutation per epoch,
// recomputable from (seed, step) so resumed runs replay the same batches.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t n, int batch_size, std::uint64_t seed)
      : n_(n), bs_(std::max(1, batch_size)), seed_(seed) {
    steps_per_epoch_ = (n_ + bs_ - 1) / bs_;
  }

  std::vector<std::size_t> batch(long step) {
    long epoch = step / static_cast<long>(steps_per_epoch_);
    std::size_t r = static_cast<std::size_t>(step % static_cast<long>(steps_per_epoch_));
    if (epoch != cached_epoch_) {
      perm_.resize(n_);
      std::iota(perm_.begin(), perm_.end(), std::size_t{0});
      std::mt19937_64 rng(seed_ ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(epoch + 1)));
      std::shuffle(perm_.begin(), perm_.end(), rng);
      cached_epoch_ = epoch;
    }
    std::size_t begin = r * static_cast<std::size_t>(bs_);
    std::size_t end = std::min(n_, begin + static_cast<std::size_t>(bs_));
    return {perm_.begin() + begin, perm_.begin() + end};
  }

 private:
  std::size_t n_;
  int bs_;
  std::uint64_t seed_;
  std::size_t steps_per_epoch_;
  long cached_epoch_ = -1;
  std::vector<std::size_t> perm_;
};

struct Workspace {
  std::vector<double> U, P, G, GU, losses, grad_w_tmp;
  std::vector<MentionSample> batch;
  std::vector<const PseudoLabels*> pseudo;
};

// Forward + backward over one batch. Per-sample gradient rows are scaled by
// `scale` before the fixed-order reductions, so the accumulated grad is
// scale * sum_i d(loss_i)/d(params). Returns the mean per-sample loss.
double batch_pass(model::TypingModel& model, std::span<const MentionSample> samples,
                  const std::vector<const PseudoLabels*>* pseudo, const TypeVocabulary& vocab,
                  LossKind kind, double alpha_strong, double scale, std::span<double> grad,
                  Workspace& ws) {
  const int n = static_cast<int>(samples.size());
  const int d = model.type_count();
  const int h = model.hidden_size();

  ws.U.resize(static_cast<std::size_t>(n) * h);
  model.encode_batch(samples, ws.U.data());
  ws.P.resize(static_cast<std::size_t>(n) * d);
  kernels::batch_linear_sigmoid(model.classifier().data(), d, h, ws.U.data(), n, ws.P.data());

  ws.G.resize(static_cast<std::size_t>(n) * d);
  ws.losses.resize(n);
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    try {
      std::span<const double> p(ws.P.data() + static_cast<std::size_t>(i) * d, d);
      double* g = ws.G.data() + static_cast<std::size_t>(i) * d;
      if (pseudo) {
        ws.losses[i] = self_training_loss(p, vocab, *(*pseudo)[i]);
        self_training_grad(p, vocab, *(*pseudo)[i], g);
      } else {
        ws.losses[i] = partitioned_objective(samples[i], p, vocab, kind, alpha_strong);
        partitioned_objective_grad(samples[i], p, vocab, kind, alpha_strong, g);
      }
      for (int t = 0; t < d; ++t) g[t] *= scale;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::size_t w_size = static_cast<std::size_t>(d) * h;
  ws.grad_w_tmp.resize(w_size);
  kernels::batch_classifier_grad(ws.G.data(), ws.U.data(), n, d, h, ws.grad_w_tmp.data());
  {
    int wn = static_cast<int>(w_size);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < wn; ++i) grad[i] += ws.grad_w_tmp[i];
  }

  if (model.encoder().trainable()) {
    ws.GU.resize(static_cast<std::size_t>(n) * h);
    kernels::batch_input_grad(model.classifier().data(), d, h, ws.G.data(), n, ws.GU.data());
    double* enc_grad = grad.data() + w_size;
    for (int i = 0; i < n; ++i) {
      std::vector<std::string> tokens = model::format_model_input(samples[i]);
      model.encoder().accumulate_param_grad(tokens,
                                            ws.GU.data() + static_cast<std::size_t>(i) * h,
                                            enc_grad);
    }
  }
  return kernels::sum(ws.losses) / static_cast<double>(n);
}

void gather_batch(std::span<const MentionSample> data, const std::vector<std::size_t>& idx,
                  std::vector<MentionSample>& out) {
  out.clear();
  for (std::size_t i : idx) out.push_back(data[i]);
}

void check_model_vocab(const model::TypingModel& model, const TypeVocabulary& vocab) {
  if (model.vocab_hash() != vocab.hash())
    throw ConfigError("model/vocabulary mismatch: checkpoint hash " + model.vocab_hash() +
                      " vs " + vocab.hash());
}

void maybe_checkpoint(const model::TypingModel& model, const Optimizer& opt,
                      const TrainConfig& cfg, long step) {
  if (cfg.checkpoint_every <= 0 || cfg.checkpoint_dir.empty()) return;
  if (step % cfg.checkpoint_every != 0) return;
  char name[32];
  std::snprintf(name, sizeof(name), "step_%06ld", step);
  std::filesystem::path dir = std::filesystem::path(cfg.checkpoint_dir) / name;
  model.save(dir);
  opt.save(dir / "optim.bin");
}

std::vector<TrainLogEntry> run_loop(model::TypingModel& model,
                                    std::span<const MentionSample> data,
                                    const TypeVocabulary& vocab, const TrainConfig& cfg,
                                    LossKind kind) {
  check_model_vocab(model, vocab);
  cfg.loss.validate();
  std::vector<TrainLogEntry> log;
  if (cfg.steps <= 0) return log;
  if (data.empty()) throw std::invalid_argument("no training samples");

  Optimizer opt(cfg, model.param_count());
  if (!cfg.resume_state.empty()) opt.load(cfg.resume_state, model.param_count());

  BatchSchedule sched(data.size(), cfg.batch_size, cfg.seed);
  Workspace ws;
  std::vector<double> grad(model.param_count());
  std::span<double> enc_params =
      model.encoder().trainable() ? model.encoder().params() : std::span<double>{};

  for (long s = opt.steps_done(); s < cfg.steps; ++s) {
    gather_batch(data, sched.batch(s), ws.batch);
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = batch_pass(model, ws.batch, nullptr, vocab, kind, cfg.loss.alpha_strong,
                             1.0 / static_cast<double>(ws.batch.size()), grad, ws);
    opt.step(model.classifier(), enc_params, grad);
    log.push_back({s + 1, loss});
    maybe_checkpoint(model, opt, cfg, s + 1);
  }
  if (!cfg.checkpoint_dir.empty()) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
    opt.save(std::filesystem::path(cfg.checkpoint_dir) / "optim.bin");
  }
  return log;
}

}  // namespace

std::vector<TrainLogEntry> pretrain(model::TypingModel& model,
                                    std::span<const MentionSample> weak,
                                    const TypeVocabulary& vocab, const TrainConfig& cfg) {
  return run_loop(model, weak, vocab, cfg, LossKind::WeightedBce);
}

std::vector<TrainLogEntry> finetune(model::TypingModel& model,
                                    std::span<const MentionSample> human,
                                    const TypeVocabulary& vocab, const TrainConfig& cfg) {
  return run_loop(model, human, vocab, cfg, LossKind::PlainBce);
}

std::vector<TrainLogEntry> self_train(model::TypingModel& student,
                                      std::span<const MentionSample> human,
                                      std::span<const MentionSample> weak,
                                      std::span<const PseudoLabels> pseudo_weak,
                                      const TypeVocabulary& vocab, const TrainConfig& cfg) {
  check_model_vocab(student, vocab);
  cfg.loss.validate();
  if (weak.size() != pseudo_weak.size())
    throw std::invalid_argument("pseudo label list does not match weak sample stream");
  std::vector<TrainLogEntry> log;
  if (cfg.steps <= 0) return log;
  if (human.empty()) throw std::invalid_argument("no human samples");
  if (weak.empty()) throw std::invalid_argument("no automatically labeled samples");

  Optimizer opt(cfg, student.param_count());
  if (!cfg.resume_state.empty()) opt.load(cfg.resume_state, student.param_count());

  BatchSchedule sched_h(human.size(), cfg.batch_size, cfg.seed);
  BatchSchedule sched_a(weak.size(), cfg.batch_size, cfg.seed ^ 0xa5a5a5a5a5a5a5a5ull);
  Workspace ws_h, ws_a;
  std::vector<double> grad(student.param_count());
  std::span<double> enc_params =
      student.encoder().trainable() ? student.encoder().params() : std::span<double>{};

  for (long s = opt.steps_done(); s < cfg.steps; ++s) {
    std::fill(grad.begin(), grad.end(), 0.0);

    gather_batch(human, sched_h.batch(s), ws_h.batch);
    double loss_h = batch_pass(student, ws_h.batch, nullptr, vocab, LossKind::PlainBce,
                               cfg.loss.alpha_strong,
                               1.0 / static_cast<double>(ws_h.batch.size()), grad, ws_h);

    std::vector<std::size_t> idx_a = sched_a.batch(s);
    gather_batch(weak, idx_a, ws_a.batch);
    ws_a.pseudo.clear();
    for (std::size_t i : idx_a) ws_a.pseudo.push_back(&pseudo_weak[i]);
    double loss_a = batch_pass(student, ws_a.batch, &ws_a.pseudo, vocab, LossKind::PlainBce,
                               cfg.loss.alpha_strong,
                               cfg.loss.lambda / static_cast<double>(ws_a.batch.size()), grad,
                               ws_a);

    opt.step(student.classifier(), enc_params, grad);
    log.push_back({s + 1, loss_h + cfg.loss.lambda * loss_a});
    maybe_checkpoint(student, opt, cfg, s + 1);
  }
  if (!cfg.checkpoint_dir.empty()) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
    opt.save(std::filesystem::path(cfg.checkpoint_dir) / "optim.bin");
  }
  return log;
}

}  // namespace typelabel::train
