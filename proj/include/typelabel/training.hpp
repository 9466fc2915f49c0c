#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "typelabel/core.hpp"
#include "typelabel/model.hpp"

namespace typelabel::train {

struct LossConfig {
  double alpha_strong = 5.0;  // weight for EL/HEAD positive labels, > 1
  double lambda = 0.01;       // self-training strength
  double P = 0.9;             // pseudo-positive threshold, in (0.5, 1]
  double P_w = 0.7;           // weak-label pseudo-positive threshold, in (0, P]

  void validate() const;
};

struct TrainConfig {
  LossConfig loss;
  double lr = 0.01;
  int batch_size = 32;
  long steps = 1000;
  std::uint64_t seed = 13;
  std::string optimizer = "adam";  // "adam" or "sgd"
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  long checkpoint_every = 0;  // 0 = final checkpoint only
  std::string checkpoint_dir;
  // Path to an optim.bin saved by an earlier run; training continues from
  // the step recorded there. Empty means start fresh.
  std::string resume_state;
};

enum class LossKind { WeightedBce, PlainBce };

// 1 iff the label set intersects T.
int partition_indicator(const std::set<std::string>& labels, const std::set<std::string>& T);
int partition_indicator(const std::set<std::string>& labels, const TypeVocabulary& vocab,
                        TypeVocabulary::Tier tier);

// Binary cross entropy over one vocabulary tier, with positives backed by
// entity linking or head words up-weighted by alpha_strong.
double weighted_partition_bce(const MentionSample& sample, std::span<const double> p,
                              const TypeVocabulary& vocab, TypeVocabulary::Tier tier,
                              double alpha_strong);

double plain_bce(const MentionSample& sample, std::span<const double> p,
                 const TypeVocabulary& vocab, TypeVocabulary::Tier tier);

// Sum of per-tier losses, each gated by whether the sample has any label in
// that tier; absent tiers are not penalized.
double partitioned_objective(const MentionSample& sample, std::span<const double> p,
                             const TypeVocabulary& vocab, LossKind kind, double alpha_strong);

// d(partitioned objective)/d(logit), same gating; g must have vocab size.
void partitioned_objective_grad(const MentionSample& sample, std::span<const double> p,
                                const TypeVocabulary& vocab, LossKind kind,
                                double alpha_strong, double* g);

struct PseudoLabels {
  std::set<std::string> positives;
  std::set<std::string> negatives;
};

// Thresholds the teacher's probabilities: positives are p > P plus weak
// labels with p > P_w; negatives are p < 1 - P.
PseudoLabels pseudo_label_sets(std::span<const double> p_teacher, const TypeVocabulary& vocab,
                               const std::set<std::string>& weak_labels, double P, double P_w);

// BCE restricted to the pseudo-labeled types.
double self_training_loss(std::span<const double> p_student, const TypeVocabulary& vocab,
                          const PseudoLabels& pseudo);

void self_training_grad(std::span<const double> p_student, const TypeVocabulary& vocab,
                        const PseudoLabels& pseudo, double* g);

// Mean human-batch objective plus lambda times the mean pseudo-label loss.
double self_training_objective(std::span<const MentionSample> batch_h,
                               std::span<const MentionSample> batch_a,
                               std::span<const PseudoLabels> pseudo_a,
                               const model::TypingModel& student, const TypeVocabulary& vocab,
                               const LossConfig& cfg);

std::vector<PseudoLabels> precompute_pseudo_labels(const model::TypingModel& teacher,
                                                   std::span<const MentionSample> weak,
                                                   const TypeVocabulary& vocab,
                                                   const LossConfig& cfg);

void write_pseudo_labels(const std::filesystem::path& path,
                         std::span<const PseudoLabels> pseudo);
std::vector<PseudoLabels> read_pseudo_labels(const std::filesystem::path& path);

struct TrainLogEntry {
  long step = 0;
  double loss = 0.0;
};

// Weakly supervised pretraining: partitioned objective with the weighted
// loss. Resumes from the optimizer state in checkpoint_dir when present.
std::vector<TrainLogEntry> pretrain(model::TypingModel& model,
                                    std::span<const MentionSample> weak,
                                    const TypeVocabulary& vocab, const TrainConfig& cfg);

// Fine-tuning on human data: partitioned objective with plain BCE.
std::vector<TrainLogEntry> finetune(model::TypingModel& model,
                                    std::span<const MentionSample> human,
                                    const TypeVocabulary& vocab, const TrainConfig& cfg);

// Self-training: the student (initialized from the pretrained model h by
// the caller) trains on alternating human/pseudo-labeled batches with the
// teacher's thresholded predictions standing in for the weak labels.
std::vector<TrainLogEntry> self_train(model::TypingModel& student,
                                      std::span<const MentionSample> human,
                                      std::span<const MentionSample> weak,
                                      std::span<const PseudoLabels> pseudo_weak,
                                      const TypeVocabulary& vocab, const TrainConfig& cfg);

}  // namespace typelabel::train
