#pragma once

#include <map>
#include <set>
#include <span>
#include <string>

#include "typelabel/core.hpp"

namespace typelabel::eval {

struct Prf {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
};

// Per-instance-averaged precision/recall; f1 is their harmonic mean (the
// two-level convention, not the mean of per-instance F1). Every gold set
// must be non-empty; empty prediction sets are rejected.
Prf macro_prf(std::span<const std::set<std::string>> golds,
              std::span<const std::set<std::string>> preds);

// Same averaging but an empty prediction set contributes zero precision
// instead of erroring. Used for scoring generated label sets, which may
// come up empty after vocabulary filtering.
Prf macro_prf_lenient(std::span<const std::set<std::string>> golds,
                      std::span<const std::set<std::string>> preds);

// Corpus-pooled TP/FP/FN.
Prf micro_prf(std::span<const std::set<std::string>> golds,
              std::span<const std::set<std::string>> preds);

// Fraction of instances predicted exactly.
double strict_accuracy(std::span<const std::set<std::string>> golds,
                       std::span<const std::set<std::string>> preds);

struct EvalReport {
  Prf macro;
  Prf micro;
  double strict_acc = 0.0;
  std::map<MentionKind, Prf> per_kind;  // kinds with zero samples omitted
};

EvalReport evaluate_by_kind(std::span<const MentionSample> samples,
                            std::span<const std::set<std::string>> preds);

std::string report_to_text(const EvalReport& report);
// Flat key=value lines for scripting.
std::string report_to_kv(const EvalReport& report);

}  // namespace typelabel::eval
