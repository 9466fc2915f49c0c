#include "typelabel/evaluation.hpp"

#include <algorithm>
#include <sstream>

namespace typelabel::eval {

namespace {

std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
  const std::set<std::string>& small = a.size() <= b.size() ? a : b;
  const std::set<std::string>& large = a.size() <= b.size() ? b : a;
  std::size_t n = 0;
  for (const auto& x : small) n += large.count(x);
  return n;
}

void check_lengths(std::span<const std::set<std::string>> golds,
                   std::span<const std::set<std::string>> preds) {
  if (golds.size() != preds.size())
    throw std::invalid_argument("gold/prediction length mismatch: " +
                                std::to_string(golds.size()) + " vs " +
                                std::to_string(preds.size()));
  if (golds.empty()) throw std::invalid_argument("cannot evaluate an empty corpus");
  for (const auto& g : golds)
    if (g.empty()) throw std::invalid_argument("gold label set is empty");
}

Prf macro_impl(std::span<const std::set<std::string>> golds,
               std::span<const std::set<std::string>> preds, bool allow_empty_preds) {
  check_lengths(golds, preds);
  double p_sum = 0.0, r_sum = 0.0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    std::size_t inter = intersection_size(golds[i], preds[i]);
    if (preds[i].empty()) {
      if (!allow_empty_preds) throw std::invalid_argument("prediction set is empty");
    } else {
      p_sum += static_cast<double>(inter) / static_cast<double>(preds[i].size());
    }
    r_sum += static_cast<double>(inter) / static_cast<double>(golds[i].size());
  }
  Prf out;
  out.p = p_sum / static_cast<double>(golds.size());
  out.r = r_sum / static_cast<double>(golds.size());
  out.f1 = out.p + out.r > 0.0 ? 2.0 * out.p * out.r / (out.p + out.r) : 0.0;
  return out;
}

}  // namespace

Prf macro_prf(std::span<const std::set<std::string>> golds,
              std::span<const std::set<std::string>> preds) {
  return macro_impl(golds, preds, /*allow_empty_preds=*/false);
}

Prf macro_prf_lenient(std::span<const std::set<std::string>> golds,
                      std::span<const std::set<std::string>> preds) {
  return macro_impl(golds, preds, /*allow_empty_preds=*/true);
}

Prf micro_prf(std::span<const std::set<std::string>> golds,
              std::span<const std::set<std::string>> preds) {
  check_lengths(golds, preds);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (preds[i].empty()) throw std::invalid_argument("prediction set is empty");
    std::size_t inter = intersection_size(golds[i], preds[i]);
    tp += inter;
    fp += preds[i].size() - inter;
    fn += golds[i].size() - inter;
  }
  Prf out;
  out.p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  out.r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  out.f1 = out.p + out.r > 0.0 ? 2.0 * out.p * out.r / (out.p + out.r) : 0.0;
  return out;
}

double strict_accuracy(std::span<const std::set<std::string>> golds,
                       std::span<const std::set<std::string>> preds) {
  check_lengths(golds, preds);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (preds[i].empty()) throw std::invalid_argument("prediction set is empty");
    if (golds[i] == preds[i]) ++exact;
  }
  return static_cast<double>(exact) / static_cast<double>(golds.size());
}

EvalReport evaluate_by_kind(std::span<const MentionSample> samples,
                            std::span<const std::set<std::string>> preds) {
  if (samples.size() != preds.size())
    throw std::invalid_argument("sample/prediction length mismatch");
  std::vector<std::set<std::string>> golds;
  golds.reserve(samples.size());
  for (const auto& s : samples) golds.push_back(s.label_set());

  EvalReport report;
  report.macro = macro_prf(golds, preds);
  report.micro = micro_prf(golds, preds);
  report.strict_acc = strict_accuracy(golds, preds);

  for (MentionKind kind : {MentionKind::Named, MentionKind::Pronoun, MentionKind::Nominal}) {
    std::vector<std::set<std::string>> kind_golds, kind_preds;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].kind != kind) continue;
      kind_golds.push_back(golds[i]);
      kind_preds.push_back(preds[i]);
    }
    if (kind_golds.empty()) continue;
    report.per_kind[kind] = macro_prf(kind_golds, kind_preds);
  }
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  out << "overall macro  P " << fmt(report.macro.p) << "  R " << fmt(report.macro.r)
      << "  F1 " << fmt(report.macro.f1) << "\n";
  out << "overall micro  P " << fmt(report.micro.p) << "  R " << fmt(report.micro.r)
      << "  F1 " << fmt(report.micro.f1) << "\n";
  out << "strict accuracy " << fmt(report.strict_acc) << "\n";
  for (const auto& [kind, prf] : report.per_kind) {
    out << to_string(kind) << " macro  P " << fmt(prf.p) << "  R " << fmt(prf.r) << "  F1 "
        << fmt(prf.f1) << "\n";
  }
  return out.str();
}

std::string report_to_kv(const EvalReport& report) {
  std::ostringstream out;
  out << "macro_p=" << fmt(report.macro.p) << "\n";
  out << "macro_r=" << fmt(report.macro.r) << "\n";
  out << "macro_f1=" << fmt(report.macro.f1) << "\n";
  out << "micro_p=" << fmt(report.micro.p) << "\n";
  out << "micro_r=" << fmt(report.micro.r) << "\n";
  out << "micro_f1=" << fmt(report.micro.f1) << "\n";
  out << "strict_acc=" << fmt(report.strict_acc) << "\n";
  for (const auto& [kind, prf] : report.per_kind) {
    std::string k = to_string(kind);
    out << "per_kind." << k << ".macro_p=" << fmt(prf.p) << "\n";
    out << "per_kind." << k << ".macro_r=" << fmt(prf.r) << "\n";
    out << "per_kind." << k << ".macro_f1=" << fmt(prf.f1) << "\n";
  }
  return out.str();
}

}  // namespace typelabel::eval
