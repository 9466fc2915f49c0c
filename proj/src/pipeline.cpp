#include "typelabel/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "typelabel/core.hpp"
#include "typelabel/evaluation.hpp"
#include "typelabel/fg_typing.hpp"
#include "typelabel/mlm.hpp"
#include "typelabel/model.hpp"
#include "typelabel/patterns.hpp"
#include "typelabel/training.hpp"

namespace typelabel::pipeline {

using nlohmann::json;

namespace {

void apply_threads(const Config& cfg) {
  int threads = cfg.get<int>("threads", 0);
  if (threads > 0) omp_set_num_threads(threads);
}

TypeVocabulary load_vocab(const Config& cfg) {
  return load_vocabulary(cfg.path("vocab.types"), cfg.path("vocab.general"),
                         cfg.path("vocab.fine"));
}

std::filesystem::path out_dir(const Config& cfg) {
  std::filesystem::path dir = cfg.path("io.out_dir");
  std::filesystem::create_directories(dir);
  return dir;
}

std::unique_ptr<mlm::MlmBackend> backend_from_config(const Config& cfg) {
  json backend_cfg = cfg.get_json("backend", json::object());
  if (backend_cfg.contains("table"))
    backend_cfg["table"] = cfg.path("backend.table").string();
  return mlm::make_backend(backend_cfg);
}

struct LabelingParams {
  int k;
  int top_n;
  double delta;
};

LabelingParams labeling_params(const Config& cfg) {
  LabelingParams p;
  p.k = cfg.get<int>("labeling.k", 10);
  p.top_n = cfg.get<int>("labeling.top_n", 50);
  p.delta = cfg.get<double>("labeling.delta", 0.007);
  if (p.k < 0) throw ConfigError("labeling.k must be >= 0");
  if (p.top_n < p.k) throw ConfigError("labeling.top_n must be >= labeling.k");
  return p;
}

train::TrainConfig train_config(const Config& cfg, const std::filesystem::path& dir) {
  train::TrainConfig tc;
  tc.loss.alpha_strong = cfg.get<double>("training.alpha_strong", 5.0);
  tc.loss.lambda = cfg.get<double>("training.lambda", 0.01);
  tc.loss.P = cfg.get<double>("training.P", 0.9);
  tc.loss.P_w = cfg.get<double>("training.P_w", 0.7);
  tc.lr = cfg.get<double>("training.lr", 0.01);
  tc.batch_size = cfg.get<int>("training.batch_size", 32);
  tc.steps = cfg.get<long>("training.steps", 500);
  tc.seed = cfg.get<std::uint64_t>("seed", 13);
  tc.optimizer = cfg.get<std::string>("training.optimizer", "adam");
  tc.checkpoint_every = cfg.get<long>("training.checkpoint_every", 0);
  tc.checkpoint_dir = dir.string();
  tc.loss.validate();
  return tc;
}

model::TypingModel fresh_model(const Config& cfg, const TypeVocabulary& vocab) {
  int hidden = cfg.get<int>("model.hidden_size", 64);
  json encoder = cfg.get_json("model.encoder", json{{"kind", "stub"}, {"buckets", 2048}});
  std::uint64_t seed = cfg.get<std::uint64_t>("seed", 13);
  return model::TypingModel(vocab, hidden, encoder, seed);
}

void write_train_log(const std::filesystem::path& path,
                     std::span<const train::TrainLogEntry> log) {
  std::ostringstream out;
  out << "step\tloss\n";
  for (const auto& e : log) out << e.step << '\t' << e.loss << '\n';
  write_text_file(path, out.str());
}

// Ordered pattern list for label generation: an explicit selection output,
// an inline template list, or the single strongest built-in.
mlm::PatternList generation_patterns(const Config& cfg) {
  mlm::PatternList list;
  if (cfg.has("labeling.pattern_list")) {
    std::filesystem::path file = cfg.path("labeling.pattern_list");
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open pattern list: " + file.string());
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("invalid pattern list " + file.string() + ": " + e.what());
    }
    list = mlm::PatternList::from_json(j);
  } else if (cfg.has("labeling.patterns")) {
    for (const auto& tmpl : cfg.require<std::vector<std::string>>("labeling.patterns"))
      list.patterns.push_back(patterns::HypernymPattern::parse(tmpl));
  } else {
    list.patterns.push_back(patterns::builtin_patterns().front());
  }
  if (list.patterns.empty()) throw ConfigError("label generation needs at least one pattern");
  return list;
}

std::vector<std::set<std::string>> predict_all(const model::TypingModel& m,
                                               std::span<const MentionSample> samples,
                                               const TypeVocabulary& vocab) {
  std::vector<std::set<std::string>> out(samples.size());
  constexpr std::size_t kChunk = 1024;
  for (std::size_t base = 0; base < samples.size(); base += kChunk) {
    std::size_t n = std::min(kChunk, samples.size() - base);
    std::vector<double> P = m.forward_batch(samples.subspan(base, n));
    for (std::size_t i = 0; i < n; ++i) {
      std::span<const double> row(P.data() + i * vocab.size(), vocab.size());
      out[base + i] = model::predict_types(row, vocab).type_names(vocab);
    }
  }
  return out;
}

}  // namespace

void run_generate_labels(const Config& cfg, std::ostream& out) {
  apply_threads(cfg);
  TypeVocabulary vocab = load_vocab(cfg);
  LabelingParams params = labeling_params(cfg);
  std::unique_ptr<mlm::MlmBackend> backend = backend_from_config(cfg);
  std::filesystem::path dir = out_dir(cfg);

  std::vector<MentionSample> samples;
  std::string input_kind = cfg.get<std::string>("data.input_kind", "samples");
  if (input_kind == "samples") {
    samples = read_samples(cfg.path("data.input"));
  } else if (input_kind == "text") {
    std::vector<std::string> lexicon =
        cfg.has("data.pronoun_lexicon")
            ? load_pronoun_lexicon(cfg.path("data.pronoun_lexicon"))
            : default_pronoun_lexicon();
    for (const auto& line : read_lines(cfg.path("data.input"))) {
      for (auto& s : extract_pronoun_mentions(split_whitespace(line), lexicon))
        samples.push_back(std::move(s));
    }
  } else {
    throw ConfigError("data.input_kind must be 'samples' or 'text'");
  }

  mlm::PatternList list = generation_patterns(cfg);
  const bool needs_baseline = list.patterns.size() > 1;
  std::optional<model::TypingModel> baseline;
  if (needs_baseline) {
    baseline =
        model::TypingModel::load(cfg.path("labeling.baseline_checkpoint"), vocab);
  }

  const int n = static_cast<int>(samples.size());
  std::vector<std::set<std::string>> positives;
  if (needs_baseline) positives = predict_all(*baseline, samples, vocab);

  std::vector<MentionSample> labeled(n);
  std::vector<std::size_t> winner(n, 0);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      std::vector<std::string> labels;
      if (!needs_baseline) {
        labels = mlm::labels_by_pattern(samples[i], list.patterns.front(), *backend, vocab,
                                        params.k, params.top_n);
      } else {
        labels = mlm::select_labels_for_mention(samples[i], list.patterns, *backend,
                                                positives[i], vocab, params.k, params.top_n,
                                                &winner[i]);
      }
      labeled[i] = merge_label_sources(samples[i], labels);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  write_samples(dir / "labeled_samples.jsonl", labeled);
  cfg.write_resolved(dir);

  std::map<std::size_t, long> usage;
  for (int i = 0; i < n; ++i) ++usage[winner[i]];
  out << "labeled " << n << " mentions\n";
  for (const auto& [idx, count] : usage)
    out << "pattern \"" << list.patterns[idx].id << "\": " << count << " mentions\n";
}

void run_select_patterns(const Config& cfg, std::ostream& out) {
  apply_threads(cfg);
  TypeVocabulary vocab = load_vocab(cfg);
  LabelingParams params = labeling_params(cfg);
  std::unique_ptr<mlm::MlmBackend> backend = backend_from_config(cfg);
  std::filesystem::path dir = out_dir(cfg);

  std::vector<MentionSample> dev = read_samples(cfg.path("data.dev"));
  model::TypingModel baseline =
      model::TypingModel::load(cfg.path("labeling.baseline_checkpoint"), vocab);

  std::vector<patterns::HypernymPattern> candidates = patterns::builtin_patterns();
  if (cfg.has("labeling.pattern_file")) {
    for (auto& p : patterns::load_pattern_file(cfg.path("labeling.pattern_file"))) {
      bool dup = std::any_of(candidates.begin(), candidates.end(),
                             [&](const auto& c) { return c.id == p.id; });
      if (!dup) candidates.push_back(std::move(p));
    }
  }

  mlm::PatternList list = mlm::greedy_build_pattern_list(
      candidates, dev, *backend, baseline, vocab, params.k, params.top_n, params.delta);

  write_text_file(dir / "pattern_list.json", list.to_json().dump(2) + "\n");
  cfg.write_resolved(dir);

  out << "selected " << list.patterns.size() << " patterns\n";
  for (std::size_t i = 0; i < list.patterns.size(); ++i)
    out << "  \"" << list.patterns[i].id << "\" dev F1 " << list.f1_trace[i] << "\n";
}

void run_pretrain(const Config& cfg, std::ostream& out) {
  apply_threads(cfg);
  TypeVocabulary vocab = load_vocab(cfg);
  std::filesystem::path dir = out_dir(cfg);
  std::vector<MentionSample> weak = read_samples(cfg.path("data.weak"));

  train::TrainConfig tc = train_config(cfg, dir);
  std::optional<model::TypingModel> m;
  if (cfg.has("io.init_checkpoint")) {
    std::filesystem::path init = cfg.path("io.init_checkpoint");
    m = model::TypingModel::load(init, vocab);
    std::filesystem::path state = init / "optim.bin";
    if (std::filesystem::exists(state)) tc.resume_state = state.string();
  } else {
    m = fresh_model(cfg, vocab);
  }

  auto log = train::pretrain(*m, weak, vocab, tc);
  m->save(dir);
  write_train_log(dir / "train_log.tsv", log);
  cfg.write_resolved(dir);
  out << "pretrained for " << log.size() << " steps on " << weak.size() << " weak samples\n";
  if (!log.empty()) out << "final loss " << log.back().loss << "\n";
}

void run_finetune(const Config& cfg, std::ostream& out) {
  apply_threads(cfg);
  TypeVocabulary vocab = load_vocab(cfg);
  std::filesystem::path dir = out_dir(cfg);
  std::vector<MentionSample> human = read_samples(cfg.path("data.human"));

  train::TrainConfig tc = train_config(cfg, dir);
  std::optional<model::TypingModel> m;
  if (cfg.has("io.init_checkpoint")) {
    m = model::TypingModel::load(cfg.path("io.init_checkpoint"), vocab);
  } else {
    m = fresh_model(cfg, vocab);  // direct training on human data only
  }

  auto log = train::finetune(*m, human, vocab, tc);
  m->save(dir);
  write_train_log(dir / "train_log.tsv", log);
  cfg.write_resolved(dir);
  out << "fine-tuned for " << log.size() << " steps on " << human.size()
      << " human samples\n";
  if (!log.empty()) out << "final loss " << log.back().loss << "\n";
}

void run_selftrain(const Config& cfg, std::ostream& out) {
  apply_threads(cfg);
  TypeVocabulary vocab = load_vocab(cfg);
  std::filesystem::path dir = out_dir(cfg);
  std::vector<MentionSample> human = read_samples(cfg.path("data.human"));
  std::vector<MentionSample> weak = read_samples(cfg.path("data.weak"));

  // Student starts from the pretrained model h; the fine-tuned model m only
  // provides the pseudo labels.
  model::TypingModel student = model::TypingModel::load(cfg.path("io.init_checkpoint"), vocab);
  model::TypingModel teacher =
      model::TypingModel::load(cfg.path("io.teacher_checkpoint"), vocab);

  train::TrainConfig tc = train_config(cfg, dir);

  std::filesystem::path pseudo_path = dir / "pseudo_labels.jsonl";
  std::vector<train::PseudoLabels> pseudo;
  if (std::filesystem::exists(pseudo_path)) {
    pseudo = train::read_pseudo_labels(pseudo_path);
    if (pseudo.size() != weak.size()) pseudo.clear();
  }
  if (pseudo.empty()) {
    pseudo = train::precompute_pseudo_labels(teacher, weak, vocab, tc.loss);
    train::write_pseudo_labels(pseudo_path, pseudo);
  }

  auto log = train::self_train(student, human, weak, pseudo, vocab, tc);
  student.save(dir);
  write_train_log(dir / "train_log.tsv", log);
  cfg.write_resolved(dir);
  out << "self-trained for " << log.size() << " steps (" << human.size() << " human, "
      << weak.size() << " weak samples)\n";
  if (!log.empty()) out << "final loss " << log.back().loss << "\n";
}

void run_evaluate(const Config& cfg, std::ostream& out) {
  apply_threads(cfg);
  TypeVocabulary vocab = load_vocab(cfg);
  std::filesystem::path dir = out_dir(cfg);
  std::vector<MentionSample> test = read_samples(cfg.path("data.test"));
  model::TypingModel m = model::TypingModel::load(cfg.path("io.checkpoint"), vocab);

  std::vector<std::set<std::string>> preds = predict_all(m, test, vocab);
  eval::EvalReport report = eval::evaluate_by_kind(test, preds);

  write_text_file(dir / "report.txt", eval::report_to_text(report));
  write_text_file(dir / "report.kv", eval::report_to_kv(report));
  cfg.write_resolved(dir);
  out << eval::report_to_text(report);
}

void run_map_types(const Config& cfg, std::ostream& out) {
  apply_threads(cfg);
  std::unique_ptr<mlm::MlmBackend> backend = backend_from_config(cfg);
  std::filesystem::path dir = out_dir(cfg);
  std::vector<MentionSample> samples = read_samples(cfg.path("data.input"));
  fg::WordTypeMapping mapping = fg::load_mapping(cfg.path("fg.mapping"));

  long mapped = 0, unmapped = 0, already_labeled = 0;
  const int n = static_cast<int>(samples.size());
  std::vector<std::optional<std::set<std::string>>> annotations(n);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      if (samples[i].labels.empty())
        annotations[i] = fg::annotate_fg(samples[i], *backend, mapping);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  for (int i = 0; i < n; ++i) {
    if (!samples[i].labels.empty()) {
      ++already_labeled;  // existing weak data passes through untouched
      continue;
    }
    if (annotations[i]) {
      for (const auto& path : *annotations[i])
        samples[i].labels.emplace(path, Provenance::Mlm);
      ++mapped;
    } else {
      ++unmapped;
    }
  }

  write_samples(dir / "fg_samples.jsonl", samples);
  cfg.write_resolved(dir);
  long considered = mapped + unmapped;
  out << "mapped " << mapped << " of " << considered << " unlabeled mentions ("
      << already_labeled << " passed through)\n";
  out << "unmapped ratio "
      << (considered > 0 ? static_cast<double>(unmapped) / considered : 0.0) << "\n";
}

}  // namespace typelabel::pipeline
