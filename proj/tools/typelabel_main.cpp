#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "typelabel/pipeline.hpp"

namespace {

using StageFn = void (*)(const typelabel::pipeline::Config&, std::ostream&);

int run_stage(const std::string& name, StageFn stage, const std::string& config_file,
              const std::vector<std::string>& overrides) {
  try {
    typelabel::pipeline::Config cfg =
        typelabel::pipeline::Config::load(config_file, overrides);
    stage(cfg, std::cout);
    return 0;
  } catch (const typelabel::ConfigError& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return 2;
  } catch (const typelabel::ParseError& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak-label generation and training pipeline for ultra-fine entity typing"};
  app.require_subcommand(1);

  static const std::map<std::string, StageFn> stages = {
      {"generate-labels", &typelabel::pipeline::run_generate_labels},
      {"select-patterns", &typelabel::pipeline::run_select_patterns},
      {"pretrain", &typelabel::pipeline::run_pretrain},
      {"finetune", &typelabel::pipeline::run_finetune},
      {"selftrain", &typelabel::pipeline::run_selftrain},
      {"evaluate", &typelabel::pipeline::run_evaluate},
      {"map-types", &typelabel::pipeline::run_map_types},
  };
  static const std::map<std::string, std::string> descriptions = {
      {"generate-labels", "Generate MLM type labels and merge them into the sample stream"},
      {"select-patterns", "Greedily build the pattern list against a dev set"},
      {"pretrain", "Pretrain the typing model on weakly labeled samples"},
      {"finetune", "Fine-tune a checkpoint on human annotated samples"},
      {"selftrain", "Self-train with teacher pseudo labels"},
      {"evaluate", "Evaluate a checkpoint and write metric reports"},
      {"map-types", "Annotate unlabeled mentions with hierarchical type paths"},
  };

  int exit_code = 0;
  for (const auto& [name, fn] : stages) {
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    auto config_file = std::make_shared<std::string>();
    auto overrides = std::make_shared<std::vector<std::string>>();
    sub->add_option("--config", *config_file, "Pipeline config file (JSON)")->required();
    sub->add_option("--set", *overrides, "Override a config key, e.g. --set training.lr=0.05");
    StageFn stage = fn;
    std::string stage_name = name;
    sub->callback([&exit_code, stage, stage_name, config_file, overrides]() {
      exit_code = run_stage(stage_name, stage, *config_file, *overrides);
    });
  }

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
