#pragma once

#include <iosfwd>

#include "typelabel/config.hpp"

namespace typelabel::pipeline {

// Pipeline stages behind the CLI subcommands. Each stage validates its
// inputs, runs, writes outputs plus the resolved config under io.out_dir,
// and prints a short summary to `out`. Errors are thrown: ConfigError and
// ParseError are configuration/input problems, everything else is a
// runtime failure.

void run_generate_labels(const Config& cfg, std::ostream& out);
void run_select_patterns(const Config& cfg, std::ostream& out);
void run_pretrain(const Config& cfg, std::ostream& out);
void run_finetune(const Config& cfg, std::ostream& out);
void run_selftrain(const Config& cfg, std::ostream& out);
void run_evaluate(const Config& cfg, std::ostream& out);
void run_map_types(const Config& cfg, std::ostream& out);

}  // namespace typelabel::pipeline
