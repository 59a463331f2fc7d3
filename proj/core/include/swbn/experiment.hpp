#pragma once

#include <string>

#include "swbn/config.hpp"

namespace swbn {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

// Trains one model per (norm kind, seed), writing per-run metrics CSVs and
// model checkpoints, plus per-norm aggregate CSVs when several seeds are
// configured.
int cmd_train(const ExperimentConfig& cfg, bool verbose = false);

// Runs the whitening iteration on a configured correlation matrix for each
// (criterion, alpha) pair, one trajectory CSV each.
int cmd_whiten_demo(const ExperimentConfig& cfg, bool verbose = false);

// Loads a model checkpoint, feeds configured samples through it and writes
// the last norm layer's pre-scale/shift correlation matrix as CSV and PGM.
int cmd_heatmap(const ExperimentConfig& cfg, bool verbose = false);

// Wall-clock and matmul-count comparison of single-layer
// forward(+backward) passes.
int cmd_bench(const ExperimentConfig& cfg, bool verbose = false);

// Maps exceptions from a subcommand body to the exit-code contract.
int run_subcommand(const std::string& name, const ExperimentConfig& cfg, bool verbose);

}  // namespace swbn
