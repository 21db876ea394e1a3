#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "mlpg/harness/train.hpp"

namespace mlpg::harness {

struct ExperimentResult {
  std::string name;
  RunConfig cfg;
  TrainResult train;
  tasks::Report seen;
  tasks::Report unseen;
  double oov_unseen = 0;
};

/// Builds the dataset for `cfg`, trains on train/valid and evaluates on both test sets.
/// `progress` gets one line per epoch.
ExperimentResult run_experiment(const std::vector<SourceFile>& files, const SplitManifest& manifest,
                                const RunConfig& cfg, std::ostream* progress = nullptr,
                                const std::string& name = "");

/// Table-2-shaped rows: variant, then seen/unseen accuracy and PR AUC (or F1 for naming).
void write_ablation_csv(std::ostream& os, const std::vector<ExperimentResult>& rows);

/// A trained model with everything needed to use it again.
struct LoadedRun {
  RunConfig cfg;
  encoder::Vocabulary vocab;
  ad::ParamStore store;
  std::unique_ptr<tasks::Model> model;
  std::filesystem::path corpus;
  std::filesystem::path manifest;
};

/// Writes run_config.json, vocab.json, params.bin and run.json (corpus and manifest paths).
void save_run(const std::filesystem::path& dir, const RunConfig& cfg, const encoder::Vocabulary& vocab,
              const ad::ParamStore& store, const std::filesystem::path& corpus, const std::filesystem::path& manifest);
std::unique_ptr<LoadedRun> load_run(const std::filesystem::path& dir);

/// Misuse: `slot` is a token index; naming: `variable` is a qualified id ("fn:name").
tasks::Prediction predict_slot(const LoadedRun& run, const SourceFile& file, int slot, const std::string& variable = "");

/// Token index of the variable occurrence at 1-based line/column, or −1.
int token_at(const std::string& source, int line, int column);

}  // namespace mlpg::harness
