#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlpg/harness/dataset.hpp"
#include "mlpg/tasks/metrics.hpp"
#include "mlpg/tasks/model.hpp"

namespace mlpg::harness {

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string task = "varmisuse";
  std::string model = "ggnn";  // ggnn | loc | avgbirnn | avglbl
  std::string edges = "all";
  std::string labels = "subtoken";  // subtoken | token | disabled
  int hidden = 64;
  int embed = 64;
  int type_dim = 64;
  int steps = 8;
  double margin = 1.0;
  int radius = 20;
  int max_name_len = 8;
  bool type_sampling = true;
  bool prune = true;  // cut GGNN graphs to the nodes within `steps` hops of the readout
  int min_count = 1;

  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double clip = 1.0;
  int epochs = 30;
  int patience = 5;
  int batch_size = 32;
  int batch_cap = 20000;  // merged-graph node cap
  double stop_at_train_accuracy = 2.0;  // >1 disables
  int train_eval_samples = 500;  // training accuracy is measured on this many fixed samples
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  /// Unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& j);
  /// MLPG_SEED, when set, replaces the seed.
  void apply_env();

  graph::TaskKind task_kind() const { return parse_task(task); }
  DatasetOptions dataset_options() const;
};

std::unique_ptr<tasks::Model> make_model(const RunConfig& cfg, ad::ParamStore& store, const encoder::Vocabulary& vocab);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double train_accuracy = 0;
  double valid_accuracy = 0;
  double seconds = 0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_valid = -1;
  long steps = 0;
  std::vector<double> step_losses;
};

/// Fixed-order batches of at most cfg.batch_size samples and cfg.batch_cap nodes.
std::vector<tasks::Batch> make_batches(const std::vector<const tasks::Example*>& order, const RunConfig& cfg);

/// Adam with gradient clipping and early stopping on validation accuracy.
/// Parameters end at the best validation epoch. `csv` receives the per-epoch log.
TrainResult train(const RunConfig& cfg, const tasks::Model& model, ad::ParamStore& store,
                  const std::vector<tasks::Example>& train_set, const std::vector<tasks::Example>& valid_set,
                  std::ostream* csv = nullptr, const std::function<void(const EpochLog&)>& on_epoch = {});

std::vector<tasks::Prediction> predict_all(const tasks::Model& model, const std::vector<tasks::Example>& set,
                                           const RunConfig& cfg);
double accuracy(const tasks::Model& model, const std::vector<tasks::Example>& set, const RunConfig& cfg);

}  // namespace mlpg::harness
