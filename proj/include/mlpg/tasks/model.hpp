#pragma once

#include <any>
#include <string>
#include <vector>

#include "mlpg/autodiff/tape.hpp"
#include "mlpg/encoder/encoder.hpp"
#include "mlpg/ggnn/ggnn.hpp"
#include "mlpg/graph/program_graph.hpp"

namespace mlpg::tasks {

/// Token-sequence view of a sample, used by the non-graph baselines.
struct SequenceSample {
  std::vector<std::vector<int>> tokens;  // vocabulary units per source token
  int slot = -1;                         // misuse: slot position
  std::vector<int> slot_positions;       // naming: positions of the hidden variable
  std::vector<std::vector<int>> usages;  // misuse: token positions of each candidate variable
  encoder::NodeFeatures candidates;      // misuse: features of the candidate nodes
};

/// One training/evaluation item in every representation a model may need.
struct Example {
  std::string id;
  graph::TaskKind kind = graph::TaskKind::VarMisuse;
  int gold = -1;
  std::vector<std::string> candidate_names;
  std::vector<std::string> gold_name;  // naming target subtokens
  std::vector<int> target;             // the same as vocabulary ids
  ggnn::EncodedSample graph;
  SequenceSample seq;

  int k() const { return static_cast<int>(candidate_names.size()); }
};

SequenceSample encode_sequence(const graph::TaskSample& s, const encoder::Vocabulary& vocab);

struct ExampleOptions {
  int hops = -1;  // graph pruning radius, −1 keeps the whole graph
  ggnn::EdgeMask mask = ggnn::all_edges();
};

Example make_example(const graph::TaskSample& s, const encoder::Vocabulary& vocab, const ExampleOptions& opts = {},
                     std::string id = {});

using Batch = std::vector<const Example*>;

struct Prediction {
  std::string id;
  graph::TaskKind kind = graph::TaskKind::VarMisuse;
  // misuse
  std::vector<std::string> candidates;
  std::vector<double> scores;
  std::vector<double> probs;
  int predicted = -1;
  int gold = -1;
  // naming
  std::vector<std::string> decoded;
  std::vector<double> step_probs;
  std::vector<std::string> gold_name;

  bool correct() const;
  /// Top candidate probability (misuse) or product of step probabilities (naming).
  double confidence() const;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual graph::TaskKind task() const = 0;
  virtual std::string name() const = 0;

  /// Work that can run ahead of the optimizer step (e.g. graph merging).
  virtual std::any prepare(const Batch&) const { return {}; }
  /// Mean loss over the batch.
  virtual ad::Var loss(ad::Tape& tape, const Batch& batch, const std::any& prepared,
                       const encoder::TypeSampling& sampling) const = 0;
  virtual std::vector<Prediction> predict(const Batch& batch) const = 0;
  /// One row per candidate (misuse) or per sample (naming).
  virtual ad::Array2 representations(const Batch& batch) const = 0;
};

}  // namespace mlpg::tasks
