#pragma once

#include <random>
#include <string>
#include <vector>

#include "mlpg/autodiff/tape.hpp"
#include "mlpg/tasks/model.hpp"

namespace mlpg::tasks {

/// Σ_groups max(0, margin − s_gold + max_{v≠gold} s_v) over a K×1 score
/// column split into groups by `offsets` (size B+1).
ad::Var grouped_hinge(ad::Var scores, const std::vector<int>& offsets, const std::vector<int>& golds, double margin);

/// Softmax within each group of a score column.
std::vector<std::vector<double>> grouped_softmax(const ad::Array2& scores, const std::vector<int>& offsets);

/// s_v = W·[c, u_v] + b.
class MisuseHead {
 public:
  MisuseHead() = default;
  MisuseHead(ad::ParamStore& store, const std::string& prefix, int dim, std::mt19937_64& rng);

  /// `c` has one row per candidate (the slot state repeated), `u` the candidate states.
  ad::Var scores(ad::Tape& tape, ad::Var c, ad::Var u) const;

 private:
  ad::Parameter* w_ = nullptr;
  ad::Parameter* b_ = nullptr;
};

struct DecoderConfig {
  int embed = 64;
  int hidden = 64;
  int max_len = 8;
};

/// One-layer GRU over subtoken embeddings; `<END>` doubles as the start symbol.
class NamingDecoder {
 public:
  NamingDecoder() = default;
  NamingDecoder(ad::ParamStore& store, const std::string& prefix, int vocab_size, DecoderConfig cfg,
                std::mt19937_64& rng);

  /// Summed teacher-forced cross-entropy of targets followed by END.
  ad::Var loss(ad::Tape& tape, ad::Var init, const std::vector<std::vector<int>>& targets) const;

  struct Decoded {
    std::vector<int> ids;  // without END
    std::vector<double> probs;  // per emitted step, END included when reached
  };
  std::vector<Decoded> greedy(const ad::Array2& init) const;

  const DecoderConfig& config() const { return cfg_; }

 private:
  ad::Var logits(ad::Tape& tape, ad::Var h) const;

  DecoderConfig cfg_;
  int vocab_ = 0;
  ad::Parameter* emb_ = nullptr;
  ad::GruParams gru_;
  ad::Parameter* out_w_ = nullptr;
  ad::Parameter* out_b_ = nullptr;
};

/// Scores plus per-candidate representations for a batch of misuse samples.
struct MisuseOutput {
  ad::Var scores;            // K×1
  std::vector<int> offsets;  // B+1
  ad::Var usage;             // K×d
};

class MisuseModel : public Model {
 public:
  explicit MisuseModel(double margin) : margin_(margin) {}
  graph::TaskKind task() const override { return graph::TaskKind::VarMisuse; }

  virtual MisuseOutput forward(ad::Tape& tape, const Batch& batch, const std::any& prepared,
                               const encoder::TypeSampling& sampling) const = 0;

  ad::Var loss(ad::Tape& tape, const Batch& batch, const std::any& prepared,
               const encoder::TypeSampling& sampling) const override;
  std::vector<Prediction> predict(const Batch& batch) const override;
  ad::Array2 representations(const Batch& batch) const override;

 private:
  double margin_;
};

class NamingModel : public Model {
 public:
  explicit NamingModel(encoder::Vocabulary vocab) : vocab_(std::move(vocab)) {}
  graph::TaskKind task() const override { return graph::TaskKind::VarNaming; }

  /// B×hidden usage representations fed to the decoder.
  virtual ad::Var represent(ad::Tape& tape, const Batch& batch, const std::any& prepared,
                            const encoder::TypeSampling& sampling) const = 0;

  ad::Var loss(ad::Tape& tape, const Batch& batch, const std::any& prepared,
               const encoder::TypeSampling& sampling) const override;
  std::vector<Prediction> predict(const Batch& batch) const override;
  ad::Array2 representations(const Batch& batch) const override;

  const NamingDecoder& decoder() const { return decoder_; }

 protected:
  encoder::Vocabulary vocab_;
  NamingDecoder decoder_;
};

/// Candidate offsets of a batch: offsets[i]..offsets[i+1] are sample i's candidates.
std::vector<int> candidate_offsets(const Batch& batch);

}  // namespace mlpg::tasks
