#pragma once

#include <memory>

#include "mlpg/tasks/heads.hpp"

namespace mlpg::tasks {

struct GgnnModelConfig {
  encoder::EncoderConfig encoder;
  ggnn::GgnnConfig ggnn;
  double margin = 1.0;
  DecoderConfig decoder;
};

/// Merged graph for a batch, built off the training thread when prefetching.
std::shared_ptr<const ggnn::BatchedGraph> merge(const Batch& batch, std::size_t cap = ggnn::kDefaultBatchCap);

class GgnnMisuse : public MisuseModel {
 public:
  GgnnMisuse(ad::ParamStore& store, const encoder::Vocabulary& vocab, GgnnModelConfig cfg, std::mt19937_64& rng);

  std::string name() const override { return "ggnn"; }
  std::any prepare(const Batch& batch) const override { return merge(batch); }
  MisuseOutput forward(ad::Tape& tape, const Batch& batch, const std::any& prepared,
                       const encoder::TypeSampling& sampling) const override;

 private:
  encoder::NodeEncoder encoder_;
  ggnn::Ggnn ggnn_;
  MisuseHead head_;
};

class GgnnNaming : public NamingModel {
 public:
  GgnnNaming(ad::ParamStore& store, const encoder::Vocabulary& vocab, GgnnModelConfig cfg, std::mt19937_64& rng);

  std::string name() const override { return "ggnn"; }
  std::any prepare(const Batch& batch) const override { return merge(batch); }
  ad::Var represent(ad::Tape& tape, const Batch& batch, const std::any& prepared,
                    const encoder::TypeSampling& sampling) const override;

 private:
  encoder::NodeEncoder encoder_;
  ggnn::Ggnn ggnn_;
};

}  // namespace mlpg::tasks
