#pragma once

#include <array>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mlpg/tasks/heads.hpp"

namespace mlpg::baselines {

/// Token positions [begin, end) within `radius` of `center`, clipped to [0, n).
std::pair<int, int> window(int n, int center, int radius);

/// Mean of unit embeddings per token.
class TokenEmbedding {
 public:
  TokenEmbedding() = default;
  TokenEmbedding(ad::ParamStore& store, const std::string& prefix, int vocab_size, int dim, std::mt19937_64& rng);
  ad::Var embed(ad::Tape& tape, const std::vector<std::vector<int>>& units) const;
  ad::Parameter& table() const { return *table_; }

 private:
  ad::Parameter* table_ = nullptr;
};

/// Two stacked bidirectional GRU layers with independent parameters per direction.
class BiGru {
 public:
  BiGru() = default;
  BiGru(ad::ParamStore& store, const std::string& prefix, int in, int hidden, std::mt19937_64& rng);

  /// Query i runs over rows `seqs[i]` of `inputs` and reads concat(forward, backward)
  /// of the top layer at position `positions[i]`. Returns Q×2·hidden.
  ad::Var states_at(ad::Tape& tape, ad::Var inputs, const std::vector<std::vector<int>>& seqs,
                    const std::vector<int>& positions) const;
  int hidden() const { return static_cast<int>(layers_[0][0].hidden()); }

 private:
  std::array<std::array<ad::GruParams, 2>, 2> layers_;  // [layer][direction]
};

struct BaselineConfig {
  int embed = 64;
  int hidden = 64;  // per direction
  int type_dim = 64;
  int radius = 20;
  double margin = 1.0;
  tasks::DecoderConfig decoder;
};

/// Per-batch token table: every token of every sample, with row offsets.
struct TokenTable {
  std::vector<std::vector<int>> units;
  std::vector<int> offset;  // first row of each sample
};
TokenTable token_table(const tasks::Batch& batch);

/// c(t) = BiGRU at the slot; u(t,v) = the candidate's initial node representation; s = c·u.
class LocMisuse : public tasks::MisuseModel {
 public:
  LocMisuse(ad::ParamStore& store, const encoder::Vocabulary& vocab, BaselineConfig cfg, std::mt19937_64& rng);
  std::string name() const override { return "loc"; }
  tasks::MisuseOutput forward(ad::Tape& tape, const tasks::Batch& batch, const std::any& prepared,
                              const encoder::TypeSampling& sampling) const override;
  /// Slot context rows, one per sample.
  ad::Var context(ad::Tape& tape, const tasks::Batch& batch, ad::Var tokens, const TokenTable& table) const;

 private:
  BaselineConfig cfg_;
  encoder::NodeEncoder enc_;
  BiGru rnn_;
};

/// c(t) as Loc; u(t,v) = mean of BiGRU states at the candidate's usages.
class AvgBiRnnMisuse : public tasks::MisuseModel {
 public:
  AvgBiRnnMisuse(ad::ParamStore& store, const encoder::Vocabulary& vocab, BaselineConfig cfg, std::mt19937_64& rng);
  std::string name() const override { return "avgbirnn"; }
  tasks::MisuseOutput forward(ad::Tape& tape, const tasks::Batch& batch, const std::any& prepared,
                              const encoder::TypeSampling& sampling) const override;

 private:
  BaselineConfig cfg_;
  TokenEmbedding emb_;
  BiGru rnn_;
};

/// Mean BiGRU state over the hidden variable's usages, projected to the decoder size.
class AvgBiRnnNaming : public tasks::NamingModel {
 public:
  AvgBiRnnNaming(ad::ParamStore& store, const encoder::Vocabulary& vocab, BaselineConfig cfg, std::mt19937_64& rng);
  std::string name() const override { return "avgbirnn"; }
  ad::Var represent(ad::Tape& tape, const tasks::Batch& batch, const std::any& prepared,
                    const encoder::TypeSampling& sampling) const override;

 private:
  BaselineConfig cfg_;
  TokenEmbedding emb_;
  BiGru rnn_;
  ad::Parameter* proj_w_ = nullptr;
  ad::Parameter* proj_b_ = nullptr;
};

/// Log-bilinear context: Σ_p d_p ⊙ e(token at offset p) over 4 left and 4 right
/// neighbours of each usage, averaged over usages.
class AvgLblNaming : public tasks::NamingModel {
 public:
  static constexpr std::array<int, 8> kOffsets{-4, -3, -2, -1, 1, 2, 3, 4};

  AvgLblNaming(ad::ParamStore& store, const encoder::Vocabulary& vocab, BaselineConfig cfg, std::mt19937_64& rng);
  std::string name() const override { return "avglbl"; }
  ad::Var represent(ad::Tape& tape, const tasks::Batch& batch, const std::any& prepared,
                    const encoder::TypeSampling& sampling) const override;

 private:
  BaselineConfig cfg_;
  TokenEmbedding emb_;
  std::vector<ad::Parameter*> diag_;
};

}  // namespace mlpg::baselines
