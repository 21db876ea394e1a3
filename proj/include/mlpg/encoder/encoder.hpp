#pragma once

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlpg/autodiff/tape.hpp"
#include "mlpg/encoder/subtokens.hpp"
#include "mlpg/graph/program_graph.hpp"

namespace mlpg::encoder {

enum class LabelMode { Subtoken, Token, Disabled };

LabelMode parse_label_mode(const std::string& s);
std::string to_string(LabelMode m);

/// Vocabulary units for a node label under the given mode. `<SLOT>` maps to
/// the reserved SLOT entry; punctuation stays whole.
std::vector<std::string> label_units(const graph::GraphNode& node, LabelMode mode);

class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kSlot = 1;
  static constexpr int kEnd = 2;
  static constexpr int kUnkType = 0;

  Vocabulary();

  /// Counts units over the given graphs (and naming targets) and keeps those
  /// seen at least `min_count` times.
  static Vocabulary build(const std::vector<const graph::TaskSample*>& samples, LabelMode mode, int min_count = 1);
  void set_mode(LabelMode m) { mode_ = m; }

  int add_unit(const std::string& u);
  int add_type(const std::string& t);
  int unit(const std::string& u) const;  // kUnk when absent
  int type(const std::string& t) const;  // kUnkType when absent
  const std::string& unit_name(int i) const { return units_.at(static_cast<std::size_t>(i)); }
  int size() const { return static_cast<int>(units_.size()); }
  int type_count() const { return static_cast<int>(types_.size()); }
  LabelMode mode() const { return mode_; }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> units_;
  std::unordered_map<std::string, int> unit_index_;
  std::vector<std::string> types_;
  std::unordered_map<std::string, int> type_index_;
  LabelMode mode_ = LabelMode::Subtoken;
};

/// Incremental form of Vocabulary::build, for corpora too large to hold at once.
class VocabularyCounter {
 public:
  explicit VocabularyCounter(LabelMode mode) : mode_(mode) {}
  void add(const graph::TaskSample& s);
  Vocabulary finish(int min_count = 1) const;

 private:
  LabelMode mode_;
  std::map<std::string, int> counts_;
  std::set<std::string> types_;
};

/// x^(v) ingredients for every node of one graph.
struct NodeFeatures {
  std::vector<std::vector<int>> units;  // empty in Disabled mode
  std::vector<std::vector<int>> types;  // τ*(v); empty for non-variable nodes
  std::vector<char> candidate;

  std::size_t size() const { return candidate.size(); }
};

NodeFeatures encode_nodes(const graph::TaskSample& sample, const Vocabulary& vocab);

/// Out-of-vocabulary rate over all label units of the given samples.
double oov_rate(const std::vector<const graph::TaskSample*>& samples, const Vocabulary& vocab);

/// k uniform in [1, |set|], then a uniform k-subset (order preserved).
std::vector<int> sample_type_subset(const std::vector<int>& set, std::mt19937_64& rng);

struct TypeSampling {
  bool train = false;
  std::mt19937_64* rng = nullptr;
  bool force_full = false;  // train mode that always keeps the whole set
};

/// Elementwise max of type embeddings over each set; rows with empty sets are zero.
ad::Var type_representation(ad::Tape& tape, ad::Parameter& embeddings, const std::vector<std::vector<int>>& sets,
                            const TypeSampling& sampling);

struct EncoderConfig {
  int unit_dim = 64;
  int type_dim = 64;
  int out_dim = 64;
};

/// Initial node states: linear(concat(mean unit embedding, r*(v), candidate bit)).
class NodeEncoder {
 public:
  NodeEncoder() = default;
  NodeEncoder(ad::ParamStore& store, const std::string& prefix, const Vocabulary& vocab, EncoderConfig cfg,
              std::mt19937_64& rng);

  ad::Var initial_states(ad::Tape& tape, const NodeFeatures& f, const TypeSampling& sampling) const;
  /// Mean unit embedding per group of unit ids (the name part alone).
  ad::Var name_embedding(ad::Tape& tape, const std::vector<std::vector<int>>& units) const;

  const EncoderConfig& config() const { return cfg_; }
  ad::Parameter& unit_embeddings() const { return *units_; }

 private:
  EncoderConfig cfg_;
  bool labels_disabled_ = false;
  ad::Parameter* units_ = nullptr;
  ad::Parameter* types_ = nullptr;
  ad::Parameter* constant_label_ = nullptr;
  ad::Parameter* proj_w_ = nullptr;
  ad::Parameter* proj_b_ = nullptr;
};

}  // namespace mlpg::encoder
