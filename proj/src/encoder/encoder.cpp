#include "mlpg/encoder/encoder.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace mlpg::encoder {

using ad::Array2;
using ad::Var;

LabelMode parse_label_mode(const std::string& s) {
  if (s == "subtoken") return LabelMode::Subtoken;
  if (s == "token") return LabelMode::Token;
  if (s == "disabled") return LabelMode::Disabled;
  throw std::invalid_argument("unknown label mode '" + s + "' (expected subtoken|token|disabled)");
}

std::string to_string(LabelMode m) {
  switch (m) {
    case LabelMode::Subtoken: return "subtoken";
    case LabelMode::Token: return "token";
    case LabelMode::Disabled: return "disabled";
  }
  return "?";
}

std::vector<std::string> label_units(const graph::GraphNode& node, LabelMode mode) {
  if (mode == LabelMode::Disabled) return {};
  if (node.label == "<SLOT>") return {node.label};
  if (mode == LabelMode::Token) return {node.label};
  if (!node.is_token && !node.var) return {node.label};
  auto parts = split_subtokens(node.label);
  if (parts.empty()) return {node.label};
  return parts;
}

Vocabulary::Vocabulary() {
  for (const char* u : {"<UNK>", "<SLOT>", "<END>"}) add_unit(u);
  add_type("<UNKTYPE>");
}

int Vocabulary::add_unit(const std::string& u) {
  auto [it, inserted] = unit_index_.emplace(u, static_cast<int>(units_.size()));
  if (inserted) units_.push_back(u);
  return it->second;
}

int Vocabulary::add_type(const std::string& t) {
  auto [it, inserted] = type_index_.emplace(t, static_cast<int>(types_.size()));
  if (inserted) types_.push_back(t);
  return it->second;
}

int Vocabulary::unit(const std::string& u) const {
  auto it = unit_index_.find(u);
  return it == unit_index_.end() ? kUnk : it->second;
}

int Vocabulary::type(const std::string& t) const {
  auto it = type_index_.find(t);
  return it == type_index_.end() ? kUnkType : it->second;
}

void VocabularyCounter::add(const graph::TaskSample& s) {
  for (const auto& n : s.graph.nodes) {
    for (auto& u : label_units(n, mode_)) ++counts_[u];
    if (n.type) types_.insert(*n.type);
  }
  for (const auto& [t, closure] : s.graph.type_sets) types_.insert(closure.begin(), closure.end());
  for (const auto& g : s.gold_subtokens) ++counts_[g];
}

Vocabulary VocabularyCounter::finish(int min_count) const {
  Vocabulary v;
  v.set_mode(mode_);
  for (const auto& [u, c] : counts_)
    if (c >= min_count) v.add_unit(u);
  for (const auto& t : types_) v.add_type(t);
  return v;
}

Vocabulary Vocabulary::build(const std::vector<const graph::TaskSample*>& samples, LabelMode mode, int min_count) {
  VocabularyCounter counter(mode);
  for (const auto* s : samples) counter.add(*s);
  return counter.finish(min_count);
}

nlohmann::json Vocabulary::to_json() const {
  return {{"mode", to_string(mode_)}, {"units", units_}, {"types", types_}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  Vocabulary v;
  v.mode_ = parse_label_mode(j.at("mode").get<std::string>());
  auto units = j.at("units").get<std::vector<std::string>>();
  auto types = j.at("types").get<std::vector<std::string>>();
  if (units.size() < 3 || units[kUnk] != "<UNK>" || units[kSlot] != "<SLOT>" || units[kEnd] != "<END>" ||
      types.empty() || types[kUnkType] != "<UNKTYPE>")
    throw std::runtime_error("vocabulary JSON lacks the reserved entries");
  for (const auto& u : units) v.add_unit(u);
  for (const auto& t : types) v.add_type(t);
  return v;
}

NodeFeatures encode_nodes(const graph::TaskSample& sample, const Vocabulary& vocab) {
  const auto& g = sample.graph;
  NodeFeatures f;
  f.units.resize(g.size());
  f.types.resize(g.size());
  f.candidate.assign(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& n = g.nodes[i];
    for (const auto& u : label_units(n, vocab.mode())) f.units[i].push_back(vocab.unit(u));
    if (n.type) {
      auto it = g.type_sets.find(*n.type);
      std::vector<std::string> names = it == g.type_sets.end() ? std::vector<std::string>{*n.type} : it->second;
      std::set<int> ids;
      for (const auto& t : names) ids.insert(vocab.type(t));
      f.types[i].assign(ids.begin(), ids.end());
    }
  }
  for (const auto& c : sample.candidates) f.candidate[static_cast<std::size_t>(c.node)] = 1;
  return f;
}

double oov_rate(const std::vector<const graph::TaskSample*>& samples, const Vocabulary& vocab) {
  std::size_t total = 0, oov = 0;
  for (const auto* s : samples) {
    for (const auto& n : s->graph.nodes) {
      for (const auto& u : label_units(n, vocab.mode())) {
        ++total;
        if (vocab.unit(u) == Vocabulary::kUnk) ++oov;
      }
    }
  }
  return total ? static_cast<double>(oov) / static_cast<double>(total) : 0.0;
}

std::vector<int> sample_type_subset(const std::vector<int>& set, std::mt19937_64& rng) {
  if (set.size() <= 1) return set;
  std::uniform_int_distribution<std::size_t> size_dist(1, set.size());
  std::size_t k = size_dist(rng);
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<int> out;
  for (auto i : order) out.push_back(set[i]);
  return out;
}

Var type_representation(ad::Tape& tape, ad::Parameter& embeddings, const std::vector<std::vector<int>>& sets,
                        const TypeSampling& sampling) {
  std::vector<std::vector<int>> typed;
  std::vector<int> rows;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].empty()) continue;
    rows.push_back(static_cast<int>(i));
    if (sampling.train && !sampling.force_full && sampling.rng) typed.push_back(sample_type_subset(sets[i], *sampling.rng));
    else typed.push_back(sets[i]);
  }
  const auto n = static_cast<ad::Index>(sets.size());
  if (typed.empty()) return tape.constant(Array2::Zero(n, embeddings.value.cols()));
  Var pooled = ad::rowwise_max_over_set(tape.param(embeddings), typed);
  return ad::scatter_add_rows(pooled, rows, n);
}

NodeEncoder::NodeEncoder(ad::ParamStore& store, const std::string& prefix, const Vocabulary& vocab, EncoderConfig cfg,
                         std::mt19937_64& rng)
    : cfg_(cfg), labels_disabled_(vocab.mode() == LabelMode::Disabled) {
  units_ = &store.add(prefix + ".units", vocab.size(), cfg.unit_dim, rng);
  types_ = &store.add(prefix + ".types", vocab.type_count(), cfg.type_dim, rng);
  if (labels_disabled_) constant_label_ = &store.add(prefix + ".label", 1, cfg.unit_dim, rng);
  proj_w_ = &store.add(prefix + ".proj_w", cfg.unit_dim + cfg.type_dim + 1, cfg.out_dim, rng);
  proj_b_ = &store.add(prefix + ".proj_b", 1, cfg.out_dim, rng, 0.0);
}

Var NodeEncoder::name_embedding(ad::Tape& tape, const std::vector<std::vector<int>>& units) const {
  if (labels_disabled_) {
    std::vector<int> zeros(units.size(), 0);
    return ad::gather_rows(tape.param(*constant_label_), zeros);
  }
  return ad::mean_rows(tape.param(*units_), units);
}

Var NodeEncoder::initial_states(ad::Tape& tape, const NodeFeatures& f, const TypeSampling& sampling) const {
  Var name = name_embedding(tape, f.units);
  Var type = type_representation(tape, *types_, f.types, sampling);
  Array2 bit(static_cast<ad::Index>(f.size()), 1);
  for (std::size_t i = 0; i < f.size(); ++i) bit(static_cast<ad::Index>(i), 0) = f.candidate[i] ? 1.0 : 0.0;
  Var x = ad::concat_cols({name, type, tape.constant(std::move(bit))});
  return ad::add_row(ad::matmul(x, tape.param(*proj_w_)), tape.param(*proj_b_));
}

}  // namespace mlpg::encoder
