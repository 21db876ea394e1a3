#pragma once

#include <array>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mlpg/autodiff/tape.hpp"
#include "mlpg/encoder/encoder.hpp"
#include "mlpg/graph/program_graph.hpp"

namespace mlpg::ggnn {

using EdgeMask = std::array<bool, graph::kNumEdgeTypes>;

class UnknownEdgeType : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

EdgeMask all_edges();
/// Child and NextToken plus their duals.
EdgeMask syntax_edges();
/// "all", "syntax", or a comma-separated list of forward edge names (duals
/// follow their forward type). A leading '-' removes types from the full set,
/// e.g. "-GuardedBy,GuardedByNegation".
EdgeMask parse_edge_mask(const std::string& spec);
std::string describe(const EdgeMask& mask);

struct EdgeSet {
  std::array<std::vector<int>, graph::kNumEdgeTypes> src;
  std::array<std::vector<int>, graph::kNumEdgeTypes> dst;

  std::size_t count() const;
};

EdgeSet edges_of(const graph::ProgramGraph& g);

/// A TaskSample reduced to index form for the GGNN.
struct EncodedSample {
  encoder::NodeFeatures features;
  EdgeSet edges;
  graph::TaskKind kind = graph::TaskKind::VarMisuse;
  int slot = -1;
  std::vector<int> candidates;
  int gold = -1;
  std::vector<int> slot_tokens;
  std::vector<int> target;  // naming gold subtoken ids, without END

  std::size_t size() const { return features.size(); }
};

/// Encodes a sample. With `hops` ≥ 0 the graph is cut down to the nodes that
/// can influence the slot/candidate/slot-token nodes within that many
/// propagation steps over the edge types in `mask`; final states of those nodes
/// are unchanged by the cut.
EncodedSample encode_sample(const graph::TaskSample& s, const encoder::Vocabulary& vocab, int hops = -1,
                            const EdgeMask& mask = all_edges());

class BatchTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BatchedGraph {
  encoder::NodeFeatures features;
  EdgeSet edges;
  std::vector<std::pair<int, int>> ranges;  // [begin, end) node ids per sample
  std::vector<int> slots;
  std::vector<std::vector<int>> candidates;
  std::vector<int> golds;
  std::vector<std::vector<int>> slot_tokens;
  std::vector<std::vector<int>> targets;

  std::size_t size() const { return features.size(); }
  std::size_t samples() const { return ranges.size(); }
};

inline constexpr std::size_t kDefaultBatchCap = 20000;

BatchedGraph batch(const std::vector<const EncodedSample*>& samples, std::size_t cap = kDefaultBatchCap);

/// Greedy grouping of samples (in order) into batches under the node cap.
std::vector<std::vector<std::size_t>> plan_batches(const std::vector<std::size_t>& sizes, std::size_t max_nodes,
                                                   std::size_t max_samples);

struct GgnnConfig {
  int hidden = 64;
  int steps = 8;
  bool message_bias = true;
  EdgeMask mask = all_edges();
};

class Ggnn {
 public:
  Ggnn() = default;
  Ggnn(ad::ParamStore& store, const std::string& prefix, GgnnConfig cfg, std::mt19937_64& rng);

  /// h_{t+1} = GRU(Σ_k Σ_{(u,v)∈E_k} f_k(h_t[u]), h_t) for `steps` rounds (−1: configured count).
  ad::Var propagate(ad::Tape& tape, ad::Var h0, const EdgeSet& edges, int steps = -1) const;

  const GgnnConfig& config() const { return cfg_; }
  ad::Parameter& message_weight(int k) const { return *w_[static_cast<std::size_t>(k)]; }

 private:
  GgnnConfig cfg_;
  std::vector<ad::Parameter*> w_;
  std::vector<ad::Parameter*> b_;
  ad::GruParams gru_;
};

/// Summed per-edge-type affine messages into each destination row.
ad::Var edge_messages(ad::Var h, std::shared_ptr<const EdgeSet> edges, const std::vector<ad::Var>& weights,
                      const std::vector<ad::Var>& biases, const EdgeMask& mask);

/// Runs `produce(i)` for i = 0..n-1 on a worker thread, keeping at most one
/// finished item waiting for the consumer.
template <typename T>
class Prefetcher {
 public:
  Prefetcher(std::size_t n, std::function<T(std::size_t)> produce) : n_(n), produce_(std::move(produce)) {
    worker_ = std::thread([this] { run(); });
  }
  ~Prefetcher() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }
  Prefetcher(const Prefetcher&) = delete;
  Prefetcher& operator=(const Prefetcher&) = delete;

  /// Next item in order, or nullopt once all n were consumed.
  std::optional<T> next() {
    std::unique_lock<std::mutex> lock(mu_);
    if (consumed_ == n_) return std::nullopt;
    cv_.wait(lock, [this] { return slot_.has_value() || error_; });
    // items produced before a failure are still delivered
    if (!slot_) std::rethrow_exception(error_);
    std::optional<T> out = std::move(slot_);
    slot_.reset();
    ++consumed_;
    cv_.notify_all();
    return out;
  }

 private:
  void run() {
    for (std::size_t i = 0; i < n_; ++i) {
      std::optional<T> item;
      try {
        item = produce_(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu_);
        error_ = std::current_exception();
        cv_.notify_all();
        return;
      }
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [this] { return !slot_.has_value() || stop_; });
      if (stop_) return;
      slot_ = std::move(item);
      cv_.notify_all();
    }
  }

  std::size_t n_;
  std::function<T(std::size_t)> produce_;
  std::thread worker_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::optional<T> slot_;
  std::exception_ptr error_;
  std::size_t consumed_ = 0;
  bool stop_ = false;
};

}  // namespace mlpg::ggnn
