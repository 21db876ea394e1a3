#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace mlpg::ad {

using Array2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

class ShapeError : public std::runtime_error {
 public:
  ShapeError(const std::string& op, const Array2& a, const Array2& b);
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

std::string shape_str(const Array2& a);

/// A trainable array with persistent identity and Adam moments.
struct Parameter {
  std::string name;
  Array2 value;
  Array2 grad;
  Array2 m;
  Array2 v;
};

class ParamStore {
 public:
  using Rng = std::mt19937_64;

  /// Glorot-uniform initialisation; `scale` 0 gives zeros.
  Parameter& add(const std::string& name, Index rows, Index cols, Rng& rng, double scale = 1.0);
  Parameter& add(const std::string& name, Array2 value);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t size() const { return params_.size(); }
  std::size_t value_count() const;

  void zero_grad();
  double grad_norm() const;
  void scale_grads(double s);

  /// Binary checkpoint: magic, version, then name → shape → little-endian doubles.
  void save(const std::string& path) const;
  /// Loads values into already-registered parameters; names and shapes must match.
  void load(const std::string& path);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(ParamStore& params);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
};

/// Clips the global gradient norm to `max_norm`; returns the norm before clipping.
double clip_grad_norm(ParamStore& params, double max_norm);

class Tape;

/// Handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Array2& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

/// Records forward values; backward() replays the records in reverse.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array2 value);
  Var param(Parameter& p);

  /// Adds a node. `backward` reads grad(self) and accumulates into its inputs.
  Var record(Array2 value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Array2 value, const std::vector<Var>& inputs, Backward backward);

  const Array2& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Array2& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

  /// grad(id) += g, allocating on first use. No-op for constants.
  void accumulate(int id, const Array2& g);
  template <typename Expr>
  void accumulate_expr(int id, const Expr& g) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) n.grad = g;
    else n.grad += g;
  }
  Array2& grad_ref(int id);

  /// Seeds d(loss)/d(loss)=1 and accumulates gradients into parameters.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Array2 value;
    Array2 grad;
    Backward backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// Operators. All throw ShapeError on incompatible inputs.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_row(Var a, Var row);  // broadcast a 1×C row over every row of a
Var scale(Var a, double s);
Var one_minus(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, Index start, Index count);
Var gather_rows(Var a, const std::vector<int>& idx);
/// out[i] = Σ_{j: idx[j]=i} a[j]
Var scatter_add_rows(Var a, const std::vector<int>& idx, Index out_rows);
/// Row i of the result is the mean of rows `groups[i]` of a (empty group → zeros).
Var mean_rows(Var a, const std::vector<std::vector<int>>& groups);
/// Row i is the elementwise max over rows `sets[i]` of `table`; ties go to the
/// lowest position within the set.
Var rowwise_max_over_set(Var table, const std::vector<std::vector<int>>& sets);
Var sum(Var a);
/// out[i] = <a[i], b[i]>, an n×1 column.
Var row_dot(Var a, Var b);
/// Sum over rows of -log softmax(logits[i])[gold[i]]; rows with gold < 0 are skipped.
Var softmax_cross_entropy(Var logits, const std::vector<int>& gold);
/// max(0, margin - s_gold + max_{v≠gold} s_v) for a 1×k score row.
Var hinge_loss(Var scores, int gold, double margin);

/// Row-wise softmax (no tape).
Array2 softmax(const Array2& logits);

struct GruParams {
  Parameter* w = nullptr;     // in × 3D, column blocks [z | r | h]
  Parameter* u_zr = nullptr;  // D × 2D
  Parameter* u_h = nullptr;   // D × D
  Parameter* b = nullptr;     // 1 × 3D

  static GruParams create(ParamStore& store, const std::string& prefix, Index in, Index hidden,
                          ParamStore::Rng& rng);
  Index hidden() const { return u_h->value.rows(); }
};

/// Standard GRU update over a batch of rows: h' = (1-z)⊙h + z⊙tanh(W_h m + U_h(r⊙h) + b_h).
Var gru_cell(Var m, Var h, const GruParams& p);

/// Largest relative error between analytic and central-difference gradients
/// over up to `samples` randomly chosen parameter entries.
struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
};
GradCheckResult gradient_check(ParamStore& params, const std::function<Var(Tape&)>& loss_fn, int samples,
                               std::uint64_t seed, double eps = 1e-5);

}  // namespace mlpg::ad
