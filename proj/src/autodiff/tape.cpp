#include "mlpg/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>

namespace mlpg::ad {

std::string shape_str(const Array2& a) { return std::to_string(a.rows()) + "x" + std::to_string(a.cols()); }

ShapeError::ShapeError(const std::string& op, const Array2& a, const Array2& b)
    : std::runtime_error(op + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b)) {}

const Array2& Var::value() const { return tape->value(id); }

Var Tape::constant(Array2 value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return {this, it->second};
  nodes_.push_back(Node{p.value, {}, {}, &p, true});
  int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return {this, id};
}

Var Tape::record(Array2 value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Array2 value, const std::vector<Var>& inputs, Backward backward) {
  bool needs = false;
  for (const auto& v : inputs) needs = needs || nodes_[static_cast<std::size_t>(v.id)].needs_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Array2& g) { accumulate_expr(id, g); }

Array2& Tape::grad_ref(int id) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) n.grad = Array2::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.rows() != 1 || loss.cols() != 1) throw ShapeError("backward: loss must be 1x1, got " + shape_str(loss.value()));
  grad_ref(loss.id).setConstant(1.0);
  for (int i = loss.id; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) {
      if (n.param->grad.size() == 0) n.param->grad = Array2::Zero(n.value.rows(), n.value.cols());
      n.param->grad += n.grad;
    }
  }
}

namespace {

void require_same(const char* op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError(op, a.value(), b.value());
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul", a.value(), b.value());
  Array2 out = a.value() * b.value();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a.id)) t.accumulate_expr(a.id, g * t.value(b.id).transpose());
    if (t.needs_grad(b.id)) t.accumulate_expr(b.id, t.value(a.id).transpose() * g);
  });
}

Var add(Var a, Var b) {
  require_same("add", a, b);
  return a.tape->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self));
    t.accumulate(b.id, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  require_same("sub", a, b);
  return a.tape->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self));
    t.accumulate_expr(b.id, -t.grad(self));
  });
}

Var mul(Var a, Var b) {
  require_same("mul", a, b);
  return a.tape->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, int self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a.id)) t.accumulate_expr(a.id, g.cwiseProduct(t.value(b.id)));
    if (t.needs_grad(b.id)) t.accumulate_expr(b.id, g.cwiseProduct(t.value(a.id)));
  });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeError("add_row", a.value(), row.value());
  Array2 out = a.value().rowwise() + row.value().row(0);
  return a.tape->record(std::move(out), {a, row}, [a, row](Tape& t, int self) {
    const auto& g = t.grad(self);
    t.accumulate(a.id, g);
    if (t.needs_grad(row.id)) t.accumulate_expr(row.id, g.colwise().sum());
  });
}

Var scale(Var a, double s) {
  return a.tape->record(a.value() * s, {a}, [a, s](Tape& t, int self) { t.accumulate_expr(a.id, t.grad(self) * s); });
}

Var one_minus(Var a) {
  Array2 out = (1.0 - a.value().array()).matrix();
  return a.tape->record(std::move(out), {a}, [a](Tape& t, int self) { t.accumulate_expr(a.id, -t.grad(self)); });
}

Var sigmoid(Var a) {
  Array2 out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape->record(std::move(out), {a}, [a](Tape& t, int self) {
    const auto& y = t.value(self).array();
    t.accumulate_expr(a.id, (t.grad(self).array() * y * (1.0 - y)).matrix());
  });
}

Var tanh(Var a) {
  Array2 out = a.value().array().tanh().matrix();
  return a.tape->record(std::move(out), {a}, [a](Tape& t, int self) {
    const auto& y = t.value(self).array();
    t.accumulate_expr(a.id, (t.grad(self).array() * (1.0 - y.square())).matrix());
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Index rows = parts[0].rows(), cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Array2 out(rows, cols);
  Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return parts[0].tape->record(std::move(out), parts, [parts](Tape& t, int self) {
    const auto& g = t.grad(self);
    Index c = 0;
    for (const auto& p : parts) {
      if (t.needs_grad(p.id)) t.accumulate_expr(p.id, g.middleCols(c, p.cols()));
      c += p.cols();
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Index cols = parts[0].cols(), rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  Array2 out(rows, cols);
  Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return parts[0].tape->record(std::move(out), parts, [parts](Tape& t, int self) {
    const auto& g = t.grad(self);
    Index r = 0;
    for (const auto& p : parts) {
      if (t.needs_grad(p.id)) t.accumulate_expr(p.id, g.middleRows(r, p.rows()));
      r += p.rows();
    }
  });
}

Var slice_cols(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) + ") out of " +
                     shape_str(a.value()));
  Array2 out = a.value().middleCols(start, count);
  return a.tape->record(std::move(out), {a}, [a, start, count](Tape& t, int self) {
    t.grad_ref(a.id).middleCols(start, count) += t.grad(self);
  });
}

Var gather_rows(Var a, const std::vector<int>& idx) {
  const auto& av = a.value();
  Array2 out(static_cast<Index>(idx.size()), av.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= av.rows())
      throw ShapeError("gather_rows: index " + std::to_string(idx[i]) + " out of " + shape_str(av));
    out.row(static_cast<Index>(i)) = av.row(idx[i]);
  }
  return a.tape->record(std::move(out), {a}, [a, idx](Tape& t, int self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Index>(i));
  });
}

Var scatter_add_rows(Var a, const std::vector<int>& idx, Index out_rows) {
  const auto& av = a.value();
  if (static_cast<Index>(idx.size()) != av.rows())
    throw ShapeError("scatter_add_rows: " + std::to_string(idx.size()) + " indices for " + shape_str(av));
  Array2 out = Array2::Zero(out_rows, av.cols());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= out_rows)
      throw ShapeError("scatter_add_rows: index " + std::to_string(idx[j]) + " out of " + std::to_string(out_rows));
    out.row(idx[j]) += av.row(static_cast<Index>(j));
  }
  return a.tape->record(std::move(out), {a}, [a, idx](Tape& t, int self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t j = 0; j < idx.size(); ++j) ga.row(static_cast<Index>(j)) += g.row(idx[j]);
  });
}

Var mean_rows(Var a, const std::vector<std::vector<int>>& groups) {
  const auto& av = a.value();
  Array2 out = Array2::Zero(static_cast<Index>(groups.size()), av.cols());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (int r : groups[i]) {
      if (r < 0 || r >= av.rows()) throw ShapeError("mean_rows: index " + std::to_string(r) + " out of " + shape_str(av));
      out.row(static_cast<Index>(i)) += av.row(r);
    }
    if (!groups[i].empty()) out.row(static_cast<Index>(i)) /= static_cast<double>(groups[i].size());
  }
  return a.tape->record(std::move(out), {a}, [a, groups](Tape& t, int self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad_ref(a.id);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      double w = 1.0 / static_cast<double>(std::max<std::size_t>(groups[i].size(), 1));
      for (int r : groups[i]) ga.row(r) += w * g.row(static_cast<Index>(i));
    }
  });
}

Var rowwise_max_over_set(Var table, const std::vector<std::vector<int>>& sets) {
  const auto& tv = table.value();
  const Index cols = tv.cols();
  Array2 out(static_cast<Index>(sets.size()), cols);
  std::vector<std::vector<int>> arg(sets.size(), std::vector<int>(static_cast<std::size_t>(cols)));
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].empty()) throw ShapeError("rowwise_max_over_set: empty set at row " + std::to_string(i));
    for (int r : sets[i])
      if (r < 0 || r >= tv.rows())
        throw ShapeError("rowwise_max_over_set: index " + std::to_string(r) + " out of " + shape_str(tv));
    for (Index c = 0; c < cols; ++c) {
      int best = sets[i][0];
      for (int r : sets[i])
        if (tv(r, c) > tv(best, c)) best = r;
      arg[i][static_cast<std::size_t>(c)] = best;
      out(static_cast<Index>(i), c) = tv(best, c);
    }
  }
  return table.tape->record(std::move(out), {table}, [table, arg = std::move(arg)](Tape& t, int self) {
    const auto& g = t.grad(self);
    auto& gt = t.grad_ref(table.id);
    for (std::size_t i = 0; i < arg.size(); ++i)
      for (std::size_t c = 0; c < arg[i].size(); ++c)
        gt(arg[i][c], static_cast<Index>(c)) += g(static_cast<Index>(i), static_cast<Index>(c));
  });
}

Var sum(Var a) {
  Array2 out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape->record(std::move(out), {a}, [a](Tape& t, int self) {
    t.accumulate_expr(a.id, Array2::Constant(t.value(a.id).rows(), t.value(a.id).cols(), t.grad(self)(0, 0)));
  });
}

Var row_dot(Var a, Var b) {
  require_same("row_dot", a, b);
  Array2 out = a.value().cwiseProduct(b.value()).rowwise().sum();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a.id)) t.accumulate_expr(a.id, (t.value(b.id).array().colwise() * g.col(0).array()).matrix());
    if (t.needs_grad(b.id)) t.accumulate_expr(b.id, (t.value(a.id).array().colwise() * g.col(0).array()).matrix());
  });
}

Array2 softmax(const Array2& logits) {
  Array2 out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    double mx = logits.row(i).maxCoeff();
    auto e = (logits.row(i).array() - mx).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& gold) {
  const auto& lv = logits.value();
  if (static_cast<Index>(gold.size()) != lv.rows())
    throw ShapeError("softmax_cross_entropy: " + std::to_string(gold.size()) + " labels for " + shape_str(lv));
  Array2 probs = softmax(lv);
  Array2 out(1, 1);
  out(0, 0) = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0) continue;
    if (gold[i] >= lv.cols()) throw ShapeError("softmax_cross_entropy: label out of range");
    out(0, 0) -= std::log(std::max(probs(static_cast<Index>(i), gold[i]), 1e-300));
  }
  return logits.tape->record(std::move(out), {logits}, [logits, gold, probs = std::move(probs)](Tape& t, int self) {
    double g = t.grad(self)(0, 0);
    Array2 d = probs;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i] < 0) d.row(static_cast<Index>(i)).setZero();
      else d(static_cast<Index>(i), gold[i]) -= 1.0;
    }
    t.accumulate_expr(logits.id, d * g);
  });
}

Var hinge_loss(Var scores, int gold, double margin) {
  const auto& s = scores.value();
  if (s.rows() != 1 || s.cols() < 2 || gold < 0 || gold >= s.cols())
    throw ShapeError("hinge_loss: need a 1xk row (k>=2) and valid gold, got " + shape_str(s));
  int best = -1;
  for (Index j = 0; j < s.cols(); ++j)
    if (j != gold && (best < 0 || s(0, j) > s(0, best))) best = static_cast<int>(j);
  Array2 out(1, 1);
  out(0, 0) = std::max(0.0, margin - s(0, gold) + s(0, best));
  const bool active = out(0, 0) > 0.0;
  return scores.tape->record(std::move(out), {scores}, [scores, gold, best, active](Tape& t, int self) {
    if (!active) return;
    double g = t.grad(self)(0, 0);
    auto& gs = t.grad_ref(scores.id);
    gs(0, gold) -= g;
    gs(0, best) += g;
  });
}

GruParams GruParams::create(ParamStore& store, const std::string& prefix, Index in, Index hidden,
                            ParamStore::Rng& rng) {
  GruParams p;
  p.w = &store.add(prefix + ".w", in, 3 * hidden, rng);
  p.u_zr = &store.add(prefix + ".u_zr", hidden, 2 * hidden, rng);
  p.u_h = &store.add(prefix + ".u_h", hidden, hidden, rng);
  p.b = &store.add(prefix + ".b", 1, 3 * hidden, rng, 0.0);
  return p;
}

Var gru_cell(Var m, Var h, const GruParams& p) {
  Tape& t = *m.tape;
  const Index d = p.hidden();
  if (m.rows() != h.rows() || h.cols() != d || m.cols() != p.w->value.rows())
    throw ShapeError("gru_cell", m.value(), h.value());
  Var xm = add_row(matmul(m, t.param(*p.w)), t.param(*p.b));
  Var hu = matmul(h, t.param(*p.u_zr));
  Var z = sigmoid(add(slice_cols(xm, 0, d), slice_cols(hu, 0, d)));
  Var r = sigmoid(add(slice_cols(xm, d, d), slice_cols(hu, d, d)));
  Var cand = tanh(add(slice_cols(xm, 2 * d, d), matmul(mul(r, h), t.param(*p.u_h))));
  return add(mul(one_minus(z), h), mul(z, cand));
}

GradCheckResult gradient_check(ParamStore& params, const std::function<Var(Tape&)>& loss_fn, int samples,
                               std::uint64_t seed, double eps) {
  params.zero_grad();
  {
    Tape tape;
    tape.backward(loss_fn(tape));
  }
  auto all = params.all();
  std::vector<Parameter*> nonempty;
  for (auto* p : all)
    if (p->value.size() > 0) nonempty.push_back(p);
  GradCheckResult res;
  if (nonempty.empty()) return res;
  std::mt19937_64 rng(seed);
  auto eval = [&] {
    Tape tape;
    return loss_fn(tape).scalar();
  };
  for (int s = 0; s < samples; ++s) {
    Parameter* p = nonempty[rng() % nonempty.size()];
    Index k = static_cast<Index>(rng() % static_cast<std::uint64_t>(p->value.size()));
    double& x = p->value.data()[k];
    const double orig = x;
    x = orig + eps;
    double fp = eval();
    x = orig - eps;
    double fm = eval();
    x = orig;
    double numeric = (fp - fm) / (2 * eps);
    double analytic = p->grad.size() ? p->grad.data()[k] : 0.0;
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    res.max_rel_error = std::max(res.max_rel_error, std::abs(analytic - numeric) / denom);
    ++res.checked;
  }
  return res;
}

}  // namespace mlpg::ad
