#include "mlpg/ggnn/ggnn.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace mlpg::ggnn {

using ad::Array2;
using ad::Index;
using ad::Var;
using graph::EdgeType;

EdgeMask all_edges() {
  EdgeMask m;
  m.fill(true);
  return m;
}

EdgeMask syntax_edges() {
  EdgeMask m{};
  for (auto k : {EdgeType::Child, EdgeType::NextToken}) {
    m[static_cast<std::size_t>(graph::index(k))] = true;
    m[static_cast<std::size_t>(graph::index(graph::dual(k)))] = true;
  }
  return m;
}

EdgeMask parse_edge_mask(const std::string& spec) {
  if (spec.empty() || spec == "all") return all_edges();
  if (spec == "syntax") return syntax_edges();
  const bool remove = spec[0] == '-';
  EdgeMask m = remove ? all_edges() : EdgeMask{};
  std::stringstream ss(remove ? spec.substr(1) : spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto k = graph::parse_edge_type(item);
    if (!k) throw UnknownEdgeType("unknown edge type '" + item + "'");
    EdgeType fwd = graph::is_backward(*k) ? graph::dual(*k) : *k;
    m[static_cast<std::size_t>(graph::index(fwd))] = !remove;
    m[static_cast<std::size_t>(graph::index(graph::dual(fwd)))] = !remove;
  }
  return m;
}

std::string describe(const EdgeMask& mask) {
  if (mask == all_edges()) return "all";
  if (mask == syntax_edges()) return "syntax";
  std::string out;
  for (int i = 0; i < graph::kNumForwardEdgeTypes; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    if (!out.empty()) out += ",";
    out += graph::name(graph::edge_type(i));
  }
  return out.empty() ? "none" : out;
}

std::size_t EdgeSet::count() const {
  std::size_t n = 0;
  for (const auto& s : src) n += s.size();
  return n;
}

EdgeSet edges_of(const graph::ProgramGraph& g) {
  EdgeSet e;
  for (std::size_t k = 0; k < e.src.size(); ++k) {
    for (const auto& edge : g.edges[k]) {
      e.src[k].push_back(edge.src);
      e.dst[k].push_back(edge.dst);
    }
  }
  return e;
}

EncodedSample encode_sample(const graph::TaskSample& s, const encoder::Vocabulary& vocab, int hops,
                            const EdgeMask& mask) {
  EncodedSample out;
  out.kind = s.kind;
  out.features = encoder::encode_nodes(s, vocab);
  out.edges = edges_of(s.graph);
  out.slot = s.slot_node;
  for (const auto& c : s.candidates) out.candidates.push_back(c.node);
  out.gold = s.gold_index();
  out.slot_tokens = s.slot_tokens;
  for (const auto& t : s.gold_subtokens) out.target.push_back(vocab.unit(t));
  if (hops < 0) return out;

  // Node v's state after t steps depends on the sources of its incoming edges
  // at step t-1, so walk edges backwards from the read-out nodes.
  const std::size_t n = out.size();
  std::vector<std::vector<int>> preds(n);
  for (std::size_t k = 0; k < out.edges.src.size(); ++k) {
    if (!mask[k]) continue;
    for (std::size_t j = 0; j < out.edges.src[k].size(); ++j)
      preds[static_cast<std::size_t>(out.edges.dst[k][j])].push_back(out.edges.src[k][j]);
  }
  std::vector<int> dist(n, -1);
  std::deque<int> queue;
  auto seed = [&](int v) {
    if (v >= 0 && dist[static_cast<std::size_t>(v)] < 0) {
      dist[static_cast<std::size_t>(v)] = 0;
      queue.push_back(v);
    }
  };
  seed(out.slot);
  for (int c : out.candidates) seed(c);
  for (int t : out.slot_tokens) seed(t);
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    if (dist[static_cast<std::size_t>(v)] >= hops) continue;
    for (int u : preds[static_cast<std::size_t>(v)]) {
      if (dist[static_cast<std::size_t>(u)] >= 0) continue;
      dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
      queue.push_back(u);
    }
  }

  std::vector<int> remap(n, -1);
  int kept = 0;
  for (std::size_t v = 0; v < n; ++v)
    if (dist[v] >= 0) remap[v] = kept++;
  encoder::NodeFeatures f;
  for (std::size_t v = 0; v < n; ++v) {
    if (remap[v] < 0) continue;
    f.units.push_back(std::move(out.features.units[v]));
    f.types.push_back(std::move(out.features.types[v]));
    f.candidate.push_back(out.features.candidate[v]);
  }
  out.features = std::move(f);
  EdgeSet e;
  for (std::size_t k = 0; k < e.src.size(); ++k) {
    for (std::size_t j = 0; j < out.edges.src[k].size(); ++j) {
      int a = remap[static_cast<std::size_t>(out.edges.src[k][j])];
      int b = remap[static_cast<std::size_t>(out.edges.dst[k][j])];
      if (a < 0 || b < 0) continue;
      e.src[k].push_back(a);
      e.dst[k].push_back(b);
    }
  }
  out.edges = std::move(e);
  auto map = [&](int v) { return v < 0 ? v : remap[static_cast<std::size_t>(v)]; };
  out.slot = map(out.slot);
  for (auto& c : out.candidates) c = map(c);
  for (auto& t : out.slot_tokens) t = map(t);
  return out;
}

BatchedGraph batch(const std::vector<const EncodedSample*>& samples, std::size_t cap) {
  if (samples.empty()) throw std::invalid_argument("batch: no samples");
  std::size_t total = 0;
  for (const auto* s : samples) total += s->size();
  if (total > cap)
    throw BatchTooLarge("batch of " + std::to_string(total) + " nodes exceeds cap " + std::to_string(cap));
  BatchedGraph b;
  int offset = 0;
  for (const auto* s : samples) {
    const auto& f = s->features;
    b.features.units.insert(b.features.units.end(), f.units.begin(), f.units.end());
    b.features.types.insert(b.features.types.end(), f.types.begin(), f.types.end());
    b.features.candidate.insert(b.features.candidate.end(), f.candidate.begin(), f.candidate.end());
    for (std::size_t k = 0; k < b.edges.src.size(); ++k) {
      for (int v : s->edges.src[k]) b.edges.src[k].push_back(v + offset);
      for (int v : s->edges.dst[k]) b.edges.dst[k].push_back(v + offset);
    }
    auto shift = [offset](int v) { return v < 0 ? v : v + offset; };
    b.slots.push_back(shift(s->slot));
    std::vector<int> cands, toks;
    for (int c : s->candidates) cands.push_back(shift(c));
    for (int t : s->slot_tokens) toks.push_back(shift(t));
    b.candidates.push_back(std::move(cands));
    b.slot_tokens.push_back(std::move(toks));
    b.golds.push_back(s->gold);
    b.targets.push_back(s->target);
    b.ranges.emplace_back(offset, offset + static_cast<int>(s->size()));
    offset += static_cast<int>(s->size());
  }
  return b;
}

std::vector<std::vector<std::size_t>> plan_batches(const std::vector<std::size_t>& sizes, std::size_t max_nodes,
                                                   std::size_t max_samples) {
  std::vector<std::vector<std::size_t>> out;
  std::size_t nodes = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] > max_nodes)
      throw BatchTooLarge("sample " + std::to_string(i) + " has " + std::to_string(sizes[i]) + " nodes, cap is " +
                          std::to_string(max_nodes));
    if (out.empty() || nodes + sizes[i] > max_nodes || out.back().size() >= max_samples) {
      out.emplace_back();
      nodes = 0;
    }
    out.back().push_back(i);
    nodes += sizes[i];
  }
  return out;
}

Ggnn::Ggnn(ad::ParamStore& store, const std::string& prefix, GgnnConfig cfg, std::mt19937_64& rng) : cfg_(cfg) {
  if (cfg.steps < 0) throw std::invalid_argument("GGNN step count must be non-negative");
  for (int k = 0; k < graph::kNumEdgeTypes; ++k) {
    std::string name(graph::name(graph::edge_type(k)));
    w_.push_back(&store.add(prefix + ".msg." + name + ".w", cfg.hidden, cfg.hidden, rng));
    if (cfg.message_bias) b_.push_back(&store.add(prefix + ".msg." + name + ".b", 1, cfg.hidden, rng, 0.0));
  }
  gru_ = ad::GruParams::create(store, prefix + ".gru", cfg.hidden, cfg.hidden, rng);
}

Var edge_messages(Var h, std::shared_ptr<const EdgeSet> edges, const std::vector<Var>& weights,
                  const std::vector<Var>& biases, const EdgeMask& mask) {
  const Array2& hv = h.value();
  const Index n = hv.rows(), d = hv.cols();
  Array2 out = Array2::Zero(n, d);
  std::vector<Var> inputs{h};
  std::vector<int> active;
  for (std::size_t k = 0; k < edges->src.size(); ++k) {
    if (!mask[k] || edges->src[k].empty()) continue;
    active.push_back(static_cast<int>(k));
    inputs.push_back(weights[k]);
    if (!biases.empty()) inputs.push_back(biases[k]);
    const auto& src = edges->src[k];
    const auto& dst = edges->dst[k];
    const Index e = static_cast<Index>(src.size());
    Array2 g(e, d);
    for (Index j = 0; j < e; ++j) g.row(j) = hv.row(src[static_cast<std::size_t>(j)]);
    Array2 p = g * weights[k].value();
    if (!biases.empty()) p.rowwise() += biases[k].value().row(0);
    for (Index j = 0; j < e; ++j) out.row(dst[static_cast<std::size_t>(j)]) += p.row(j);
  }
  return h.tape->record(std::move(out), inputs, [h, edges, weights, biases, active](ad::Tape& t, int self) {
    const Array2& gm = t.grad(self);
    const Array2& hv = t.value(h.id);
    const Index d = hv.cols();
    const bool need_h = t.needs_grad(h.id);
    for (int k : active) {
      const auto& src = edges->src[static_cast<std::size_t>(k)];
      const auto& dst = edges->dst[static_cast<std::size_t>(k)];
      const Index e = static_cast<Index>(src.size());
      Array2 dp(e, d), g(e, d);
      for (Index j = 0; j < e; ++j) {
        dp.row(j) = gm.row(dst[static_cast<std::size_t>(j)]);
        g.row(j) = hv.row(src[static_cast<std::size_t>(j)]);
      }
      const Var& w = weights[static_cast<std::size_t>(k)];
      if (t.needs_grad(w.id)) t.accumulate_expr(w.id, g.transpose() * dp);
      if (!biases.empty() && t.needs_grad(biases[static_cast<std::size_t>(k)].id))
        t.accumulate_expr(biases[static_cast<std::size_t>(k)].id, dp.colwise().sum());
      if (need_h) {
        Array2 dg = dp * t.value(w.id).transpose();
        auto& gh = t.grad_ref(h.id);
        for (Index j = 0; j < e; ++j) gh.row(src[static_cast<std::size_t>(j)]) += dg.row(j);
      }
    }
  });
}

Var Ggnn::propagate(ad::Tape& tape, Var h0, const EdgeSet& edges, int steps) const {
  if (steps < 0) steps = cfg_.steps;
  if (h0.cols() != cfg_.hidden) throw ad::ShapeError("propagate: state width " + std::to_string(h0.cols()) +
                                                     " but hidden size is " + std::to_string(cfg_.hidden));
  const int n = static_cast<int>(h0.rows());
  for (std::size_t k = 0; k < edges.src.size(); ++k) {
    if (edges.src[k].size() != edges.dst[k].size()) throw ad::ShapeError("propagate: ragged edge list");
    for (std::size_t j = 0; j < edges.src[k].size(); ++j)
      if (edges.src[k][j] < 0 || edges.src[k][j] >= n || edges.dst[k][j] < 0 || edges.dst[k][j] >= n)
        throw ad::ShapeError("propagate: edge endpoint out of range for " + std::to_string(n) + " nodes");
  }
  if (steps == 0) return h0;
  auto shared = std::make_shared<const EdgeSet>(edges);
  std::vector<Var> weights, biases;
  for (std::size_t k = 0; k < w_.size(); ++k) {
    weights.push_back(tape.param(*w_[k]));
    if (!b_.empty()) biases.push_back(tape.param(*b_[k]));
  }
  Var h = h0;
  for (int s = 0; s < steps; ++s) {
    Var m = edge_messages(h, shared, weights, biases, cfg_.mask);
    h = ad::gru_cell(m, h, gru_);
  }
  return h;
}

}  // namespace mlpg::ggnn
