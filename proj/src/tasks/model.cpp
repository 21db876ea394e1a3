#include "mlpg/tasks/model.hpp"

namespace mlpg::tasks {

SequenceSample encode_sequence(const graph::TaskSample& s, const encoder::Vocabulary& vocab) {
  SequenceSample out;
  const auto& g = s.graph;
  auto order = g.token_sequence();
  std::vector<int> pos(g.size(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& n = g.nodes[static_cast<std::size_t>(order[i])];
    pos[static_cast<std::size_t>(n.id)] = static_cast<int>(i);
    std::vector<int> units;
    for (const auto& u : encoder::label_units(n, vocab.mode())) units.push_back(vocab.unit(u));
    out.tokens.push_back(std::move(units));
  }
  if (s.kind == graph::TaskKind::VarMisuse) {
    out.slot = pos[static_cast<std::size_t>(s.slot_node)];
    auto all = encoder::encode_nodes(s, vocab);
    for (const auto& c : s.candidates) {
      const auto& var = g.nodes[static_cast<std::size_t>(c.node)].var;
      std::vector<int> uses;
      for (std::size_t i = 0; i < order.size(); ++i)
        if (var && g.nodes[static_cast<std::size_t>(order[i])].var == var) uses.push_back(static_cast<int>(i));
      out.usages.push_back(std::move(uses));
      auto k = static_cast<std::size_t>(c.node);
      out.candidates.units.push_back(all.units[k]);
      out.candidates.types.push_back(all.types[k]);
      out.candidates.candidate.push_back(1);
    }
  } else {
    for (int t : s.slot_tokens) out.slot_positions.push_back(pos[static_cast<std::size_t>(t)]);
  }
  return out;
}

Example make_example(const graph::TaskSample& s, const encoder::Vocabulary& vocab, const ExampleOptions& opts,
                     std::string id) {
  Example e;
  e.id = std::move(id);
  e.kind = s.kind;
  e.gold = s.gold_index();
  for (const auto& c : s.candidates) e.candidate_names.push_back(c.name);
  e.gold_name = s.gold_subtokens;
  for (const auto& t : s.gold_subtokens) e.target.push_back(vocab.unit(t));
  e.graph = ggnn::encode_sample(s, vocab, opts.hops, opts.mask);
  e.seq = encode_sequence(s, vocab);
  return e;
}

}  // namespace mlpg::tasks
