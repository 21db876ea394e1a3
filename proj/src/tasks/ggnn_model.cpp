#include "mlpg/tasks/ggnn_model.hpp"

namespace mlpg::tasks {

using ad::Var;

std::shared_ptr<const ggnn::BatchedGraph> merge(const Batch& batch, std::size_t cap) {
  std::vector<const ggnn::EncodedSample*> parts;
  for (const auto* e : batch) parts.push_back(&e->graph);
  return std::make_shared<const ggnn::BatchedGraph>(ggnn::batch(parts, cap));
}

namespace {

std::shared_ptr<const ggnn::BatchedGraph> merged(const Batch& batch, const std::any& prepared) {
  if (auto* p = std::any_cast<std::shared_ptr<const ggnn::BatchedGraph>>(&prepared)) return *p;
  return merge(batch);
}

encoder::EncoderConfig with_out(encoder::EncoderConfig e, int dim) {
  e.out_dim = dim;
  return e;
}

}  // namespace

GgnnMisuse::GgnnMisuse(ad::ParamStore& store, const encoder::Vocabulary& vocab, GgnnModelConfig cfg,
                       std::mt19937_64& rng)
    : MisuseModel(cfg.margin),
      encoder_(store, "enc", vocab, with_out(cfg.encoder, cfg.ggnn.hidden), rng),
      ggnn_(store, "ggnn", cfg.ggnn, rng),
      head_(store, "misuse", cfg.ggnn.hidden, rng) {}

MisuseOutput GgnnMisuse::forward(ad::Tape& tape, const Batch& batch, const std::any& prepared,
                                 const encoder::TypeSampling& sampling) const {
  auto g = merged(batch, prepared);
  Var h = ggnn_.propagate(tape, encoder_.initial_states(tape, g->features, sampling), g->edges);
  std::vector<int> slot_rows, cand_rows;
  for (std::size_t i = 0; i < g->samples(); ++i) {
    for (int c : g->candidates[i]) {
      slot_rows.push_back(g->slots[i]);
      cand_rows.push_back(c);
    }
  }
  MisuseOutput out;
  out.offsets = candidate_offsets(batch);
  out.usage = ad::gather_rows(h, cand_rows);
  out.scores = head_.scores(tape, ad::gather_rows(h, slot_rows), out.usage);
  return out;
}

GgnnNaming::GgnnNaming(ad::ParamStore& store, const encoder::Vocabulary& vocab, GgnnModelConfig cfg,
                       std::mt19937_64& rng)
    : NamingModel(vocab),
      encoder_(store, "enc", vocab, with_out(cfg.encoder, cfg.ggnn.hidden), rng),
      ggnn_(store, "ggnn", cfg.ggnn, rng) {
  cfg.decoder.hidden = cfg.ggnn.hidden;
  decoder_ = NamingDecoder(store, "dec", vocab.size(), cfg.decoder, rng);
}

Var GgnnNaming::represent(ad::Tape& tape, const Batch& batch, const std::any& prepared,
                          const encoder::TypeSampling& sampling) const {
  auto g = merged(batch, prepared);
  Var h = ggnn_.propagate(tape, encoder_.initial_states(tape, g->features, sampling), g->edges);
  return ad::mean_rows(h, g->slot_tokens);
}

}  // namespace mlpg::tasks
