#include "mlpg/baselines/baselines.hpp"

#include <algorithm>

namespace mlpg::baselines {

using ad::Array2;
using ad::Var;
using tasks::Batch;

std::pair<int, int> window(int n, int center, int radius) {
  return {std::max(0, center - radius), std::min(n, center + radius + 1)};
}

TokenEmbedding::TokenEmbedding(ad::ParamStore& store, const std::string& prefix, int vocab_size, int dim,
                               std::mt19937_64& rng) {
  table_ = &store.add(prefix + ".units", vocab_size, dim, rng);
}

Var TokenEmbedding::embed(ad::Tape& tape, const std::vector<std::vector<int>>& units) const {
  return ad::mean_rows(tape.param(*table_), units);
}

BiGru::BiGru(ad::ParamStore& store, const std::string& prefix, int in, int hidden, std::mt19937_64& rng) {
  for (int l = 0; l < 2; ++l)
    for (int d = 0; d < 2; ++d)
      layers_[static_cast<std::size_t>(l)][static_cast<std::size_t>(d)] = ad::GruParams::create(
          store, prefix + ".l" + std::to_string(l) + (d ? ".bwd" : ".fwd"), l ? 2 * hidden : in, hidden, rng);
}

Var BiGru::states_at(ad::Tape& tape, Var inputs, const std::vector<std::vector<int>>& seqs,
                     const std::vector<int>& positions) const {
  const int q = static_cast<int>(seqs.size());
  const int d = hidden();
  if (positions.size() != seqs.size()) throw ad::ShapeError("BiGru: one position per sequence required");
  if (q == 0) return tape.constant(Array2::Zero(0, 2 * d));
  std::size_t steps = 0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].empty() || positions[i] < 0 || positions[i] >= static_cast<int>(seqs[i].size()))
      throw ad::ShapeError("BiGru: position outside its sequence");
    steps = std::max(steps, seqs[i].size());
  }
  auto len = [&](int i) { return static_cast<int>(seqs[static_cast<std::size_t>(i)].size()); };

  // Sequences are left-aligned in both directions. Steps past a sequence's
  // end are padding that never reaches a read-out position.
  auto run = [&](Var table, const std::vector<std::vector<int>>& rows_per_step, const ad::GruParams& p) {
    Var h = tape.constant(Array2::Zero(q, d));
    std::vector<Var> out;
    for (const auto& rows : rows_per_step) {
      h = ad::gru_cell(ad::gather_rows(table, rows), h, p);
      out.push_back(h);
    }
    return ad::concat_rows(out);  // row s*q + i
  };
  // Row of sequence i's element at position t in an input table, for either direction.
  auto step_rows = [&](const std::function<int(int, int)>& row_of, bool backward) {
    std::vector<std::vector<int>> rows(steps);
    for (std::size_t s = 0; s < steps; ++s)
      for (int i = 0; i < q; ++i) {
        int t = std::min(static_cast<int>(s), len(i) - 1);
        if (backward) t = std::max(len(i) - 1 - static_cast<int>(s), 0);
        rows[s].push_back(row_of(i, t));
      }
    return rows;
  };
  auto input_row = [&](int i, int t) { return seqs[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)]; };
  auto layer_row = [&](int i, int t) { return t * q + i; };

  Var f1 = run(inputs, step_rows(input_row, false), layers_[0][0]);
  Var b1 = run(inputs, step_rows(input_row, true), layers_[0][1]);
  // Layer-1 output table indexed by position*q + i.
  std::vector<int> fi, bi;
  for (std::size_t t = 0; t < steps; ++t)
    for (int i = 0; i < q; ++i) {
      int p = std::min(static_cast<int>(t), len(i) - 1);
      fi.push_back(p * q + i);
      bi.push_back((len(i) - 1 - p) * q + i);
    }
  Var l1 = ad::concat_cols({ad::gather_rows(f1, fi), ad::gather_rows(b1, bi)});
  Var f2 = run(l1, step_rows(layer_row, false), layers_[1][0]);
  Var b2 = run(l1, step_rows(layer_row, true), layers_[1][1]);
  std::vector<int> fo, bo;
  for (int i = 0; i < q; ++i) {
    int p = positions[static_cast<std::size_t>(i)];
    fo.push_back(p * q + i);
    bo.push_back((len(i) - 1 - p) * q + i);
  }
  return ad::concat_cols({ad::gather_rows(f2, fo), ad::gather_rows(b2, bo)});
}

TokenTable token_table(const Batch& batch) {
  TokenTable t;
  for (const auto* e : batch) {
    t.offset.push_back(static_cast<int>(t.units.size()));
    t.units.insert(t.units.end(), e->seq.tokens.begin(), e->seq.tokens.end());
  }
  return t;
}

namespace {

// Appends a query for the window around `center` of sample `s`.
void add_query(const TokenTable& table, const tasks::Example& e, int s, int center, int radius,
               std::vector<std::vector<int>>& seqs, std::vector<int>& pos) {
  auto [lo, hi] = window(static_cast<int>(e.seq.tokens.size()), center, radius);
  std::vector<int> rows;
  for (int t = lo; t < hi; ++t) rows.push_back(table.offset[static_cast<std::size_t>(s)] + t);
  seqs.push_back(std::move(rows));
  pos.push_back(center - lo);
}

Var slot_context(ad::Tape& tape, const BiGru& rnn, const Batch& batch, Var tokens, const TokenTable& table,
                 int radius) {
  std::vector<std::vector<int>> seqs;
  std::vector<int> pos;
  for (std::size_t s = 0; s < batch.size(); ++s)
    add_query(table, *batch[s], static_cast<int>(s), batch[s]->seq.slot, radius, seqs, pos);
  return rnn.states_at(tape, tokens, seqs, pos);
}

// Each candidate row is dotted with its own sample's context row.
Var dot_scores(Var c, Var u, const std::vector<int>& offsets) {
  std::vector<int> rows;
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
    for (int k = offsets[s]; k < offsets[s + 1]; ++k) rows.push_back(static_cast<int>(s));
  return ad::row_dot(ad::gather_rows(c, rows), u);
}

encoder::EncoderConfig loc_encoder(const BaselineConfig& c) { return {c.embed, c.type_dim, 2 * c.hidden}; }

}  // namespace

LocMisuse::LocMisuse(ad::ParamStore& store, const encoder::Vocabulary& vocab, BaselineConfig cfg,
                     std::mt19937_64& rng)
    : MisuseModel(cfg.margin),
      cfg_(cfg),
      enc_(store, "enc", vocab, loc_encoder(cfg), rng),
      rnn_(store, "rnn", cfg.embed, cfg.hidden, rng) {}

Var LocMisuse::context(ad::Tape& tape, const Batch& batch, Var tokens, const TokenTable& table) const {
  return slot_context(tape, rnn_, batch, tokens, table, cfg_.radius);
}

tasks::MisuseOutput LocMisuse::forward(ad::Tape& tape, const Batch& batch, const std::any&,
                                       const encoder::TypeSampling& sampling) const {
  auto table = token_table(batch);
  Var c = context(tape, batch, enc_.name_embedding(tape, table.units), table);
  encoder::NodeFeatures cands;
  for (const auto* e : batch) {
    const auto& f = e->seq.candidates;
    cands.units.insert(cands.units.end(), f.units.begin(), f.units.end());
    cands.types.insert(cands.types.end(), f.types.begin(), f.types.end());
    cands.candidate.insert(cands.candidate.end(), f.candidate.begin(), f.candidate.end());
  }
  tasks::MisuseOutput out;
  out.offsets = tasks::candidate_offsets(batch);
  out.usage = enc_.initial_states(tape, cands, sampling);
  out.scores = dot_scores(c, out.usage, out.offsets);
  return out;
}

AvgBiRnnMisuse::AvgBiRnnMisuse(ad::ParamStore& store, const encoder::Vocabulary& vocab, BaselineConfig cfg,
                               std::mt19937_64& rng)
    : MisuseModel(cfg.margin),
      cfg_(cfg),
      emb_(store, "enc", vocab.size(), cfg.embed, rng),
      rnn_(store, "rnn", cfg.embed, cfg.hidden, rng) {}

tasks::MisuseOutput AvgBiRnnMisuse::forward(ad::Tape& tape, const Batch& batch, const std::any&,
                                            const encoder::TypeSampling&) const {
  auto table = token_table(batch);
  Var tokens = emb_.embed(tape, table.units);
  Var c = slot_context(tape, rnn_, batch, tokens, table, cfg_.radius);
  std::vector<std::vector<int>> seqs, groups;
  std::vector<int> pos;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    for (const auto& uses : batch[s]->seq.usages) {
      std::vector<int> group;
      for (int p : uses) {
        group.push_back(static_cast<int>(seqs.size()));
        add_query(table, *batch[s], static_cast<int>(s), p, cfg_.radius, seqs, pos);
      }
      groups.push_back(std::move(group));
    }
  }
  tasks::MisuseOutput out;
  out.offsets = tasks::candidate_offsets(batch);
  out.usage = ad::mean_rows(rnn_.states_at(tape, tokens, seqs, pos), groups);
  out.scores = dot_scores(c, out.usage, out.offsets);
  return out;
}

AvgBiRnnNaming::AvgBiRnnNaming(ad::ParamStore& store, const encoder::Vocabulary& vocab, BaselineConfig cfg,
                               std::mt19937_64& rng)
    : NamingModel(vocab),
      cfg_(cfg),
      emb_(store, "enc", vocab.size(), cfg.embed, rng),
      rnn_(store, "rnn", cfg.embed, cfg.hidden, rng) {
  proj_w_ = &store.add("proj_w", 2 * cfg.hidden, cfg.hidden, rng);
  proj_b_ = &store.add("proj_b", 1, cfg.hidden, rng, 0.0);
  cfg.decoder.hidden = cfg.hidden;
  decoder_ = tasks::NamingDecoder(store, "dec", vocab.size(), cfg.decoder, rng);
}

Var AvgBiRnnNaming::represent(ad::Tape& tape, const Batch& batch, const std::any&,
                              const encoder::TypeSampling&) const {
  auto table = token_table(batch);
  Var tokens = emb_.embed(tape, table.units);
  std::vector<std::vector<int>> seqs, groups;
  std::vector<int> pos;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    std::vector<int> group;
    for (int p : batch[s]->seq.slot_positions) {
      group.push_back(static_cast<int>(seqs.size()));
      add_query(table, *batch[s], static_cast<int>(s), p, cfg_.radius, seqs, pos);
    }
    groups.push_back(std::move(group));
  }
  Var mean = ad::mean_rows(rnn_.states_at(tape, tokens, seqs, pos), groups);
  return ad::add_row(ad::matmul(mean, tape.param(*proj_w_)), tape.param(*proj_b_));
}

AvgLblNaming::AvgLblNaming(ad::ParamStore& store, const encoder::Vocabulary& vocab, BaselineConfig cfg,
                           std::mt19937_64& rng)
    : NamingModel(vocab), cfg_(cfg), emb_(store, "enc", vocab.size(), cfg.hidden, rng) {
  for (int o : kOffsets)
    diag_.push_back(&store.add("lbl.d" + std::to_string(o), Array2::Ones(1, cfg.hidden)));
  cfg.decoder.hidden = cfg.hidden;
  decoder_ = tasks::NamingDecoder(store, "dec", vocab.size(), cfg.decoder, rng);
}

Var AvgLblNaming::represent(ad::Tape& tape, const Batch& batch, const std::any&,
                            const encoder::TypeSampling&) const {
  auto table = token_table(batch);
  Var tokens = emb_.embed(tape, table.units);
  std::vector<std::vector<int>> groups;
  std::vector<std::pair<int, int>> usages;  // (sample, position)
  for (std::size_t s = 0; s < batch.size(); ++s) {
    std::vector<int> group;
    for (int p : batch[s]->seq.slot_positions) {
      group.push_back(static_cast<int>(usages.size()));
      usages.emplace_back(static_cast<int>(s), p);
    }
    groups.push_back(std::move(group));
  }
  const auto n = static_cast<ad::Index>(usages.size());
  Var ctx = tape.constant(Array2::Zero(n, cfg_.hidden));
  for (std::size_t k = 0; k < kOffsets.size(); ++k) {
    std::vector<int> rows, dst;
    for (std::size_t u = 0; u < usages.size(); ++u) {
      auto [s, p] = usages[u];
      int t = p + kOffsets[k];
      if (t < 0 || t >= static_cast<int>(batch[static_cast<std::size_t>(s)]->seq.tokens.size())) continue;
      rows.push_back(table.offset[static_cast<std::size_t>(s)] + t);
      dst.push_back(static_cast<int>(u));
    }
    if (rows.empty()) continue;
    Var scaled = ad::mul(ad::gather_rows(tokens, rows),
                         ad::gather_rows(tape.param(*diag_[k]), std::vector<int>(rows.size(), 0)));
    ctx = ad::add(ctx, ad::scatter_add_rows(scaled, dst, n));
  }
  return ad::mean_rows(ctx, groups);
}

}  // namespace mlpg::baselines
